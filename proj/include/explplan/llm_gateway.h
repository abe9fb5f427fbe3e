// Copyright 2026 The explplan Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Chat-completion client for the six prompts: retry with exponential
// backoff, an in-flight cap, and an optional request-rate limit. Calls are
// stateless; no conversation history is kept between them.

#ifndef EXPLPLAN_LLM_GATEWAY_H_
#define EXPLPLAN_LLM_GATEWAY_H_

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "explplan/plan.h"
#include "explplan/prompts.h"
#include "explplan/rst.h"

namespace explplan {

struct RetryPolicy {
  int max_attempts = 5;  // including the first
  std::chrono::milliseconds initial_backoff{500};
  double multiplier = 2.0;
  std::chrono::milliseconds max_backoff{8000};

  std::chrono::milliseconds delay_before(int attempt) const;  // attempt >= 2
};

struct LlmConfig {
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string model = "gpt-4o-2024-05-13";
  double temperature = 1.0;
  double top_p = 1.0;
  double frequency_penalty = 0.2;
  double presence_penalty = 0.2;
  int max_new_tokens = 1024;
  std::chrono::milliseconds request_timeout{60000};
  int max_parallel_requests = 4;
  double requests_per_second = 0.0;  // 0: no rate limit
  std::string api_key_env = "OPENAI_API_KEY";
  RetryPolicy retry;

  // Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

// Request body in the chat-completions shape.
nlohmann::json request_body(const LlmConfig& config, std::string_view prompt);

struct ChatRequest {
  std::string request_id;
  PromptRendering prompt;
  nlohmann::json body;
};

struct HttpResult {
  int status = 0;
  std::string body;
};

// Connection-level failure (no HTTP status). Always retried.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  virtual HttpResult post(const ChatRequest& request) = 0;
};

class HttpChatTransport : public ChatTransport {
 public:
  HttpChatTransport(std::string endpoint, std::string api_key,
                    std::chrono::milliseconds timeout);
  HttpResult post(const ChatRequest& request) override;

 private:
  std::string origin_;
  std::string path_;
  std::string api_key_;
  std::chrono::milliseconds timeout_;
};

// Offline transport answering from `<dir>/responses.json`:
//
//   {"<template>": {"rules": [{"contains": "...", "reply": "..."}],
//                   "replies": ["...", ...],
//                   "default": "..."}}
//
// For a template, the first rule whose `contains` occurs in the prompt wins;
// otherwise `replies` are handed out in call order (cycling); otherwise
// `default`; otherwise a deterministic reply built from the slots. The stub
// also honours {"status": 503, "times": 2} entries under "failures" to
// exercise the retry path.
class StubChatTransport : public ChatTransport {
 public:
  explicit StubChatTransport(const std::filesystem::path& fixture_dir);
  explicit StubChatTransport(nlohmann::json responses);
  HttpResult post(const ChatRequest& request) override;

  std::size_t calls() const;
  std::vector<ChatRequest> requests() const;

 private:
  std::string reply_for(const ChatRequest& request);

  nlohmann::json responses_;
  mutable std::mutex mu_;
  std::map<std::string, std::size_t> cursor_;
  std::map<std::string, int> failures_left_;
  std::vector<ChatRequest> log_;
};

// Builds a completion body {"choices":[{"message":{"content": ...}}]}.
std::string completion_body(std::string_view content);

// Counting semaphore plus a minimum spacing between admissions.
class AdmissionControl {
 public:
  AdmissionControl(int max_in_flight, double requests_per_second);

  class Permit {
   public:
    explicit Permit(AdmissionControl* owner) : owner_(owner) {}
    Permit(Permit&& other) noexcept : owner_(other.owner_) { other.owner_ = nullptr; }
    Permit(const Permit&) = delete;
    Permit& operator=(const Permit&) = delete;
    ~Permit();

   private:
    AdmissionControl* owner_;
  };

  Permit acquire();
  int in_flight() const;
  int peak_in_flight() const;

 private:
  void release();

  mutable std::mutex mu_;
  std::condition_variable cv_;
  int max_;
  int in_flight_ = 0;
  int peak_ = 0;
  std::chrono::nanoseconds spacing_{0};
  std::chrono::steady_clock::time_point next_slot_{};
};

struct QuestionResult {
  std::string text;
  bool appended_question_mark = false;
};

struct AlignedPair {
  std::string explanatory_text;
  std::string target_text;
  std::optional<std::size_t> explanatory_index;
  std::optional<std::size_t> target_index;
  double explanatory_confidence = 0.0;  // 1.0 for exact matches
  double target_confidence = 0.0;
  bool fuzzy = false;  // either side aligned by overlap rather than equality
};

struct LlmExtraction {
  std::vector<AlignedPair> records;  // every parsed record, aligned or not
  std::size_t aligned = 0;           // records with both sides aligned
};

// Pairs with both sides aligned, explanatory != target, sorted by
// explanatory index then target.
std::vector<ExplanatoryPair> to_explanatory_pairs(const LlmExtraction& extraction);

struct TextRecord {
  std::string explanatory_sentence;
  std::string target_sentence;
};

// Lenient reader for the list-of-dictionaries reply: JSON, or the unquoted
// key / single-quoted value form shown in the prompt. Surrounding prose and
// code fences are ignored. Throws FormatError with the raw text.
std::vector<TextRecord> parse_pair_list(std::string_view completion);

// Character overlap of two strings: LCS length over the longer length,
// case-insensitive, whitespace runs collapsed.
double char_overlap(std::string_view a, std::string_view b);

struct Alignment {
  std::optional<std::size_t> index;
  double confidence = 0.0;
};

constexpr double kFuzzyAlignmentThreshold = 0.6;

Alignment align_sentence(std::string_view text, const std::vector<std::string>& sentences);

class LlmGateway {
 public:
  LlmGateway(LlmConfig config, std::shared_ptr<ChatTransport> transport,
             std::function<void(std::chrono::milliseconds)> sleeper = {});

  const LlmConfig& config() const { return config_; }
  const AdmissionControl& admission() const { return admission_; }

  // Raw completion for a rendered prompt. Throws GatewayError.
  std::string complete(const PromptRendering& prompt);
  // Completions in input order, at most max_parallel_requests in flight.
  std::vector<std::string> complete_all(const std::vector<PromptRendering>& prompts);

  QuestionResult generate_question(std::string_view context, std::string_view target);
  QuestionResult generate_irrelevant_question();
  std::string summarize_zero_shot(std::string_view document);
  std::string summarize_icl(std::string_view example_document, std::string_view example_summary,
                            std::string_view document);
  std::string summarize_with_plan(std::string_view document, const Plan& plan);
  LlmExtraction extract_pairs_llm(std::string_view document);

 private:
  std::string next_request_id();

  LlmConfig config_;
  std::shared_ptr<ChatTransport> transport_;
  std::function<void(std::chrono::milliseconds)> sleep_;
  AdmissionControl admission_;
  std::mutex id_mu_;
  std::size_t next_id_ = 0;
};

// Question rendering helpers shared with the dataset emitter.
PromptRendering question_prompt(std::string_view context, std::string_view target);
PromptRendering plan_prompt(std::string_view document, const Plan& plan);

}  // namespace explplan

#endif  // EXPLPLAN_LLM_GATEWAY_H_
