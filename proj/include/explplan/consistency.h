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


// Sentence-level entailment consistency (a SummaC_Conv-style score) and the
// retrieval-rescored variant, plus the encyclopedia retrieval client.

#ifndef EXPLPLAN_CONSISTENCY_H_
#define EXPLPLAN_CONSISTENCY_H_

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "explplan/llm_gateway.h"

namespace explplan {

class EntailmentBackend {
 public:
  virtual ~EntailmentBackend() = default;
  // One entailment probability per premise unit.
  virtual std::vector<double> score(const std::vector<std::string>& premises,
                                    const std::string& hypothesis) = 0;
};

// POSTs {"premises": [...], "hypothesis": "..."} and expects
// {"probabilities": [...]}.
class HttpEntailmentBackend : public EntailmentBackend {
 public:
  HttpEntailmentBackend(std::string endpoint, std::chrono::milliseconds timeout);
  std::vector<double> score(const std::vector<std::string>& premises,
                            const std::string& hypothesis) override;

 private:
  std::string origin_;
  std::string path_;
  std::chrono::milliseconds timeout_;
};

// Deterministic stub: fraction of the hypothesis's content words (lowercase,
// three letters or more) that occur in the premise.
class LexicalOverlapBackend : public EntailmentBackend {
 public:
  std::vector<double> score(const std::vector<std::string>& premises,
                            const std::string& hypothesis) override;
};

// Stub driven by a per-(premise, hypothesis) function.
class FunctionBackend : public EntailmentBackend {
 public:
  using Fn = std::function<double(const std::string& premise, const std::string& hypothesis)>;
  explicit FunctionBackend(Fn fn) : fn_(std::move(fn)) {}
  std::vector<double> score(const std::vector<std::string>& premises,
                            const std::string& hypothesis) override;

 private:
  Fn fn_;
};

struct Article {
  std::string title;
  std::string body;

  bool operator==(const Article&) const = default;
};

class HttpGet {
 public:
  virtual ~HttpGet() = default;
  // Throws TransportError when no response arrives.
  virtual HttpResult get(const std::string& url) = 0;
};

class HttplibGet : public HttpGet {
 public:
  explicit HttplibGet(std::chrono::milliseconds timeout);
  HttpResult get(const std::string& url) override;

 private:
  std::chrono::milliseconds timeout_;
};

// Replays `<dir>/recordings.json`: {"<url>": {"status": 200, "body": <json>}}.
// A body that is a JSON string is returned verbatim, anything else is
// serialized. Unrecorded URLs raise TransportError.
class RecordedHttpGet : public HttpGet {
 public:
  explicit RecordedHttpGet(const std::filesystem::path& fixture_dir);
  explicit RecordedHttpGet(nlohmann::json recordings);
  HttpResult get(const std::string& url) override;
  std::vector<std::string> requested() const;

 private:
  nlohmann::json recordings_;
  mutable std::mutex mu_;
  std::vector<std::string> requested_;
};

class ArticleRetriever {
 public:
  virtual ~ArticleRetriever() = default;
  virtual std::vector<Article> retrieve(const std::string& query, std::size_t limit) = 0;
};

std::string url_encode(std::string_view text);

// Search-then-fetch over the MediaWiki action API.
class WikipediaRetriever : public ArticleRetriever {
 public:
  explicit WikipediaRetriever(std::shared_ptr<HttpGet> http,
                              std::string api = "https://en.wikipedia.org/w/api.php",
                              int max_attempts = 3);
  // Throws std::invalid_argument for an empty query or zero limit, and
  // RetrievalError when the API stays unreachable.
  std::vector<Article> retrieve(const std::string& query, std::size_t limit) override;

  std::string search_url(const std::string& query, std::size_t limit) const;
  std::string extract_url(const std::string& title) const;

 private:
  nlohmann::json get_json(const std::string& url);

  std::shared_ptr<HttpGet> http_;
  std::string api_;
  int max_attempts_;
};

struct ConsistencySettings {
  double threshold = 0.5;          // sentences below it are rescored
  std::size_t article_limit = 3;
  std::size_t query_spans = 2;     // capitalized spans kept in a query
  std::size_t query_words = 3;     // high-frequency content words kept
  std::size_t window_words = 300;  // article chunk size
  std::size_t window_overlap = 50;
  std::size_t jobs = 1;
};

// Capitalized spans first, then the most frequent content words; ties by
// first appearance. Empty when the sentence has nothing usable.
std::string build_query(std::string_view sentence, const ConsistencySettings& settings);

// Overlapping word windows over an article body.
std::vector<std::string> window_text(std::string_view body, std::size_t window_words,
                                     std::size_t overlap);

// Pools one hypothesis's entailment probabilities into a sentence score.
// Each probability is weighted by its bin's upper edge ((b + 1) / 50 for
// bin b of 50 equal bins over [0, 1]); the score is the weighted mean.
double pool_entailment(const std::vector<double>& probabilities);

constexpr std::size_t kPoolBins = 50;

struct ConsistencyResult {
  std::vector<double> sentence_scores;
  double aggregate = 0.0;
};

ConsistencyResult summac_conv(std::string_view document, std::string_view summary,
                              EntailmentBackend& backend, const ConsistencySettings& settings = {});

struct SentenceVerdict {
  std::string sentence;
  double source_score = 0.0;
  std::vector<std::pair<std::string, double>> retrieved_scores;  // (title, score)
  double final_score = 0.0;
  bool rescored = false;
  bool retrieval_failed = false;
  std::string query;
};

struct StarResult {
  std::vector<SentenceVerdict> verdicts;
  double aggregate = 0.0;
  double source_aggregate = 0.0;
  std::size_t retrieval_backend_calls = 0;
};

StarResult summac_star(std::string_view document, std::string_view summary,
                       EntailmentBackend& backend, ArticleRetriever& retriever,
                       const ConsistencySettings& settings = {});

nlohmann::json star_to_json(const StarResult& result);

}  // namespace explplan

#endif  // EXPLPLAN_CONSISTENCY_H_
