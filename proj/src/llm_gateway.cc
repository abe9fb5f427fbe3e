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


#include "explplan/llm_gateway.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <regex>
#include <thread>

#include "httplib.h"
#include "explplan/common.h"
#include "explplan/parallel.h"
#include "explplan/segmentation.h"

namespace explplan {
namespace {

bool retryable(int status) { return status == 429 || status >= 500; }

std::string extract_content(const std::string& body, int attempts) {
  nlohmann::json parsed = nlohmann::json::parse(body, nullptr, false);
  if (parsed.is_discarded() || !parsed.contains("choices") || !parsed["choices"].is_array() ||
      parsed["choices"].empty()) {
    throw GatewayError("chat completion: response has no choices", attempts, 200);
  }
  const auto& message = parsed["choices"][0].value("message", nlohmann::json::object());
  const auto content = message.find("content");
  if (content == message.end() || content->is_null()) {
    throw EmptyResponseError("chat completion: empty response", attempts, 200);
  }
  if (!content->is_string()) {
    throw GatewayError("chat completion: content is not a string", attempts, 200);
  }
  std::string text = content->get<std::string>();
  if (trim(text).empty()) throw EmptyResponseError("chat completion: empty response", attempts, 200);
  return text;
}

std::string first_words(std::string_view text, std::size_t limit) {
  std::string out;
  std::size_t n = 0;
  for (const auto& token : tokenize(text)) {
    if (!token.is_word) continue;
    if (n++ == limit) break;
    if (!out.empty()) out.push_back(' ');
    out += token.text;
  }
  return out;
}

std::string lead_sentences(std::string_view text, std::size_t count) {
  std::string out;
  for (const auto& s : segment_sentences(text)) {
    if (s.index >= count) break;
    if (!out.empty()) out.push_back(' ');
    out += s.text;
  }
  return out;
}

const std::vector<std::string>& builtin_irrelevant_questions() {
  static const std::vector<std::string> q = {
      "What is the tallest mountain in South America?",
      "How many strings does a standard violin have?",
      "Which planet has the longest day in the solar system?",
      "What year was the first transatlantic telegraph cable completed?",
      "Why do cats knead soft blankets?",
      "What is the national dish of Portugal?",
      "How deep is the Mariana Trench?",
      "Who painted the ceiling of the Sistine Chapel?",
  };
  return q;
}

std::string collapse(std::string_view text) {
  std::string out;
  bool space = false;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      space = !out.empty();
      continue;
    }
    if (space) out.push_back(' ');
    space = false;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

// Recursive-descent reader for [{key: 'value', ...}, ...] with bare or
// quoted keys and single- or double-quoted values.
class LooseListReader {
 public:
  explicit LooseListReader(std::string_view text) : s_(text) {}

  std::vector<std::map<std::string, std::string>> read() {
    std::vector<std::map<std::string, std::string>> out;
    expect('[');
    while (true) {
      skip();
      if (peek() == ']') {
        ++i_;
        break;
      }
      out.push_back(object());
      skip();
      if (peek() == ',') {
        ++i_;
        continue;
      }
      expect(']');
      break;
    }
    return out;
  }

 private:
  std::map<std::string, std::string> object() {
    std::map<std::string, std::string> fields;
    expect('{');
    while (true) {
      skip();
      if (peek() == '}') {
        ++i_;
        return fields;
      }
      std::string key = (peek() == '\'' || peek() == '"') ? quoted() : bare();
      expect(':');
      skip();
      fields[key] = quoted();
      skip();
      if (peek() == ',') {
        ++i_;
        continue;
      }
      expect('}');
      return fields;
    }
  }

  std::string bare() {
    std::string out;
    while (i_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_')) {
      out.push_back(s_[i_++]);
    }
    if (out.empty()) fail("expected a key");
    return out;
  }

  // A quote closes the value only when followed by a delimiter, so
  // apostrophes inside single-quoted text survive.
  std::string quoted() {
    const char q = peek();
    if (q != '\'' && q != '"') fail("expected a quoted string");
    ++i_;
    std::string out;
    while (i_ < s_.size()) {
      const char c = s_[i_++];
      if (c == '\\' && i_ < s_.size()) {
        const char e = s_[i_++];
        out.push_back(e == 'n' ? '\n' : e == 't' ? '\t' : e);
        continue;
      }
      if (c == q) {
        std::size_t j = i_;
        while (j < s_.size() && std::isspace(static_cast<unsigned char>(s_[j]))) ++j;
        if (j >= s_.size() || s_[j] == ',' || s_[j] == '}' || s_[j] == ']' || s_[j] == ':') {
          return out;
        }
      }
      out.push_back(c);
    }
    fail("unterminated string");
    return out;
  }

  void skip() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
  }
  char peek() const { return i_ < s_.size() ? s_[i_] : '\0'; }
  void expect(char c) {
    skip();
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++i_;
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw std::runtime_error(what + " at offset " + std::to_string(i_));
  }

  std::string_view s_;
  std::size_t i_ = 0;
};

std::string field(const std::map<std::string, std::string>& fields, std::string_view wanted) {
  for (const auto& [k, v] : fields) {
    std::string key;
    for (char c : k) key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (key == wanted) return v;
  }
  throw std::runtime_error("record without '" + std::string(wanted) + "'");
}

}  // namespace

std::chrono::milliseconds RetryPolicy::delay_before(int attempt) const {
  double ms = static_cast<double>(initial_backoff.count());
  for (int i = 2; i < attempt; ++i) ms *= multiplier;
  ms = std::min(ms, static_cast<double>(max_backoff.count()));
  return std::chrono::milliseconds(static_cast<long long>(ms));
}

void LlmConfig::validate() const {
  auto bad = [](const std::string& what) { throw std::invalid_argument("llm config: " + what); };
  if (endpoint.empty()) bad("endpoint is empty");
  if (model.empty()) bad("model is empty");
  if (temperature < 0 || temperature > 2) bad("temperature must be in [0, 2]");
  if (top_p < 0 || top_p > 2) bad("top_p must be in [0, 2]");
  if (max_new_tokens < 1) bad("max_new_tokens must be positive");
  if (max_parallel_requests < 1) bad("max_parallel_requests must be at least 1");
  if (requests_per_second < 0) bad("requests_per_second must not be negative");
  if (retry.max_attempts < 1) bad("retry.max_attempts must be at least 1");
  if (retry.multiplier < 1) bad("retry.multiplier must be at least 1");
}

nlohmann::json request_body(const LlmConfig& config, std::string_view prompt) {
  return {{"model", config.model},
          {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
          {"temperature", config.temperature},
          {"top_p", config.top_p},
          {"frequency_penalty", config.frequency_penalty},
          {"presence_penalty", config.presence_penalty},
          {"max_tokens", config.max_new_tokens}};
}

std::string completion_body(std::string_view content) {
  nlohmann::json body = {
      {"choices", nlohmann::json::array({{{"index", 0},
                                          {"message", {{"role", "assistant"}, {"content", content}}},
                                          {"finish_reason", "stop"}}})}};
  return body.dump();
}

// --- HTTP transport ---

HttpChatTransport::HttpChatTransport(std::string endpoint, std::string api_key,
                                     std::chrono::milliseconds timeout)
    : api_key_(std::move(api_key)), timeout_(timeout) {
  static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(endpoint, m, kUrl)) {
    throw std::invalid_argument("endpoint is not an http(s) URL: " + endpoint);
  }
  origin_ = m[1];
  path_ = m[2].matched ? std::string(m[2]) : "/";
}

HttpResult HttpChatTransport::post(const ChatRequest& request) {
  httplib::Client client(origin_);
  const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
  const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - seconds);
  client.set_connection_timeout(seconds.count(), micros.count());
  client.set_read_timeout(seconds.count(), micros.count());
  client.set_write_timeout(seconds.count(), micros.count());
  httplib::Headers headers = {{"X-Request-Id", request.request_id}};
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
  auto res = client.Post(path_, headers, request.body.dump(), "application/json");
  if (!res) throw TransportError("POST " + origin_ + path_ + ": " + httplib::to_string(res.error()));
  return {res->status, res->body};
}

// --- stub transport ---

StubChatTransport::StubChatTransport(const std::filesystem::path& fixture_dir) {
  const auto file = fixture_dir / "responses.json";
  std::ifstream in(file);
  if (!in) throw std::invalid_argument("stub gateway: cannot read " + file.string());
  responses_ = nlohmann::json::parse(in, nullptr, false);
  if (!responses_.is_object()) {
    throw std::invalid_argument("stub gateway: " + file.string() + " is not a JSON object");
  }
}

StubChatTransport::StubChatTransport(nlohmann::json responses) : responses_(std::move(responses)) {
  if (!responses_.is_object()) throw std::invalid_argument("stub gateway: responses must be an object");
}

std::size_t StubChatTransport::calls() const {
  std::lock_guard<std::mutex> lock(mu_);
  return log_.size();
}

std::vector<ChatRequest> StubChatTransport::requests() const {
  std::lock_guard<std::mutex> lock(mu_);
  return log_;
}

std::string StubChatTransport::reply_for(const ChatRequest& request) {
  const std::string& id = request.prompt.template_id;
  const std::string& text = request.prompt.text;
  const auto& slots = request.prompt.slots;
  auto slot = [&](const std::string& name) -> std::string {
    const auto it = slots.find(name);
    return it == slots.end() ? std::string() : it->second;
  };
  if (responses_.contains(id)) {
    const auto& entry = responses_[id];
    if (entry.is_string()) return entry.get<std::string>();
    if (entry.contains("rules")) {
      for (const auto& rule : entry["rules"]) {
        if (text.find(rule.value("contains", std::string())) != std::string::npos) {
          return rule.value("reply", std::string());
        }
      }
    }
    if (entry.contains("replies") && !entry["replies"].empty()) {
      const std::size_t i = cursor_[id]++ % entry["replies"].size();
      return entry["replies"][i].get<std::string>();
    }
    if (entry.contains("default")) return entry["default"].get<std::string>();
  }
  if (id == "question") {
    std::string words = first_words(slot("target"), 10);
    if (!words.empty()) words[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(words[0])));
    return "Why does it matter that " + words + "?";
  }
  if (id == "irrelevant_question") {
    const auto& pool = builtin_irrelevant_questions();
    return pool[cursor_[id]++ % pool.size()];
  }
  if (id == "extract") return "[]";
  return lead_sentences(slot("document"), 2);
}

HttpResult StubChatTransport::post(const ChatRequest& request) {
  std::lock_guard<std::mutex> lock(mu_);
  log_.push_back(request);
  if (responses_.contains("failures")) {
    const auto& f = responses_["failures"];
    const std::string key = request.prompt.template_id;
    if (f.contains(key)) {
      if (!failures_left_.count(key)) failures_left_[key] = f[key].value("times", 0);
      if (failures_left_[key] > 0) {
        --failures_left_[key];
        const int status = f[key].value("status", 503);
        if (status == 0) throw TransportError("stub: simulated connection failure");
        return {status, R"({"error":{"message":"stub failure"}})"};
      }
    }
  }
  return {200, completion_body(reply_for(request))};
}

// --- admission control ---

AdmissionControl::AdmissionControl(int max_in_flight, double requests_per_second)
    : max_(std::max(1, max_in_flight)) {
  if (requests_per_second > 0) {
    spacing_ = std::chrono::nanoseconds(static_cast<long long>(1e9 / requests_per_second));
  }
}

AdmissionControl::Permit::~Permit() {
  if (owner_) owner_->release();
}

AdmissionControl::Permit AdmissionControl::acquire() {
  std::unique_lock<std::mutex> lock(mu_);
  cv_.wait(lock, [&] { return in_flight_ < max_; });
  ++in_flight_;
  peak_ = std::max(peak_, in_flight_);
  if (spacing_.count() > 0) {
    const auto now = std::chrono::steady_clock::now();
    const auto slot = std::max(now, next_slot_);
    next_slot_ = slot + spacing_;
    if (slot > now) {
      lock.unlock();
      std::this_thread::sleep_until(slot);
    }
  }
  return Permit(this);
}

void AdmissionControl::release() {
  {
    std::lock_guard<std::mutex> lock(mu_);
    --in_flight_;
  }
  cv_.notify_one();
}

int AdmissionControl::in_flight() const {
  std::lock_guard<std::mutex> lock(mu_);
  return in_flight_;
}

int AdmissionControl::peak_in_flight() const {
  std::lock_guard<std::mutex> lock(mu_);
  return peak_;
}

// --- completion parsing and alignment ---

std::vector<TextRecord> parse_pair_list(std::string_view completion) {
  const auto open = completion.find('[');
  const auto close = completion.rfind(']');
  if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
    throw FormatError("pair list: no bracketed list in completion", std::string(completion));
  }
  const std::string_view body = completion.substr(open, close - open + 1);
  std::vector<std::map<std::string, std::string>> raw;
  try {
    const auto parsed = nlohmann::json::parse(body, nullptr, false);
    if (!parsed.is_discarded() && parsed.is_array()) {
      for (const auto& item : parsed) {
        if (!item.is_object()) throw std::runtime_error("list item is not an object");
        std::map<std::string, std::string> fields;
        for (const auto& [k, v] : item.items()) {
          if (v.is_string()) fields[k] = v.get<std::string>();
        }
        raw.push_back(std::move(fields));
      }
    } else {
      raw = LooseListReader(body).read();
    }
    std::vector<TextRecord> out;
    for (const auto& fields : raw) {
      out.push_back({field(fields, "explanatory_sentence"), field(fields, "target_sentence")});
    }
    return out;
  } catch (const std::exception& e) {
    throw FormatError(std::string("pair list: ") + e.what(), std::string(completion));
  }
}

double char_overlap(std::string_view a, std::string_view b) {
  const std::string x = collapse(a);
  const std::string y = collapse(b);
  if (x.empty() || y.empty()) return 0.0;
  std::vector<int> prev(y.size() + 1, 0);
  std::vector<int> cur(y.size() + 1, 0);
  for (std::size_t i = 1; i <= x.size(); ++i) {
    for (std::size_t j = 1; j <= y.size(); ++j) {
      cur[j] = x[i - 1] == y[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return static_cast<double>(prev[y.size()]) / static_cast<double>(std::max(x.size(), y.size()));
}

Alignment align_sentence(std::string_view text, const std::vector<std::string>& sentences) {
  const std::string wanted = trim(text);
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    if (trim(sentences[i]) == wanted) return {i, 1.0};
  }
  Alignment best;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    const double overlap = char_overlap(wanted, sentences[i]);
    if (overlap > best.confidence) best = {i, overlap};
  }
  if (best.confidence < kFuzzyAlignmentThreshold) best.index.reset();
  return best;
}

std::vector<ExplanatoryPair> to_explanatory_pairs(const LlmExtraction& extraction) {
  std::vector<ExplanatoryPair> out;
  for (const auto& r : extraction.records) {
    if (!r.explanatory_index || !r.target_index) continue;
    if (*r.explanatory_index == *r.target_index) continue;
    ExplanatoryPair p;
    p.explanatory = *r.explanatory_index;
    p.target = *r.target_index;
    const bool duplicate = std::any_of(out.begin(), out.end(), [&](const ExplanatoryPair& q) {
      return q.explanatory == p.explanatory && q.target == p.target;
    });
    if (!duplicate) out.push_back(p);
  }
  std::stable_sort(out.begin(), out.end(), [](const ExplanatoryPair& a, const ExplanatoryPair& b) {
    return a.explanatory != b.explanatory ? a.explanatory < b.explanatory : a.target < b.target;
  });
  for (std::size_t i = 0; i < out.size(); ++i) out[i].appearance_position = i;
  return out;
}

// --- prompts ---

PromptRendering question_prompt(std::string_view context, std::string_view target) {
  return render_prompt(PromptId::kQuestion,
                       {{"context", std::string(context)}, {"target", std::string(target)}});
}

PromptRendering plan_prompt(std::string_view document, const Plan& plan) {
  return render_prompt(PromptId::kPlan,
                       {{"document", std::string(document)}, {"questions", plan_block(plan)}});
}

// --- gateway ---

LlmGateway::LlmGateway(LlmConfig config, std::shared_ptr<ChatTransport> transport,
                       std::function<void(std::chrono::milliseconds)> sleeper)
    : config_(std::move(config)),
      transport_(std::move(transport)),
      sleep_(std::move(sleeper)),
      admission_(config_.max_parallel_requests, config_.requests_per_second) {
  config_.validate();
  if (!transport_) throw std::invalid_argument("llm gateway: no transport");
  if (!sleep_) sleep_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

std::string LlmGateway::next_request_id() {
  std::lock_guard<std::mutex> lock(id_mu_);
  return "req-" + std::to_string(next_id_++);
}

std::string LlmGateway::complete(const PromptRendering& prompt) {
  ChatRequest request{next_request_id(), prompt, request_body(config_, prompt.text)};
  std::string last_error;
  int last_status = 0;
  const int max_attempts = config_.retry.max_attempts;
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    if (attempt > 1) sleep_(config_.retry.delay_before(attempt));
    HttpResult result;
    try {
      auto permit = admission_.acquire();
      result = transport_->post(request);
    } catch (const TransportError& e) {
      last_error = e.what();
      last_status = 0;
      continue;
    }
    if (result.status >= 200 && result.status < 300) return extract_content(result.body, attempt);
    last_status = result.status;
    last_error = "HTTP " + std::to_string(result.status);
    if (!retryable(result.status)) {
      throw GatewayError("chat completion (" + prompt.template_id + "): " + last_error, attempt,
                         result.status);
    }
  }
  throw GatewayError("chat completion (" + prompt.template_id + ") failed after " +
                         std::to_string(max_attempts) + " attempt(s): " + last_error,
                     max_attempts, last_status);
}

std::vector<std::string> LlmGateway::complete_all(const std::vector<PromptRendering>& prompts) {
  std::vector<std::string> results(prompts.size());
  parallel_for(prompts.size(), static_cast<std::size_t>(config_.max_parallel_requests),
               [&](std::size_t i) { results[i] = complete(prompts[i]); });
  return results;
}

QuestionResult LlmGateway::generate_question(std::string_view context, std::string_view target) {
  if (trim(target).empty()) throw std::invalid_argument("generate_question: empty target");
  QuestionResult out;
  out.text = complete(question_prompt(context, target));
  out.appended_question_mark = normalize_question(out.text);
  return out;
}

QuestionResult LlmGateway::generate_irrelevant_question() {
  QuestionResult out;
  out.text = complete(render_prompt(PromptId::kIrrelevantQuestion, {}));
  out.appended_question_mark = normalize_question(out.text);
  return out;
}

std::string LlmGateway::summarize_zero_shot(std::string_view document) {
  if (trim(document).empty()) throw std::invalid_argument("summarize_zero_shot: empty document");
  return complete(render_prompt(PromptId::kZeroShot, {{"document", std::string(document)}}));
}

std::string LlmGateway::summarize_icl(std::string_view example_document,
                                      std::string_view example_summary,
                                      std::string_view document) {
  if (trim(example_document).empty() || trim(example_summary).empty() || trim(document).empty()) {
    throw std::invalid_argument("summarize_icl: example document, example summary and document "
                                "must all be non-empty");
  }
  return complete(render_prompt(PromptId::kIcl, {{"example_document", std::string(example_document)},
                                                 {"example_summary", std::string(example_summary)},
                                                 {"document", std::string(document)}}));
}

std::string LlmGateway::summarize_with_plan(std::string_view document, const Plan& plan) {
  if (plan.questions.empty()) throw std::invalid_argument("summarize_with_plan: empty plan");
  if (trim(document).empty()) throw std::invalid_argument("summarize_with_plan: empty document");
  return complete(plan_prompt(document, plan));
}

LlmExtraction LlmGateway::extract_pairs_llm(std::string_view document) {
  if (trim(document).empty()) throw std::invalid_argument("extract_pairs_llm: empty document");
  const std::string completion =
      complete(render_prompt(PromptId::kExtract, {{"document", std::string(document)}}));
  const auto records = parse_pair_list(completion);
  std::vector<std::string> sentences;
  for (auto& s : segment_sentences(document)) sentences.push_back(std::move(s.text));
  LlmExtraction out;
  for (const auto& r : records) {
    AlignedPair p;
    p.explanatory_text = r.explanatory_sentence;
    p.target_text = r.target_sentence;
    const Alignment e = align_sentence(r.explanatory_sentence, sentences);
    const Alignment t = align_sentence(r.target_sentence, sentences);
    p.explanatory_index = e.index;
    p.target_index = t.index;
    p.explanatory_confidence = e.confidence;
    p.target_confidence = t.confidence;
    p.fuzzy = e.confidence < 1.0 || t.confidence < 1.0;
    if (e.index && t.index) ++out.aligned;
    out.records.push_back(std::move(p));
  }
  if (!records.empty() && out.aligned == 0) {
    throw AlignmentError("extract_pairs_llm: none of " + std::to_string(records.size()) +
                         " record(s) could be aligned to the document");
  }
  return out;
}

}  // namespace explplan
