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


#include "explplan/consistency.h"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <fstream>
#include <map>
#include <numeric>
#include <regex>
#include <set>
#include <sstream>

#include <unicode/uchar.h>
#include <unicode/utf8.h>

#include "httplib.h"
#include "explplan/common.h"
#include "explplan/parallel.h"
#include "explplan/segmentation.h"

namespace explplan {
namespace {

const std::set<std::string>& stopwords() {
  static const std::set<std::string> words = {
      "the",   "and",    "for",   "are",   "but",   "not",   "you",   "all",   "any",
      "can",   "had",    "her",   "was",   "one",   "our",   "out",   "has",   "have",
      "his",   "how",    "its",   "may",   "new",   "now",   "old",   "see",   "two",
      "who",   "did",    "does",  "this",  "that",  "with",  "from",  "they",  "them",
      "then",  "than",   "there", "their", "these", "those", "what",  "when",  "where",
      "which", "while",  "would", "could", "should", "also", "into",  "about", "after",
      "before", "been",  "being", "were",  "will",  "more",  "most",  "some",  "such",
      "only",  "other",  "over",  "very",  "each",  "both",  "because", "between",
      "through", "during", "under", "again", "further", "here", "why", "own", "same",
      "just",  "like",   "many",  "much",  "even",  "well",  "still", "often", "help",
      "helps", "make",   "makes", "made",  "using", "used",  "use",   "uses", "way",
  };
  return words;
}

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool starts_upper(std::string_view word) {
  if (word.empty()) return false;
  std::size_t i = 0;
  UChar32 c;
  U8_NEXT(word.data(), i, word.size(), c);
  return c >= 0 && u_isupper(c);
}

std::set<std::string> content_words(std::string_view text) {
  std::set<std::string> out;
  for (const auto& t : tokenize(text)) {
    if (!t.is_word) continue;
    std::string w = lower_ascii(t.text);
    if (char_length(w) >= 3 && !stopwords().count(w)) out.insert(std::move(w));
  }
  return out;
}

void check_scores(const std::vector<double>& scores, std::size_t premises) {
  if (scores.size() != premises) {
    throw BackendError("entailment backend returned " + std::to_string(scores.size()) +
                       " score(s) for " + std::to_string(premises) + " premise(s)");
  }
  for (double s : scores) {
    if (!(s >= 0.0 && s <= 1.0)) {
      throw BackendError("entailment backend returned a score outside [0, 1]");
    }
  }
}

// Runs the backend and tags failures with the summary sentence index.
std::vector<double> checked_score(EntailmentBackend& backend,
                                  const std::vector<std::string>& premises,
                                  const std::string& hypothesis, std::size_t sentence_index) {
  try {
    auto scores = backend.score(premises, hypothesis);
    check_scores(scores, premises.size());
    return scores;
  } catch (const BackendError& e) {
    if (e.sentence_index() >= 0) throw;
    throw BackendError(std::string(e.what()) + " (summary sentence " +
                           std::to_string(sentence_index) + ")",
                       static_cast<long>(sentence_index));
  } catch (const std::exception& e) {
    throw BackendError(std::string("entailment backend: ") + e.what() + " (summary sentence " +
                           std::to_string(sentence_index) + ")",
                       static_cast<long>(sentence_index));
  }
}

std::vector<std::string> sentence_texts(std::string_view text) {
  std::vector<std::string> out;
  for (auto& s : segment_sentences(text)) out.push_back(std::move(s.text));
  return out;
}

std::pair<std::string, std::string> split_url(const std::string& url) {
  static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, kUrl)) throw std::invalid_argument("not an http(s) URL: " + url);
  return {m[1], m[2].matched ? std::string(m[2]) : "/"};
}

void set_timeouts(httplib::Client& client, std::chrono::milliseconds timeout) {
  const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(timeout);
  const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(timeout - seconds);
  client.set_connection_timeout(seconds.count(), micros.count());
  client.set_read_timeout(seconds.count(), micros.count());
  client.set_write_timeout(seconds.count(), micros.count());
}

}  // namespace

// --- backends ---

HttpEntailmentBackend::HttpEntailmentBackend(std::string endpoint,
                                             std::chrono::milliseconds timeout)
    : timeout_(timeout) {
  std::tie(origin_, path_) = split_url(endpoint);
}

std::vector<double> HttpEntailmentBackend::score(const std::vector<std::string>& premises,
                                                 const std::string& hypothesis) {
  httplib::Client client(origin_);
  set_timeouts(client, timeout_);
  const nlohmann::json body = {{"premises", premises}, {"hypothesis", hypothesis}};
  auto res = client.Post(path_, body.dump(), "application/json");
  if (!res) throw BackendError("entailment service: " + httplib::to_string(res.error()));
  if (res->status != 200) {
    throw BackendError("entailment service: HTTP " + std::to_string(res->status));
  }
  const auto parsed = nlohmann::json::parse(res->body, nullptr, false);
  if (parsed.is_discarded() || !parsed.contains("probabilities") ||
      !parsed["probabilities"].is_array()) {
    throw BackendError("entailment service: response lacks 'probabilities'");
  }
  std::vector<double> out;
  for (const auto& v : parsed["probabilities"]) {
    if (!v.is_number()) throw BackendError("entailment service: non-numeric probability");
    out.push_back(v.get<double>());
  }
  return out;
}

std::vector<double> LexicalOverlapBackend::score(const std::vector<std::string>& premises,
                                                 const std::string& hypothesis) {
  const auto wanted = content_words(hypothesis);
  std::vector<double> out;
  out.reserve(premises.size());
  for (const auto& premise : premises) {
    if (wanted.empty()) {
      out.push_back(0.0);
      continue;
    }
    const auto have = content_words(premise);
    std::size_t hits = 0;
    for (const auto& w : wanted) hits += have.count(w);
    out.push_back(static_cast<double>(hits) / static_cast<double>(wanted.size()));
  }
  return out;
}

std::vector<double> FunctionBackend::score(const std::vector<std::string>& premises,
                                           const std::string& hypothesis) {
  std::vector<double> out;
  out.reserve(premises.size());
  for (const auto& p : premises) out.push_back(fn_(p, hypothesis));
  return out;
}

// --- HTTP GET ---

HttplibGet::HttplibGet(std::chrono::milliseconds timeout) : timeout_(timeout) {}

HttpResult HttplibGet::get(const std::string& url) {
  const auto [origin, path] = split_url(url);
  httplib::Client client(origin);
  set_timeouts(client, timeout_);
  client.set_follow_location(true);
  auto res = client.Get(path, {{"User-Agent", "explplan/1.0 (consistency retrieval)"}});
  if (!res) throw TransportError("GET " + url + ": " + httplib::to_string(res.error()));
  return {res->status, res->body};
}

RecordedHttpGet::RecordedHttpGet(const std::filesystem::path& fixture_dir) {
  const auto file = fixture_dir / "recordings.json";
  std::ifstream in(file);
  if (!in) throw std::invalid_argument("recorded http: cannot read " + file.string());
  recordings_ = nlohmann::json::parse(in, nullptr, false);
  if (!recordings_.is_object()) {
    throw std::invalid_argument("recorded http: " + file.string() + " is not a JSON object");
  }
}

RecordedHttpGet::RecordedHttpGet(nlohmann::json recordings) : recordings_(std::move(recordings)) {}

HttpResult RecordedHttpGet::get(const std::string& url) {
  {
    std::lock_guard<std::mutex> lock(mu_);
    requested_.push_back(url);
  }
  const auto it = recordings_.find(url);
  if (it == recordings_.end()) throw TransportError("recorded http: no recording for " + url);
  const auto& body = (*it)["body"];
  return {it->value("status", 200), body.is_string() ? body.get<std::string>() : body.dump()};
}

std::vector<std::string> RecordedHttpGet::requested() const {
  std::lock_guard<std::mutex> lock(mu_);
  return requested_;
}

// --- retrieval ---

std::string url_encode(std::string_view text) {
  static const char* kHex = "0123456789ABCDEF";
  std::string out;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out.push_back(ch);
    } else {
      out.push_back('%');
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 0xF]);
    }
  }
  return out;
}

WikipediaRetriever::WikipediaRetriever(std::shared_ptr<HttpGet> http, std::string api,
                                       int max_attempts)
    : http_(std::move(http)), api_(std::move(api)), max_attempts_(std::max(1, max_attempts)) {
  if (!http_) throw std::invalid_argument("wikipedia retriever: no http client");
}

std::string WikipediaRetriever::search_url(const std::string& query, std::size_t limit) const {
  return api_ + "?action=query&list=search&format=json&srsearch=" + url_encode(query) +
         "&srlimit=" + std::to_string(limit);
}

std::string WikipediaRetriever::extract_url(const std::string& title) const {
  return api_ + "?action=query&prop=extracts&explaintext=1&redirects=1&format=json&titles=" +
         url_encode(title);
}

nlohmann::json WikipediaRetriever::get_json(const std::string& url) {
  std::string last;
  for (int attempt = 1; attempt <= max_attempts_; ++attempt) {
    HttpResult res;
    try {
      res = http_->get(url);
    } catch (const TransportError& e) {
      last = e.what();
      continue;
    }
    if (res.status == 200) {
      auto parsed = nlohmann::json::parse(res.body, nullptr, false);
      if (parsed.is_discarded()) throw RetrievalError("wikipedia: malformed JSON from " + url);
      return parsed;
    }
    last = "HTTP " + std::to_string(res.status);
    if (res.status != 429 && res.status < 500) break;
  }
  throw RetrievalError("wikipedia: " + url + ": " + last);
}

std::vector<Article> WikipediaRetriever::retrieve(const std::string& query, std::size_t limit) {
  if (trim(query).empty()) throw std::invalid_argument("retrieve_articles: empty query");
  if (limit == 0) throw std::invalid_argument("retrieve_articles: limit must be positive");
  const auto search = get_json(search_url(query, limit));
  std::vector<std::string> titles;
  if (search.contains("query") && search["query"].contains("search")) {
    for (const auto& hit : search["query"]["search"]) {
      if (titles.size() >= limit) break;
      if (hit.contains("title") && hit["title"].is_string()) titles.push_back(hit["title"]);
    }
  }
  std::vector<Article> out;
  for (const auto& title : titles) {
    const auto page = get_json(extract_url(title));
    if (!page.contains("query") || !page["query"].contains("pages")) continue;
    for (const auto& [id, p] : page["query"]["pages"].items()) {
      if (!p.contains("extract") || !p["extract"].is_string()) continue;
      const std::string body = p["extract"];
      if (trim(body).empty()) continue;
      out.push_back({p.value("title", title), body});
      break;
    }
  }
  return out;
}

// --- scoring ---

std::string build_query(std::string_view sentence, const ConsistencySettings& settings) {
  std::vector<Token> words;
  for (auto& t : tokenize(sentence)) {
    if (t.is_word) words.push_back(std::move(t));
  }
  std::vector<std::string> terms;
  std::set<std::string> seen;
  auto add = [&](const std::string& term) {
    const std::string key = lower_ascii(term);
    if (seen.insert(key).second) terms.push_back(term);
  };

  // Maximal runs of capitalized words. A lone capitalized first word is just
  // sentence case and is skipped.
  std::size_t spans = 0;
  std::set<std::string> in_span;
  for (std::size_t i = 0; i < words.size() && spans < settings.query_spans;) {
    if (!starts_upper(words[i].text)) {
      ++i;
      continue;
    }
    std::size_t j = i;
    std::string span;
    while (j < words.size() && starts_upper(words[j].text)) {
      if (!span.empty()) span.push_back(' ');
      span += words[j].text;
      ++j;
    }
    const bool sentence_case = i == 0 && j == 1;
    if (!sentence_case && !stopwords().count(lower_ascii(span))) {
      add(span);
      ++spans;
      for (std::size_t k = i; k < j; ++k) in_span.insert(lower_ascii(words[k].text));
    }
    i = j;
  }

  std::map<std::string, std::pair<std::size_t, std::size_t>> tf;  // word -> (count, first)
  for (std::size_t i = 0; i < words.size(); ++i) {
    const std::string w = lower_ascii(words[i].text);
    if (char_length(w) < 3 || stopwords().count(w) || in_span.count(w)) continue;
    auto [it, inserted] = tf.try_emplace(w, 0, i);
    ++it->second.first;
  }
  std::vector<std::pair<std::string, std::pair<std::size_t, std::size_t>>> ranked(tf.begin(),
                                                                                  tf.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second.first != b.second.first) return a.second.first > b.second.first;
    return a.second.second < b.second.second;
  });
  std::size_t taken = 0;
  for (const auto& [w, stats] : ranked) {
    if (taken == settings.query_words) break;
    const std::size_t before = terms.size();
    add(w);
    taken += terms.size() > before;
  }
  std::string out;
  for (const auto& t : terms) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

std::vector<std::string> window_text(std::string_view body, std::size_t window_words,
                                     std::size_t overlap) {
  if (window_words == 0) throw std::invalid_argument("window_text: window must be positive");
  if (overlap >= window_words) throw std::invalid_argument("window_text: overlap must be < window");
  std::vector<std::string> words;
  std::istringstream in{std::string(body)};
  for (std::string w; in >> w;) words.push_back(std::move(w));
  std::vector<std::string> out;
  const std::size_t step = window_words - overlap;
  for (std::size_t start = 0; start < words.size(); start += step) {
    const std::size_t end = std::min(words.size(), start + window_words);
    std::string chunk;
    for (std::size_t i = start; i < end; ++i) {
      if (i > start) chunk.push_back(' ');
      chunk += words[i];
    }
    out.push_back(std::move(chunk));
    if (end == words.size()) break;
  }
  return out;
}

double pool_entailment(const std::vector<double>& probabilities) {
  if (probabilities.empty()) return 0.0;
  double num = 0.0;
  double den = 0.0;
  for (double p : probabilities) {
    const auto bin = std::min<std::size_t>(static_cast<std::size_t>(p * kPoolBins), kPoolBins - 1);
    const double w = static_cast<double>(bin + 1) / static_cast<double>(kPoolBins);
    num += w * p;
    den += w;
  }
  return num / den;
}

ConsistencyResult summac_conv(std::string_view document, std::string_view summary,
                              EntailmentBackend& backend, const ConsistencySettings& settings) {
  const auto premises = sentence_texts(document);
  const auto hypotheses = sentence_texts(summary);
  if (premises.empty()) throw std::invalid_argument("summac_conv: empty document");
  if (hypotheses.empty()) throw std::invalid_argument("summac_conv: empty summary");
  ConsistencyResult out;
  out.sentence_scores.resize(hypotheses.size());
  parallel_for(hypotheses.size(), settings.jobs, [&](std::size_t i) {
    out.sentence_scores[i] = pool_entailment(checked_score(backend, premises, hypotheses[i], i));
  });
  // Sorted summation keeps the mean independent of evaluation order.
  auto sorted = out.sentence_scores;
  std::sort(sorted.begin(), sorted.end());
  out.aggregate = std::accumulate(sorted.begin(), sorted.end(), 0.0) /
                  static_cast<double>(sorted.size());
  return out;
}

StarResult summac_star(std::string_view document, std::string_view summary,
                       EntailmentBackend& backend, ArticleRetriever& retriever,
                       const ConsistencySettings& settings) {
  const ConsistencyResult base = summac_conv(document, summary, backend, settings);
  const auto hypotheses = sentence_texts(summary);
  StarResult out;
  out.verdicts.resize(hypotheses.size());
  std::atomic<std::size_t> calls{0};
  parallel_for(hypotheses.size(), settings.jobs, [&](std::size_t i) {
    SentenceVerdict& v = out.verdicts[i];
    v.sentence = hypotheses[i];
    v.source_score = base.sentence_scores[i];
    v.final_score = v.source_score;
    if (v.source_score >= settings.threshold) return;
    v.query = build_query(v.sentence, settings);
    std::vector<Article> articles;
    if (!v.query.empty()) {
      try {
        articles = retriever.retrieve(v.query, settings.article_limit);
      } catch (const RetrievalError&) {
        v.retrieval_failed = true;
        return;
      }
    }
    v.rescored = true;
    for (const auto& article : articles) {
      const auto chunks = window_text(article.body, settings.window_words, settings.window_overlap);
      if (chunks.empty()) continue;
      ++calls;
      const auto scores = checked_score(backend, chunks, v.sentence, i);
      const double best = *std::max_element(scores.begin(), scores.end());
      v.retrieved_scores.emplace_back(article.title, best);
      v.final_score = std::max(v.final_score, best);
    }
  });
  std::vector<double> finals;
  for (const auto& v : out.verdicts) finals.push_back(v.final_score);
  std::sort(finals.begin(), finals.end());
  out.aggregate = std::accumulate(finals.begin(), finals.end(), 0.0) /
                  static_cast<double>(finals.size());
  out.source_aggregate = base.aggregate;
  out.retrieval_backend_calls = calls.load();
  return out;
}

nlohmann::json star_to_json(const StarResult& result) {
  nlohmann::json sentences = nlohmann::json::array();
  for (const auto& v : result.verdicts) {
    nlohmann::json retrieved = nlohmann::json::array();
    for (const auto& [title, score] : v.retrieved_scores) {
      retrieved.push_back({{"title", title}, {"score", score}});
    }
    sentences.push_back({{"sentence", v.sentence},
                         {"source_score", v.source_score},
                         {"final_score", v.final_score},
                         {"rescored", v.rescored},
                         {"retrieval_failed", v.retrieval_failed},
                         {"query", v.query},
                         {"retrieved", retrieved}});
  }
  return {{"summac", result.source_aggregate},
          {"summac_star", result.aggregate},
          {"sentences", sentences}};
}

}  // namespace explplan
