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

#include "explplan/metrics.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include "explplan/common.h"
#include "explplan/porter.h"
#include "explplan/segmentation.h"

namespace explplan {
namespace {

using NgramCounts = std::map<std::string, long>;

NgramCounts ngram_counts(const std::vector<std::string>& tokens, std::size_t n) {
  NgramCounts counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key = tokens[i];
    for (std::size_t j = 1; j < n; ++j) {
      key.push_back('\x1f');
      key += tokens[i + j];
    }
    ++counts[key];
  }
  return counts;
}

long count_of(const NgramCounts& c, const std::string& key) {
  const auto it = c.find(key);
  return it == c.end() ? 0 : it->second;
}

double f1(double precision, double recall) {
  return precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
}

// Longest-common-subsequence table over token vectors.
std::vector<std::vector<int>> lcs_table(const std::vector<std::string>& ref,
                                        const std::vector<std::string>& can) {
  std::vector<std::vector<int>> t(ref.size() + 1, std::vector<int>(can.size() + 1, 0));
  for (std::size_t i = 1; i <= ref.size(); ++i) {
    for (std::size_t j = 1; j <= can.size(); ++j) {
      t[i][j] = ref[i - 1] == can[j - 1] ? t[i - 1][j - 1] + 1
                                         : std::max(t[i - 1][j], t[i][j - 1]);
    }
  }
  return t;
}

// Reference positions of one LCS, using the usual backtracking tie rule
// (move left in the candidate when that keeps the longer prefix).
std::vector<std::size_t> lcs_positions(const std::vector<std::string>& ref,
                                       const std::vector<std::string>& can) {
  const auto t = lcs_table(ref, can);
  std::vector<std::size_t> out;
  std::size_t i = ref.size();
  std::size_t j = can.size();
  while (i > 0 && j > 0) {
    if (ref[i - 1] == can[j - 1]) {
      out.push_back(i - 1);
      --i;
      --j;
    } else if (t[i][j - 1] > t[i - 1][j]) {
      --j;
    } else {
      --i;
    }
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::vector<std::vector<std::string>> rouge_sentences(std::string_view text) {
  std::vector<std::vector<std::string>> out;
  for (const auto& s : segment_sentences(text)) {
    auto tokens = rouge_tokens(s.text);
    if (!tokens.empty()) out.push_back(std::move(tokens));
  }
  return out;
}

double rouge_lsum(std::string_view candidate, std::string_view reference) {
  const auto ref = rouge_sentences(reference);
  const auto can = rouge_sentences(candidate);
  std::size_t m = 0;
  std::size_t n = 0;
  std::unordered_map<std::string, long> ref_counts;
  std::unordered_map<std::string, long> can_counts;
  for (const auto& s : ref) {
    m += s.size();
    for (const auto& t : s) ++ref_counts[t];
  }
  for (const auto& s : can) {
    n += s.size();
    for (const auto& t : s) ++can_counts[t];
  }
  if (m == 0 || n == 0) return 0.0;
  long hits = 0;
  for (const auto& r : ref) {
    std::set<std::size_t> positions;
    for (const auto& c : can) {
      for (std::size_t p : lcs_positions(r, c)) positions.insert(p);
    }
    for (std::size_t p : positions) {
      const std::string& token = r[p];
      if (can_counts[token] > 0 && ref_counts[token] > 0) {
        ++hits;
        --can_counts[token];
        --ref_counts[token];
      }
    }
  }
  const double recall = static_cast<double>(hits) / static_cast<double>(m);
  const double precision = static_cast<double>(hits) / static_cast<double>(n);
  return f1(precision, recall);
}

std::string format2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

double exp_ratio(const std::vector<ExplanatoryPair>& pairs, std::size_t total_units,
                 bool include_targets) {
  if (total_units == 0) throw std::invalid_argument("exp_ratio: total_units must be at least 1");
  std::set<std::size_t> units;
  for (const auto& p : pairs) {
    if (p.explanatory >= total_units || p.target >= total_units) {
      throw std::invalid_argument("exp_ratio: pair index outside the unit range");
    }
    units.insert(p.explanatory);
    if (include_targets) units.insert(p.target);
  }
  return static_cast<double>(units.size()) / static_cast<double>(total_units);
}

double fre(std::string_view text) { return fre(text, count_syllables); }

double fre(std::string_view text, const std::function<int(std::string_view)>& syllables) {
  std::size_t sentences = 0;
  std::size_t words = 0;
  std::size_t syllable_total = 0;
  for (const auto& sentence : segment_sentences(text)) {
    bool counted = false;
    for (const auto& token : tokenize(sentence.text)) {
      if (!token.is_word) continue;
      ++words;
      syllable_total += static_cast<std::size_t>(syllables(token.text));
      counted = true;
    }
    if (counted) ++sentences;
  }
  if (words == 0) throw std::invalid_argument("fre: text contains no words");
  const double wps = static_cast<double>(words) / static_cast<double>(sentences);
  const double spw = static_cast<double>(syllable_total) / static_cast<double>(words);
  return 206.835 - 1.015 * wps - 84.6 * spw;
}

double clamp_fre(double score) { return std::clamp(score, 0.0, 100.0); }

std::vector<std::string> rouge_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  auto flush = [&] {
    if (current.empty()) return;
    out.push_back(current.size() > 3 ? porter_stem(current) : current);
    current.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) && c < 0x80) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
    }
  }
  flush();
  return out;
}

RougeScores rouge_scores(std::string_view candidate, std::string_view reference) {
  RougeScores scores;
  const auto cand = rouge_tokens(candidate);
  const auto ref = rouge_tokens(reference);
  const auto cand_bigrams = ngram_counts(cand, 2);
  const auto ref_bigrams = ngram_counts(ref, 2);
  long overlap = 0;
  long cand_total = 0;
  long ref_total = 0;
  for (const auto& [gram, count] : cand_bigrams) {
    cand_total += count;
    overlap += std::min(count, count_of(ref_bigrams, gram));
  }
  for (const auto& [gram, count] : ref_bigrams) ref_total += count;
  if (cand_total > 0 && ref_total > 0) {
    scores.rouge2_f1 = f1(static_cast<double>(overlap) / static_cast<double>(cand_total),
                          static_cast<double>(overlap) / static_cast<double>(ref_total));
  }
  scores.rouge_lsum_f1 = rouge_lsum(candidate, reference);
  return scores;
}

DSariBreakdown d_sari_components(std::string_view candidate, std::string_view reference,
                                 std::string_view source) {
  const auto out_tokens = token_texts(candidate, true);
  const auto ref_tokens = token_texts(reference, true);
  const auto src_tokens = token_texts(source, true);

  double keep_sum = 0.0;
  double del_sum = 0.0;
  double add_sum = 0.0;
  for (std::size_t n = 1; n <= 4; ++n) {
    const auto s = ngram_counts(src_tokens, n);
    const auto c = ngram_counts(out_tokens, n);
    const auto r = ngram_counts(ref_tokens, n);

    // Keep: source n-grams retained by the output, checked against the ones
    // the reference retains.
    double keep_good = 0, keep_selected = 0, keep_relevant = 0;
    // Deletion: source n-grams dropped by the output, checked against the
    // ones the reference drops.
    double del_good = 0, del_selected = 0;
    for (const auto& [gram, s_count] : s) {
      const long c_count = count_of(c, gram);
      const long r_count = count_of(r, gram);
      const long kept = std::min(s_count, c_count);
      const long ref_kept = std::min(s_count, r_count);
      keep_selected += static_cast<double>(kept);
      keep_relevant += static_cast<double>(ref_kept);
      keep_good += static_cast<double>(std::min(kept, ref_kept));
      const long deleted = std::max(s_count - c_count, 0L);
      const long ref_deleted = std::max(s_count - r_count, 0L);
      del_selected += static_cast<double>(deleted);
      del_good += static_cast<double>(std::min(deleted, ref_deleted));
    }
    const double keep_p = keep_selected > 0 ? keep_good / keep_selected : 0.0;
    const double keep_r = keep_relevant > 0 ? keep_good / keep_relevant : 0.0;
    keep_sum += f1(keep_p, keep_r);
    del_sum += del_selected > 0 ? del_good / del_selected : 0.0;

    // Addition: n-gram types new to the output, checked against the types
    // the reference adds.
    double add_good = 0, add_selected = 0, add_relevant = 0;
    for (const auto& [gram, count] : c) {
      if (s.count(gram)) continue;
      add_selected += 1;
      if (r.count(gram)) add_good += 1;
    }
    for (const auto& [gram, count] : r) {
      if (!s.count(gram)) add_relevant += 1;
    }
    const double add_p = add_selected > 0 ? add_good / add_selected : 0.0;
    const double add_r = add_relevant > 0 ? add_good / add_relevant : 0.0;
    add_sum += f1(add_p, add_r);
  }

  const double input_len = static_cast<double>(src_tokens.size());
  const double ref_len = static_cast<double>(ref_tokens.size());
  const double out_len = static_cast<double>(out_tokens.size());
  const double ref_sents = static_cast<double>(segment_sentences(reference).size());
  const double out_sents = static_cast<double>(segment_sentences(candidate).size());

  double lp1 = 1.0;
  if (out_len < ref_len) lp1 = out_len > 0 ? std::exp((out_len - ref_len) / out_len) : 0.0;
  double lp2 = 1.0;
  if (out_len > ref_len) lp2 = std::exp((ref_len - out_len) / std::max(input_len - ref_len, 1.0));
  const double max_sents = std::max(ref_sents, out_sents);
  const double slp = max_sents > 0 ? std::exp(-std::fabs(ref_sents - out_sents) / max_sents) : 1.0;

  DSariBreakdown d;
  d.keep = keep_sum / 4.0 * lp2 * slp;
  d.deletion = del_sum / 4.0 * lp2;
  d.addition = add_sum / 4.0 * lp1;
  d.score = (d.keep + d.deletion + d.addition) / 3.0 * 100.0;
  return d;
}

std::size_t ast(std::string_view summary) { return tokenize(summary).size(); }

std::vector<std::size_t> extractive_fragment_lengths(const std::vector<std::string>& document,
                                                     const std::vector<std::string>& summary) {
  std::vector<std::size_t> fragments;
  std::size_t i = 0;
  while (i < summary.size()) {
    std::size_t best = 0;
    // Every start position is tried; skipping past a partial match can miss
    // a longer one that begins inside it.
    for (std::size_t j = 0; j < document.size(); ++j) {
      std::size_t len = 0;
      while (i + len < summary.size() && j + len < document.size() &&
             summary[i + len] == document[j + len]) {
        ++len;
      }
      best = std::max(best, len);
    }
    if (best > 0) fragments.push_back(best);
    i += std::max<std::size_t>(best, 1);
  }
  return fragments;
}

ExtractiveStats extractive_stats_tokens(const std::vector<std::string>& document,
                                        const std::vector<std::string>& summary) {
  if (summary.empty()) throw std::invalid_argument("extractive_stats: empty summary");
  if (document.empty()) throw std::invalid_argument("extractive_stats: empty document");
  ExtractiveStats stats;
  double total = 0;
  double squares = 0;
  for (std::size_t f : extractive_fragment_lengths(document, summary)) {
    total += static_cast<double>(f);
    squares += static_cast<double>(f) * static_cast<double>(f);
  }
  const auto n = static_cast<double>(summary.size());
  stats.coverage = total / n;
  stats.density = squares / n;
  stats.compression = static_cast<double>(document.size()) / n;
  return stats;
}

ExtractiveStats extractive_stats(std::string_view document, std::string_view summary) {
  return extractive_stats_tokens(token_texts(document, true), token_texts(summary, true));
}

std::string MetricSettings::fingerprint() const {
  std::string canonical = "metrics/v1;";
  canonical += "clamp_fre=" + std::to_string(clamp_fre) + ";";
  canonical += "exp_ratio_include_targets=" + std::to_string(exp_ratio_include_targets) + ";";
  canonical += "exp_ratio_units=" + exp_ratio_units + ";";
  canonical += "rouge=lower,alnum,porter>3;dsari=n1-4,token;stats=greedy-fragments";
  return hex64(fnv1a64(canonical));
}

MetricReport compute_report(std::string_view id, std::string_view candidate,
                            std::string_view reference, std::string_view source,
                            const std::vector<ExplanatoryPair>& pairs, std::size_t unit_count,
                            const MetricSettings& settings) {
  MetricReport report;
  report.id = std::string(id);
  report.exp_ratio =
      unit_count == 0 ? 0.0 : exp_ratio(pairs, unit_count, settings.exp_ratio_include_targets);
  report.fre = fre(candidate);
  if (settings.clamp_fre) report.fre = clamp_fre(report.fre);
  report.d_sari = d_sari(candidate, reference, source);
  const auto rouge = rouge_scores(candidate, reference);
  report.rouge2_f1 = rouge.rouge2_f1;
  report.rouge_lsum_f1 = rouge.rouge_lsum_f1;
  report.ast = ast(candidate);
  const auto stats = extractive_stats(source, candidate);
  report.coverage = stats.coverage;
  report.density = stats.density;
  report.compression = stats.compression;
  report.config_fingerprint = settings.fingerprint();
  return report;
}

nlohmann::json report_to_json(const MetricReport& r) {
  return nlohmann::json{{"id", r.id},
                        {"rouge2_f1", r.rouge2_f1},
                        {"rouge_lsum_f1", r.rouge_lsum_f1},
                        {"d_sari", r.d_sari},
                        {"fre", r.fre},
                        {"exp_ratio", r.exp_ratio},
                        {"ast", r.ast},
                        {"coverage", r.coverage},
                        {"density", r.density},
                        {"compression", r.compression},
                        {"config_fingerprint", r.config_fingerprint}};
}

std::string aggregate_header() { return "Model\tR2\tRLsum\tD-SARI\tFRE\tExpRatio\tAST"; }

std::string aggregate_row(std::string_view model, const std::vector<MetricReport>& reports) {
  if (reports.empty()) throw std::invalid_argument("aggregate_row: no reports");
  double r2 = 0, rl = 0, ds = 0, fr = 0, er = 0, as = 0;
  for (const auto& r : reports) {
    r2 += r.rouge2_f1;
    rl += r.rouge_lsum_f1;
    ds += r.d_sari;
    fr += r.fre;
    er += r.exp_ratio;
    as += static_cast<double>(r.ast);
  }
  const auto n = static_cast<double>(reports.size());
  return std::string(model) + "\t" + format2(100 * r2 / n) + "\t" + format2(100 * rl / n) +
         "\t" + format2(ds / n) + "\t" + format2(fr / n) + "\t" + format2(100 * er / n) + "\t" +
         format2(as / n);
}

}  // namespace explplan
