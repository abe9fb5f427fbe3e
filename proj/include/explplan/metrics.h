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

// Reference-based and reference-free summary metrics.

#ifndef EXPLPLAN_METRICS_H_
#define EXPLPLAN_METRICS_H_

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "explplan/rst.h"

namespace explplan {

// Distinct explanatory units over total units. With include_targets, target
// units count toward the numerator too.
double exp_ratio(const std::vector<ExplanatoryPair>& pairs, std::size_t total_units,
                 bool include_targets = false);

// Flesch Reading Ease, unclamped. The second form takes the per-word
// syllable counter; the first uses count_syllables.
double fre(std::string_view text);
double fre(std::string_view text, const std::function<int(std::string_view)>& syllables);
double clamp_fre(double score);

struct RougeScores {
  double rouge2_f1 = 0.0;
  double rouge_lsum_f1 = 0.0;
};

// ROUGE tokens: lowercase, non-alphanumerics as separators, Porter stems
// for tokens longer than three characters.
std::vector<std::string> rouge_tokens(std::string_view text);

RougeScores rouge_scores(std::string_view candidate, std::string_view reference);

struct DSariBreakdown {
  double keep = 0.0;
  double deletion = 0.0;
  double addition = 0.0;
  double score = 0.0;  // mean of the three, times 100
};

DSariBreakdown d_sari_components(std::string_view candidate, std::string_view reference,
                                 std::string_view source);

inline double d_sari(std::string_view candidate, std::string_view reference,
                     std::string_view source) {
  return d_sari_components(candidate, reference, source).score;
}

std::size_t ast(std::string_view summary);

struct ExtractiveStats {
  double coverage = 0.0;
  double density = 0.0;
  double compression = 0.0;
};

// Greedy extractive fragments over token sequences.
std::vector<std::size_t> extractive_fragment_lengths(const std::vector<std::string>& document,
                                                     const std::vector<std::string>& summary);

ExtractiveStats extractive_stats(std::string_view document, std::string_view summary);
ExtractiveStats extractive_stats_tokens(const std::vector<std::string>& document,
                                        const std::vector<std::string>& summary);

struct MetricSettings {
  bool clamp_fre = false;
  bool exp_ratio_include_targets = false;
  std::string exp_ratio_units = "sentence";  // "sentence" (rule-based) or "edu"

  std::string fingerprint() const;
};

struct MetricReport {
  std::string id;
  double exp_ratio = 0.0;
  double fre = 0.0;
  double d_sari = 0.0;
  double rouge2_f1 = 0.0;
  double rouge_lsum_f1 = 0.0;
  std::size_t ast = 0;
  double coverage = 0.0;
  double density = 0.0;
  double compression = 0.0;
  std::string config_fingerprint;
};

// All metrics for one generated summary. `pairs`/`unit_count` describe the
// explanatory structure of the candidate.
MetricReport compute_report(std::string_view id, std::string_view candidate,
                            std::string_view reference, std::string_view source,
                            const std::vector<ExplanatoryPair>& pairs, std::size_t unit_count,
                            const MetricSettings& settings);

nlohmann::json report_to_json(const MetricReport& report);

// Tab-separated aggregate row: Model, R2, RLsum, D-SARI, FRE, ExpRatio, AST
// (scores as percentages where the literature reports them that way).
std::string aggregate_header();
std::string aggregate_row(std::string_view model, const std::vector<MetricReport>& reports);

}  // namespace explplan

#endif  // EXPLPLAN_METRICS_H_
