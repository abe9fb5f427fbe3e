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

// Question plans: target selection for the explanatory strategy and the
// heuristic ablations, plan assembly, category deletion, and the controlled
// noise used in robustness experiments.

#ifndef EXPLPLAN_PLAN_H_
#define EXPLPLAN_PLAN_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "explplan/rst.h"

namespace explplan {

enum class Strategy {
  kExplanatory,
  kLead3,
  kLeadK,
  kTail3,
  kTailK,
  kRandom3,
  kRandomK,
  kAllEdus,
  kNonExpEdus,
};

std::string_view to_string(Strategy strategy);
std::optional<Strategy> parse_strategy(std::string_view name);
inline bool is_random(Strategy s) { return s == Strategy::kRandom3 || s == Strategy::kRandomK; }

// A unit of a summary: an EDU or, for rule-based extraction, a sentence.
struct Unit {
  std::size_t index = 0;
  std::string text;

  bool operator==(const Unit&) const = default;
};

struct TargetContext {
  std::size_t target_index = 0;
  std::vector<std::size_t> context_indices;  // always 0 .. target_index - 1
  // Category of the originating pair (explanatory strategy only).
  std::optional<RelationCategory> category;

  bool operator==(const TargetContext&) const = default;
};

struct PlanQuestion {
  std::string text;
  std::optional<RelationCategory> category;
  std::size_t source_target_index = 0;
  std::size_t order = 0;

  bool operator==(const PlanQuestion&) const = default;
};

struct Plan {
  std::vector<PlanQuestion> questions;
  Strategy strategy = Strategy::kExplanatory;
  std::optional<std::uint64_t> seed;

  bool operator==(const Plan&) const = default;
};

// Lead/Tail/Random variants with "3" use three units, "K" variants use k.
// Throws std::invalid_argument for k == 0, a random strategy without a seed,
// or pair indices that fall outside `units`.
std::vector<TargetContext> select_targets(Strategy strategy, const std::vector<Unit>& units,
                                          std::size_t k,
                                          const std::vector<ExplanatoryPair>& pairs,
                                          std::optional<std::uint64_t> seed);

// Ceiling of the mean, at least 1.
std::size_t compute_k(const std::vector<std::size_t>& training_pair_counts);

// Trims each question, folds internal newlines to spaces and appends '?'
// when missing. `normalized`, when given, receives the orders of questions
// that needed a '?' appended.
Plan assemble_plan(const std::vector<TargetContext>& targets,
                   const std::vector<std::string>& questions, Strategy strategy,
                   std::optional<std::uint64_t> seed,
                   std::vector<std::size_t>* normalized = nullptr);

// Question text cleanup shared with the gateway. Returns true when a '?' had
// to be appended.
bool normalize_question(std::string& question);

Plan delete_by_category(const Plan& plan, RelationCategory category);

enum class PerturbMode { kRR, kFRR };
std::optional<PerturbMode> parse_perturb_mode(std::string_view name);

// RR replaces `count` explanatory EDUs (1 <= count <= pairs.size()), FRR
// replaces all of them, each with a distinct unit that is neither explanatory
// nor a target in any pair.
std::vector<ExplanatoryPair> perturb_pairs(const std::vector<ExplanatoryPair>& pairs,
                                           std::size_t unit_count, PerturbMode mode,
                                           std::optional<std::size_t> count, std::uint64_t seed);

Plan perturb_questions(const Plan& plan, const std::vector<std::string>& irrelevant_pool,
                       PerturbMode mode, std::optional<std::size_t> count, std::uint64_t seed);

// Joins the texts of the context units with single spaces.
std::string context_text(const TargetContext& target, const std::vector<Unit>& units);

// Plan block: one "q<N>: <question>" line per question, N from 1, joined by
// '\n' with no trailing newline. Empty plans give an empty string.
std::string plan_block(const Plan& plan);
// Inverse of plan_block; throws ParseError on a malformed line.
std::vector<std::string> parse_plan_block(std::string_view block);

nlohmann::json plan_to_json(const Plan& plan);
Plan plan_from_json(const nlohmann::json& value);

}  // namespace explplan

#endif  // EXPLPLAN_PLAN_H_
