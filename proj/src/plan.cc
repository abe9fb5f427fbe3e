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

#include "explplan/plan.h"

#include <algorithm>
#include <cctype>
#include <set>
#include <stdexcept>

#include "explplan/common.h"
#include "explplan/random.h"

namespace explplan {
namespace {

constexpr std::pair<Strategy, std::string_view> kStrategyNames[] = {
    {Strategy::kExplanatory, "Explanatory"}, {Strategy::kLead3, "Lead3"},
    {Strategy::kLeadK, "LeadK"},             {Strategy::kTail3, "Tail3"},
    {Strategy::kTailK, "TailK"},             {Strategy::kRandom3, "Random3"},
    {Strategy::kRandomK, "RandomK"},         {Strategy::kAllEdus, "AllEDUs"},
    {Strategy::kNonExpEdus, "NonExpEDUs"},
};

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

TargetContext make_target(std::size_t index, std::optional<RelationCategory> category = {}) {
  TargetContext t;
  t.target_index = index;
  t.context_indices.reserve(index);
  for (std::size_t i = 0; i < index; ++i) t.context_indices.push_back(i);
  t.category = category;
  return t;
}

}  // namespace

std::string_view to_string(Strategy strategy) {
  for (const auto& [s, name] : kStrategyNames) {
    if (s == strategy) return name;
  }
  return "Explanatory";
}

std::optional<Strategy> parse_strategy(std::string_view name) {
  const std::string wanted = lower(name);
  for (const auto& [s, n] : kStrategyNames) {
    if (lower(n) == wanted) return s;
  }
  // Accept the hyphenated spellings too (Lead-3, All-EDUs, ...).
  std::string compact;
  for (char c : wanted) {
    if (c != '-' && c != '_') compact.push_back(c);
  }
  for (const auto& [s, n] : kStrategyNames) {
    if (lower(n) == compact) return s;
  }
  return std::nullopt;
}

std::optional<PerturbMode> parse_perturb_mode(std::string_view name) {
  const std::string n = lower(name);
  if (n == "rr") return PerturbMode::kRR;
  if (n == "frr") return PerturbMode::kFRR;
  return std::nullopt;
}

std::vector<TargetContext> select_targets(Strategy strategy, const std::vector<Unit>& units,
                                          std::size_t k,
                                          const std::vector<ExplanatoryPair>& pairs,
                                          std::optional<std::uint64_t> seed) {
  if (k == 0) throw std::invalid_argument("select_targets: k must be at least 1");
  if (is_random(strategy) && !seed) {
    throw std::invalid_argument("select_targets: " + std::string(to_string(strategy)) +
                                " needs a seed");
  }
  for (const auto& p : pairs) {
    if (p.explanatory >= units.size() || p.target >= units.size()) {
      throw std::invalid_argument("select_targets: pair index outside the unit list");
    }
  }
  std::vector<TargetContext> out;
  const std::size_t n = units.size();
  if (n == 0) return out;

  auto width = [&](Strategy s) {
    const bool three = s == Strategy::kLead3 || s == Strategy::kTail3 || s == Strategy::kRandom3;
    return std::min(three ? std::size_t{3} : k, n);
  };

  switch (strategy) {
    case Strategy::kExplanatory:
      for (const auto& p : pairs) out.push_back(make_target(p.target, p.category));
      break;
    case Strategy::kLead3:
    case Strategy::kLeadK:
      for (std::size_t i = 0; i < width(strategy); ++i) out.push_back(make_target(i));
      break;
    case Strategy::kTail3:
    case Strategy::kTailK:
      for (std::size_t i = n - width(strategy); i < n; ++i) out.push_back(make_target(i));
      break;
    case Strategy::kRandom3:
    case Strategy::kRandomK: {
      Rng rng(*seed);
      auto picks = rng.sample(n, width(strategy));
      std::sort(picks.begin(), picks.end());
      for (std::size_t i : picks) out.push_back(make_target(i));
      break;
    }
    case Strategy::kAllEdus:
      for (std::size_t i = 0; i < n; ++i) out.push_back(make_target(i));
      break;
    case Strategy::kNonExpEdus: {
      std::set<std::size_t> explanatory;
      for (const auto& p : pairs) explanatory.insert(p.explanatory);
      for (std::size_t i = 0; i < n; ++i) {
        if (!explanatory.count(i)) out.push_back(make_target(i));
      }
      break;
    }
  }
  return out;
}

std::size_t compute_k(const std::vector<std::size_t>& training_pair_counts) {
  if (training_pair_counts.empty()) {
    throw std::invalid_argument("compute_k: no training counts");
  }
  std::size_t total = 0;
  for (std::size_t c : training_pair_counts) total += c;
  const std::size_t n = training_pair_counts.size();
  return std::max<std::size_t>(1, (total + n - 1) / n);
}

bool normalize_question(std::string& question) {
  for (auto& c : question) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  question = trim(question);
  if (!question.empty() && question.back() != '?') {
    question.push_back('?');
    return true;
  }
  return false;
}

Plan assemble_plan(const std::vector<TargetContext>& targets,
                   const std::vector<std::string>& questions, Strategy strategy,
                   std::optional<std::uint64_t> seed, std::vector<std::size_t>* normalized) {
  if (targets.size() != questions.size()) {
    throw std::invalid_argument("assemble_plan: " + std::to_string(targets.size()) +
                                " targets but " + std::to_string(questions.size()) +
                                " questions");
  }
  Plan plan;
  plan.strategy = strategy;
  plan.seed = seed;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    PlanQuestion q;
    q.text = questions[i];
    if (normalize_question(q.text) && normalized) normalized->push_back(i);
    if (q.text.empty()) {
      throw std::invalid_argument("assemble_plan: question " + std::to_string(i) + " is empty");
    }
    if (strategy == Strategy::kExplanatory) q.category = targets[i].category;
    q.source_target_index = targets[i].target_index;
    q.order = i;
    plan.questions.push_back(std::move(q));
  }
  return plan;
}

Plan delete_by_category(const Plan& plan, RelationCategory category) {
  if (category == RelationCategory::kOther) {
    throw std::invalid_argument("delete_by_category: Other is not an explanatory category");
  }
  if (plan.strategy != Strategy::kExplanatory) {
    throw std::invalid_argument("delete_by_category: plan strategy " +
                                std::string(to_string(plan.strategy)) +
                                " carries no categories");
  }
  Plan out;
  out.strategy = plan.strategy;
  out.seed = plan.seed;
  for (const auto& q : plan.questions) {
    if (q.category == category) continue;
    PlanQuestion kept = q;
    kept.order = out.questions.size();
    out.questions.push_back(std::move(kept));
  }
  return out;
}

std::vector<ExplanatoryPair> perturb_pairs(const std::vector<ExplanatoryPair>& pairs,
                                           std::size_t unit_count, PerturbMode mode,
                                           std::optional<std::size_t> count, std::uint64_t seed) {
  std::size_t replacements = pairs.size();
  if (mode == PerturbMode::kRR) {
    if (!count || *count < 1 || *count > pairs.size()) {
      throw std::invalid_argument("perturb_pairs: RR count must be in [1, " +
                                  std::to_string(pairs.size()) + "]");
    }
    replacements = *count;
  }
  std::set<std::size_t> used;
  for (const auto& p : pairs) {
    if (p.explanatory >= unit_count || p.target >= unit_count) {
      throw std::invalid_argument("perturb_pairs: pair index outside the unit list");
    }
    used.insert(p.explanatory);
    used.insert(p.target);
  }
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < unit_count; ++i) {
    if (!used.count(i)) pool.push_back(i);
  }
  if (pool.size() < replacements) {
    throw std::invalid_argument(
        "perturb_pairs: replacement pool (units neither explanatory nor target) has " +
        std::to_string(pool.size()) + " unit(s), " + std::to_string(replacements) + " needed");
  }
  Rng rng(seed);
  const auto slots = rng.sample(pairs.size(), replacements);
  const auto draws = rng.sample(pool.size(), replacements);
  std::vector<ExplanatoryPair> out = pairs;
  for (std::size_t i = 0; i < slots.size(); ++i) out[slots[i]].explanatory = pool[draws[i]];
  return out;
}

Plan perturb_questions(const Plan& plan, const std::vector<std::string>& irrelevant_pool,
                       PerturbMode mode, std::optional<std::size_t> count, std::uint64_t seed) {
  const std::size_t n = plan.questions.size();
  std::size_t replacements = n;
  if (mode == PerturbMode::kRR) {
    if (!count || *count < 1 || *count > n) {
      throw std::invalid_argument("perturb_questions: RR count must be in [1, " +
                                  std::to_string(n) + "]");
    }
    replacements = *count;
  }
  if (irrelevant_pool.size() < replacements) {
    throw std::invalid_argument("perturb_questions: pool has " +
                                std::to_string(irrelevant_pool.size()) + " question(s), " +
                                std::to_string(replacements) + " needed");
  }
  Rng rng(seed);
  const auto slots = rng.sample(n, replacements);
  const auto draws = rng.sample(irrelevant_pool.size(), replacements);
  Plan out = plan;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    PlanQuestion& q = out.questions[slots[i]];
    q.text = irrelevant_pool[draws[i]];
    normalize_question(q.text);
    q.category.reset();
  }
  return out;
}

std::string context_text(const TargetContext& target, const std::vector<Unit>& units) {
  std::string out;
  for (std::size_t i : target.context_indices) {
    if (i >= units.size()) break;
    if (!out.empty()) out.push_back(' ');
    out += units[i].text;
  }
  return out;
}

std::string plan_block(const Plan& plan) {
  std::string out;
  for (std::size_t i = 0; i < plan.questions.size(); ++i) {
    if (i) out.push_back('\n');
    out += "q" + std::to_string(i + 1) + ": " + plan.questions[i].text;
  }
  return out;
}

std::vector<std::string> parse_plan_block(std::string_view block) {
  std::vector<std::string> out;
  if (block.empty()) return out;
  std::size_t start = 0;
  while (start <= block.size()) {
    std::size_t end = block.find('\n', start);
    if (end == std::string_view::npos) end = block.size();
    const std::string_view line = block.substr(start, end - start);
    const std::string prefix = "q" + std::to_string(out.size() + 1) + ": ";
    if (line.substr(0, prefix.size()) != prefix) {
      throw ParseError("plan block: line " + std::to_string(out.size() + 1) +
                       " does not start with '" + prefix + "'");
    }
    out.emplace_back(line.substr(prefix.size()));
    start = end + 1;
  }
  return out;
}

nlohmann::json plan_to_json(const Plan& plan) {
  nlohmann::json out;
  out["strategy"] = std::string(to_string(plan.strategy));
  out["seed"] = plan.seed ? nlohmann::json(*plan.seed) : nlohmann::json(nullptr);
  out["questions"] = nlohmann::json::array();
  for (const auto& q : plan.questions) {
    out["questions"].push_back(
        {{"order", q.order},
         {"text", q.text},
         {"category", q.category ? nlohmann::json(std::string(to_string(*q.category)))
                                 : nlohmann::json(nullptr)},
         {"target", q.source_target_index}});
  }
  return out;
}

Plan plan_from_json(const nlohmann::json& value) {
  if (!value.is_object()) throw ParseError("plan: expected an object");
  Plan plan;
  const auto strategy = parse_strategy(value.value("strategy", std::string("Explanatory")));
  if (!strategy) throw ParseError("plan: unknown strategy");
  plan.strategy = *strategy;
  if (value.contains("seed") && !value.at("seed").is_null()) {
    plan.seed = value.at("seed").get<std::uint64_t>();
  }
  if (!value.contains("questions") || !value.at("questions").is_array()) {
    throw ParseError("plan: field 'questions' must be an array");
  }
  for (const auto& item : value.at("questions")) {
    PlanQuestion q;
    if (!item.contains("text") || !item.at("text").is_string()) {
      throw ParseError("plan: question without 'text'");
    }
    q.text = item.at("text").get<std::string>();
    q.order = plan.questions.size();
    if (item.contains("category") && !item.at("category").is_null()) {
      q.category = parse_category(item.at("category").get<std::string>());
      if (!q.category || !is_explanatory(*q.category)) {
        throw ParseError("plan: question category must be explanatory");
      }
    }
    q.source_target_index = item.value("target", std::size_t{0});
    plan.questions.push_back(std::move(q));
  }
  return plan;
}

}  // namespace explplan
