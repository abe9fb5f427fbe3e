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


#include "explplan/dataset.h"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "explplan/common.h"
#include "explplan/metrics.h"
#include "explplan/prompts.h"
#include "explplan/segmentation.h"

namespace explplan {
namespace {

const std::string& required_text(const nlohmann::json& value, const char* field) {
  const auto it = value.find(field);
  if (it == value.end()) throw ParseError(std::string("missing field '") + field + "'");
  if (!it->is_string()) throw ParseError(std::string("field '") + field + "' must be a string");
  const auto& text = it->get_ref<const std::string&>();
  if (trim(text).empty()) throw ParseError(std::string("field '") + field + "' is empty");
  return text;
}

std::vector<Unit> sentence_units(std::string_view text) {
  std::vector<Unit> units;
  for (auto& s : segment_sentences(text)) units.push_back({s.index, std::move(s.text)});
  return units;
}

double sorted_mean(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string separator_line() { return std::string(kSummarySeparator) + "\n"; }

}  // namespace

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kValidation: return "validation";
    case Split::kTest: return "test";
  }
  return "train";
}

std::optional<Split> parse_split(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "validation") return Split::kValidation;
  if (name == "test") return Split::kTest;
  return std::nullopt;
}

std::string_view to_string(Provenance provenance) {
  switch (provenance) {
    case Provenance::kRstInterchange: return "rst-interchange";
    case Provenance::kRuleBased: return "rule-based";
    case Provenance::kLlmDirect: return "llm-direct";
  }
  return "rule-based";
}

std::optional<Provenance> parse_provenance(std::string_view name) {
  if (name == "rst-interchange") return Provenance::kRstInterchange;
  if (name == "rule-based") return Provenance::kRuleBased;
  if (name == "llm-direct") return Provenance::kLlmDirect;
  return std::nullopt;
}

std::string_view to_string(FormatVariant variant) {
  switch (variant) {
    case FormatVariant::kPlanOutput: return "PlanOutput";
    case FormatVariant::kPlanInputPG: return "PlanInputPG";
    case FormatVariant::kPlanInputSG: return "PlanInputSG";
  }
  return "PlanOutput";
}

std::optional<FormatVariant> parse_variant(std::string_view name) {
  std::string key;
  for (char c : name) {
    if (c == '-' || c == '_') continue;
    key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  if (key == "planoutput") return FormatVariant::kPlanOutput;
  if (key == "planinputpg" || key == "pg") return FormatVariant::kPlanInputPG;
  if (key == "planinputsg" || key == "sg") return FormatVariant::kPlanInputSG;
  return std::nullopt;
}

// --- records ---

DatasetRecord record_from_json(const nlohmann::json& value) {
  if (!value.is_object()) throw ParseError("expected a JSON object");
  DatasetRecord r;
  r.id = required_text(value, "id");
  r.document = required_text(value, "document");
  r.summary = required_text(value, "summary");
  const auto split = parse_split(required_text(value, "split"));
  if (!split) throw ParseError("field 'split' must be train, validation or test");
  r.split = *split;
  return r;
}

nlohmann::json record_to_json(const DatasetRecord& record) {
  return {{"id", record.id},
          {"split", std::string(to_string(record.split))},
          {"document", record.document},
          {"summary", record.summary}};
}

AugmentedRecord augmented_from_json(const nlohmann::json& value) {
  AugmentedRecord r;
  r.base = record_from_json(value);
  if (!value.contains("plan")) throw ParseError("missing field 'plan'");
  r.plan = plan_from_json(value.at("plan"));
  if (!value.contains("pairs") || !value.at("pairs").is_array()) {
    throw ParseError("field 'pairs' must be an array");
  }
  for (const auto& p : value.at("pairs")) r.pairs.push_back(pair_from_json(p));
  if (value.contains("units")) {
    if (!value.at("units").is_array()) throw ParseError("field 'units' must be an array");
    for (const auto& u : value.at("units")) {
      if (!u.is_string()) throw ParseError("field 'units' must hold strings");
      r.units.push_back({r.units.size(), u.get<std::string>()});
    }
  }
  for (const auto& p : r.pairs) {
    if (!r.units.empty() && (p.explanatory >= r.units.size() || p.target >= r.units.size())) {
      throw ParseError("pair index outside 'units'");
    }
  }
  const auto provenance = parse_provenance(value.value("extractor", std::string("rule-based")));
  if (!provenance) throw ParseError("field 'extractor' has an unknown value");
  r.provenance = *provenance;
  if (value.contains("normalized_questions")) {
    r.normalized_questions = value.at("normalized_questions").get<std::vector<std::size_t>>();
  }
  return r;
}

nlohmann::json augmented_to_json(const AugmentedRecord& record) {
  nlohmann::json out = record_to_json(record.base);
  out["extractor"] = std::string(to_string(record.provenance));
  out["units"] = nlohmann::json::array();
  for (const auto& u : record.units) out["units"].push_back(u.text);
  out["pairs"] = nlohmann::json::array();
  for (const auto& p : record.pairs) out["pairs"].push_back(pair_to_json(p));
  out["plan"] = plan_to_json(record.plan);
  if (!record.normalized_questions.empty()) {
    out["normalized_questions"] = record.normalized_questions;
  }
  return out;
}

// --- reader ---

CorpusReader::CorpusReader(std::istream& in, std::string source_name, ErrorMode mode,
                           std::optional<Split> split)
    : in_(in), source_(std::move(source_name)), mode_(mode), split_(split) {}

void CorpusReader::issue(const std::string& message) {
  if (mode_ == ErrorMode::kFailFast) {
    throw ParseError(source_ + ":" + std::to_string(line_) + ": " + message);
  }
  issues_.push_back({line_, message});
}

bool CorpusReader::next_json(nlohmann::json& value, DatasetRecord& base) {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_;
    if (trim(line).empty()) continue;
    value = nlohmann::json::parse(line, nullptr, false);
    if (value.is_discarded()) {
      issue("invalid JSON");
      continue;
    }
    try {
      base = record_from_json(value);
    } catch (const ParseError& e) {
      issue(e.what());
      continue;
    }
    if (split_ && base.split != *split_) continue;
    if (!ids_[base.split].insert(base.id).second) {
      issue("duplicate id '" + base.id + "' in split " + std::string(to_string(base.split)));
      continue;
    }
    return true;
  }
  return false;
}

bool CorpusReader::next(DatasetRecord& out) {
  nlohmann::json value;
  return next_json(value, out);
}

bool CorpusReader::next(AugmentedRecord& out) {
  nlohmann::json value;
  DatasetRecord base;
  while (next_json(value, base)) {
    try {
      out = augmented_from_json(value);
      return true;
    } catch (const ParseError& e) {
      issue(e.what());
    } catch (const nlohmann::json::exception& e) {
      issue(e.what());
    }
  }
  return false;
}

// --- extractors ---

RuleBasedPairExtractor::RuleBasedPairExtractor(std::vector<SignalPattern> patterns)
    : extractor_(std::move(patterns)) {}

Extraction RuleBasedPairExtractor::extract(const DatasetRecord& record) {
  Extraction out;
  const auto sentences = segment_sentences(record.summary);
  out.pairs = extractor_.extract(sentences);
  for (const auto& s : sentences) out.units.push_back({s.index, s.text});
  return out;
}

std::optional<Granularity> parse_granularity(std::string_view name) {
  if (name == "edu") return Granularity::kEdu;
  if (name == "sentence") return Granularity::kSentence;
  return std::nullopt;
}

InterchangePairExtractor::InterchangePairExtractor(std::map<std::string, RstDocument> documents,
                                                   Granularity granularity)
    : documents_(std::move(documents)), granularity_(granularity) {}

InterchangePairExtractor InterchangePairExtractor::from_stream(std::istream& in,
                                                               const std::string& source_name,
                                                               Granularity granularity) {
  std::map<std::string, RstDocument> docs;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (trim(line).empty()) continue;
    try {
      auto doc = parse_interchange_line(line);
      const std::string id = doc.doc_id;
      if (!docs.emplace(id, std::move(doc)).second) {
        throw ParseError("duplicate doc_id '" + id + "'");
      }
    } catch (const std::exception& e) {
      throw ParseError(source_name + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return InterchangePairExtractor(std::move(docs), granularity);
}

Extraction InterchangePairExtractor::extract(const DatasetRecord& record) {
  const auto it = documents_.find(record.id);
  if (it == documents_.end()) {
    throw ParseError("no discourse parse for record '" + record.id + "'");
  }
  Extraction out;
  auto result = extract_explanatory_pairs(it->second.tree, it->second.edus);
  skipped_ += result.skipped_multinuclear;
  if (granularity_ == Granularity::kEdu) {
    for (const auto& edu : it->second.edus) out.units.push_back({edu.index, edu.text});
    out.pairs = std::move(result.pairs);
    return out;
  }
  const auto sentences = segment_sentences(record.summary);
  auto sentence_of = [&](const Edu& edu) {
    for (const auto& s : sentences) {
      if (edu.char_start >= s.char_start && edu.char_start < s.char_end) return s.index;
    }
    throw ParseError("record '" + record.id + "': EDU " + std::to_string(edu.index) +
                     " lies outside the summary sentences");
  };
  for (const auto& s : sentences) out.units.push_back({s.index, s.text});
  for (const auto& p : result.pairs) {
    ExplanatoryPair q = p;
    q.explanatory = sentence_of(it->second.edus.at(p.explanatory));
    q.target = sentence_of(it->second.edus.at(p.target));
    if (q.explanatory == q.target) continue;
    const bool seen = std::any_of(out.pairs.begin(), out.pairs.end(), [&](const ExplanatoryPair& o) {
      return o.explanatory == q.explanatory && o.target == q.target;
    });
    if (seen) continue;
    q.appearance_position = out.pairs.size();
    out.pairs.push_back(q);
  }
  return out;
}

Extraction LlmPairExtractor::extract(const DatasetRecord& record) {
  Extraction out;
  out.units = sentence_units(record.summary);
  out.pairs = to_explanatory_pairs(gateway_.extract_pairs_llm(record.summary));
  return out;
}

std::string GatewayQuestionSource::question(const std::string& context,
                                            const std::string& target) {
  auto q = gateway_.generate_question(context, target);
  // Hand back the bare text so assemble_plan records the normalization.
  if (q.appended_question_mark) q.text.pop_back();
  return q.text;
}

// --- augmentation ---

AugmentedRecord augment(const DatasetRecord& record, PairExtractor& extractor,
                        QuestionSource& questions, const AugmentOptions& options) {
  AugmentedRecord out;
  out.base = record;
  out.provenance = extractor.provenance();
  try {
    Extraction extraction = extractor.extract(record);
    const std::optional<std::uint64_t> seed =
        is_random(options.strategy) ? options.seed : std::nullopt;
    const auto targets =
        select_targets(options.strategy, extraction.units, options.k, extraction.pairs, seed);
    std::vector<std::string> texts;
    texts.reserve(targets.size());
    for (const auto& t : targets) {
      texts.push_back(questions.question(context_text(t, extraction.units),
                                         extraction.units[t.target_index].text));
    }
    out.plan = assemble_plan(targets, texts, options.strategy, seed, &out.normalized_questions);
    out.pairs = std::move(extraction.pairs);
    out.units = std::move(extraction.units);
  } catch (const EmptyResponseError& e) {
    throw EmptyResponseError("record '" + record.id + "': " + e.what(), e.attempts(),
                             e.http_status());
  } catch (const GatewayError& e) {
    throw GatewayError("record '" + record.id + "': " + e.what(), e.attempts(), e.http_status());
  }
  return out;
}

// --- training files ---

TrainingExample make_training_example(const AugmentedRecord& record, FormatVariant variant) {
  TrainingExample ex;
  ex.id = record.base.id;
  ex.split = record.base.split;
  ex.empty_plan = record.plan.questions.empty();
  const std::string block = plan_block(record.plan);
  switch (variant) {
    case FormatVariant::kPlanOutput:
      ex.input = record.base.document;
      ex.target = (block.empty() ? "" : block + "\n") + separator_line() + record.base.summary;
      break;
    case FormatVariant::kPlanInputPG:
      ex.input = record.base.document;
      ex.target = block;
      break;
    case FormatVariant::kPlanInputSG:
      ex.input = plan_prompt(record.base.document, record.plan).text;
      ex.target = record.base.summary;
      break;
  }
  return ex;
}

nlohmann::json training_to_json(const TrainingExample& example, FormatVariant variant) {
  return {{"id", example.id},
          {"split", std::string(to_string(example.split))},
          {"variant", std::string(to_string(variant))},
          {"input", example.input},
          {"target", example.target},
          {"empty_plan", example.empty_plan}};
}

std::size_t emit_training_file(const std::vector<AugmentedRecord>& records,
                               FormatVariant variant, std::ostream& out) {
  std::size_t n = 0;
  for (const auto& r : records) {
    out << training_to_json(make_training_example(r, variant), variant).dump() << '\n';
    if (!out) throw std::runtime_error("emit_training_file: write failed");
    ++n;
  }
  return n;
}

ParsedExample parse_training_line(std::string_view line, FormatVariant variant) {
  const auto value = nlohmann::json::parse(line, nullptr, false);
  if (value.is_discarded() || !value.is_object()) throw ParseError("training line: invalid JSON");
  ParsedExample out;
  out.id = required_text(value, "id");
  const auto split = parse_split(required_text(value, "split"));
  if (!split) throw ParseError("training line: bad split");
  out.split = *split;
  if (!value.contains("input") || !value.at("input").is_string() || !value.contains("target") ||
      !value.at("target").is_string()) {
    throw ParseError("training line: 'input' and 'target' must be strings");
  }
  const std::string& input = value.at("input").get_ref<const std::string&>();
  const std::string& target = value.at("target").get_ref<const std::string&>();
  switch (variant) {
    case FormatVariant::kPlanOutput: {
      out.document = input;
      const std::string sep = separator_line();
      std::size_t block_end;
      std::size_t summary_start;
      if (target.compare(0, sep.size(), sep) == 0) {
        block_end = 0;
        summary_start = sep.size();
      } else {
        const std::size_t at = target.find("\n" + sep);
        if (at == std::string::npos) throw ParseError("training line: no summary separator");
        block_end = at;
        summary_start = at + 1 + sep.size();
      }
      out.questions = parse_plan_block(std::string_view(target).substr(0, block_end));
      out.summary = target.substr(summary_start);
      break;
    }
    case FormatVariant::kPlanInputPG:
      out.document = input;
      out.questions = parse_plan_block(target);
      break;
    case FormatVariant::kPlanInputSG: {
      auto slots = unrender_prompt(PromptId::kPlan, input);
      out.document = std::move(slots["document"]);
      out.questions = parse_plan_block(slots["questions"]);
      out.summary = target;
      break;
    }
  }
  return out;
}

StripResult strip_plan(std::string_view generated) {
  std::size_t start = 0;
  while (start <= generated.size()) {
    std::size_t end = generated.find('\n', start);
    const bool last = end == std::string_view::npos;
    if (last) end = generated.size();
    if (trim(generated.substr(start, end - start)) == kSummarySeparator) {
      return {std::string(last ? std::string_view() : generated.substr(end + 1)), true};
    }
    if (last) break;
    start = end + 1;
  }
  return {std::string(generated), false};
}

// --- statistics ---

void CorpusStatsBuilder::add(const DatasetRecord& record) {
  ++counts_[static_cast<int>(record.split)];
  const auto doc = token_texts(record.document, true);
  const auto summ = token_texts(record.summary, true);
  doc_tokens_.push_back(static_cast<double>(doc.size()));
  summary_tokens_.push_back(static_cast<double>(summ.size()));
  const auto stats = extractive_stats_tokens(doc, summ);
  coverage_.push_back(stats.coverage);
  density_.push_back(stats.density);
  compression_.push_back(stats.compression);
}

CorpusStats CorpusStatsBuilder::result() const {
  if (doc_tokens_.empty()) throw std::invalid_argument("corpus_stats: no records");
  CorpusStats s;
  s.train = counts_[0];
  s.validation = counts_[1];
  s.test = counts_[2];
  s.doc_tokens = sorted_mean(doc_tokens_);
  s.summary_tokens = sorted_mean(summary_tokens_);
  s.coverage = sorted_mean(coverage_);
  s.density = sorted_mean(density_);
  s.compression = sorted_mean(compression_);
  return s;
}

CorpusStats corpus_stats(const std::vector<DatasetRecord>& records) {
  CorpusStatsBuilder b;
  for (const auto& r : records) b.add(r);
  return b.result();
}

std::string corpus_stats_header() {
  return "Dataset\t# Training\t# Validation\t# Test\tAvg. Doc Tokens\tAvg. Summ Tokens\t"
         "Coverage\tDensity\tCompression Ratio";
}

std::string corpus_stats_row(std::string_view name, const CorpusStats& s) {
  return std::string(name) + "\t" + std::to_string(s.train) + "\t" +
         std::to_string(s.validation) + "\t" + std::to_string(s.test) + "\t" +
         fixed2(s.doc_tokens) + "\t" + fixed2(s.summary_tokens) + "\t" + fixed2(s.coverage) +
         "\t" + fixed2(s.density) + "\t" + fixed2(s.compression);
}

}  // namespace explplan
