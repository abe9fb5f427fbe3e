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


// Corpus records, plan augmentation, training-file emission and corpus
// statistics.
//
// Corpus lines are JSON objects {id, document, summary, split, plan?, pairs?}.

#ifndef EXPLPLAN_DATASET_H_
#define EXPLPLAN_DATASET_H_

#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "explplan/llm_gateway.h"
#include "explplan/plan.h"
#include "explplan/rst.h"
#include "explplan/rule_extractor.h"

namespace explplan {

enum class Split { kTrain, kValidation, kTest };
std::string_view to_string(Split split);
std::optional<Split> parse_split(std::string_view name);

struct DatasetRecord {
  std::string id;
  std::string document;
  std::string summary;
  Split split = Split::kTrain;

  bool operator==(const DatasetRecord&) const = default;
};

enum class Provenance { kRstInterchange, kRuleBased, kLlmDirect };
std::string_view to_string(Provenance provenance);
std::optional<Provenance> parse_provenance(std::string_view name);

struct AugmentedRecord {
  DatasetRecord base;
  Plan plan;
  std::vector<ExplanatoryPair> pairs;
  std::vector<Unit> units;  // the summary units the pair indices refer to
  Provenance provenance = Provenance::kRuleBased;
  std::vector<std::size_t> normalized_questions;  // orders that got a '?' appended

  bool operator==(const AugmentedRecord&) const = default;
};

enum class FormatVariant { kPlanOutput, kPlanInputPG, kPlanInputSG };
std::string_view to_string(FormatVariant variant);
std::optional<FormatVariant> parse_variant(std::string_view name);

enum class ErrorMode { kFailFast, kSkip };

struct RecordIssue {
  std::size_t line = 0;
  std::string message;
};

// Streams records one line at a time. Blank lines are ignored. In fail-fast
// mode a bad line throws ParseError("<source>:<line>: ..."); in skip mode it
// is recorded in issues() and reading continues.
class CorpusReader {
 public:
  CorpusReader(std::istream& in, std::string source_name, ErrorMode mode = ErrorMode::kFailFast,
               std::optional<Split> split = std::nullopt);

  // Base records; plan/pairs fields, when present, are ignored.
  bool next(DatasetRecord& out);
  // Records carrying plan and pairs (output of augment).
  bool next(AugmentedRecord& out);

  const std::vector<RecordIssue>& issues() const { return issues_; }
  std::size_t line_number() const { return line_; }

 private:
  bool next_json(nlohmann::json& value, DatasetRecord& base);
  void issue(const std::string& message);

  std::istream& in_;
  std::string source_;
  ErrorMode mode_;
  std::optional<Split> split_;
  std::size_t line_ = 0;
  std::vector<RecordIssue> issues_;
  std::map<Split, std::set<std::string>> ids_;
};

// Throws ParseError naming the field.
DatasetRecord record_from_json(const nlohmann::json& value);
nlohmann::json record_to_json(const DatasetRecord& record);
AugmentedRecord augmented_from_json(const nlohmann::json& value);
nlohmann::json augmented_to_json(const AugmentedRecord& record);

// Summary units plus the explanatory pairs found among them.
struct Extraction {
  std::vector<Unit> units;
  std::vector<ExplanatoryPair> pairs;
};

class PairExtractor {
 public:
  virtual ~PairExtractor() = default;
  virtual Provenance provenance() const = 0;
  virtual Extraction extract(const DatasetRecord& record) = 0;
};

// Sentence units, signal-pattern pairs.
class RuleBasedPairExtractor : public PairExtractor {
 public:
  RuleBasedPairExtractor() = default;
  explicit RuleBasedPairExtractor(std::vector<SignalPattern> patterns);
  Provenance provenance() const override { return Provenance::kRuleBased; }
  Extraction extract(const DatasetRecord& record) override;

 private:
  RuleExtractor extractor_;
};

enum class Granularity { kEdu, kSentence };
std::optional<Granularity> parse_granularity(std::string_view name);

// Units from parsed trees keyed by record id. At sentence granularity each
// EDU is mapped to the summary sentence holding its first character; pairs
// that collapse into one sentence are dropped and duplicates merged.
class InterchangePairExtractor : public PairExtractor {
 public:
  explicit InterchangePairExtractor(std::map<std::string, RstDocument> documents,
                                    Granularity granularity = Granularity::kEdu);
  // Reads interchange lines; throws ParseError with the line number.
  static InterchangePairExtractor from_stream(std::istream& in, const std::string& source_name,
                                              Granularity granularity = Granularity::kEdu);
  Provenance provenance() const override { return Provenance::kRstInterchange; }
  Extraction extract(const DatasetRecord& record) override;
  std::size_t skipped_multinuclear() const { return skipped_; }

 private:
  std::map<std::string, RstDocument> documents_;
  Granularity granularity_;
  std::size_t skipped_ = 0;
};

// Sentence units, pairs from the direct-extraction prompt.
class LlmPairExtractor : public PairExtractor {
 public:
  explicit LlmPairExtractor(LlmGateway& gateway) : gateway_(gateway) {}
  Provenance provenance() const override { return Provenance::kLlmDirect; }
  Extraction extract(const DatasetRecord& record) override;

 private:
  LlmGateway& gateway_;
};

class QuestionSource {
 public:
  virtual ~QuestionSource() = default;
  virtual std::string question(const std::string& context, const std::string& target) = 0;
};

class GatewayQuestionSource : public QuestionSource {
 public:
  explicit GatewayQuestionSource(LlmGateway& gateway) : gateway_(gateway) {}
  std::string question(const std::string& context, const std::string& target) override;

 private:
  LlmGateway& gateway_;
};

struct AugmentOptions {
  Strategy strategy = Strategy::kExplanatory;
  std::size_t k = 1;
  std::optional<std::uint64_t> seed;
};

// Pairs come from the summary; one question per selected target, in plan
// order. Gateway failures are rethrown as GatewayError prefixed with the
// record id.
AugmentedRecord augment(const DatasetRecord& record, PairExtractor& extractor,
                        QuestionSource& questions, const AugmentOptions& options = {});

inline constexpr std::string_view kSummarySeparator = "### SUMMARY ###";

struct TrainingExample {
  std::string id;
  Split split = Split::kTrain;
  std::string input;
  std::string target;
  bool empty_plan = false;
};

TrainingExample make_training_example(const AugmentedRecord& record, FormatVariant variant);
nlohmann::json training_to_json(const TrainingExample& example, FormatVariant variant);

// Writes one JSON line per record, in input order. Returns the count.
std::size_t emit_training_file(const std::vector<AugmentedRecord>& records,
                               FormatVariant variant, std::ostream& out);

// What a training line carries, recovered from its text fields.
struct ParsedExample {
  std::string id;
  Split split = Split::kTrain;
  std::string document;
  std::vector<std::string> questions;
  std::optional<std::string> summary;  // absent for PlanInputPG
};

ParsedExample parse_training_line(std::string_view line, FormatVariant variant);

struct StripResult {
  std::string summary;
  bool separator_found = false;
};

// Text after the first separator line; the whole text, flagged, when there
// is none.
StripResult strip_plan(std::string_view generated);

struct CorpusStats {
  std::size_t train = 0;
  std::size_t validation = 0;
  std::size_t test = 0;
  double doc_tokens = 0.0;
  double summary_tokens = 0.0;
  double coverage = 0.0;
  double density = 0.0;
  double compression = 0.0;
};

// Incremental accumulator; result() is independent of insertion order.
class CorpusStatsBuilder {
 public:
  void add(const DatasetRecord& record);
  CorpusStats result() const;  // throws std::invalid_argument when empty

 private:
  std::size_t counts_[3] = {0, 0, 0};
  std::vector<double> doc_tokens_, summary_tokens_, coverage_, density_, compression_;
};

CorpusStats corpus_stats(const std::vector<DatasetRecord>& records);

// Tab-separated: name, split counts, then the averages.
std::string corpus_stats_header();
std::string corpus_stats_row(std::string_view name, const CorpusStats& stats);

}  // namespace explplan

#endif  // EXPLPLAN_DATASET_H_
