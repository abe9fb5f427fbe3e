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

// Signal-word detection of explanatory sentences. A sentence that contains a
// signal phrase is explanatory and targets the sentence right before it.

#ifndef EXPLPLAN_RULE_EXTRACTOR_H_
#define EXPLPLAN_RULE_EXTRACTOR_H_

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "explplan/rst.h"
#include "explplan/segmentation.h"

namespace explplan {

struct SignalPattern {
  RelationCategory category = RelationCategory::kOther;
  std::string pattern;  // regex source, without the leading caret
  bool sentence_initial = false;

  bool operator==(const SignalPattern&) const = default;
};

// The built-in inventory of signal words and phrases for the four
// explanatory categories.
const std::vector<SignalPattern>& builtin_patterns();

// Reads `category<TAB>pattern<TAB>initial-flag` lines. Blank lines and lines
// starting with '#' are ignored. Throws ParseError with the line number.
std::vector<SignalPattern> read_pattern_file(std::istream& in);

struct SignalMatch {
  RelationCategory category = RelationCategory::kOther;
  std::string pattern;
  std::size_t position = 0;  // byte offset of the match in the sentence
};

class RuleExtractor {
 public:
  RuleExtractor();  // builtin_patterns()
  explicit RuleExtractor(std::vector<SignalPattern> patterns);

  // Winning signal for one sentence: Explanation > Elaboration > Comparison >
  // Background, leftmost match within the category.
  std::optional<SignalMatch> classify(std::string_view sentence) const;

  std::vector<ExplanatoryPair> extract(const std::vector<Sentence>& sentences) const;

  const std::vector<SignalPattern>& patterns() const { return patterns_; }

 private:
  struct Compiled {
    SignalPattern source;
    std::regex regex;
  };
  std::vector<SignalPattern> patterns_;
  std::vector<Compiled> compiled_;
};

inline std::vector<ExplanatoryPair> extract_pairs_rule_based(const std::vector<Sentence>& sentences) {
  static const RuleExtractor kExtractor;
  return kExtractor.extract(sentences);
}

}  // namespace explplan

#endif  // EXPLPLAN_RULE_EXTRACTOR_H_
