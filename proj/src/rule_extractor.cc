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

#include "explplan/rule_extractor.h"

#include <cctype>
#include <istream>

#include "explplan/common.h"

namespace explplan {
namespace {

struct Row {
  RelationCategory category;
  std::vector<std::string_view> entries;  // '^' prefix marks sentence-initial
};

// Transcribed as published, including the repeated "different from" in the
// Comparison row. Literal dots are escaped; everything else is regex source.
const std::vector<Row>& signal_table() {
  using C = RelationCategory;
  static const std::vector<Row> kRows = {
      {C::kBackground,
       {"^historically", "^traditionally", "^previously", "^in the past", "^before",
        "^initially", "^once", "^earlier", "^in the beginning", "^at first", "^prior to",
        "^originally", "^at the outset", "^at the time", "^long ago", "^decades ago",
        "^in former times", "^previously mentioned", "^the history of", "^the origin of",
        "^in earlier times", "^from the outset", "^in the early days", "^over the years",
        "^long before", "^centuries ago", "^during the early stages", "^at that time",
        "^back then", "^once upon a time", "^throughout history", "^previously established",
        "^over the course of history", "^in ancient times"}},
      {C::kComparison,
       {"compared to", "compared with", "^similarly", "likewise", "in contrast",
        "in comparison", "in opposition", "^on the contrary", "^on one hand",
        "^on the other hand", "^conversely", "rather than", "different from", "^unlike",
        "similar to", "analogous to", "contrary to", "in contradistinction", "distinct from",
        "distinguishable from", "as opposed to", "in the same way", "by comparison",
        "comparable to", "differ(?:s|ed|ing) from", "diverg(e|es|ed|ing)? from",
        "in a similar manner", "in the same vein", "on the flip side", "correspondingly",
        "on a different note", "in opposition to", "different from", "in a contrasting way",
        "in an analogous way"}},
      {C::kElaboration,
       {"defined as", "refer(?:s|red|ring)? to", "mean(?:s|t)?", "known as", "definition",
        "^in other words", "^that is to say", "^that's to say", "^this is to say",
        "^that means", "^this means", "^this implies", "^that implies", "i\\.e\\.",
        "e\\.g\\.", "for example", "for instance", "such as", "^to clarify", "^to explain",
        "whereas", "^to illustrate", "^to elaborate", "^specifically", "^particularly",
        "in particular", "as an example", "by way of example", "more precisely",
        "^to be specific", "^to exemplify", "namely", "by way of illustration",
        "expounded upon", "in more detail", "one example", "an example", "^to add to this"}},
      {C::kExplanation,
       {"because", "due to", "since", "thanks to", "owing to", "for the sake of",
        "stemming from", "given that", "in light of", "for this reason", "for that reason",
        "for the reason that", "for the purpose of", "for this cause", "the reason is",
        "the reasons are", "as a result", "consequently", "as a consequence", "accordingly",
        "with the result that", "so that", "such that", "result(?:s|ed|ing)? in",
        "result(?:s|ed|ing)? from", "lead(?:s|ed|ing)? to", "which means", "thereby",
        "whereby", "in consequence of", "on account of", "so as to", "on the grounds that"}},
  };
  return kRows;
}

int precedence(RelationCategory c) {
  switch (c) {
    case RelationCategory::kExplanation: return 0;
    case RelationCategory::kElaboration: return 1;
    case RelationCategory::kComparison: return 2;
    case RelationCategory::kBackground: return 3;
    case RelationCategory::kOther: return 4;
  }
  return 4;
}

std::regex compile(const SignalPattern& pattern) {
  std::string body;
  for (char c : pattern.pattern) {
    if (c == ' ') body += "\\s+";
    else body.push_back(c);
  }
  const std::string source = pattern.sentence_initial
                                 ? "^\\s*(?:" + body + ")(?![[:alnum:]])"
                                 : "\\b(?:" + body + ")(?![[:alnum:]])";
  return std::regex(source, std::regex::ECMAScript | std::regex::icase);
}

bool parse_flag(const std::string& text, bool* out) {
  const std::string t = trim(text);
  if (t == "1" || t == "true" || t == "yes" || t == "^") {
    *out = true;
    return true;
  }
  if (t == "0" || t == "false" || t == "no" || t.empty()) {
    *out = false;
    return true;
  }
  return false;
}

}  // namespace

const std::vector<SignalPattern>& builtin_patterns() {
  static const std::vector<SignalPattern> kPatterns = [] {
    std::vector<SignalPattern> out;
    for (const Row& row : signal_table()) {
      for (std::string_view entry : row.entries) {
        SignalPattern p;
        p.category = row.category;
        p.sentence_initial = !entry.empty() && entry.front() == '^';
        p.pattern = std::string(p.sentence_initial ? entry.substr(1) : entry);
        out.push_back(std::move(p));
      }
    }
    return out;
  }();
  return kPatterns;
}

std::vector<SignalPattern> read_pattern_file(std::istream& in) {
  std::vector<SignalPattern> out;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || trim(line).front() == '#') continue;
    const auto tab1 = line.find('\t');
    const auto tab2 = tab1 == std::string::npos ? tab1 : line.find('\t', tab1 + 1);
    if (tab2 == std::string::npos) {
      throw ParseError("pattern file line " + std::to_string(line_number) +
                       ": expected category<TAB>pattern<TAB>initial-flag");
    }
    SignalPattern p;
    const auto category = parse_category(line.substr(0, tab1));
    if (!category || !is_explanatory(*category)) {
      throw ParseError("pattern file line " + std::to_string(line_number) +
                       ": unknown category '" + line.substr(0, tab1) + "'");
    }
    p.category = *category;
    p.pattern = line.substr(tab1 + 1, tab2 - tab1 - 1);
    if (!p.pattern.empty() && p.pattern.front() == '^') {
      p.pattern.erase(0, 1);
      p.sentence_initial = true;
    }
    bool flag = false;
    if (!parse_flag(line.substr(tab2 + 1), &flag)) {
      throw ParseError("pattern file line " + std::to_string(line_number) +
                       ": initial-flag must be 0/1/true/false");
    }
    p.sentence_initial = p.sentence_initial || flag;
    if (p.pattern.empty()) {
      throw ParseError("pattern file line " + std::to_string(line_number) + ": empty pattern");
    }
    try {
      compile(p);
    } catch (const std::regex_error& e) {
      throw ParseError("pattern file line " + std::to_string(line_number) + ": bad pattern '" +
                       p.pattern + "': " + e.what());
    }
    out.push_back(std::move(p));
  }
  return out;
}

RuleExtractor::RuleExtractor() : RuleExtractor(builtin_patterns()) {}

RuleExtractor::RuleExtractor(std::vector<SignalPattern> patterns) : patterns_(std::move(patterns)) {
  compiled_.reserve(patterns_.size());
  for (const auto& p : patterns_) {
    try {
      compiled_.push_back({p, compile(p)});
    } catch (const std::regex_error& e) {
      throw ParseError("signal pattern '" + p.pattern + "' does not compile: " + e.what());
    }
  }
}

std::optional<SignalMatch> RuleExtractor::classify(std::string_view sentence) const {
  std::optional<SignalMatch> best;
  const std::string text(sentence);
  for (const Compiled& c : compiled_) {
    std::smatch m;
    if (!std::regex_search(text, m, c.regex)) continue;
    // For anchored patterns the match starts at the sentence's first
    // non-whitespace character.
    std::size_t position = static_cast<std::size_t>(m.position(0));
    if (c.source.sentence_initial) {
      while (position < text.size() && std::isspace(static_cast<unsigned char>(text[position]))) {
        ++position;
      }
    }
    const bool better =
        !best || precedence(c.source.category) < precedence(best->category) ||
        (c.source.category == best->category && position < best->position);
    if (better) best = SignalMatch{c.source.category, c.source.pattern, position};
  }
  return best;
}

std::vector<ExplanatoryPair> RuleExtractor::extract(const std::vector<Sentence>& sentences) const {
  std::vector<ExplanatoryPair> pairs;
  for (std::size_t i = 1; i < sentences.size(); ++i) {
    const auto match = classify(sentences[i].text);
    if (!match) continue;
    ExplanatoryPair pair;
    pair.explanatory = sentences[i].index;
    pair.target = sentences[i - 1].index;
    pair.category = match->category;
    pair.appearance_position = pairs.size();
    pairs.push_back(pair);
  }
  return pairs;
}

}  // namespace explplan
