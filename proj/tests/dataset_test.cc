#include "explplan/dataset.h"

#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "explplan/common.h"
#include "explplan/llm_gateway.h"

using namespace explplan;

namespace {

const std::vector<std::string> kWords = {
    "river", "sleep", "bees", "carbon", "mice", "storm", "city", "soil",
    "heat",  "tides", "moss", "glacier", "cells", "dust", "wind", "crops"};

std::string random_sentence(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> len(3, 9), pick(0, kWords.size() - 1);
  std::string s;
  const std::size_t n = len(rng);
  for (std::size_t i = 0; i < n; ++i) {
    std::string w = kWords[pick(rng)];
    if (i == 0) w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
    s += (i ? " " : "") + w;
  }
  return s + ".";
}

std::string random_text(std::mt19937_64& rng, std::size_t sentences, bool paragraphs) {
  std::string out;
  for (std::size_t i = 0; i < sentences; ++i) {
    if (i) out += (paragraphs && i % 3 == 0) ? "\n\n" : " ";
    out += random_sentence(rng);
  }
  return out;
}

AugmentedRecord random_record(std::mt19937_64& rng, std::size_t i) {
  AugmentedRecord r;
  r.base.id = "rec-" + std::to_string(i);
  r.base.split = static_cast<Split>(i % 3);
  r.base.document = random_text(rng, 2 + i % 7, true);
  r.base.summary = random_text(rng, 1 + i % 4, i % 5 == 0);
  const std::size_t q = i % 6;  // some records have an empty plan
  for (std::size_t k = 0; k < q; ++k) {
    std::string text = random_sentence(rng);
    text.back() = '?';
    r.plan.questions.push_back({"Why " + text, RelationCategory::kExplanation, k, k});
  }
  return r;
}

std::vector<std::string> texts(const Plan& plan) {
  std::vector<std::string> out;
  for (const auto& q : plan.questions) out.push_back(q.text);
  return out;
}

class EchoQuestions : public QuestionSource {
 public:
  std::string question(const std::string& context, const std::string& target) override {
    seen.push_back({context, target});
    return "What about " + target.substr(0, target.size() - 1);
  }
  std::vector<std::pair<std::string, std::string>> seen;
};

}  // namespace

TEST_CASE("100 records round-trip through each training variant") {
  std::mt19937_64 rng(7);
  std::vector<AugmentedRecord> records;
  for (std::size_t i = 0; i < 100; ++i) records.push_back(random_record(rng, i));

  for (auto variant : {FormatVariant::kPlanOutput, FormatVariant::kPlanInputPG,
                       FormatVariant::kPlanInputSG}) {
    CAPTURE(to_string(variant));
    std::ostringstream out;
    REQUIRE(emit_training_file(records, variant, out) == 100);
    std::istringstream in(out.str());
    std::size_t failures = 0, n = 0;
    for (std::string line; std::getline(in, line); ++n) {
      const auto& r = records.at(n);
      const auto parsed = parse_training_line(line, variant);
      bool ok = parsed.id == r.base.id && parsed.split == r.base.split &&
                parsed.document == r.base.document && parsed.questions == texts(r.plan);
      if (variant == FormatVariant::kPlanInputPG) {
        ok = ok && !parsed.summary;
      } else {
        ok = ok && parsed.summary == r.base.summary;
      }
      const auto json = nlohmann::json::parse(line);
      ok = ok && json.at("variant") == std::string(to_string(variant)) &&
           json.at("empty_plan") == r.plan.questions.empty();
      if (!ok) ++failures;
    }
    CHECK(n == 100);
    CHECK(failures == 0);
  }
}

TEST_CASE("PlanOutput targets put the plan block before the separator") {
  AugmentedRecord r;
  r.base = {"a", "Doc text.", "Bees dance. Flowers bloom.", Split::kTest};
  r.plan.questions = {{"Why do bees dance?", std::nullopt, 0, 0}, {"What blooms?", std::nullopt, 1, 1}};
  const auto ex = make_training_example(r, FormatVariant::kPlanOutput);
  CHECK(ex.input == "Doc text.");
  CHECK(ex.target ==
        "q1: Why do bees dance?\nq2: What blooms?\n### SUMMARY ###\nBees dance. Flowers bloom.");
  CHECK(make_training_example(r, FormatVariant::kPlanInputPG).target ==
        "q1: Why do bees dance?\nq2: What blooms?");
  const auto sg = make_training_example(r, FormatVariant::kPlanInputSG);
  CHECK(sg.input == plan_prompt("Doc text.", r.plan).text);
  CHECK(sg.target == "Bees dance. Flowers bloom.");

  r.plan.questions.clear();
  const auto empty = make_training_example(r, FormatVariant::kPlanOutput);
  CHECK(empty.target == "### SUMMARY ###\nBees dance. Flowers bloom.");
  CHECK(empty.empty_plan);
}

TEST_CASE("strip_plan inverts PlanOutput targets") {
  std::mt19937_64 rng(11);
  for (std::size_t i = 0; i < 100; ++i) {
    const auto r = random_record(rng, i);
    const auto ex = make_training_example(r, FormatVariant::kPlanOutput);
    const auto s = strip_plan(ex.target);
    CHECK(s.separator_found);
    CHECK(s.summary == r.base.summary);
  }
  const auto none = strip_plan("Just a summary.\nNo plan here.");
  CHECK_FALSE(none.separator_found);
  CHECK(none.summary == "Just a summary.\nNo plan here.");
  // Padded separator line and separator at the very end.
  CHECK(strip_plan("q1: x?\n  ### SUMMARY ###  \nText.").summary == "Text.");
  const auto tail = strip_plan("q1: x?\n### SUMMARY ###");
  CHECK(tail.separator_found);
  CHECK(tail.summary.empty());
}

TEST_CASE("malformed training lines raise ParseError") {
  CHECK_THROWS_AS(parse_training_line("not json", FormatVariant::kPlanOutput), ParseError);
  CHECK_THROWS_AS(parse_training_line(R"({"id":"a","split":"train","input":"d","target":"no sep"})",
                                      FormatVariant::kPlanOutput),
                  ParseError);
  CHECK_THROWS_AS(parse_training_line(R"({"id":"a","split":"dev","input":"d","target":""})",
                                      FormatVariant::kPlanInputPG),
                  ParseError);
  CHECK_THROWS_AS(parse_training_line(R"({"id":"a","split":"test","input":"d","target":"x1: y"})",
                                      FormatVariant::kPlanInputPG),
                  ParseError);
  CHECK_THROWS_AS(parse_training_line(R"({"id":"a","split":"test","input":"free text","target":"s"})",
                                      FormatVariant::kPlanInputSG),
                  ParseError);
}

TEST_CASE("variant names parse in several spellings") {
  CHECK(parse_variant("PlanOutput") == FormatVariant::kPlanOutput);
  CHECK(parse_variant("plan-input-pg") == FormatVariant::kPlanInputPG);
  CHECK(parse_variant("sg") == FormatVariant::kPlanInputSG);
  CHECK_FALSE(parse_variant("plan"));
  CHECK(to_string(FormatVariant::kPlanInputSG) == "PlanInputSG");
}

TEST_CASE("record and augmented JSON round-trip") {
  std::mt19937_64 rng(3);
  for (std::size_t i = 0; i < 20; ++i) {
    auto r = random_record(rng, i);
    r.units = {{0, "First."}, {1, "Second."}, {2, "Third."}};
    r.pairs = {{1, 0, RelationCategory::kElaboration, 0}, {2, 1, RelationCategory::kExplanation, 1}};
    r.provenance = Provenance::kRstInterchange;
    if (i % 2) r.normalized_questions = {0};
    const auto back = augmented_from_json(nlohmann::json::parse(augmented_to_json(r).dump()));
    CHECK(back.base.id == r.base.id);
    CHECK(back.base.document == r.base.document);
    CHECK(back.base.summary == r.base.summary);
    CHECK(back.base.split == r.base.split);
    CHECK(back.plan == r.plan);
    CHECK(back.pairs == r.pairs);
    CHECK(back.units == r.units);
    CHECK(back.provenance == r.provenance);
    CHECK(back.normalized_questions == r.normalized_questions);
  }
  auto j = record_to_json({"x", "d", "s", Split::kValidation});
  CHECK(j.at("split") == "validation");
  j.erase("summary");
  CHECK_THROWS_WITH_AS(record_from_json(j), doctest::Contains("summary"), ParseError);
}

TEST_CASE("pairs outside the units are rejected") {
  nlohmann::json j = record_to_json({"x", "d", "s", Split::kTrain});
  j["units"] = {"Only."};
  j["pairs"] = {{{"explanatory", 1}, {"target", 0}, {"category", "Explanation"},
                 {"appearance_position", 0}}};
  j["plan"] = {{"strategy", "explanatory"}, {"questions", nlohmann::json::array()}};
  CHECK_THROWS_AS(augmented_from_json(j), ParseError);
}

TEST_CASE("fail-fast reader reports source and line") {
  std::istringstream in(
      R"({"id":"a","split":"train","document":"D.","summary":"S."})"
      "\n\n"
      R"({"id":"b","split":"train","document":"D."})"
      "\n");
  CorpusReader reader(in, "corpus.jsonl");
  DatasetRecord r;
  REQUIRE(reader.next(r));
  CHECK(r.id == "a");
  CHECK_THROWS_WITH_AS(reader.next(r), doctest::Contains("corpus.jsonl:3: "), ParseError);
}

TEST_CASE("skip mode collects issues and keeps going") {
  std::istringstream in(
      R"({"id":"a","split":"train","document":"D.","summary":"S."})"
      "\n{broken\n"
      R"({"id":"a","split":"train","document":"D2.","summary":"S2."})"
      "\n"
      R"({"id":"a","split":"test","document":"D3.","summary":"S3."})"
      "\n"
      R"({"id":"c","split":"holdout","document":"D.","summary":"S."})"
      "\n");
  CorpusReader reader(in, "c.jsonl", ErrorMode::kSkip);
  std::vector<std::string> got;
  for (DatasetRecord r; reader.next(r);) got.push_back(r.id + "/" + std::string(to_string(r.split)));
  CHECK(got == std::vector<std::string>{"a/train", "a/test"});
  REQUIRE(reader.issues().size() == 3);
  CHECK(reader.issues()[0].line == 2);
  CHECK(reader.issues()[1].line == 3);
  CHECK(reader.issues()[1].message.find("duplicate id 'a'") != std::string::npos);
  CHECK(reader.issues()[2].line == 5);
}

TEST_CASE("split filter and streaming over 10k lines") {
  std::ostringstream out;
  for (int i = 0; i < 10000; ++i) {
    out << record_to_json({"r" + std::to_string(i), "Doc.", "Sum.", static_cast<Split>(i % 3)}).dump()
        << '\n';
  }
  std::istringstream in(out.str());
  CorpusReader reader(in, "big", ErrorMode::kFailFast, Split::kTest);
  std::size_t n = 0;
  for (DatasetRecord r; reader.next(r);) {
    CHECK(r.split == Split::kTest);
    ++n;
  }
  CHECK(n == 3333);
  CHECK(reader.line_number() == 10000);
}

TEST_CASE("rule-based extractor uses summary sentences") {
  RuleBasedPairExtractor ex;
  const DatasetRecord r{"r", "Document.",
                        "Honey yields fell. This happened because a mite spread between hives.",
                        Split::kTrain};
  const auto e = ex.extract(r);
  REQUIRE(e.units.size() == 2);
  CHECK(e.units[1].text == "This happened because a mite spread between hives.");
  REQUIRE(e.pairs.size() == 1);
  CHECK(e.pairs[0] == ExplanatoryPair{1, 0, RelationCategory::kExplanation, 0});
  CHECK(ex.provenance() == Provenance::kRuleBased);
}

TEST_CASE("interchange extractor maps EDUs to sentences") {
  const std::string summary =
      "Sleep loss harms memory because deep sleep stores memories. "
      "Researchers tracked 120 students, for example with EEG caps.";
  nlohmann::json edus = nlohmann::json::array();
  const std::vector<std::string> parts = {"Sleep loss harms memory",
                                          "because deep sleep stores memories.",
                                          "Researchers tracked 120 students,",
                                          "for example with EEG caps."};
  std::size_t at = 0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    edus.push_back({{"index", i}, {"text", parts[i]}, {"char_start", at},
                    {"char_end", at + parts[i].size()}});
    at += parts[i].size() + 1;
  }
  auto node = [](int l, int r, int split, const char* label) {
    return nlohmann::json{{"left_leaf", l}, {"right_leaf", r}, {"split", split},
                          {"relation_label", label}, {"nuclearity", "nucleus-satellite"}};
  };
  nlohmann::json doc = {{"doc_id", "d1"},
                        {"edus", edus},
                        {"nodes", {node(0, 3, 1, "Elaboration-additional"),
                                   node(0, 1, 0, "Reason"), node(2, 3, 2, "Example")}}};
  const DatasetRecord r{"d1", "Document.", summary, Split::kTrain};

  std::istringstream in1(doc.dump() + "\n");
  auto edu = InterchangePairExtractor::from_stream(in1, "parses.jsonl");
  const auto e1 = edu.extract(r);
  CHECK(e1.units.size() == 4);
  CHECK(e1.pairs.size() == 3);

  std::istringstream in2(doc.dump() + "\n");
  auto sent = InterchangePairExtractor::from_stream(in2, "parses.jsonl", Granularity::kSentence);
  const auto e2 = sent.extract(r);
  REQUIRE(e2.units.size() == 2);
  // Reason and Example collapse inside one sentence; only the root survives.
  REQUIRE(e2.pairs.size() == 1);
  CHECK(e2.pairs[0] == ExplanatoryPair{1, 0, RelationCategory::kElaboration, 0});

  CHECK_THROWS_AS(sent.extract({"zz", "D.", "S.", Split::kTrain}), ParseError);
  std::istringstream dup(doc.dump() + "\n" + doc.dump() + "\n");
  CHECK_THROWS_WITH_AS(InterchangePairExtractor::from_stream(dup, "p.jsonl"),
                       doctest::Contains("p.jsonl:2: "), ParseError);
}

TEST_CASE("augment asks one question per target in plan order") {
  RuleBasedPairExtractor ex;
  EchoQuestions questions;
  const DatasetRecord r{"r", "Document.",
                        "Honey yields fell. This happened because a mite spread between hives. "
                        "Beekeepers tested every hive.",
                        Split::kTrain};
  const auto a = augment(r, ex, questions, {Strategy::kExplanatory, 1, std::nullopt});
  REQUIRE(a.plan.questions.size() == 1);
  CHECK(a.plan.questions[0].text == "What about Honey yields fell?");
  CHECK(a.normalized_questions == std::vector<std::size_t>{0});
  REQUIRE(questions.seen.size() == 1);
  CHECK(questions.seen[0].first.empty());
  CHECK(a.units.size() == 3);
  CHECK(a.pairs.size() == 1);

  questions.seen.clear();
  const auto lead = augment(r, ex, questions, {Strategy::kLead3, 1, std::nullopt});
  CHECK(lead.plan.questions.size() == 3);
  CHECK(questions.seen[2].first ==
        "Honey yields fell. This happened because a mite spread between hives.");
}

TEST_CASE("augment with the stub gateway prefixes failures with the record id") {
  LlmConfig config;
  config.retry.max_attempts = 2;
  nlohmann::json responses = {{"failures", {{"question", {{"status", 503}, {"times", 5}}}}}};
  LlmGateway gateway(config, std::make_shared<StubChatTransport>(responses),
                     [](std::chrono::milliseconds) {});
  GatewayQuestionSource questions(gateway);
  RuleBasedPairExtractor ex;
  const DatasetRecord r{"rec-9", "D.", "A fell. This happened because B rose.", Split::kTrain};
  CHECK_THROWS_WITH_AS(augment(r, ex, questions), doctest::Contains("record 'rec-9'"), GatewayError);
}

TEST_CASE("corpus statistics") {
  const std::vector<DatasetRecord> records = {
      {"a", "alpha beta gamma delta", "alpha beta", Split::kTrain},
      {"b", "one two three", "four", Split::kValidation},
  };
  const auto s = corpus_stats(records);
  CHECK(s.train == 1);
  CHECK(s.validation == 1);
  CHECK(s.test == 0);
  CHECK(s.doc_tokens == doctest::Approx(3.5));
  CHECK(s.summary_tokens == doctest::Approx(1.5));
  CHECK(s.coverage == doctest::Approx(0.5));
  CHECK(s.density == doctest::Approx(1.0));
  CHECK(s.compression == doctest::Approx(2.5));
  CHECK(corpus_stats_row("Toy", s) == "Toy\t1\t1\t0\t3.50\t1.50\t0.50\t1.00\t2.50");
  CHECK(corpus_stats_header().rfind("Dataset\t# Training\t", 0) == 0);

  auto reversed = records;
  std::swap(reversed[0], reversed[1]);
  CHECK(corpus_stats_row("Toy", corpus_stats(reversed)) == corpus_stats_row("Toy", s));
  CHECK_THROWS_AS(corpus_stats({}), std::invalid_argument);
}
