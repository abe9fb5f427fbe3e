#include "explplan/rst.h"

#include <string>
#include <vector>

#include "doctest.h"
#include "explplan/common.h"

using namespace explplan;
using C = RelationCategory;

namespace {

nlohmann::json edus(const std::vector<std::string>& texts) {
  nlohmann::json out = nlohmann::json::array();
  std::size_t at = 0;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    out.push_back({{"index", i}, {"text", texts[i]}, {"char_start", at},
                   {"char_end", at + texts[i].size()}});
    at += texts[i].size() + 1;
  }
  return out;
}

nlohmann::json node(int l, int r, int split, const char* label, const char* nuc) {
  return {{"left_leaf", l}, {"right_leaf", r}, {"split", split},
          {"relation_label", label}, {"nuclearity", nuc}};
}

nlohmann::json four_edu_doc() {
  return {{"doc_id", "d1"},
          {"edus", edus({"Sleep loss harms memory", "because deep sleep stores memories.",
                         "Researchers tracked 120 students,", "for example with EEG caps."})},
          {"nodes", {node(0, 3, 1, "Elaboration-additional", "nucleus-satellite"),
                     node(0, 1, 0, "Reason", "nucleus-satellite"),
                     node(2, 3, 2, "Example", "nucleus-satellite")}}};
}

}  // namespace

TEST_CASE("every explanatory label maps to its row's category") {
  const std::vector<std::pair<const char*, C>> table = {
      {"Background", C::kBackground},
      {"Circumstance", C::kBackground},
      {"Elaboration-additional", C::kElaboration},
      {"Elaboration-general-specific", C::kElaboration},
      {"Elaboration-part-whole", C::kElaboration},
      {"Elaboration-process-step", C::kElaboration},
      {"Elaboration-object-attribute", C::kElaboration},
      {"Elaboration-set-member", C::kElaboration},
      {"Example", C::kElaboration},
      {"Definition", C::kElaboration},
      {"Evidence", C::kExplanation},
      {"Explanation-argumentative", C::kExplanation},
      {"Reason", C::kExplanation},
      {"Comparison", C::kComparison},
      {"Preference", C::kComparison},
      {"Analogy", C::kComparison},
      {"Proportion", C::kComparison},
      {"Topic-Comment", C::kComparison},
  };
  for (const auto& [label, category] : table) {
    CAPTURE(label);
    CHECK(map_relation(label) == category);
  }
}

TEST_CASE("unknown labels map to Other") {
  const char* unknown[] = {"Joint",     "Contrast",  "Condition",   "Temporal-after",
                           "Attribution", "Enablement", "Manner-means", "Cause",
                           "Result",    "Consequence", "Summary",   "Evaluation",
                           "Textual-organization", "Topic-change", "Same-unit", "List",
                           "Sequence",  "Span",      "",            "elaboration-imaginary"};
  for (const char* label : unknown) {
    CAPTURE(label);
    CHECK(map_relation(label) == C::kOther);
  }
}

TEST_CASE("label matching ignores case, spacing and side suffixes") {
  CHECK(map_relation("background") == C::kBackground);
  CHECK(map_relation("ELABORATION-ADDITIONAL") == C::kElaboration);
  CHECK(map_relation("elaboration_set_member") == C::kElaboration);
  CHECK(map_relation("Topic Comment") == C::kComparison);
  CHECK(map_relation("reason-e") == C::kExplanation);
  CHECK(map_relation("Evidence-s") == C::kExplanation);
}

TEST_CASE("category names round-trip") {
  for (auto c : {C::kBackground, C::kElaboration, C::kExplanation, C::kComparison, C::kOther}) {
    CHECK(parse_category(to_string(c)) == c);
  }
  CHECK(parse_category("explanation") == C::kExplanation);
  CHECK_FALSE(parse_category("Reason").has_value());
}

TEST_CASE("pairs follow satellite to nucleus heads") {
  const auto doc = parse_interchange(four_edu_doc());
  const auto result = extract_explanatory_pairs(doc.tree, doc.edus);
  // Hand-traced: Reason (1 -> 0), root Elaboration (head 2 -> head 0),
  // Example (3 -> 2); sorted by explanatory index.
  REQUIRE(result.pairs.size() == 3);
  CHECK(result.pairs[0] == ExplanatoryPair{1, 0, C::kExplanation, 0});
  CHECK(result.pairs[1] == ExplanatoryPair{2, 0, C::kElaboration, 1});
  CHECK(result.pairs[2] == ExplanatoryPair{3, 2, C::kElaboration, 2});
  CHECK(result.skipped_multinuclear == 0);
}

TEST_CASE("satellite-nucleus nodes point left to right") {
  nlohmann::json doc = {{"doc_id", "d2"},
                        {"edus", edus({"Historically, tides were ignored.", "Now they are mapped."})},
                        {"nodes", {node(0, 1, 0, "Background", "satellite-nucleus")}}};
  const auto parsed = parse_interchange(doc);
  const auto pairs = extract_explanatory_pairs(parsed.tree, parsed.edus).pairs;
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].explanatory == 0);
  CHECK(pairs[0].target == 1);
}

TEST_CASE("multinuclear explanatory nodes are counted and skipped") {
  nlohmann::json doc = {{"doc_id", "d3"},
                        {"edus", edus({"A is big.", "B is small.", "C is medium."})},
                        {"nodes", {node(0, 2, 1, "Joint", "nucleus-nucleus"),
                                   node(0, 1, 0, "Comparison", "nucleus-nucleus")}}};
  const auto parsed = parse_interchange(doc);
  const auto result = extract_explanatory_pairs(parsed.tree, parsed.edus);
  CHECK(result.pairs.empty());
  CHECK(result.skipped_multinuclear == 1);
}

TEST_CASE("single-EDU documents have no nodes and no pairs") {
  nlohmann::json doc = {{"doc_id", "d4"}, {"edus", edus({"Only one unit."})}, {"nodes", nlohmann::json::array()}};
  const auto parsed = parse_interchange(doc);
  CHECK(parsed.tree.root().is_leaf);
  CHECK(extract_explanatory_pairs(parsed.tree, parsed.edus).pairs.empty());
}

TEST_CASE("serialize then parse is the identity") {
  const auto doc = parse_interchange(four_edu_doc());
  const auto again = parse_interchange(serialize_interchange(doc));
  CHECK(again.doc_id == doc.doc_id);
  CHECK(again.edus == doc.edus);
  CHECK(again.tree.nodes() == doc.tree.nodes());
  CHECK(serialize_interchange(again) == serialize_interchange(doc));
}

TEST_CASE("schema problems raise ParseError naming the field") {
  auto doc = four_edu_doc();
  doc.erase("nodes");
  CHECK_THROWS_WITH_AS(parse_interchange(doc), doctest::Contains("'nodes'"), ParseError);

  doc = four_edu_doc();
  doc["edus"][1].erase("text");
  CHECK_THROWS_WITH_AS(parse_interchange(doc), doctest::Contains("'text'"), ParseError);

  doc = four_edu_doc();
  doc["nodes"][0]["nuclearity"] = "sideways";
  CHECK_THROWS_WITH_AS(parse_interchange(doc), doctest::Contains("nuclearity"), ParseError);

  CHECK_THROWS_AS(parse_interchange_line("{not json"), ParseError);
  CHECK_THROWS_AS(parse_interchange(nlohmann::json::array()), ParseError);
}

TEST_CASE("a parser-side error record is rejected with its message") {
  nlohmann::json doc = {{"doc_id", "d9"}, {"error", "model crashed"}};
  CHECK_THROWS_WITH_AS(parse_interchange(doc), doctest::Contains("model crashed"), ParseError);
  auto ok = four_edu_doc();
  ok["error"] = nullptr;
  CHECK_NOTHROW(parse_interchange(ok));
}

TEST_CASE("trees that do not partition the leaves raise StructuralError") {
  auto doc = four_edu_doc();
  doc["nodes"].erase(2);  // [2,3] uncovered
  CHECK_THROWS_AS(parse_interchange(doc), StructuralError);

  doc = four_edu_doc();
  doc["nodes"].push_back(node(2, 3, 2, "Joint", "nucleus-nucleus"));
  CHECK_THROWS_AS(parse_interchange(doc), StructuralError);

  doc = four_edu_doc();
  doc["nodes"][1]["split"] = 1;  // split must fall inside [0, 1)
  CHECK_THROWS_AS(parse_interchange(doc), StructuralError);

  doc = four_edu_doc();
  doc["edus"][2]["index"] = 5;
  CHECK_THROWS_AS(parse_interchange(doc), StructuralError);

  doc = four_edu_doc();
  doc["edus"][2]["char_start"] = 0;
  CHECK_THROWS_AS(parse_interchange(doc), StructuralError);
}

TEST_CASE("pair JSON keeps an unknown category as null") {
  ExplanatoryPair p{4, 1, std::nullopt, 2};
  const auto j = pair_to_json(p);
  CHECK(j.at("category").is_null());
  CHECK(pair_from_json(j) == p);
  ExplanatoryPair q{2, 0, C::kComparison, 0};
  CHECK(pair_from_json(pair_to_json(q)) == q);
}
