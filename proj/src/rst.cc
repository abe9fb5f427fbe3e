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

#include "explplan/rst.h"

#include <algorithm>
#include <cctype>
#include <unordered_map>

#include "explplan/common.h"

namespace explplan {
namespace {

std::string canonical_label(std::string_view label) {
  std::string out;
  for (char c : trim(label)) {
    if (c == '_' || c == ' ') c = '-';
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

const std::unordered_map<std::string, RelationCategory>& relation_table() {
  using C = RelationCategory;
  static const std::unordered_map<std::string, RelationCategory> kTable = {
      {"background", C::kBackground},
      {"circumstance", C::kBackground},

      {"elaboration", C::kElaboration},
      {"elaboration-additional", C::kElaboration},
      {"elaboration-general-specific", C::kElaboration},
      {"elaboration-part-whole", C::kElaboration},
      {"elaboration-process-step", C::kElaboration},
      {"elaboration-object-attribute", C::kElaboration},
      {"elaboration-set-member", C::kElaboration},
      {"example", C::kElaboration},
      {"definition", C::kElaboration},

      {"explanation", C::kExplanation},
      {"evidence", C::kExplanation},
      {"explanation-argumentative", C::kExplanation},
      {"reason", C::kExplanation},

      {"comparison", C::kComparison},
      {"preference", C::kComparison},
      {"analogy", C::kComparison},
      {"proportion", C::kComparison},
      {"topic-comment", C::kComparison},
  };
  return kTable;
}

int as_int(const nlohmann::json& object, const char* field, const std::string& where) {
  if (!object.contains(field)) throw ParseError(where + ": missing field '" + field + "'");
  const auto& value = object.at(field);
  if (!value.is_number_integer() || value.get<long long>() < 0) {
    throw ParseError(where + ": field '" + field + "' must be a non-negative integer");
  }
  return value.get<int>();
}

std::string as_string(const nlohmann::json& object, const char* field, const std::string& where) {
  if (!object.contains(field)) throw ParseError(where + ": missing field '" + field + "'");
  const auto& value = object.at(field);
  if (!value.is_string()) throw ParseError(where + ": field '" + field + "' must be a string");
  return value.get<std::string>();
}

Nuclearity parse_nuclearity(const std::string& text, const std::string& where) {
  const std::string label = canonical_label(text);
  if (label == "nucleus-satellite" || label == "ns") return Nuclearity::kNucleusSatellite;
  if (label == "satellite-nucleus" || label == "sn") return Nuclearity::kSatelliteNucleus;
  if (label == "nucleus-nucleus" || label == "nn") return Nuclearity::kNucleusNucleus;
  throw ParseError(where + ": field 'nuclearity' has unknown value '" + text + "'");
}

class PreorderBuilder {
 public:
  PreorderBuilder(std::size_t edu_count, std::vector<RstNode>& nodes)
      : edu_count_(edu_count), nodes_(nodes) {}

  RstChild build(std::size_t left, std::size_t right) {
    if (left == right) return RstChild{true, left};
    if (next_ >= nodes_.size()) {
      throw StructuralError("span [" + std::to_string(left) + ", " + std::to_string(right) +
                            "] has no node; leaves are not covered");
    }
    const std::size_t id = next_++;
    RstNode& node = nodes_[id];
    if (node.left_leaf != left || node.right_leaf != right) {
      throw StructuralError("node " + std::to_string(id) + " spans [" +
                            std::to_string(node.left_leaf) + ", " +
                            std::to_string(node.right_leaf) + "] but pre-order position expects [" +
                            std::to_string(left) + ", " + std::to_string(right) + "]");
    }
    if (node.split < left || node.split >= right) {
      throw StructuralError("node " + std::to_string(id) + " split " +
                            std::to_string(node.split) + " does not divide its span in two");
    }
    const std::size_t split = node.split;
    const RstChild l = build(left, split);
    const RstChild r = build(split + 1, right);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return RstChild{false, id};
  }

  void finish() const {
    if (next_ != nodes_.size()) {
      throw StructuralError(std::to_string(nodes_.size() - next_) +
                            " node(s) left over after covering all leaves");
    }
  }

  std::size_t edu_count() const { return edu_count_; }

 private:
  std::size_t edu_count_;
  std::vector<RstNode>& nodes_;
  std::size_t next_ = 0;
};

}  // namespace

std::string_view to_string(RelationCategory category) {
  switch (category) {
    case RelationCategory::kBackground: return "Background";
    case RelationCategory::kElaboration: return "Elaboration";
    case RelationCategory::kExplanation: return "Explanation";
    case RelationCategory::kComparison: return "Comparison";
    case RelationCategory::kOther: return "Other";
  }
  return "Other";
}

std::optional<RelationCategory> parse_category(std::string_view name) {
  const std::string label = canonical_label(name);
  for (auto c : {RelationCategory::kBackground, RelationCategory::kElaboration,
                 RelationCategory::kExplanation, RelationCategory::kComparison,
                 RelationCategory::kOther}) {
    if (canonical_label(to_string(c)) == label) return c;
  }
  return std::nullopt;
}

std::string_view to_string(Nuclearity nuclearity) {
  switch (nuclearity) {
    case Nuclearity::kNucleusSatellite: return "nucleus-satellite";
    case Nuclearity::kSatelliteNucleus: return "satellite-nucleus";
    case Nuclearity::kNucleusNucleus: return "nucleus-nucleus";
  }
  return "nucleus-nucleus";
}

RelationCategory map_relation(std::string_view label) {
  const auto& table = relation_table();
  std::string key = canonical_label(label);
  if (auto it = table.find(key); it != table.end()) return it->second;
  // RST-DT style suffixes: -e (embedded), -s / -n (side markers).
  if (key.size() > 2 && key[key.size() - 2] == '-' &&
      (key.back() == 'e' || key.back() == 's' || key.back() == 'n')) {
    key.resize(key.size() - 2);
    if (auto it = table.find(key); it != table.end()) return it->second;
  }
  return RelationCategory::kOther;
}

RstTree RstTree::from_preorder(std::size_t edu_count, std::vector<RstNode> nodes) {
  RstTree tree;
  tree.edu_count_ = edu_count;
  if (edu_count == 0) {
    if (!nodes.empty()) throw StructuralError("nodes present for a document without EDUs");
    return tree;
  }
  PreorderBuilder builder(edu_count, nodes);
  builder.build(0, edu_count - 1);
  builder.finish();
  tree.nodes_ = std::move(nodes);
  return tree;
}

RstChild RstTree::root() const {
  if (nodes_.empty()) return RstChild{true, 0};
  return RstChild{false, 0};
}

std::size_t RstTree::head_edu(RstChild child) const {
  while (!child.is_leaf) {
    const RstNode& node = nodes_[child.index];
    child = node.nuclearity == Nuclearity::kSatelliteNucleus ? node.right : node.left;
  }
  return child.index;
}

RstDocument parse_interchange(const nlohmann::json& payload) {
  if (!payload.is_object()) throw ParseError("record: expected a JSON object");
  RstDocument document;
  document.doc_id = as_string(payload, "doc_id", "record");
  const std::string where = "doc '" + document.doc_id + "'";
  // Parser-side failures arrive as records with an error message.
  if (payload.contains("error") && !payload.at("error").is_null()) {
    const auto& e = payload.at("error");
    throw ParseError(where + ": parser reported an error: " +
                     (e.is_string() ? e.get<std::string>() : e.dump()));
  }

  if (!payload.contains("edus") || !payload.at("edus").is_array()) {
    throw ParseError(where + ": field 'edus' must be an array");
  }
  for (std::size_t i = 0; i < payload.at("edus").size(); ++i) {
    const auto& item = payload.at("edus")[i];
    const std::string at = where + " edus[" + std::to_string(i) + "]";
    if (!item.is_object()) throw ParseError(at + ": expected an object");
    Edu edu;
    edu.index = static_cast<std::size_t>(as_int(item, "index", at));
    edu.text = as_string(item, "text", at);
    edu.char_start = static_cast<std::size_t>(as_int(item, "char_start", at));
    edu.char_end = static_cast<std::size_t>(as_int(item, "char_end", at));
    if (edu.index != i) {
      throw StructuralError(at + ": index " + std::to_string(edu.index) +
                            " breaks the contiguous numbering from 0");
    }
    if (edu.char_end < edu.char_start) {
      throw StructuralError(at + ": char_end precedes char_start");
    }
    if (i > 0 && edu.char_start < document.edus.back().char_end) {
      throw StructuralError(at + ": span overlaps or precedes EDU " + std::to_string(i - 1));
    }
    document.edus.push_back(std::move(edu));
  }

  if (!payload.contains("nodes") || !payload.at("nodes").is_array()) {
    throw ParseError(where + ": field 'nodes' must be an array");
  }
  std::vector<RstNode> nodes;
  for (std::size_t i = 0; i < payload.at("nodes").size(); ++i) {
    const auto& item = payload.at("nodes")[i];
    const std::string at = where + " nodes[" + std::to_string(i) + "]";
    if (!item.is_object()) throw ParseError(at + ": expected an object");
    RstNode node;
    node.left_leaf = static_cast<std::size_t>(as_int(item, "left_leaf", at));
    node.right_leaf = static_cast<std::size_t>(as_int(item, "right_leaf", at));
    node.split = static_cast<std::size_t>(as_int(item, "split", at));
    node.relation_label = as_string(item, "relation_label", at);
    node.nuclearity = parse_nuclearity(as_string(item, "nuclearity", at), at);
    if (node.right_leaf >= document.edus.size()) {
      throw StructuralError(at + ": right_leaf beyond the last EDU");
    }
    nodes.push_back(std::move(node));
  }
  document.tree = RstTree::from_preorder(document.edus.size(), std::move(nodes));
  return document;
}

RstDocument parse_interchange_line(std::string_view line) {
  nlohmann::json payload;
  try {
    payload = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("record: invalid JSON: ") + e.what());
  }
  return parse_interchange(payload);
}

nlohmann::json serialize_interchange(const RstDocument& document) {
  nlohmann::json out;
  out["doc_id"] = document.doc_id;
  out["edus"] = nlohmann::json::array();
  for (const auto& edu : document.edus) {
    out["edus"].push_back({{"index", edu.index},
                           {"text", edu.text},
                           {"char_start", edu.char_start},
                           {"char_end", edu.char_end}});
  }
  out["nodes"] = nlohmann::json::array();
  for (const auto& node : document.tree.nodes()) {
    out["nodes"].push_back({{"left_leaf", node.left_leaf},
                            {"right_leaf", node.right_leaf},
                            {"split", node.split},
                            {"relation_label", node.relation_label},
                            {"nuclearity", std::string(to_string(node.nuclearity))}});
  }
  return out;
}

PairExtraction extract_explanatory_pairs(const RstTree& tree, const std::vector<Edu>& edus) {
  if (tree.edu_count() != edus.size()) {
    throw std::invalid_argument("extract_explanatory_pairs: tree covers " +
                                std::to_string(tree.edu_count()) + " EDUs, got " +
                                std::to_string(edus.size()));
  }
  PairExtraction result;
  for (const RstNode& node : tree.nodes()) {
    const RelationCategory category = map_relation(node.relation_label);
    if (!is_explanatory(category)) continue;
    if (node.nuclearity == Nuclearity::kNucleusNucleus) {
      ++result.skipped_multinuclear;
      continue;
    }
    const bool satellite_left = node.nuclearity == Nuclearity::kSatelliteNucleus;
    ExplanatoryPair pair;
    pair.explanatory = tree.head_edu(satellite_left ? node.left : node.right);
    pair.target = tree.head_edu(satellite_left ? node.right : node.left);
    pair.category = category;
    result.pairs.push_back(pair);
  }
  // Pre-order breaks ties between pairs sharing an explanatory EDU.
  std::stable_sort(result.pairs.begin(), result.pairs.end(),
                   [](const ExplanatoryPair& a, const ExplanatoryPair& b) {
                     return a.explanatory < b.explanatory;
                   });
  for (std::size_t i = 0; i < result.pairs.size(); ++i) result.pairs[i].appearance_position = i;
  return result;
}

nlohmann::json pair_to_json(const ExplanatoryPair& pair) {
  nlohmann::json out = {{"explanatory", pair.explanatory}, {"target", pair.target}};
  out["category"] = pair.category ? nlohmann::json(std::string(to_string(*pair.category)))
                                  : nlohmann::json(nullptr);
  out["position"] = pair.appearance_position;
  return out;
}

ExplanatoryPair pair_from_json(const nlohmann::json& value) {
  if (!value.is_object()) throw ParseError("pair: expected an object");
  ExplanatoryPair pair;
  pair.explanatory = static_cast<std::size_t>(as_int(value, "explanatory", "pair"));
  pair.target = static_cast<std::size_t>(as_int(value, "target", "pair"));
  if (value.contains("category") && !value.at("category").is_null()) {
    if (!value.at("category").is_string()) throw ParseError("pair: field 'category' must be a string");
    auto category = parse_category(value.at("category").get<std::string>());
    if (!category || !is_explanatory(*category)) {
      throw ParseError("pair: field 'category' must name an explanatory category");
    }
    pair.category = category;
  }
  if (value.contains("position")) {
    pair.appearance_position = static_cast<std::size_t>(as_int(value, "position", "pair"));
  }
  return pair;
}

}  // namespace explplan
