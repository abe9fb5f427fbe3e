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

// RST trees as exchanged with external discourse parsers, relation-label
// categorization, and extraction of (explanatory, target) EDU pairs.
//
// Interchange record (one JSON object per line):
//
//   {"doc_id": "d1",
//    "edus":  [{"index": 0, "text": "...", "char_start": 0, "char_end": 12}, ...],
//    "nodes": [{"left_leaf": 0, "right_leaf": 1, "split": 0,
//               "relation_label": "Elaboration",
//               "nuclearity": "nucleus-satellite"}, ...]}
//
// `nodes` lists internal nodes in pre-order. A node spans leaves
// [left_leaf, right_leaf]; its left child spans [left_leaf, split] and its
// right child [split + 1, right_leaf]. Single-EDU spans are leaves and have
// no node entry.

#ifndef EXPLPLAN_RST_H_
#define EXPLPLAN_RST_H_

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace explplan {

enum class RelationCategory { kBackground, kElaboration, kExplanation, kComparison, kOther };

std::string_view to_string(RelationCategory category);
// Accepts the names produced by to_string (case-insensitive).
std::optional<RelationCategory> parse_category(std::string_view name);
inline bool is_explanatory(RelationCategory c) { return c != RelationCategory::kOther; }

// Total over all strings; anything outside the explanatory inventory is kOther.
RelationCategory map_relation(std::string_view label);

enum class Nuclearity { kNucleusSatellite, kSatelliteNucleus, kNucleusNucleus };

std::string_view to_string(Nuclearity nuclearity);

struct Edu {
  std::size_t index = 0;
  std::string text;
  std::size_t char_start = 0;
  std::size_t char_end = 0;

  bool operator==(const Edu&) const = default;
};

// Either an internal node (index into RstTree::nodes) or a leaf EDU.
struct RstChild {
  bool is_leaf = true;
  std::size_t index = 0;

  bool operator==(const RstChild&) const = default;
};

struct RstNode {
  std::size_t left_leaf = 0;
  std::size_t right_leaf = 0;
  std::size_t split = 0;
  std::string relation_label;
  Nuclearity nuclearity = Nuclearity::kNucleusNucleus;
  RstChild left;
  RstChild right;

  bool operator==(const RstNode&) const = default;
};

// Nodes are stored in pre-order; nodes[0] is the root when the tree has more
// than one EDU.
class RstTree {
 public:
  RstTree() = default;

  // Validates pre-order nodes (children fields are ignored and rebuilt).
  // Throws StructuralError unless the nodes form a binary tree whose leaves
  // partition [0, edu_count).
  static RstTree from_preorder(std::size_t edu_count, std::vector<RstNode> nodes);

  const std::vector<RstNode>& nodes() const { return nodes_; }
  std::size_t edu_count() const { return edu_count_; }
  RstChild root() const;

  // Leftmost leaf reached by following nucleus children (left child at
  // multinuclear nodes).
  std::size_t head_edu(RstChild child) const;

 private:
  std::vector<RstNode> nodes_;
  std::size_t edu_count_ = 0;
};

struct RstDocument {
  std::string doc_id;
  std::vector<Edu> edus;
  RstTree tree;
};

// Validates and converts one interchange record. Throws ParseError for
// schema problems (message names the field) and StructuralError for
// non-partitioning or non-binary trees.
RstDocument parse_interchange(const nlohmann::json& payload);
RstDocument parse_interchange_line(std::string_view line);

nlohmann::json serialize_interchange(const RstDocument& document);

struct ExplanatoryPair {
  std::size_t explanatory = 0;
  std::size_t target = 0;
  // Unset only for pairs whose relation type is unknown (model-extracted
  // pairs); never kOther.
  std::optional<RelationCategory> category;
  std::size_t appearance_position = 0;

  bool operator==(const ExplanatoryPair&) const = default;
};

struct PairExtraction {
  std::vector<ExplanatoryPair> pairs;
  // Explanatory-labelled multinuclear nodes, which have no direction.
  std::size_t skipped_multinuclear = 0;
};

PairExtraction extract_explanatory_pairs(const RstTree& tree, const std::vector<Edu>& edus);

nlohmann::json pair_to_json(const ExplanatoryPair& pair);
ExplanatoryPair pair_from_json(const nlohmann::json& value);

}  // namespace explplan

#endif  // EXPLPLAN_RST_H_
