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


#include "explplan/prompts.h"

#include <stdexcept>
#include <utility>

#include "explplan/common.h"

namespace explplan {
namespace {

struct EmbeddedPrompt {
  std::string_view name;
  std::string_view text;
};

// Generated at configure time from prompts/*.txt.
#include "explplan_prompt_data.inc"

std::string_view embedded(std::string_view name) {
  for (const auto& p : kEmbeddedPrompts) {
    if (p.name == name) {
      std::string_view text = p.text;
      if (!text.empty() && text.back() == '\n') text.remove_suffix(1);
      return text;
    }
  }
  throw std::logic_error("prompt template missing from build: " + std::string(name));
}

std::vector<std::string> scan_slots(std::string_view text) {
  std::vector<std::string> slots;
  std::size_t pos = 0;
  while ((pos = text.find("{{", pos)) != std::string_view::npos) {
    const std::size_t close = text.find("}}", pos + 2);
    if (close == std::string_view::npos) break;
    std::string name(text.substr(pos + 2, close - pos - 2));
    bool seen = false;
    for (const auto& s : slots) seen = seen || s == name;
    if (!seen) slots.push_back(std::move(name));
    pos = close + 2;
  }
  return slots;
}

PromptTemplate make(PromptId id, std::string_view name) {
  PromptTemplate t{id, name, embedded(name), {}, scan_slots(embedded(name))};
  t.version = hex64(fnv1a64(t.text)).substr(0, 8);
  return t;
}

}  // namespace

const std::vector<PromptId>& all_prompt_ids() {
  static const std::vector<PromptId> ids = {PromptId::kQuestion, PromptId::kZeroShot,
                                            PromptId::kIcl,      PromptId::kPlan,
                                            PromptId::kExtract,  PromptId::kIrrelevantQuestion};
  return ids;
}

const PromptTemplate& prompt_template(PromptId id) {
  static const std::vector<PromptTemplate> templates = {
      make(PromptId::kQuestion, "question"),
      make(PromptId::kZeroShot, "zero_shot"),
      make(PromptId::kIcl, "icl"),
      make(PromptId::kPlan, "plan"),
      make(PromptId::kExtract, "extract"),
      make(PromptId::kIrrelevantQuestion, "irrelevant_question"),
  };
  return templates.at(static_cast<std::size_t>(id));
}

PromptRendering render_prompt(PromptId id, const std::map<std::string, std::string>& slots) {
  const PromptTemplate& t = prompt_template(id);
  for (const auto& [name, value] : slots) {
    bool known = false;
    for (const auto& s : t.slots) known = known || s == name;
    if (!known) {
      throw std::invalid_argument("prompt '" + std::string(t.name) + "' has no slot '" + name + "'");
    }
  }
  PromptRendering out;
  out.template_id = std::string(t.name);
  out.slots = slots;
  const std::string_view text = t.text;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t open = text.find("{{", pos);
    if (open == std::string_view::npos) {
      out.text.append(text.substr(pos));
      break;
    }
    const std::size_t close = text.find("}}", open + 2);
    out.text.append(text.substr(pos, open - pos));
    const std::string name(text.substr(open + 2, close - open - 2));
    const auto it = slots.find(name);
    if (it == slots.end()) {
      throw std::invalid_argument("prompt '" + std::string(t.name) + "' needs slot '" + name + "'");
    }
    out.text += it->second;
    pos = close + 2;
  }
  return out;
}

std::map<std::string, std::string> unrender_prompt(PromptId id, std::string_view text) {
  const PromptTemplate& t = prompt_template(id);
  std::vector<std::string_view> literals;
  std::vector<std::string> names;
  std::size_t pos = 0;
  while (true) {
    const std::size_t open = t.text.find("{{", pos);
    if (open == std::string_view::npos) {
      literals.push_back(t.text.substr(pos));
      break;
    }
    const std::size_t close = t.text.find("}}", open + 2);
    literals.push_back(t.text.substr(pos, open - pos));
    names.emplace_back(t.text.substr(open + 2, close - open - 2));
    pos = close + 2;
  }
  auto mismatch = [&] {
    return ParseError("text does not follow prompt '" + std::string(t.name) + "'");
  };
  if (names.empty()) {
    if (text != t.text) throw mismatch();
    return {};
  }
  const std::string_view head = literals.front();
  const std::string_view tail = literals.back();
  if (text.size() < head.size() + tail.size() || text.substr(0, head.size()) != head ||
      text.substr(text.size() - tail.size()) != tail) {
    throw mismatch();
  }
  std::string_view rest = text.substr(head.size(), text.size() - head.size() - tail.size());
  std::map<std::string, std::string> out;
  for (std::size_t k = names.size() - 1; k > 0; --k) {
    const std::size_t at = rest.rfind(literals[k]);
    if (at == std::string_view::npos) throw mismatch();
    out[names[k]] = std::string(rest.substr(at + literals[k].size()));
    rest = rest.substr(0, at);
  }
  out[names[0]] = std::string(rest);
  return out;
}

}  // namespace explplan
