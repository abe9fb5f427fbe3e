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


// Prompt templates. The texts live in prompts/*.txt and are compiled in;
// slots are written {{name}}.

#ifndef EXPLPLAN_PROMPTS_H_
#define EXPLPLAN_PROMPTS_H_

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace explplan {

enum class PromptId {
  kQuestion,
  kZeroShot,
  kIcl,
  kPlan,
  kExtract,
  kIrrelevantQuestion,
};

struct PromptTemplate {
  PromptId id;
  std::string_view name;     // file stem, also the id sent to transports
  std::string_view text;     // without the file's final newline
  std::string version;       // first 8 hex digits of the text's FNV-1a hash
  std::vector<std::string> slots;  // in order of first appearance
};

const PromptTemplate& prompt_template(PromptId id);
const std::vector<PromptId>& all_prompt_ids();

struct PromptRendering {
  std::string template_id;
  std::string text;
  std::map<std::string, std::string> slots;
};

// Single-pass substitution: slot values are copied verbatim and never
// re-expanded. Throws std::invalid_argument for a missing or unknown slot.
PromptRendering render_prompt(PromptId id, const std::map<std::string, std::string>& slots);

// Recovers slot values from a rendered prompt, matching literal text from
// the right so that earlier slots absorb any ambiguity. Throws ParseError
// when the text does not follow the template.
std::map<std::string, std::string> unrender_prompt(PromptId id, std::string_view text);

}  // namespace explplan

#endif  // EXPLPLAN_PROMPTS_H_
