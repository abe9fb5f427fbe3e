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


// Run configuration: built-in defaults, then a dataset profile, then an
// INI-style file, then EXPLPLAN_<SECTION>_<KEY> environment variables, then
// command-line flags.

#ifndef EXPLPLAN_CONFIG_H_
#define EXPLPLAN_CONFIG_H_

#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "explplan/consistency.h"
#include "explplan/dataset.h"
#include "explplan/llm_gateway.h"
#include "explplan/metrics.h"
#include "explplan/plan.h"

namespace explplan {

// Thrown for bad configuration values; the CLI maps it to a usage error.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Profile {
  std::string name;
  int max_new_tokens;
  std::size_t k;
};

// scinews, elife, plos, custom.
std::optional<Profile> find_profile(std::string_view name);

// "section.key" -> value.
using ConfigValues = std::map<std::string, std::string>;

// Reads [section] headers and key = value lines; '#' and ';' start comments.
// Throws ConfigError with the line number.
ConfigValues parse_ini(std::istream& in, const std::string& source_name);

struct RunConfig {
  ConfigValues values;  // effective, after all layers

  std::string profile;
  std::uint64_t seed = 2024;
  std::size_t jobs = 1;
  LlmConfig llm;
  Strategy strategy = Strategy::kExplanatory;
  std::size_t k = 1;
  Granularity granularity = Granularity::kEdu;
  MetricSettings metrics;
  ConsistencySettings consistency;
  std::string consistency_backend = "lexical";
  std::string consistency_endpoint;
  std::string wikipedia_api = "https://en.wikipedia.org/w/api.php";

  // Hash of the effective values, stable across key order.
  std::string fingerprint() const;
  std::string describe() const;
};

ConfigValues default_values();

// `getenv` is injectable for tests. `file` may be null. `overrides` are the
// command-line values, keyed like the file.
RunConfig resolve_config(const ConfigValues* file, const ConfigValues& overrides,
                         const std::function<const char*(const char*)>& getenv);

}  // namespace explplan

#endif  // EXPLPLAN_CONFIG_H_
