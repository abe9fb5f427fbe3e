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


#include "explplan/config.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>

#include "explplan/common.h"

namespace explplan {
namespace {

std::string env_name(const std::string& key) {
  std::string out = "EXPLPLAN_";
  for (char c : key) {
    out.push_back(c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  }
  return out;
}

class Reader {
 public:
  explicit Reader(const ConfigValues& values) : values_(values) {}

  const std::string& str(const std::string& key) const { return values_.at(key); }

  double real(const std::string& key) const {
    const std::string& v = str(key);
    char* end = nullptr;
    const double d = std::strtod(v.c_str(), &end);
    if (v.empty() || *end != '\0') fail(key, "a number");
    return d;
  }

  std::uint64_t natural(const std::string& key) const {
    const std::string& v = str(key);
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) {
      fail(key, "a non-negative integer");
    }
    return out;
  }

  bool flag(const std::string& key) const {
    std::string v = str(key);
    for (auto& c : v) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    fail(key, "a boolean");
  }

  [[noreturn]] void fail(const std::string& key, const char* what) const {
    throw ConfigError("config: " + key + " = '" + str(key) + "' is not " + what);
  }

 private:
  const ConfigValues& values_;
};

}  // namespace

std::optional<Profile> find_profile(std::string_view name) {
  if (name == "scinews") return Profile{"scinews", 1024, 8};
  if (name == "elife") return Profile{"elife", 512, 4};
  if (name == "plos") return Profile{"plos", 256, 2};
  if (name == "custom") return Profile{"custom", 1024, 1};
  return std::nullopt;
}

ConfigValues parse_ini(std::istream& in, const std::string& source_name) {
  ConfigValues out;
  std::string section;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    std::string text = trim(line);
    if (text.empty() || text[0] == '#' || text[0] == ';') continue;
    if (text.front() == '[') {
      if (text.back() != ']' || text.size() < 3) {
        throw ConfigError(source_name + ":" + std::to_string(n) + ": malformed section header");
      }
      section = trim(std::string_view(text).substr(1, text.size() - 2));
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source_name + ":" + std::to_string(n) + ": expected key = value");
    }
    const std::string key = trim(std::string_view(text).substr(0, eq));
    if (key.empty() || section.empty()) {
      throw ConfigError(source_name + ":" + std::to_string(n) +
                        ": key outside a section or empty key");
    }
    out[section + "." + key] = trim(std::string_view(text).substr(eq + 1));
  }
  return out;
}

ConfigValues default_values() {
  const LlmConfig llm;
  const ConsistencySettings cs;
  return {
      {"run.profile", "custom"},
      {"run.seed", "2024"},
      {"run.jobs", "1"},
      {"gateway.endpoint", llm.endpoint},
      {"gateway.model", llm.model},
      {"gateway.temperature", "1"},
      {"gateway.top_p", "1"},
      {"gateway.frequency_penalty", "0.2"},
      {"gateway.presence_penalty", "0.2"},
      {"gateway.timeout_ms", std::to_string(llm.request_timeout.count())},
      {"gateway.requests_per_second", "0"},
      {"gateway.api_key_env", llm.api_key_env},
      {"gateway.retry_max_attempts", std::to_string(llm.retry.max_attempts)},
      {"gateway.retry_initial_backoff_ms", std::to_string(llm.retry.initial_backoff.count())},
      {"gateway.retry_max_backoff_ms", std::to_string(llm.retry.max_backoff.count())},
      {"plan.strategy", "Explanatory"},
      {"plan.granularity", "edu"},
      {"metrics.clamp_fre", "false"},
      {"metrics.exp_ratio_include_targets", "false"},
      {"consistency.threshold", "0.5"},
      {"consistency.article_limit", std::to_string(cs.article_limit)},
      {"consistency.query_spans", std::to_string(cs.query_spans)},
      {"consistency.query_words", std::to_string(cs.query_words)},
      {"consistency.window_words", std::to_string(cs.window_words)},
      {"consistency.window_overlap", std::to_string(cs.window_overlap)},
      {"consistency.backend", "lexical"},
      {"consistency.backend_endpoint", ""},
      {"consistency.wikipedia_api", "https://en.wikipedia.org/w/api.php"},
  };
}

RunConfig resolve_config(const ConfigValues* file, const ConfigValues& overrides,
                         const std::function<const char*(const char*)>& getenv) {
  ConfigValues values = default_values();
  const ConfigValues empty;
  const ConfigValues& from_file = file ? *file : empty;
  for (const auto& [key, value] : from_file) {
    if (!values.count(key) && key != "gateway.max_new_tokens" && key != "plan.k") {
      throw ConfigError("config: unknown key '" + key + "'");
    }
  }

  // The profile is itself layered so that it can come from any source.
  auto layered = [&](const std::string& key) -> std::optional<std::string> {
    if (overrides.count(key)) return overrides.at(key);
    if (const char* env = getenv(env_name(key).c_str())) return std::string(env);
    if (from_file.count(key)) return from_file.at(key);
    return std::nullopt;
  };
  const std::string profile_name = layered("run.profile").value_or("custom");
  const auto profile = find_profile(profile_name);
  if (!profile) throw ConfigError("config: unknown profile '" + profile_name + "'");
  values["run.profile"] = profile->name;
  values["gateway.max_new_tokens"] = std::to_string(profile->max_new_tokens);
  values["plan.k"] = std::to_string(profile->k);

  for (auto& [key, value] : values) {
    if (auto v = layered(key)) value = *v;
  }

  RunConfig cfg;
  cfg.values = values;
  const Reader r(values);
  cfg.profile = profile->name;
  cfg.seed = r.natural("run.seed");
  cfg.jobs = std::max<std::size_t>(1, r.natural("run.jobs"));
  cfg.llm.endpoint = r.str("gateway.endpoint");
  cfg.llm.model = r.str("gateway.model");
  cfg.llm.temperature = r.real("gateway.temperature");
  cfg.llm.top_p = r.real("gateway.top_p");
  cfg.llm.frequency_penalty = r.real("gateway.frequency_penalty");
  cfg.llm.presence_penalty = r.real("gateway.presence_penalty");
  cfg.llm.max_new_tokens = static_cast<int>(r.natural("gateway.max_new_tokens"));
  cfg.llm.request_timeout = std::chrono::milliseconds(r.natural("gateway.timeout_ms"));
  cfg.llm.requests_per_second = r.real("gateway.requests_per_second");
  cfg.llm.api_key_env = r.str("gateway.api_key_env");
  cfg.llm.retry.max_attempts = static_cast<int>(r.natural("gateway.retry_max_attempts"));
  cfg.llm.retry.initial_backoff =
      std::chrono::milliseconds(r.natural("gateway.retry_initial_backoff_ms"));
  cfg.llm.retry.max_backoff = std::chrono::milliseconds(r.natural("gateway.retry_max_backoff_ms"));
  cfg.llm.max_parallel_requests = static_cast<int>(cfg.jobs);
  try {
    cfg.llm.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  const auto strategy = parse_strategy(r.str("plan.strategy"));
  if (!strategy) throw ConfigError("config: unknown plan.strategy '" + r.str("plan.strategy") + "'");
  cfg.strategy = *strategy;
  cfg.k = r.natural("plan.k");
  if (cfg.k == 0) throw ConfigError("config: plan.k must be at least 1");
  const auto granularity = parse_granularity(r.str("plan.granularity"));
  if (!granularity) throw ConfigError("config: plan.granularity must be edu or sentence");
  cfg.granularity = *granularity;

  cfg.metrics.clamp_fre = r.flag("metrics.clamp_fre");
  cfg.metrics.exp_ratio_include_targets = r.flag("metrics.exp_ratio_include_targets");

  cfg.consistency.threshold = r.real("consistency.threshold");
  cfg.consistency.article_limit = r.natural("consistency.article_limit");
  cfg.consistency.query_spans = r.natural("consistency.query_spans");
  cfg.consistency.query_words = r.natural("consistency.query_words");
  cfg.consistency.window_words = r.natural("consistency.window_words");
  cfg.consistency.window_overlap = r.natural("consistency.window_overlap");
  cfg.consistency.jobs = cfg.jobs;
  if (cfg.consistency.article_limit == 0) throw ConfigError("config: article_limit must be >= 1");
  if (cfg.consistency.window_overlap >= cfg.consistency.window_words) {
    throw ConfigError("config: window_overlap must be smaller than window_words");
  }
  cfg.consistency_backend = r.str("consistency.backend");
  if (cfg.consistency_backend != "lexical" && cfg.consistency_backend != "http") {
    throw ConfigError("config: consistency.backend must be lexical or http");
  }
  cfg.consistency_endpoint = r.str("consistency.backend_endpoint");
  cfg.wikipedia_api = r.str("consistency.wikipedia_api");
  return cfg;
}

std::string RunConfig::describe() const {
  std::string out;
  for (const auto& [key, value] : values) out += key + " = " + value + "\n";
  return out;
}

// run.jobs only changes scheduling, never outputs, so it stays out of the
// fingerprint.
std::string RunConfig::fingerprint() const {
  std::string canonical;
  for (const auto& [key, value] : values) {
    if (key == "run.jobs") continue;
    canonical += key + "=" + value + "\n";
  }
  return hex64(fnv1a64(canonical));
}

}  // namespace explplan
