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


#include "explplan/cli.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "explplan/common.h"
#include "explplan/config.h"
#include "explplan/consistency.h"
#include "explplan/dataset.h"
#include "explplan/llm_gateway.h"
#include "explplan/metrics.h"
#include "explplan/parallel.h"
#include "explplan/random.h"
#include "explplan/rule_extractor.h"

namespace explplan {
namespace {

namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

constexpr std::size_t kChunk = 256;

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string profile;
  std::optional<std::size_t> jobs;
  std::string stub_gateway;
  std::vector<std::string> sets;
  bool quiet = false;
};

class Log {
 public:
  Log(std::ostream& err, bool quiet) : err_(err), quiet_(quiet) {}
  void info(const std::string& message) {
    if (!quiet_) err_ << "explplan: " << message << '\n';
  }
  void warn(const std::string& message) { err_ << "explplan: warning: " << message << '\n'; }

 private:
  std::ostream& err_;
  bool quiet_;
};

std::uint64_t record_seed(std::uint64_t seed, std::string_view id) {
  return fnv1a64(id, fnv1a64(std::to_string(seed)));
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  return in;
}

class OutFile {
 public:
  explicit OutFile(const std::string& path) : path_(path) {
    const fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    out_.open(path, std::ios::binary | std::ios::trunc);
    if (!out_) throw IoError("cannot write " + path);
  }
  void line(const std::string& text) {
    out_ << text << '\n';
    if (!out_) throw IoError("write failed: " + path_);
  }
  std::ostream& stream() { return out_; }
  void close() {
    out_.close();
    if (!out_) throw IoError("write failed: " + path_);
  }

 private:
  std::string path_;
  std::ofstream out_;
};

// Reads JSON lines, skipping blanks. ParseError carries file:line.
template <typename Fn>
void for_each_json(const std::string& path, Fn&& fn) {
  auto in = open_in(path);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (trim(line).empty()) continue;
    auto value = nlohmann::json::parse(line, nullptr, false);
    if (value.is_discarded()) throw ParseError(path + ":" + std::to_string(n) + ": invalid JSON");
    try {
      fn(value, line);
    } catch (const ParseError& e) {
      throw ParseError(path + ":" + std::to_string(n) + ": " + e.what());
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + ":" + std::to_string(n) + ": " + e.what());
    }
  }
}

std::vector<AugmentedRecord> load_augmented(const std::string& path) {
  auto in = open_in(path);
  CorpusReader reader(in, path);
  std::vector<AugmentedRecord> out;
  AugmentedRecord r;
  while (reader.next(r)) out.push_back(r);
  return out;
}

std::map<std::string, DatasetRecord> load_corpus_map(const std::string& path) {
  auto in = open_in(path);
  CorpusReader reader(in, path);
  std::map<std::string, DatasetRecord> out;
  DatasetRecord r;
  while (reader.next(r)) {
    if (!out.emplace(r.id, r).second) {
      throw ParseError(path + ": id '" + r.id + "' appears in more than one split");
    }
  }
  return out;
}

// Streams corpus records in chunks, processing each chunk in parallel and
// handing results to `sink` in input order.
template <typename Result, typename Work, typename Sink>
std::size_t stream_corpus(const std::string& path, ErrorMode mode, std::size_t jobs, Log& log,
                          Work&& work, Sink&& sink) {
  auto in = open_in(path);
  CorpusReader reader(in, path, mode);
  std::size_t total = 0;
  bool more = true;
  while (more) {
    std::vector<DatasetRecord> chunk;
    DatasetRecord r;
    while (chunk.size() < kChunk && (more = reader.next(r))) chunk.push_back(r);
    std::vector<Result> results(chunk.size());
    parallel_for(chunk.size(), jobs, [&](std::size_t i) { results[i] = work(chunk[i]); });
    for (std::size_t i = 0; i < chunk.size(); ++i) sink(chunk[i], results[i]);
    total += chunk.size();
  }
  for (const auto& issue : reader.issues()) {
    log.warn(path + ":" + std::to_string(issue.line) + ": skipped: " + issue.message);
  }
  return total;
}

ErrorMode parse_error_mode(const std::string& name) {
  if (name == "fail") return ErrorMode::kFailFast;
  if (name == "skip") return ErrorMode::kSkip;
  throw UsageError("--on-error must be fail or skip");
}

// Pairs saved by `extract`, replayed for `plan`.
class PairsFileExtractor : public PairExtractor {
 public:
  explicit PairsFileExtractor(const std::string& path) {
    for_each_json(path, [&](const nlohmann::json& v, const std::string&) {
      const std::string id = v.at("id").get<std::string>();
      const auto provenance = parse_provenance(v.value("extractor", std::string("rule-based")));
      if (!provenance) throw ParseError("unknown extractor");
      provenance_ = *provenance;
      Extraction e;
      for (const auto& u : v.at("units")) e.units.push_back({e.units.size(), u.get<std::string>()});
      for (const auto& p : v.at("pairs")) {
        auto pair = pair_from_json(p);
        if (pair.explanatory >= e.units.size() || pair.target >= e.units.size()) {
          throw ParseError("record '" + id + "': pair index outside 'units'");
        }
        e.pairs.push_back(pair);
      }
      if (!by_id_.emplace(id, std::move(e)).second) throw ParseError("duplicate id '" + id + "'");
    });
  }
  Provenance provenance() const override { return provenance_; }
  Extraction extract(const DatasetRecord& record) override {
    const auto it = by_id_.find(record.id);
    if (it == by_id_.end()) throw ParseError("no extracted pairs for record '" + record.id + "'");
    return it->second;
  }

 private:
  std::map<std::string, Extraction> by_id_;
  Provenance provenance_ = Provenance::kRuleBased;
};

nlohmann::json extraction_to_json(const std::string& id, Provenance provenance,
                                  const Extraction& e) {
  nlohmann::json units = nlohmann::json::array();
  for (const auto& u : e.units) units.push_back(u.text);
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& p : e.pairs) pairs.push_back(pair_to_json(p));
  return {{"id", id},
          {"extractor", std::string(to_string(provenance))},
          {"units", units},
          {"pairs", pairs}};
}

struct Context {
  Common common;
  RunConfig cfg;
  CliEnv env;
  std::unique_ptr<Log> log;
  std::unique_ptr<LlmGateway> gateway;

  LlmGateway& llm() {
    if (gateway) return *gateway;
    std::shared_ptr<ChatTransport> transport;
    if (!common.stub_gateway.empty()) {
      try {
        transport = std::make_shared<StubChatTransport>(fs::path(common.stub_gateway));
      } catch (const std::invalid_argument& e) {
        throw UsageError(std::string("--stub-gateway: ") + e.what());
      }
      log->info("gateway: stub responses from " + common.stub_gateway);
    } else {
      const char* key = env.getenv(cfg.llm.api_key_env.c_str());
      if (!key) log->warn("environment variable " + cfg.llm.api_key_env + " is not set");
      transport = std::make_shared<HttpChatTransport>(cfg.llm.endpoint, key ? key : "",
                                                      cfg.llm.request_timeout);
      log->info("gateway: " + cfg.llm.endpoint + " model " + cfg.llm.model);
    }
    gateway = std::make_unique<LlmGateway>(cfg.llm, transport);
    return *gateway;
  }
};

struct ExtractOptions {
  std::string method = "rule";
  std::string parses;
  std::string patterns;
};

std::unique_ptr<PairExtractor> make_extractor(const ExtractOptions& o, Context& ctx) {
  if (o.method == "rule") {
    if (o.patterns.empty()) return std::make_unique<RuleBasedPairExtractor>();
    auto in = open_in(o.patterns);
    return std::make_unique<RuleBasedPairExtractor>(read_pattern_file(in));
  }
  if (o.method == "rst") {
    if (o.parses.empty()) throw UsageError("--method rst needs --parses");
    auto in = open_in(o.parses);
    return std::make_unique<InterchangePairExtractor>(
        InterchangePairExtractor::from_stream(in, o.parses, ctx.cfg.granularity));
  }
  if (o.method == "llm") return std::make_unique<LlmPairExtractor>(ctx.llm());
  throw UsageError("--method must be rule, rst or llm");
}

void add_extract_options(CLI::App* cmd, ExtractOptions& o) {
  cmd->add_option("--method", o.method, "rule | rst | llm")->capture_default_str();
  cmd->add_option("--parses", o.parses, "discourse parses (interchange lines) for --method rst");
  cmd->add_option("--patterns", o.patterns, "signal pattern file replacing the built-in list");
}

AugmentOptions augment_options(const RunConfig& cfg, const DatasetRecord& r) {
  AugmentOptions o;
  o.strategy = cfg.strategy;
  o.k = cfg.k;
  o.seed = record_seed(cfg.seed, r.id);
  return o;
}

// --- subcommands ---

struct IoArgs {
  std::string in;
  std::string out;
  std::string on_error = "fail";
};

int cmd_extract(Context& ctx, const IoArgs& io, const ExtractOptions& eo) {
  auto extractor = make_extractor(eo, ctx);
  OutFile out(io.out);
  std::size_t pairs = 0;
  const std::size_t n = stream_corpus<Extraction>(
      io.in, parse_error_mode(io.on_error), eo.method == "llm" ? ctx.cfg.jobs : 1, *ctx.log,
      [&](const DatasetRecord& r) { return extractor->extract(r); },
      [&](const DatasetRecord& r, const Extraction& e) {
        pairs += e.pairs.size();
        out.line(extraction_to_json(r.id, extractor->provenance(), e).dump());
      });
  out.close();
  ctx.log->info("extract: " + std::to_string(n) + " record(s), " + std::to_string(pairs) +
                " pair(s) -> " + io.out);
  return kExitOk;
}

int augment_with(Context& ctx, const IoArgs& io, PairExtractor& extractor) {
  GatewayQuestionSource questions(ctx.llm());
  OutFile out(io.out);
  std::size_t n_questions = 0;
  std::size_t normalized = 0;
  const std::size_t n = stream_corpus<AugmentedRecord>(
      io.in, parse_error_mode(io.on_error), ctx.cfg.jobs, *ctx.log,
      [&](const DatasetRecord& r) {
        return augment(r, extractor, questions, augment_options(ctx.cfg, r));
      },
      [&](const DatasetRecord&, const AugmentedRecord& a) {
        n_questions += a.plan.questions.size();
        normalized += a.normalized_questions.size();
        out.line(augmented_to_json(a).dump());
      });
  out.close();
  ctx.log->info("plan: " + std::to_string(n) + " record(s), " + std::to_string(n_questions) +
                " question(s), strategy " + std::string(to_string(ctx.cfg.strategy)) + " -> " +
                io.out);
  if (normalized) ctx.log->info(std::to_string(normalized) + " question(s) had '?' appended");
  return kExitOk;
}

struct PerturbArgs {
  std::string level;
  std::string mode;
  std::optional<std::size_t> count;
  std::string pool;
  std::string delete_category;
};

int cmd_perturb(Context& ctx, const IoArgs& io, const PerturbArgs& pa) {
  auto records = load_augmented(io.in);
  const bool deleting = !pa.delete_category.empty();
  if (deleting == !pa.level.empty()) {
    throw UsageError("perturb needs exactly one of --level or --delete");
  }
  if (deleting) {
    const auto category = parse_category(pa.delete_category);
    if (!category || !is_explanatory(*category)) {
      throw UsageError("--delete must name Background, Elaboration, Explanation or Comparison");
    }
    for (auto& r : records) {
      r.plan = delete_by_category(r.plan, *category);
      std::vector<ExplanatoryPair> kept;
      for (const auto& p : r.pairs) {
        if (p.category == *category) continue;
        kept.push_back(p);
        kept.back().appearance_position = kept.size() - 1;
      }
      r.pairs = std::move(kept);
    }
  } else {
    const auto mode = parse_perturb_mode(pa.mode);
    if (!mode) throw UsageError("--mode must be RR or FRR");
    if (pa.level != "edu" && pa.level != "question") throw UsageError("--level must be edu or question");
    if (*mode == PerturbMode::kFRR && pa.count) throw UsageError("--count only applies to RR");
    std::vector<std::string> shared_pool;
    if (!pa.pool.empty()) {
      auto in = open_in(pa.pool);
      for (std::string line; std::getline(in, line);) {
        if (!trim(line).empty()) shared_pool.push_back(trim(line));
      }
    }
    for (auto& r : records) {
      const std::size_t n = pa.level == "edu" ? r.pairs.size() : r.plan.questions.size();
      if (n == 0) continue;
      const std::uint64_t seed = record_seed(ctx.cfg.seed, r.base.id);
      std::optional<std::size_t> count = pa.count;
      if (*mode == PerturbMode::kRR && !count) {
        // Replacement count drawn from 1..n, as in the robustness runs.
        count = 1 + Rng(record_seed(seed, "count")).below(n);
      }
      try {
        if (pa.level == "question") {
          const std::size_t needed = *mode == PerturbMode::kFRR ? n : *count;
          std::vector<std::string> pool = shared_pool;
          if (pool.empty()) {
            for (std::size_t i = 0; i < needed; ++i) {
              pool.push_back(ctx.llm().generate_irrelevant_question().text);
            }
          }
          r.plan = perturb_questions(r.plan, pool, *mode, count, seed);
        } else {
          auto pairs = perturb_pairs(r.pairs, r.units.size(), *mode, count, seed);
          std::stable_sort(pairs.begin(), pairs.end(),
                           [](const ExplanatoryPair& a, const ExplanatoryPair& b) {
                             return a.explanatory < b.explanatory;
                           });
          for (std::size_t i = 0; i < pairs.size(); ++i) pairs[i].appearance_position = i;
          const auto targets = select_targets(Strategy::kExplanatory, r.units, 1, pairs, {});
          std::vector<std::string> texts;
          for (const auto& t : targets) {
            texts.push_back(ctx.llm()
                                .generate_question(context_text(t, r.units),
                                                   r.units[t.target_index].text)
                                .text);
          }
          r.plan = assemble_plan(targets, texts, Strategy::kExplanatory, std::nullopt);
          r.pairs = std::move(pairs);
        }
      } catch (const std::invalid_argument& e) {
        throw ParseError("record '" + r.base.id + "': " + e.what());
      }
    }
  }
  OutFile out(io.out);
  for (const auto& r : records) out.line(augmented_to_json(r).dump());
  out.close();
  ctx.log->info("perturb: " + std::to_string(records.size()) + " record(s) -> " + io.out);
  return kExitOk;
}

int cmd_emit(Context& ctx, const IoArgs& io, const std::string& variant_name) {
  const auto variant = parse_variant(variant_name);
  if (!variant) throw UsageError("--variant must be PlanOutput, PlanInputPG or PlanInputSG");
  auto in = open_in(io.in);
  CorpusReader reader(in, io.in, parse_error_mode(io.on_error));
  OutFile out(io.out);
  std::size_t n = 0;
  std::size_t empty = 0;
  AugmentedRecord r;
  while (reader.next(r)) {
    const auto ex = make_training_example(r, *variant);
    empty += ex.empty_plan;
    out.line(training_to_json(ex, *variant).dump());
    ++n;
  }
  out.close();
  ctx.log->info("emit: " + std::to_string(n) + " " + std::string(to_string(*variant)) +
                " line(s) -> " + io.out);
  if (empty) ctx.log->info(std::to_string(empty) + " record(s) written with an empty plan");
  return kExitOk;
}

struct SummarizeArgs {
  std::string mode = "plan";
  std::string examples;
  bool strip = false;
};

struct SummaryJob {
  std::string id;
  std::string document;
  std::optional<Plan> plan;
};

int cmd_summarize(Context& ctx, const IoArgs& io, const SummarizeArgs& sa) {
  if (sa.mode != "plan" && sa.mode != "zero-shot" && sa.mode != "icl") {
    throw UsageError("--mode must be plan, zero-shot or icl");
  }
  std::vector<SummaryJob> jobs;
  for_each_json(io.in, [&](const nlohmann::json& v, const std::string& line) {
    SummaryJob job;
    if (v.contains("variant")) {
      const auto variant = parse_variant(v.at("variant").get<std::string>());
      if (!variant) throw ParseError("unknown variant");
      auto parsed = parse_training_line(line, *variant);
      job.id = parsed.id;
      job.document = parsed.document;
      if (*variant != FormatVariant::kPlanOutput) {
        Plan plan;
        for (auto& q : parsed.questions) plan.questions.push_back({q, {}, 0, plan.questions.size()});
        job.plan = plan;
      }
    } else {
      const auto record = record_from_json(v);
      job.id = record.id;
      job.document = record.document;
      if (v.contains("plan")) job.plan = plan_from_json(v.at("plan"));
    }
    jobs.push_back(std::move(job));
  });

  std::vector<DatasetRecord> demos;
  if (sa.mode == "icl") {
    if (sa.examples.empty()) throw UsageError("--mode icl needs --examples");
    auto in = open_in(sa.examples);
    CorpusReader reader(in, sa.examples, ErrorMode::kFailFast, Split::kTrain);
    DatasetRecord r;
    while (reader.next(r)) demos.push_back(r);
    if (demos.empty()) throw ParseError(sa.examples + ": no train records for demonstrations");
  }
  // One demonstration for the whole run, as in the ICL baselines.
  const std::size_t demo = demos.empty() ? 0 : Rng(ctx.cfg.seed).below(demos.size());

  struct Out {
    std::string summary;
    std::string mode;
    bool separator_found = false;
  };
  std::vector<Out> results(jobs.size());
  LlmGateway& llm = ctx.llm();
  std::size_t fallbacks = 0;
  std::mutex mu;
  parallel_for(jobs.size(), ctx.cfg.jobs, [&](std::size_t i) {
    const auto& job = jobs[i];
    Out o;
    if (sa.mode == "plan") {
      if (!job.plan) throw ParseError("record '" + job.id + "' carries no plan");
      if (job.plan->questions.empty()) {
        o.summary = llm.summarize_zero_shot(job.document);
        o.mode = "zero-shot";
        std::lock_guard<std::mutex> lock(mu);
        ++fallbacks;
      } else {
        o.summary = llm.summarize_with_plan(job.document, *job.plan);
        o.mode = "plan";
      }
    } else if (sa.mode == "zero-shot") {
      o.summary = llm.summarize_zero_shot(job.document);
      o.mode = sa.mode;
    } else {
      std::size_t d = demo;
      if (demos[d].id == job.id) d = (d + 1) % demos.size();
      if (demos[d].id == job.id) throw ParseError("no demonstration other than '" + job.id + "'");
      o.summary = llm.summarize_icl(demos[d].document, demos[d].summary, job.document);
      o.mode = sa.mode;
    }
    if (sa.strip) {
      auto stripped = strip_plan(o.summary);
      o.summary = std::move(stripped.summary);
      o.separator_found = stripped.separator_found;
    }
    results[i] = std::move(o);
  });

  OutFile out(io.out);
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    nlohmann::json line = {{"id", jobs[i].id}, {"mode", results[i].mode}, {"summary", results[i].summary}};
    if (sa.strip) line["plan_stripped"] = results[i].separator_found;
    out.line(line.dump());
  }
  out.close();
  ctx.log->info("summarize: " + std::to_string(jobs.size()) + " summar" +
                (jobs.size() == 1 ? "y" : "ies") + " (" + sa.mode + ") -> " + io.out);
  if (fallbacks) ctx.log->info(std::to_string(fallbacks) + " empty plan(s) summarized zero-shot");
  return kExitOk;
}

std::vector<std::pair<std::string, std::string>> load_summaries(const std::string& path) {
  std::vector<std::pair<std::string, std::string>> out;
  for_each_json(path, [&](const nlohmann::json& v, const std::string&) {
    if (!v.contains("id") || !v.at("id").is_string()) throw ParseError("missing field 'id'");
    if (!v.contains("summary") || !v.at("summary").is_string()) {
      throw ParseError("missing field 'summary'");
    }
    out.emplace_back(v.at("id").get<std::string>(), v.at("summary").get<std::string>());
  });
  return out;
}

struct MetricsArgs {
  std::string summaries;
  std::string corpus;
  std::string table;
  std::string model = "model";
  std::string parses;
};

int cmd_metrics(Context& ctx, const IoArgs& io, const MetricsArgs& ma) {
  const auto corpus = load_corpus_map(ma.corpus);
  const auto summaries = load_summaries(ma.summaries);
  std::map<std::string, RstDocument> parses;
  MetricSettings settings = ctx.cfg.metrics;
  if (!ma.parses.empty()) {
    auto in = open_in(ma.parses);
    std::string line;
    for (std::size_t n = 1; std::getline(in, line); ++n) {
      if (trim(line).empty()) continue;
      try {
        auto doc = parse_interchange_line(line);
        parses.emplace(doc.doc_id, std::move(doc));
      } catch (const std::exception& e) {
        throw ParseError(ma.parses + ":" + std::to_string(n) + ": " + e.what());
      }
    }
    settings.exp_ratio_units = "edu";
  }
  std::vector<MetricReport> reports(summaries.size());
  parallel_for(summaries.size(), ctx.cfg.jobs, [&](std::size_t i) {
    const auto& [id, candidate] = summaries[i];
    const auto it = corpus.find(id);
    if (it == corpus.end()) throw ParseError("summary '" + id + "' has no corpus record");
    std::vector<ExplanatoryPair> pairs;
    std::size_t units = 0;
    if (settings.exp_ratio_units == "edu") {
      const auto p = parses.find(id);
      if (p == parses.end()) throw ParseError("summary '" + id + "' has no discourse parse");
      pairs = extract_explanatory_pairs(p->second.tree, p->second.edus).pairs;
      units = p->second.edus.size();
    } else {
      const auto sentences = segment_sentences(candidate);
      pairs = extract_pairs_rule_based(sentences);
      units = sentences.size();
    }
    try {
      reports[i] = compute_report(id, candidate, it->second.summary, it->second.document, pairs,
                                  units, settings);
    } catch (const std::invalid_argument& e) {
      throw ParseError("summary '" + id + "': " + e.what());
    }
  });
  OutFile out(io.out);
  for (const auto& r : reports) out.line(report_to_json(r).dump());
  out.close();
  if (!ma.table.empty()) {
    if (reports.empty()) throw ParseError(ma.summaries + ": no summaries");
    OutFile table(ma.table);
    table.line(aggregate_header());
    table.line(aggregate_row(ma.model, reports));
    table.close();
  }
  ctx.log->info("metrics: " + std::to_string(reports.size()) + " summar" +
                (reports.size() == 1 ? "y" : "ies") + ", settings " + settings.fingerprint() +
                " -> " + io.out);
  return kExitOk;
}

struct ConsistencyArgs {
  std::string summaries;
  std::string corpus;
  std::string fixtures;
  std::string table;
  bool no_retrieval = false;
};

int cmd_consistency(Context& ctx, const IoArgs& io, const ConsistencyArgs& ca) {
  const auto corpus = load_corpus_map(ca.corpus);
  std::vector<std::pair<std::string, std::string>> items;
  if (ca.summaries.empty()) {
    for (const auto& [id, r] : corpus) items.emplace_back(id, r.summary);
  } else {
    items = load_summaries(ca.summaries);
  }
  std::unique_ptr<EntailmentBackend> backend;
  if (ctx.cfg.consistency_backend == "http") {
    if (ctx.cfg.consistency_endpoint.empty()) {
      throw UsageError("consistency.backend = http needs consistency.backend_endpoint");
    }
    backend = std::make_unique<HttpEntailmentBackend>(ctx.cfg.consistency_endpoint,
                                                      ctx.cfg.llm.request_timeout);
  } else {
    backend = std::make_unique<LexicalOverlapBackend>();
  }
  std::shared_ptr<HttpGet> http;
  if (!ca.fixtures.empty()) {
    try {
      http = std::make_shared<RecordedHttpGet>(fs::path(ca.fixtures));
    } catch (const std::invalid_argument& e) {
      throw UsageError(std::string("--retrieval-fixtures: ") + e.what());
    }
  } else {
    http = std::make_shared<HttplibGet>(ctx.cfg.llm.request_timeout);
  }
  WikipediaRetriever retriever(http, ctx.cfg.wikipedia_api);

  OutFile out(io.out);
  double conv_sum = 0.0;
  double star_sum = 0.0;
  std::size_t failed = 0;
  for (const auto& [id, summary] : items) {
    const auto it = corpus.find(id);
    if (it == corpus.end()) throw ParseError("summary '" + id + "' has no corpus record");
    nlohmann::json line;
    try {
      if (ca.no_retrieval) {
        const auto r = summac_conv(it->second.document, summary, *backend, ctx.cfg.consistency);
        line = {{"summac", r.aggregate}, {"sentence_scores", r.sentence_scores}};
        conv_sum += r.aggregate;
      } else {
        const auto r = summac_star(it->second.document, summary, *backend, retriever,
                                   ctx.cfg.consistency);
        for (const auto& v : r.verdicts) failed += v.retrieval_failed;
        line = star_to_json(r);
        conv_sum += r.source_aggregate;
        star_sum += r.aggregate;
      }
    } catch (const std::invalid_argument& e) {
      throw ParseError("summary '" + id + "': " + e.what());
    }
    line["id"] = id;
    out.line(line.dump());
  }
  out.close();
  if (failed) ctx.log->warn(std::to_string(failed) + " sentence(s) kept their source score after a retrieval failure");
  if (!ca.table.empty() && !items.empty()) {
    OutFile table(ca.table);
    const double n = static_cast<double>(items.size());
    char buf[128];
    if (ca.no_retrieval) {
      table.line("SummaC");
      std::snprintf(buf, sizeof(buf), "%.2f", 100 * conv_sum / n);
    } else {
      table.line("SummaC\tSummaC*");
      std::snprintf(buf, sizeof(buf), "%.2f\t%.2f", 100 * conv_sum / n, 100 * star_sum / n);
    }
    table.line(buf);
    table.close();
  }
  ctx.log->info("consistency: " + std::to_string(items.size()) + " summar" +
                (items.size() == 1 ? "y" : "ies") + " -> " + io.out);
  return kExitOk;
}

int cmd_stats(Context& ctx, const IoArgs& io, std::string name) {
  CorpusStatsBuilder builder;
  auto in = open_in(io.in);
  CorpusReader reader(in, io.in, parse_error_mode(io.on_error));
  DatasetRecord r;
  std::size_t n = 0;
  while (reader.next(r)) {
    builder.add(r);
    ++n;
  }
  for (const auto& issue : reader.issues()) {
    ctx.log->warn(io.in + ":" + std::to_string(issue.line) + ": skipped: " + issue.message);
  }
  if (n == 0) throw ParseError(io.in + ": no records");
  if (name.empty()) name = fs::path(io.in).stem().string();
  OutFile out(io.out);
  out.line(corpus_stats_header());
  out.line(corpus_stats_row(name, builder.result()));
  out.close();
  ctx.log->info("stats: " + std::to_string(n) + " record(s) -> " + io.out);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, const CliEnv& env) {
  std::ostream& out = env.out ? *env.out : std::cout;
  std::ostream& err = env.err ? *env.err : std::cerr;
  const auto getenv = env.getenv ? env.getenv : [](const char* n) { return std::getenv(n); };

  CLI::App app("Discourse-driven plan construction and evaluation for lay summaries.",
               "explplan");
  app.fallthrough();
  app.require_subcommand(1);
  Common common;
  app.add_option("--config", common.config_path, "INI-style configuration file");
  app.add_option("--seed", common.seed, "random seed (default 2024)");
  app.add_option("--profile", common.profile, "scinews | elife | plos | custom");
  app.add_option("--jobs", common.jobs, "parallel requests and workers")->check(CLI::PositiveNumber);
  app.add_option("--stub-gateway", common.stub_gateway,
                 "answer model calls from <dir>/responses.json instead of the network");
  app.add_option("--set", common.sets, "override a configuration value: section.key=value");
  app.add_flag("--quiet", common.quiet, "only print warnings and errors");

  IoArgs io;
  ExtractOptions eo;
  std::string strategy;
  std::optional<std::size_t> k;
  std::string granularity;
  auto add_io = [&](CLI::App* cmd, const char* in_help) {
    cmd->add_option("--in", io.in, in_help)->required();
    cmd->add_option("--out", io.out, "output file")->required();
    cmd->add_option("--on-error", io.on_error, "fail | skip (bad input lines)")->capture_default_str();
  };
  auto add_plan_flags = [&](CLI::App* cmd) {
    cmd->add_option("--strategy", strategy, "Explanatory, Lead3, LeadK, Tail3, TailK, Random3, "
                                            "RandomK, AllEDUs or NonExpEDUs");
    cmd->add_option("--k", k, "K for the *K strategies (profile default)");
    cmd->add_option("--granularity", granularity, "edu | sentence units for --method rst");
  };

  auto* extract = app.add_subcommand("extract", "find explanatory pairs in summaries");
  add_io(extract, "corpus file");
  add_extract_options(extract, eo);
  extract->add_option("--granularity", granularity, "edu | sentence units for --method rst");

  std::string pairs_path;
  auto* plan = app.add_subcommand("plan", "generate question plans from extracted pairs");
  add_io(plan, "corpus file");
  plan->add_option("--pairs", pairs_path, "output of extract")->required();
  add_plan_flags(plan);

  auto* augment_cmd = app.add_subcommand("augment", "extract and plan in one pass");
  add_io(augment_cmd, "corpus file");
  add_extract_options(augment_cmd, eo);
  add_plan_flags(augment_cmd);

  PerturbArgs pa;
  auto* perturb = app.add_subcommand("perturb", "RR/FRR noise or category deletion on plans");
  add_io(perturb, "augmented records");
  perturb->add_option("--level", pa.level, "edu | question");
  perturb->add_option("--mode", pa.mode, "RR | FRR");
  perturb->add_option("--count", pa.count, "RR replacements per record (default: drawn from 1..n)")
      ->check(CLI::PositiveNumber);
  perturb->add_option("--pool", pa.pool, "irrelevant questions, one per line");
  perturb->add_option("--delete", pa.delete_category, "remove questions of this category");

  std::string variant;
  auto* emit = app.add_subcommand("emit", "write training pairs");
  add_io(emit, "augmented records");
  emit->add_option("--variant", variant, "PlanOutput | PlanInputPG | PlanInputSG")->required();

  SummarizeArgs sa;
  auto* summarize = app.add_subcommand("summarize", "generate lay summaries through the gateway");
  add_io(summarize, "augmented records, training lines or corpus records");
  summarize->add_option("--mode", sa.mode, "plan | zero-shot | icl")->capture_default_str();
  summarize->add_option("--examples", sa.examples, "corpus with train records for --mode icl");
  summarize->add_flag("--strip", sa.strip, "drop a generated plan before the summary separator");

  MetricsArgs ma;
  auto* metrics = app.add_subcommand("metrics", "score summaries against references");
  metrics->add_option("--summaries", ma.summaries, "summaries (id, summary)")->required();
  metrics->add_option("--corpus", ma.corpus, "corpus with documents and references")->required();
  metrics->add_option("--out", io.out, "per-summary scores")->required();
  metrics->add_option("--table", ma.table, "aggregate row, tab separated");
  metrics->add_option("--model", ma.model, "row label for --table")->capture_default_str();
  metrics->add_option("--parses", ma.parses, "discourse parses of the summaries (EDU ExpRatio)");

  ConsistencyArgs ca;
  auto* consistency = app.add_subcommand("consistency", "SummaC and SummaC* scores");
  consistency->add_option("--summaries", ca.summaries, "summaries (default: corpus references)");
  consistency->add_option("--corpus", ca.corpus, "corpus with documents")->required();
  consistency->add_option("--out", io.out, "per-summary verdicts")->required();
  consistency->add_option("--retrieval-fixtures", ca.fixtures,
                          "replay <dir>/recordings.json instead of the live encyclopedia API");
  consistency->add_option("--table", ca.table, "aggregate scores, tab separated");
  consistency->add_flag("--no-retrieval", ca.no_retrieval, "SummaC only");

  std::string stats_name;
  auto* stats = app.add_subcommand("stats", "corpus statistics");
  add_io(stats, "corpus file");
  stats->add_option("--name", stats_name, "row label (default: file stem)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "explplan: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  Context ctx;
  ctx.common = common;
  ctx.env = {getenv, &out, &err};
  ctx.log = std::make_unique<Log>(err, common.quiet);
  try {
    ConfigValues overrides;
    for (const auto& s : common.sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw UsageError("--set expects section.key=value");
      overrides[trim(std::string_view(s).substr(0, eq))] = trim(std::string_view(s).substr(eq + 1));
    }
    if (common.seed) overrides["run.seed"] = std::to_string(*common.seed);
    if (!common.profile.empty()) overrides["run.profile"] = common.profile;
    if (common.jobs) overrides["run.jobs"] = std::to_string(*common.jobs);
    if (!strategy.empty()) overrides["plan.strategy"] = strategy;
    if (k) overrides["plan.k"] = std::to_string(*k);
    if (!granularity.empty()) overrides["plan.granularity"] = granularity;
    std::optional<ConfigValues> file;
    if (!common.config_path.empty()) {
      std::ifstream in(common.config_path);
      if (!in) throw UsageError("cannot read config file " + common.config_path);
      file = parse_ini(in, common.config_path);
    }
    ctx.cfg = resolve_config(file ? &*file : nullptr, overrides, getenv);
    ctx.log->info("config " + ctx.cfg.fingerprint() + " (profile " + ctx.cfg.profile + ", seed " +
                  std::to_string(ctx.cfg.seed) + ")");

    if (extract->parsed()) return cmd_extract(ctx, io, eo);
    if (plan->parsed()) {
      PairsFileExtractor extractor(pairs_path);
      return augment_with(ctx, io, extractor);
    }
    if (augment_cmd->parsed()) {
      auto extractor = make_extractor(eo, ctx);
      return augment_with(ctx, io, *extractor);
    }
    if (perturb->parsed()) return cmd_perturb(ctx, io, pa);
    if (emit->parsed()) return cmd_emit(ctx, io, variant);
    if (summarize->parsed()) return cmd_summarize(ctx, io, sa);
    if (metrics->parsed()) return cmd_metrics(ctx, io, ma);
    if (consistency->parsed()) return cmd_consistency(ctx, io, ca);
    if (stats->parsed()) return cmd_stats(ctx, io, stats_name);
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "explplan: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "explplan: " << e.what() << '\n';
    return kExitUsage;
  } catch (const GatewayError& e) {
    err << "explplan: gateway error after " << e.attempts() << " attempt(s): " << e.what() << '\n';
    return kExitGateway;
  } catch (const RetrievalError& e) {
    err << "explplan: retrieval error: " << e.what() << '\n';
    return kExitGateway;
  } catch (const BackendError& e) {
    err << "explplan: entailment backend error: " << e.what() << '\n';
    return kExitGateway;
  } catch (const FormatError& e) {
    err << "explplan: unparseable model output: " << e.what() << '\n';
    return kExitGateway;
  } catch (const AlignmentError& e) {
    err << "explplan: " << e.what() << '\n';
    return kExitGateway;
  } catch (const std::exception& e) {
    err << "explplan: " << e.what() << '\n';
    return kExitData;
  }
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args(argv, argv + argc);
  return run(args, CliEnv{});
}

}  // namespace explplan
