// Copyright 2026 The vistruct Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ==============================================================================

// The `vistruct` command line. Every subcommand reads its inputs, writes its
// outputs through temp-file renames, and reports failures as one line on
// stderr with exit status 1.

#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "vistruct/codec.hpp"
#include "vistruct/curriculum.hpp"
#include "vistruct/eval.hpp"
#include "vistruct/io.hpp"
#include "vistruct/masking.hpp"
#include "vistruct/ontology.hpp"
#include "vistruct/suite.hpp"
#include "vistruct/synthetic.hpp"
#include "vistruct/trainer.hpp"
#include "vistruct/weakevents.hpp"

#ifndef VISTRUCT_SOURCE_DIR
#define VISTRUCT_SOURCE_DIR "."
#endif

namespace vistruct::cli {

namespace fs = std::filesystem;

struct RunConfig {
  std::string subcommand;
  std::optional<fs::path> in;
  std::optional<fs::path> out;
  std::optional<fs::path> plan;
  std::optional<fs::path> gold;
  std::optional<fs::path> records;
  std::optional<fs::path> model;
  std::optional<fs::path> ontology_dir;
  std::optional<fs::path> overrides;
  std::optional<std::string> stage;
  std::optional<std::string> task;
  std::optional<std::string> image_id;
  std::optional<std::size_t> index;
  std::optional<std::uint64_t> seed;
  std::string k = "50,100";
  std::string policy = "all";
  std::size_t per_stage = 10;
  bool oracle = false;
};

// Data directory: VISTRUCT_DATA_DIR, else the source tree's data/.
inline fs::path data_dir() {
  if (const char* env = std::getenv("VISTRUCT_DATA_DIR"); env && *env) return env;
  return fs::path(VISTRUCT_SOURCE_DIR) / "data";
}

inline fs::path ontology_dir(const RunConfig& cfg) {
  return cfg.ontology_dir ? *cfg.ontology_dir : data_dir() / "ontology";
}

inline std::vector<std::size_t> parse_ks(const std::string& s) {
  std::vector<std::size_t> out;
  for (const auto& part : text::split_list(s)) {
    std::size_t used = 0;
    long long v = -1;
    try {
      v = std::stoll(part, &used);
    } catch (const std::exception&) {
    }
    if (used != part.size() || v < 1) {
      throw Error(ErrorCode::kInvalidArgument, "--k expects positive integers, got '" + part + "'");
    }
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw Error(ErrorCode::kInvalidArgument, "--k is empty");
  return out;
}

inline const fs::path& need(const std::optional<fs::path>& p, const char* flag) {
  if (!p) throw Error(ErrorCode::kInvalidArgument, std::string(flag) + " is required");
  return *p;
}

inline const std::string& need(const std::optional<std::string>& s, const char* flag) {
  if (!s) throw Error(ErrorCode::kInvalidArgument, std::string(flag) + " is required");
  return *s;
}

inline Stage need_record_stage(const RunConfig& cfg) {
  auto st = parse_stage(need(cfg.stage, "--stage"));
  if (!st || *st == Stage::kWarmup) {
    throw Error(ErrorCode::kInvalidArgument, "--stage must be one of CR, OG, OA, OR, E");
  }
  return *st;
}

inline MaskPolicy parse_policy(const std::string& s) {
  if (s == "all") return MaskPolicy::kAll;
  if (s == "single") return MaskPolicy::kSingle;
  throw Error(ErrorCode::kInvalidArgument, "--policy must be 'all' or 'single'");
}

inline OntologyRegistry registry_for(const RunConfig& cfg) { return load_registry(ontology_dir(cfg)); }

inline AlignmentTable table_for(const RunConfig& cfg, const OntologyRegistry& registry) {
  AlignmentTable table;
  if (cfg.overrides) load_overrides(table, *cfg.overrides, registry);
  return table;
}

// ---------------------------------------------------------------------------
// Subcommands

inline int cmd_build_suite(const RunConfig& cfg, std::ostream& out) {
  auto sources = load_suite_config(need(cfg.in, "--in"));
  const auto& dir = need(cfg.out, "--out");
  auto registry = registry_for(cfg);
  auto table = table_for(cfg, registry);
  auto result = build_suite(sources, registry, table);
  write_suite(dir, result, table);
  out << "staged " << result.staged_count() << " records from " << result.inputs << " inputs, "
      << result.quarantined.size() << " quarantined\n";
  return 0;
}

// Input: one label per line, optionally `label<TAB>n|v|a`. Output TSV:
// label, status, synset (or the contested synset), conflicting category.
inline int cmd_align(const RunConfig& cfg, std::ostream& out) {
  auto registry = registry_for(cfg);
  auto table = table_for(cfg, registry);
  std::istringstream in(read_file(need(cfg.in, "--in")));
  std::string line, tsv;
  std::size_t resolved = 0, total = 0;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    auto fields = text::split(line, '\t');
    std::optional<Pos> pos;
    if (fields.size() > 1) {
      pos = parse_pos(text::trim(fields[1]));
      if (!pos) throw Error(ErrorCode::kMalformedLine, "bad part of speech in '" + line + "'");
    }
    auto r = align_category(fields[0], registry, table, pos);
    const char* status = r.status == AlignStatus::kResolved     ? "resolved"
                         : r.status == AlignStatus::kUnresolved ? "unresolved"
                                                                : "collision";
    tsv += std::string(text::trim(fields[0])) + "\t" + status + "\t" + r.synset_id + "\t" +
           r.conflicting + "\n";
    ++total;
    resolved += r.resolved();
  }
  write_file_atomic(need(cfg.out, "--out"), tsv);
  out << "resolved " << resolved << " of " << total << " labels\n";
  return 0;
}

// Converts SRL parses into events. Parses join records by image id; a parse
// with no record starts from an empty one. Records that end up with events
// are written tagged E.
inline int cmd_gen_events(const RunConfig& cfg, std::ostream& out) {
  auto registry = registry_for(cfg);
  auto table = table_for(cfg, registry);
  std::map<std::string, VisualRecord> base;
  if (cfg.records) {
    for (auto& r : load_records(*cfg.records)) base[r.image_id] = std::move(r);
  }
  std::vector<VisualRecord> written;
  ConversionReport total;
  std::size_t dropped = 0;
  for (const auto& j : read_jsonl(need(cfg.in, "--in"))) {
    auto parse = srl_from_json(j);
    if (parse.image_id.empty()) throw Error(ErrorCode::kSchema, "SRL parse without image_id");
    VisualRecord r;
    if (auto it = base.find(parse.image_id); it != base.end()) {
      r = it->second;
    } else {
      r.image_id = parse.image_id;
    }
    r.caption = parse.caption;
    auto conv = convert_srl_to_events(parse, r, registry, table);
    detail::accumulate(total, conv.report);
    if (conv.events.empty()) {
      ++dropped;
      continue;
    }
    attach_events(r, std::move(conv));
    r.source_stage = Stage::kE;
    validate_record(r, registry);
    written.push_back(std::move(r));
  }
  save_records(need(cfg.out, "--out"), written);
  auto report = report_to_json(total);
  report["records_written"] = written.size();
  report["records_without_events"] = dropped;
  out << report.dump() << "\n";
  return 0;
}

inline int cmd_make_batches(const RunConfig& cfg, std::ostream& out) {
  auto registry = registry_for(cfg);
  auto stage = need_record_stage(cfg);
  auto policy = parse_policy(cfg.policy);
  const auto seed = cfg.seed.value_or(0);
  std::vector<nlohmann::json> rows;
  std::size_t skipped = 0;
  for (const auto& r : load_records(need(cfg.in, "--in"))) {
    auto block = serialize_record(r, registry);
    if (!stage_applicable(block, stage)) {
      ++skipped;
      continue;
    }
    auto pair = mask_for_stage(block, stage, derive_seed(seed, "mask/" + r.image_id), policy);
    auto features = synthesize_features(r, registry, feature_seed(seed));
    rows.push_back(batch_to_json(r.image_id, pair, features.tokens));
  }
  write_file_atomic(need(cfg.out, "--out"), to_jsonl(rows));
  out << "wrote " << rows.size() << " batches, skipped " << skipped << " records\n";
  return 0;
}

inline int cmd_train(const RunConfig& cfg, std::ostream& out) {
  auto plan = load_plan(need(cfg.plan, "--plan"));
  if (cfg.seed) plan.seed = *cfg.seed;
  RunConfig c = cfg;
  if (!c.ontology_dir && plan.ontology_dir) c.ontology_dir = plan.ontology_dir;
  auto registry = registry_for(c);
  auto data = load_suite_data(plan, registry);
  ReferenceModel model(build_vocabulary(registry));
  TrainingOptions options;
  options.policy = parse_policy(cfg.policy);
  options.out_dir = need(cfg.out, "--out");
  auto run = run_training(plan, data, registry, model, options);
  out << "trained " << run.log.size() << " epochs over " << data.record_count() << " records\n";
  return 0;
}

// Relation, sgcls and situation predictions for records, from a saved
// reference model or from the oracle.
inline int cmd_predict(const RunConfig& cfg, std::ostream& out) {
  auto registry = registry_for(cfg);
  const auto& task = need(cfg.task, "--task");
  if (task != "relation" && task != "sgcls" && task != "situation") {
    throw Error(ErrorCode::kInvalidArgument, "--task must be relation, sgcls or situation");
  }
  auto records = load_records(need(cfg.in, "--in"));
  auto ks = parse_ks(cfg.k);
  auto per_slot = *std::max_element(ks.begin(), ks.end());

  std::unique_ptr<SequenceModel> model;
  std::uint64_t fseed = feature_seed(cfg.seed.value_or(0));
  if (cfg.oracle) {
    auto oracle = std::make_unique<OracleModel>();
    for (const auto& r : records) {
      auto block = serialize_record(r, registry);
      auto f = synthesize_features(r, registry, fseed);
      for (auto st : {Stage::kCR, Stage::kOR}) {
        if (stage_applicable(block, st)) oracle->train_step(mask_for_stage(block, st), f);
      }
      for (const auto& g : situation_golds({r}, registry)) {
        DownstreamInput ev;
        ev.answer = g.verb;
        oracle->train_step(build_downstream_prompt(DownstreamTask::kEventPrediction, ev), f);
        for (const auto& [role, fillers] : g.roles) {
          DownstreamInput in{{}, g.verb, role, *fillers.begin()};
          oracle->train_step(build_downstream_prompt(DownstreamTask::kRolePrediction, in), f);
        }
      }
    }
    model = std::move(oracle);
  } else {
    auto state = nlohmann::json::parse(read_file(need(cfg.model, "--model")));
    if (state.contains("feature_seed")) fseed = state["feature_seed"].get<std::uint64_t>();
    model = std::make_unique<ReferenceModel>(ReferenceModel::from_json(state));
  }

  std::vector<nlohmann::json> rows;
  for (const auto& r : records) {
    auto f = synthesize_features(r, registry, fseed);
    if (task == "situation") {
      for (const auto& g : situation_golds({r}, registry)) {
        rows.push_back(situation_prediction_to_json(predict_situation(*model, g, registry, f)));
      }
    } else if (!r.relations.empty()) {
      auto p = task == "sgcls" ? predict_sgcls(*model, r, registry, f, per_slot)
                               : predict_relations(*model, r, registry, f, per_slot);
      rows.push_back(relation_prediction_to_json(p));
    }
  }
  write_file_atomic(need(cfg.out, "--out"), to_jsonl(rows));
  out << "wrote " << rows.size() << " predictions\n";
  return 0;
}

// Golds come from records.jsonl (relation, sgcls, zero_shot, situation) or,
// for situation, from situation-gold lines {image_id, verb, roles}.
inline int cmd_eval(const RunConfig& cfg, std::ostream& out) {
  auto registry = registry_for(cfg);
  const auto& task = need(cfg.task, "--task");
  auto ks = parse_ks(cfg.k);
  auto pred_rows = read_jsonl(need(cfg.in, "--in"));
  auto gold_rows = read_jsonl(need(cfg.gold, "--gold"));
  auto gold_records = [&] {
    std::vector<VisualRecord> rs;
    for (const auto& j : gold_rows) rs.push_back(record_from_json(j));
    return rs;
  };
  auto relation_golds = [&] {
    std::vector<RelationGold> golds;
    for (const auto& r : gold_records()) {
      if (!r.relations.empty()) golds.push_back(relation_gold(r, registry));
    }
    return golds;
  };

  nlohmann::json report;
  if (task == "relation" || task == "sgcls") {
    std::vector<RelationPrediction> preds;
    for (const auto& j : pred_rows) preds.push_back(relation_prediction_from_json(j));
    auto rule = task == "sgcls" ? MatchRule::kSgcls : MatchRule::kPredicateOnly;
    report = relation_report_json(task, preds, relation_golds(), ks, rule);
  } else if (task == "situation") {
    std::vector<SituationPrediction> preds;
    for (const auto& j : pred_rows) preds.push_back(situation_prediction_from_json(j));
    std::vector<SituationGold> golds;
    if (!gold_rows.empty() && gold_rows.front().contains("schema")) {
      golds = situation_golds(gold_records(), registry);
    } else {
      for (const auto& j : gold_rows) golds.push_back(situation_gold_from_json(j));
    }
    report = situation_report_json(situation_metrics(preds, golds, &registry));
  } else if (task == "zero_shot") {
    std::vector<Generation> gens;
    for (const auto& j : pred_rows) {
      try {
        gens.push_back({j.at("image_id").get<std::string>(), j.at("text").get<std::string>()});
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::kSchema, std::string("malformed generation: ") + e.what());
      }
    }
    report = zero_shot_report_json(score_zero_shot(gens, relation_golds(), registry, ks));
  } else {
    throw Error(ErrorCode::kInvalidArgument, "--task must be relation, sgcls, situation or zero_shot");
  }
  auto text = report.dump(2) + "\n";
  if (cfg.out) {
    write_file_atomic(*cfg.out, text);
  }
  out << text;
  return 0;
}

inline int cmd_inspect(const RunConfig& cfg, std::ostream& out) {
  auto registry = registry_for(cfg);
  auto records = load_records(need(cfg.in, "--in"));
  std::vector<const VisualRecord*> chosen;
  for (std::size_t i = 0; i < records.size(); ++i) {
    bool take = (!cfg.image_id && !cfg.index) || (cfg.image_id && records[i].image_id == *cfg.image_id) ||
                (cfg.index && *cfg.index == i);
    if (take) chosen.push_back(&records[i]);
  }
  if (chosen.empty()) throw Error(ErrorCode::kInvalidArgument, "no record matches the selection");
  for (const auto* r : chosen) {
    auto block = serialize_record(*r, registry);
    out << "## " << r->image_id << " (" << stage_name(r->source_stage) << ", " << r->width << "x"
        << r->height << ")\n";
    out << detokenize(block.tokens);
    out << "slots:\n";
    for (const auto& s : block.slots) {
      std::vector<std::string> span(block.tokens.begin() + static_cast<std::ptrdiff_t>(s.begin),
                                    block.tokens.begin() + static_cast<std::ptrdiff_t>(s.end));
      out << "  " << std::left << std::setw(15) << slot_kind_name(s.kind) << std::setw(22) << s.owner
          << "[" << s.begin << ", " << s.end << ")  " << text::join(span, " ") << "\n";
    }
  }
  return 0;
}

inline int cmd_emit_classes(const RunConfig& cfg, std::ostream& out) {
  auto registry = registry_for(cfg);
  auto code = emit_all_class_definitions(registry);
  if (cfg.out) {
    write_file_atomic(*cfg.out, code);
    out << "wrote " << registry.synset_count() + registry.frame_count() << " class definitions\n";
  } else {
    out << code;
  }
  return 0;
}

// Writes a synthetic staged suite and a default plan over it.
inline int cmd_synth(const RunConfig& cfg, std::ostream& out) {
  auto registry = registry_for(cfg);
  const auto& dir = need(cfg.out, "--out");
  const auto seed = cfg.seed.value_or(0);
  std::map<Stage, std::size_t> sizes;
  for (auto st : kRecordStages) sizes[st] = cfg.per_stage;
  auto suite = synthetic_suite(registry, sizes, seed);
  std::map<Stage, std::vector<fs::path>> datasets;
  for (const auto& [st, records] : suite) {
    auto path = dir / (std::string(stage_name(st)) + ".jsonl");
    save_records(path, records);
    datasets[st] = {path};
  }
  auto plan = default_plan(datasets, sizes, seed);
  auto corpus = data_dir() / "code_corpus.txt";
  if (fs::exists(corpus)) plan.code_corpus = fs::absolute(corpus);
  plan.ontology_dir = fs::absolute(ontology_dir(cfg));
  write_file_atomic(dir / "plan.json", plan_to_json(plan, dir).dump(2) + "\n");
  out << "wrote " << cfg.per_stage * std::size(kRecordStages) << " records and plan.json\n";
  return 0;
}

inline int dispatch(const RunConfig& cfg, std::ostream& out) {
  const auto& c = cfg.subcommand;
  if (c == "build-suite") return cmd_build_suite(cfg, out);
  if (c == "align") return cmd_align(cfg, out);
  if (c == "gen-events") return cmd_gen_events(cfg, out);
  if (c == "make-batches") return cmd_make_batches(cfg, out);
  if (c == "train") return cmd_train(cfg, out);
  if (c == "predict") return cmd_predict(cfg, out);
  if (c == "eval") return cmd_eval(cfg, out);
  if (c == "inspect") return cmd_inspect(cfg, out);
  if (c == "emit-classes") return cmd_emit_classes(cfg, out);
  if (c == "synth") return cmd_synth(cfg, out);
  throw Error(ErrorCode::kInvalidArgument, "unknown subcommand '" + c + "'");
}

inline std::string one_line(std::string s) {
  for (auto& ch : s) {
    if (ch == '\n' || ch == '\r') ch = ' ';
  }
  return s;
}

// ---------------------------------------------------------------------------
// Argument parsing

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"vistruct: visual structure code blocks, curriculum data and metrics"};
  app.require_subcommand(1);
  RunConfig cfg;

  auto path_opt = [](CLI::App* sub, const char* flag, std::optional<fs::path>& target,
                     const char* help) {
    sub->add_option_function<std::string>(flag, [&target](const std::string& v) { target = v; }, help);
  };
  auto common = [&](CLI::App* sub) {
    path_opt(sub, "--ontology-dir", cfg.ontology_dir, "directory with synsets.tsv and frames.tsv");
    path_opt(sub, "--overrides", cfg.overrides, "category<TAB>synset_id alignment overrides");
    sub->add_option_function<std::uint64_t>(
        "--seed", [&](const std::uint64_t& v) { cfg.seed = v; }, "master seed");
  };
  struct Spec {
    const char* name;
    const char* help;
  };
  const Spec specs[] = {
      {"build-suite", "align raw manifests into staged records.jsonl files"},
      {"align", "align category labels to synsets"},
      {"gen-events", "convert caption SRL parses into events"},
      {"make-batches", "mask records for one stage into batches.jsonl"},
      {"train", "run the curriculum with the reference model"},
      {"predict", "predict relations or situations for records"},
      {"eval", "score predictions against golds"},
      {"inspect", "print a record's code block and slot map"},
      {"emit-classes", "print class definitions for the ontology"},
      {"synth", "write a synthetic staged suite and plan"},
  };
  for (const auto& s : specs) {
    auto* sub = app.add_subcommand(s.name, s.help);
    common(sub);
    path_opt(sub, "--in", cfg.in, "input file");
    path_opt(sub, "--out", cfg.out, "output file or directory");
    const std::string name = s.name;
    if (name == "train") path_opt(sub, "--plan", cfg.plan, "plan.json");
    if (name == "eval") path_opt(sub, "--gold", cfg.gold, "gold records.jsonl");
    if (name == "gen-events") path_opt(sub, "--records", cfg.records, "records to attach events to");
    if (name == "predict") {
      path_opt(sub, "--model", cfg.model, "model-state.json");
      sub->add_flag("--oracle", cfg.oracle, "answer from the gold records");
    }
    if (name == "make-batches") {
      sub->add_option_function<std::string>(
          "--stage", [&](const std::string& v) { cfg.stage = v; }, "CR, OG, OA, OR or E");
    }
    if (name == "make-batches" || name == "train") {
      sub->add_option("--policy", cfg.policy, "mask every eligible slot (all) or one (single)");
    }
    if (name == "predict" || name == "eval") {
      sub->add_option_function<std::string>(
          "--task", [&](const std::string& v) { cfg.task = v; }, "relation, sgcls, situation, zero_shot");
      sub->add_option("--k", cfg.k, "comma-separated K values");
    }
    if (name == "inspect") {
      sub->add_option_function<std::string>(
          "--image-id", [&](const std::string& v) { cfg.image_id = v; }, "record to show");
      sub->add_option_function<std::size_t>(
          "--index", [&](const std::size_t& v) { cfg.index = v; }, "0-based record index");
    }
    if (name == "synth") sub->add_option("--n", cfg.per_stage, "records per stage");
    sub->callback([&cfg, name] { cfg.subcommand = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: InvalidArgument: " << one_line(e.what()) << "\n";
    return 1;
  }
  try {
    return dispatch(cfg, out);
  } catch (const Error& e) {
    err << "error: " << one_line(e.what()) << "\n";
  } catch (const nlohmann::json::exception& e) {
    err << "error: Schema: " << one_line(e.what()) << "\n";
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: Io: " << one_line(e.what()) << "\n";
  } catch (const std::exception& e) {
    err << "error: Internal: " << one_line(e.what()) << "\n";
  }
  return 1;
}

}  // namespace vistruct::cli
