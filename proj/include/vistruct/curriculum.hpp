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

// Curriculum plan, replay buffer and the stage scheduler.
//
// A plan runs WARMUP once over code text, class definitions and every suite
// record, then each record stage in pyramid order. Stage k trains on its own
// records plus the replay buffer built from the stages before it; once k is
// done, a uniform sample of its records joins the buffer.

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "vistruct/codec.hpp"
#include "vistruct/io.hpp"
#include "vistruct/ontology.hpp"
#include "vistruct/rng.hpp"

namespace vistruct {

inline constexpr Stage kPlanStages[] = {Stage::kWarmup, Stage::kCR, Stage::kOG,
                                        Stage::kOA,     Stage::kOR, Stage::kE};

struct StageSpec {
  Stage stage = Stage::kWarmup;
  std::vector<std::filesystem::path> datasets;
  int epochs = 1;
  std::size_t buffer_size = 0;
};

struct CurriculumPlan {
  std::uint64_t seed = 0;
  std::vector<StageSpec> stages;
  std::optional<std::filesystem::path> code_corpus;
  std::optional<std::filesystem::path> ontology_dir;

  const StageSpec& spec(Stage stage) const {
    for (const auto& s : stages) {
      if (s.stage == stage) return s;
    }
    throw Error(ErrorCode::kInvalidPlan, "plan has no " + std::string(stage_name(stage)) + " stage");
  }
};

// Suite sizes and replay-buffer sizes at full scale.
struct Table4Row {
  Stage stage;
  std::size_t samples;
  std::size_t buffer;
};

inline const std::vector<Table4Row>& table4() {
  static const std::vector<Table4Row> rows{{Stage::kCR, 1'000'000, 104'000},
                                           {Stage::kOG, 2'500'000, 1'000'000},
                                           {Stage::kOA, 500'000, 100'000},
                                           {Stage::kOR, 500'000, 100'000},
                                           {Stage::kE, 4'000'000, 0}};
  return rows;
}

inline int default_epochs(Stage stage) {
  return (stage == Stage::kOR || stage == Stage::kE) ? 3 : 1;
}

// Buffer size for a stage of `n` records, scaled from the full-size ratio.
inline std::size_t default_buffer_size(Stage stage, std::size_t n) {
  for (const auto& row : table4()) {
    if (row.stage != stage || row.buffer == 0) continue;
    auto num = static_cast<unsigned __int128>(n) * row.buffer;
    return static_cast<std::size_t>((num + row.samples / 2) / row.samples);
  }
  return 0;
}

// Default plan over the given per-stage datasets and sizes.
inline CurriculumPlan default_plan(const std::map<Stage, std::vector<std::filesystem::path>>& datasets,
                                   const std::map<Stage, std::size_t>& sizes,
                                   std::uint64_t seed = 0) {
  CurriculumPlan plan;
  plan.seed = seed;
  for (auto st : kPlanStages) {
    StageSpec s;
    s.stage = st;
    s.epochs = default_epochs(st);
    if (auto it = datasets.find(st); it != datasets.end()) s.datasets = it->second;
    if (auto it = sizes.find(st); it != sizes.end()) s.buffer_size = default_buffer_size(st, it->second);
    plan.stages.push_back(std::move(s));
  }
  return plan;
}

// Order, epochs and buffer rules that do not need the data.
inline void validate_plan_structure(const CurriculumPlan& plan) {
  auto bad = [](const std::string& why) { return Error(ErrorCode::kInvalidPlan, why); };
  if (plan.stages.size() != std::size(kPlanStages)) {
    throw bad("plan must list the stages WARMUP, CR, OG, OA, OR, E in order");
  }
  for (std::size_t i = 0; i < plan.stages.size(); ++i) {
    const auto& s = plan.stages[i];
    if (s.stage != kPlanStages[i]) {
      throw bad("stage " + std::to_string(i) + " is " + std::string(stage_name(s.stage)) +
                ", expected " + std::string(stage_name(kPlanStages[i])));
    }
    if (s.epochs < 1) throw bad(std::string(stage_name(s.stage)) + ": epochs must be >= 1");
    if ((s.stage == Stage::kWarmup || s.stage == Stage::kE) && s.buffer_size != 0) {
      throw bad(std::string(stage_name(s.stage)) + " cannot contribute to the replay buffer");
    }
    if (s.stage == Stage::kWarmup && !s.datasets.empty()) {
      throw bad("WARMUP takes no datasets; it reads every other stage's data");
    }
  }
}

inline void validate_plan_paths(const CurriculumPlan& plan) {
  auto missing = [](const std::filesystem::path& p) {
    return Error(ErrorCode::kInvalidPlan, "plan path does not exist: '" + p.string() + "'");
  };
  for (const auto& s : plan.stages) {
    for (const auto& p : s.datasets) {
      if (!std::filesystem::exists(p)) throw missing(p);
    }
  }
  if (plan.code_corpus && !std::filesystem::exists(*plan.code_corpus)) throw missing(*plan.code_corpus);
  if (plan.ontology_dir && !std::filesystem::exists(*plan.ontology_dir)) {
    throw missing(*plan.ontology_dir);
  }
}

// plan.json: {"seed", "code_corpus"?, "ontology_dir"?, "stages": [{"stage",
// "datasets", "epochs", "buffer_size"}]}. Relative paths resolve against the
// plan's directory.
inline CurriculumPlan plan_from_json(const nlohmann::json& j, const std::filesystem::path& base) {
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_relative() ? base / path : path;
  };
  try {
    CurriculumPlan plan;
    plan.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("code_corpus") && !j["code_corpus"].is_null()) {
      plan.code_corpus = resolve(j["code_corpus"].get<std::string>());
    }
    if (j.contains("ontology_dir") && !j["ontology_dir"].is_null()) {
      plan.ontology_dir = resolve(j["ontology_dir"].get<std::string>());
    }
    for (const auto& js : j.at("stages")) {
      StageSpec s;
      auto st = parse_stage(js.at("stage").get<std::string>());
      if (!st) throw Error(ErrorCode::kInvalidPlan, "unknown stage '" + js["stage"].dump() + "'");
      s.stage = *st;
      for (const auto& p : js.value("datasets", nlohmann::json::array())) {
        s.datasets.push_back(resolve(p.get<std::string>()));
      }
      s.epochs = js.value("epochs", default_epochs(s.stage));
      auto buf = js.value("buffer_size", nlohmann::json(0));
      if (buf.is_string() && buf.get<std::string>() == "-") {
        s.buffer_size = 0;
      } else {
        if (!buf.is_number_integer() || buf.get<long long>() < 0) {
          throw Error(ErrorCode::kInvalidPlan, "buffer_size must be a non-negative integer");
        }
        s.buffer_size = buf.get<std::size_t>();
      }
      plan.stages.push_back(std::move(s));
    }
    validate_plan_structure(plan);
    return plan;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidPlan, std::string("malformed plan: ") + e.what());
  }
}

inline CurriculumPlan load_plan(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidPlan, path.filename().string() + ": " + e.what());
  }
  auto plan = plan_from_json(j, path.parent_path());
  validate_plan_paths(plan);
  return plan;
}

// Paths are written relative to `base` when they live under it.
inline nlohmann::json plan_to_json(const CurriculumPlan& plan, const std::filesystem::path& base = {}) {
  auto rel = [&](const std::filesystem::path& p) {
    if (base.empty()) return p.generic_string();
    auto r = p.lexically_relative(base);
    return (r.empty() || *r.begin() == "..") ? p.generic_string() : r.generic_string();
  };
  nlohmann::json j;
  j["seed"] = plan.seed;
  if (plan.code_corpus) j["code_corpus"] = rel(*plan.code_corpus);
  if (plan.ontology_dir) j["ontology_dir"] = rel(*plan.ontology_dir);
  nlohmann::json stages = nlohmann::json::array();
  for (const auto& s : plan.stages) {
    nlohmann::json ds = nlohmann::json::array();
    for (const auto& p : s.datasets) ds.push_back(rel(p));
    stages.push_back({{"stage", std::string(stage_name(s.stage))},
                      {"datasets", ds},
                      {"epochs", s.epochs},
                      {"buffer_size", s.buffer_size}});
  }
  j["stages"] = stages;
  return j;
}

// ---------------------------------------------------------------------------
// Replay buffer

// Uniform draw without replacement of `buffer_size` ids, in draw order.
inline std::vector<std::string> sample_buffer(const std::vector<std::string>& ids,
                                              std::size_t buffer_size, std::uint64_t seed) {
  if (buffer_size > ids.size()) {
    throw Error(ErrorCode::kInvalidArgument, "buffer size " + std::to_string(buffer_size) +
                                                 " exceeds dataset size " +
                                                 std::to_string(ids.size()));
  }
  Rng rng(seed);
  std::vector<std::string> out;
  out.reserve(buffer_size);
  for (auto i : sample_indices(ids.size(), buffer_size, rng)) out.push_back(ids[i]);
  return out;
}

// A reference into the suite: a record of `source`'s dataset, or for
// WARMUP-sourced items an index into the warm-up texts.
struct ItemRef {
  Stage source = Stage::kCR;
  std::size_t index = 0;
  bool replay = false;

  bool operator==(const ItemRef&) const = default;
};

struct BufferEntry {
  Stage stage;
  std::size_t index;
};

struct EpochMix {
  Stage stage = Stage::kWarmup;
  int epoch = 1;            // 1-based
  std::size_t specific = 0; // items from the stage's own data
  std::size_t replayed = 0; // items from the buffer
  std::vector<ItemRef> items;  // shuffled; empty when not materialized

  std::size_t size() const { return specific + replayed; }
};

// Walks a plan over dataset sizes. Item lists are optional so that full-scale
// plans can be checked for shape without allocating them.
class Scheduler {
 public:
  Scheduler(CurriculumPlan plan, std::map<Stage, std::size_t> sizes, std::size_t warmup_texts,
            bool materialize = true)
      : plan_(std::move(plan)),
        sizes_(std::move(sizes)),
        warmup_texts_(warmup_texts),
        materialize_(materialize) {
    validate_plan_structure(plan_);
    for (const auto& s : plan_.stages) {
      if (s.buffer_size > size_of(s.stage)) {
        throw Error(ErrorCode::kInvalidPlan, std::string(stage_name(s.stage)) + ": buffer_size " +
                                                 std::to_string(s.buffer_size) +
                                                 " exceeds dataset size " +
                                                 std::to_string(size_of(s.stage)));
      }
    }
  }

  std::optional<EpochMix> next() {
    while (stage_index_ < plan_.stages.size()) {
      const auto& spec = plan_.stages[stage_index_];
      if (epoch_ < spec.epochs) {
        ++epoch_;
        return mix(spec, epoch_);
      }
      extend_buffer(spec);
      ++stage_index_;
      epoch_ = 0;
    }
    return std::nullopt;
  }

  const std::vector<BufferEntry>& buffer() const { return buffer_; }
  const CurriculumPlan& plan() const { return plan_; }

  // Buffer size after each completed record stage.
  const std::map<Stage, std::size_t>& buffer_sizes() const { return buffer_after_; }

  std::size_t size_of(Stage stage) const {
    auto it = sizes_.find(stage);
    return it == sizes_.end() ? 0 : it->second;
  }

 private:
  EpochMix mix(const StageSpec& spec, int epoch) {
    EpochMix m;
    m.stage = spec.stage;
    m.epoch = epoch;
    if (spec.stage == Stage::kWarmup) {
      m.specific = warmup_texts_;
      for (auto st : kRecordStages) m.specific += size_of(st);
    } else {
      m.specific = size_of(spec.stage);
      m.replayed = buffer_.size();
    }
    if (!materialize_) return m;

    m.items.reserve(m.size());
    if (spec.stage == Stage::kWarmup) {
      for (std::size_t i = 0; i < warmup_texts_; ++i) m.items.push_back({Stage::kWarmup, i, false});
      for (auto st : kRecordStages) {
        for (std::size_t i = 0; i < size_of(st); ++i) m.items.push_back({st, i, false});
      }
    } else {
      for (std::size_t i = 0; i < m.specific; ++i) m.items.push_back({spec.stage, i, false});
      for (const auto& b : buffer_) m.items.push_back({b.stage, b.index, true});
    }
    Rng rng(derive_seed(plan_.seed, "shuffle/" + std::string(stage_name(spec.stage)) + "/" +
                                        std::to_string(epoch)));
    shuffle_in_place(std::span<ItemRef>(m.items), rng);
    return m;
  }

  void extend_buffer(const StageSpec& spec) {
    if (spec.stage == Stage::kWarmup) return;
    Rng rng(derive_seed(plan_.seed, "buffer/" + std::string(stage_name(spec.stage))));
    for (auto i : sample_indices(size_of(spec.stage), spec.buffer_size, rng)) {
      buffer_.push_back({spec.stage, i});
    }
    buffer_after_[spec.stage] = buffer_.size();
  }

  CurriculumPlan plan_;
  std::map<Stage, std::size_t> sizes_;
  std::size_t warmup_texts_ = 0;
  bool materialize_ = true;
  std::size_t stage_index_ = 0;
  int epoch_ = 0;
  std::vector<BufferEntry> buffer_;
  std::map<Stage, std::size_t> buffer_after_;
};

// ---------------------------------------------------------------------------
// Loaded suite

// Code corpus snippets are separated by blank lines.
inline std::vector<std::string> split_code_corpus(const std::string& corpus) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(corpus);
  std::string line;
  auto flush = [&] {
    if (!text::trim(cur).empty()) out.push_back(cur);
    cur.clear();
  };
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) {
      flush();
    } else {
      cur += line;
      cur += '\n';
    }
  }
  flush();
  return out;
}

struct SuiteData {
  std::map<Stage, std::vector<VisualRecord>> records;
  std::vector<std::string> warmup_texts;  // code snippets, then class definitions

  std::map<Stage, std::size_t> sizes() const {
    std::map<Stage, std::size_t> out;
    for (const auto& [st, rs] : records) out[st] = rs.size();
    return out;
  }
  std::size_t record_count() const {
    std::size_t n = 0;
    for (const auto& [st, rs] : records) n += rs.size();
    return n;
  }
  const VisualRecord& record(const ItemRef& ref) const { return records.at(ref.source).at(ref.index); }
};

// Loads every dataset of the plan. A record must be tagged with the stage
// whose dataset lists it.
inline SuiteData load_suite_data(const CurriculumPlan& plan, const OntologyRegistry& registry) {
  SuiteData data;
  for (const auto& s : plan.stages) {
    if (s.stage == Stage::kWarmup) continue;
    auto& bucket = data.records[s.stage];
    for (const auto& path : s.datasets) {
      for (auto& r : load_records(path)) {
        if (r.source_stage != s.stage) {
          throw Error(ErrorCode::kInvalidPlan,
                      path.filename().string() + ": record '" + r.image_id + "' is tagged " +
                          std::string(stage_name(r.source_stage)) + " but listed under " +
                          std::string(stage_name(s.stage)));
        }
        validate_record(r, registry);
        bucket.push_back(std::move(r));
      }
    }
  }
  if (plan.code_corpus) data.warmup_texts = split_code_corpus(read_file(*plan.code_corpus));
  for (const auto& s : registry.synsets()) {
    data.warmup_texts.push_back(emit_class_definition(s, registry));
  }
  for (const auto& f : registry.frames()) data.warmup_texts.push_back(emit_class_definition(f));
  return data;
}

inline std::string buffer_manifest_jsonl(const Scheduler& scheduler, const SuiteData& data) {
  std::vector<nlohmann::json> rows;
  for (const auto& b : scheduler.buffer()) {
    rows.push_back({{"stage", std::string(stage_name(b.stage))},
                    {"index", b.index},
                    {"image_id", data.records.at(b.stage).at(b.index).image_id}});
  }
  return to_jsonl(rows);
}

}  // namespace vistruct
