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

// Suite construction: concept curation and raw manifests -> staged records.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "vistruct/codec.hpp"
#include "vistruct/io.hpp"
#include "vistruct/masking.hpp"
#include "vistruct/ontology.hpp"
#include "vistruct/rng.hpp"
#include "vistruct/weakevents.hpp"

namespace vistruct {

// ---------------------------------------------------------------------------
// Curation

inline constexpr std::size_t kDefaultMinSamples = 500;
inline constexpr std::size_t kDefaultPerClass = 100;

struct CurationResult {
  std::vector<std::string> retained;                 // sorted class names
  std::map<std::string, std::size_t> draws;          // class -> samples to draw
  std::size_t planned_samples = 0;
};

// Keeps classes with at least `min_samples` examples and plans `per_class`
// draws from each.
inline CurationResult curate_concepts(const std::map<std::string, std::size_t>& class_index,
                                      std::size_t min_samples = kDefaultMinSamples,
                                      std::size_t per_class = kDefaultPerClass) {
  if (min_samples < 1 || per_class < 1) {
    throw Error(ErrorCode::kInvalidArgument, "min_samples and per_class must be at least 1");
  }
  CurationResult out;
  for (const auto& [name, count] : class_index) {
    if (count < min_samples) continue;
    auto n = std::min(count, per_class);
    out.retained.push_back(name);
    out.draws[name] = n;
    out.planned_samples += n;
  }
  return out;
}

// Indices (into the class's sample list) drawn for one retained class.
inline std::vector<std::size_t> draw_class_samples(const std::string& name, std::size_t count,
                                                   std::size_t draws, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "curate/" + name));
  auto picked = sample_indices(count, std::min(count, draws), rng);
  std::sort(picked.begin(), picked.end());
  return picked;
}

// ---------------------------------------------------------------------------
// Manifests

enum class SourceKind { kClassification, kDetection, kAttributes, kRelations, kCaptions };

inline std::optional<SourceKind> parse_source_kind(std::string_view s) {
  if (s == "classification") return SourceKind::kClassification;
  if (s == "detection") return SourceKind::kDetection;
  if (s == "attributes") return SourceKind::kAttributes;
  if (s == "relations") return SourceKind::kRelations;
  if (s == "captions") return SourceKind::kCaptions;
  return std::nullopt;
}

inline Stage source_stage_of(SourceKind kind) {
  switch (kind) {
    case SourceKind::kClassification: return Stage::kCR;
    case SourceKind::kDetection: return Stage::kOG;
    case SourceKind::kAttributes: return Stage::kOA;
    case SourceKind::kRelations: return Stage::kOR;
    case SourceKind::kCaptions: return Stage::kE;
  }
  return Stage::kCR;
}

struct CurationSpec {
  std::size_t min_samples = kDefaultMinSamples;
  std::size_t per_class = kDefaultPerClass;
  std::uint64_t seed = 0;
};

struct ManifestSource {
  std::string name;
  SourceKind kind = SourceKind::kClassification;
  std::filesystem::path path;
  std::optional<CurationSpec> curate;  // classification sources only
};

// suite.json: {"sources": [{"name", "kind", "path", "curate"?: {min_samples,
// per_class, seed}}]}; paths are relative to the file.
inline std::vector<ManifestSource> load_suite_config(const std::filesystem::path& path) {
  auto j = [&] {
    try {
      return nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kSchema, path.filename().string() + ": " + e.what());
    }
  }();
  std::vector<ManifestSource> out;
  try {
    for (const auto& js : j.at("sources")) {
      ManifestSource s;
      s.name = js.at("name").get<std::string>();
      auto kind = parse_source_kind(js.at("kind").get<std::string>());
      if (!kind) throw Error(ErrorCode::kSchema, "source '" + s.name + "': unknown kind");
      s.kind = *kind;
      s.path = js.at("path").get<std::string>();
      if (s.path.is_relative()) s.path = path.parent_path() / s.path;
      if (js.contains("curate")) {
        if (s.kind != SourceKind::kClassification) {
          throw Error(ErrorCode::kSchema, "source '" + s.name + "': curate needs classification");
        }
        const auto& jc = js["curate"];
        s.curate = CurationSpec{jc.value("min_samples", kDefaultMinSamples),
                                jc.value("per_class", kDefaultPerClass),
                                jc.value("seed", std::uint64_t{0})};
      }
      out.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchema, path.filename().string() + ": " + e.what());
  }
  return out;
}

struct QuarantineEntry {
  std::string source;
  std::size_t line = 0;
  std::string image_id;
  std::string reason;
  std::string label;
};

struct SuiteResult {
  std::map<Stage, std::vector<VisualRecord>> staged;
  std::vector<QuarantineEntry> quarantined;
  std::map<std::string, std::size_t> inputs_per_source;
  std::size_t inputs = 0;
  std::size_t curated_out = 0;  // classification lines dropped by curation
  ConversionReport events;

  std::size_t staged_count() const {
    std::size_t n = 0;
    for (const auto& [stage, records] : staged) n += records.size();
    return n;
  }
};

namespace detail {

struct Rejected {
  std::string reason;
  std::string label;
};

inline void accumulate(ConversionReport& into, const ConversionReport& r) {
  into.frames_total += r.frames_total;
  into.frames_converted += r.frames_converted;
  into.frames_skipped += r.frames_skipped;
  into.roles_total += r.roles_total;
  into.roles_bound += r.roles_bound;
  into.roles_non_core += r.roles_non_core;
  into.roles_unresolved += r.roles_unresolved;
  into.concepts_added += r.concepts_added;
}

inline std::string align_or_reject(const std::string& label, Pos pos,
                                   const OntologyRegistry& registry, AlignmentTable& table) {
  auto r = align_category(label, registry, table, pos);
  if (r.status == AlignStatus::kUnresolved) throw Rejected{"unresolved", label};
  if (r.status == AlignStatus::kCollisionNeedsOverride) {
    throw Rejected{"collision with '" + r.conflicting + "' on " + r.synset_id, label};
  }
  return r.synset_id;
}

// One manifest line -> record. Alignment failures quarantine the whole line.
inline VisualRecord manifest_record(const nlohmann::json& j, SourceKind kind,
                                    const OntologyRegistry& registry, AlignmentTable& table,
                                    ConversionReport& events) {
  VisualRecord r;
  r.image_id = j.at("image_id").get<std::string>();
  if (r.image_id.empty()) throw Error(ErrorCode::kSchema, "empty image_id");
  r.width = j.at("width").get<int>();
  r.height = j.at("height").get<int>();
  if (r.width <= 0 || r.height <= 0) throw Rejected{"non-positive image size", ""};
  if (j.contains("image_ref") && !j["image_ref"].is_null()) {
    r.image_ref = j["image_ref"].get<std::string>();
  }
  r.source_stage = source_stage_of(kind);

  auto add_object = [&](const nlohmann::json& jo) {
    ConceptInstance c;
    c.var = "object" + std::to_string(r.concepts.size() + 1);
    c.synset = align_or_reject(jo.at("label").get<std::string>(), Pos::kNoun, registry, table);
    if (jo.contains("box") && !jo["box"].is_null()) {
      auto b = jo["box"].get<std::vector<double>>();
      if (b.size() != 4) throw Error(ErrorCode::kSchema, "box must have 4 coordinates");
      try {
        c.box = quantize_box({b[0], b[1], b[2], b[3]}, r.width, r.height);
      } catch (const Error& e) {
        throw Rejected{"bad box: " + std::string(e.what()), jo.at("label").get<std::string>()};
      }
    }
    if (jo.contains("attributes") && !jo["attributes"].is_null()) {
      std::vector<std::string> attrs;
      for (const auto& a : jo["attributes"]) {
        auto id = align_or_reject(a.get<std::string>(), Pos::kAdj, registry, table);
        if (std::find(attrs.begin(), attrs.end(), id) == attrs.end()) attrs.push_back(id);
      }
      if (!attrs.empty()) c.attributes = std::move(attrs);
    }
    r.concepts.push_back(std::move(c));
  };

  if (kind == SourceKind::kClassification) {
    add_object({{"label", j.at("label")}});
  } else {
    for (const auto& jo : j.value("objects", nlohmann::json::array())) add_object(jo);
  }
  if (kind == SourceKind::kRelations) {
    for (const auto& jr : j.value("relations", nlohmann::json::array())) {
      auto sub = jr.at("sub").get<std::size_t>();
      auto obj = jr.at("obj").get<std::size_t>();
      if (sub >= r.concepts.size() || obj >= r.concepts.size()) {
        throw Rejected{"relation object index out of range", ""};
      }
      auto pred = align_or_reject(jr.at("predicate").get<std::string>(), Pos::kVerb, registry, table);
      r.relations.push_back({pred, r.concepts[sub].var, r.concepts[obj].var});
    }
  }
  if (kind == SourceKind::kCaptions) {
    auto parse = srl_from_json(j);
    r.caption = parse.caption;
    auto conv = convert_srl_to_events(parse, r, registry, table);
    accumulate(events, conv.report);
    if (conv.events.empty()) throw Rejected{"no events", ""};
    attach_events(r, std::move(conv));
  }
  if (r.concepts.empty()) throw Rejected{"no objects", ""};
  CodeBlock block;
  try {
    block = serialize_record(r, registry);
  } catch (const Error& e) {
    throw Rejected{std::string("invalid record: ") + e.what(), ""};
  }
  if (!stage_applicable(block, r.source_stage)) {
    throw Rejected{"nothing to mask for " + std::string(stage_name(r.source_stage)), ""};
  }
  return r;
}

inline std::vector<nlohmann::json> apply_curation(const ManifestSource& src,
                                                  std::vector<nlohmann::json> rows) {
  std::map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    by_class[text::normalize_label(rows[i].value("label", std::string{}))].push_back(i);
  }
  std::map<std::string, std::size_t> index;
  for (const auto& [name, lines] : by_class) index[name] = lines.size();
  auto plan = curate_concepts(index, src.curate->min_samples, src.curate->per_class);
  std::vector<std::size_t> keep;
  for (const auto& [name, n] : plan.draws) {
    const auto& lines = by_class[name];
    for (auto k : draw_class_samples(name, lines.size(), n, src.curate->seed)) {
      keep.push_back(lines[k]);
    }
  }
  std::sort(keep.begin(), keep.end());
  std::vector<nlohmann::json> out;
  for (auto i : keep) out.push_back(std::move(rows[i]));
  return out;
}

}  // namespace detail

// Turns raw manifests into staged records. Lines whose labels do not align,
// or that yield an invalid record, are quarantined with a reason.
inline SuiteResult build_suite(const std::vector<ManifestSource>& sources,
                               const OntologyRegistry& registry, AlignmentTable& table) {
  SuiteResult out;
  for (auto st : kRecordStages) out.staged[st];
  for (const auto& src : sources) {
    auto rows = read_jsonl(src.path);
    out.inputs_per_source[src.name] = rows.size();
    out.inputs += rows.size();
    std::vector<std::size_t> line_of(rows.size());
    std::iota(line_of.begin(), line_of.end(), std::size_t{1});
    if (src.curate) {
      std::vector<nlohmann::json> tagged;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        rows[i]["__line"] = i + 1;
        tagged.push_back(std::move(rows[i]));
      }
      auto before = tagged.size();
      rows = detail::apply_curation(src, std::move(tagged));
      out.curated_out += before - rows.size();
      line_of.clear();
      for (auto& row : rows) {
        line_of.push_back(row["__line"].get<std::size_t>());
        row.erase("__line");
      }
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& j = rows[i];
      auto image_id = j.is_object() ? j.value("image_id", std::string{}) : std::string{};
      try {
        out.staged[source_stage_of(src.kind)].push_back(
            detail::manifest_record(j, src.kind, registry, table, out.events));
      } catch (const detail::Rejected& rej) {
        out.quarantined.push_back({src.name, line_of[i], image_id, rej.reason, rej.label});
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::kSchema, src.name + ":" + std::to_string(line_of[i]) + ": " + e.what(),
                    line_of[i]);
      } catch (const Error& e) {
        throw Error(e.code(), src.name + ":" + std::to_string(line_of[i]) + ": " + e.what(),
                    line_of[i]);
      }
    }
  }
  return out;
}

inline nlohmann::json suite_report_json(const SuiteResult& result, const AlignmentTable& table) {
  nlohmann::json j;
  j["inputs"] = result.inputs;
  j["inputs_per_source"] = result.inputs_per_source;
  j["curated_out"] = result.curated_out;
  j["staged"] = result.staged_count();
  nlohmann::json per_stage = nlohmann::json::object();
  for (const auto& [stage, records] : result.staged) {
    per_stage[std::string(stage_name(stage))] = records.size();
  }
  j["staged_per_stage"] = per_stage;
  nlohmann::json q = nlohmann::json::array();
  for (const auto& e : result.quarantined) {
    q.push_back({{"source", e.source}, {"line", e.line}, {"image_id", e.image_id},
                 {"reason", e.reason}, {"label", e.label}});
  }
  j["quarantined"] = q;
  j["unresolved"] = table.unresolved;
  j["mapping"] = table.mapping;
  j["events"] = report_to_json(result.events);
  if (result.inputs == 0) j["note"] = "no inputs";
  return j;
}

// Writes <dir>/<STAGE>.jsonl for every record stage plus alignment-report.json.
inline void write_suite(const std::filesystem::path& dir, const SuiteResult& result,
                        const AlignmentTable& table) {
  for (const auto& [stage, records] : result.staged) {
    save_records(dir / (std::string(stage_name(stage)) + ".jsonl"), records);
  }
  write_file_atomic(dir / "alignment-report.json", suite_report_json(result, table).dump(2) + "\n");
}

}  // namespace vistruct
