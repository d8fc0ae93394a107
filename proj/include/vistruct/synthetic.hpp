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

// Seeded generators for records, staged suites and class-size indexes.

#pragma once

#include <cstdint>
#include <cstdio>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "vistruct/codec.hpp"
#include "vistruct/ontology.hpp"
#include "vistruct/rng.hpp"

namespace vistruct {

struct SyntheticPools {
  std::vector<std::string> nouns;
  std::vector<std::string> adjectives;
  std::vector<std::string> predicates;  // verb synsets
  std::vector<const FrameEntry*> frames;

  explicit SyntheticPools(const OntologyRegistry& registry) {
    for (const auto& s : registry.synsets()) {
      switch (s.pos) {
        case Pos::kNoun: nouns.push_back(s.id); break;
        case Pos::kAdj: adjectives.push_back(s.id); break;
        case Pos::kVerb: predicates.push_back(s.id); break;
      }
    }
    for (const auto& f : registry.frames()) frames.push_back(&f);
  }
};

namespace detail {

template <typename T>
const T& pick(const std::vector<T>& items, Rng& rng) {
  return items[uniform_below(rng, items.size())];
}

inline BoundingBox random_box(Rng& rng) {
  auto a = static_cast<int>(uniform_below(rng, kDefaultBins));
  auto b = static_cast<int>(uniform_below(rng, kDefaultBins));
  auto c = static_cast<int>(uniform_below(rng, kDefaultBins));
  auto d = static_cast<int>(uniform_below(rng, kDefaultBins));
  return {std::min(a, b), std::min(c, d), std::max(a, b), std::max(c, d)};
}

inline std::vector<std::string> random_attributes(const SyntheticPools& pools, Rng& rng) {
  auto n = 1 + uniform_below(rng, 3);
  std::vector<std::string> out;
  for (auto i : sample_indices(pools.adjectives.size(), std::min<std::size_t>(n, pools.adjectives.size()), rng)) {
    out.push_back(pools.adjectives[i]);
  }
  return out;
}

inline void add_concepts(VisualRecord& r, const SyntheticPools& pools, Rng& rng, std::size_t n,
                         double p_box, double p_attrs) {
  for (std::size_t i = 0; i < n; ++i) {
    ConceptInstance c;
    c.var = "object" + std::to_string(i + 1);
    c.synset = pick(pools.nouns, rng);
    if (uniform_unit(rng) < p_box) c.box = random_box(rng);
    if (uniform_unit(rng) < p_attrs) c.attributes = random_attributes(pools, rng);
    r.concepts.push_back(std::move(c));
  }
}

// Up to `n` relations over distinct ordered pairs.
inline void add_relations(VisualRecord& r, const SyntheticPools& pools, Rng& rng, std::size_t n) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < r.concepts.size(); ++i) {
    for (std::size_t j = 0; j < r.concepts.size(); ++j) {
      if (i != j) pairs.emplace_back(i, j);
    }
  }
  for (auto k : sample_indices(pairs.size(), std::min(n, pairs.size()), rng)) {
    r.relations.push_back(
        {pick(pools.predicates, rng), r.concepts[pairs[k].first].var, r.concepts[pairs[k].second].var});
  }
}

inline EventInstance random_event(const VisualRecord& r, const SyntheticPools& pools, Rng& rng,
                                  std::size_t min_args) {
  const auto* f = pick(pools.frames, rng);
  EventInstance ev;
  ev.frame = f->name;
  ev.trigger = pick(f->trigger_lemmas, rng);
  auto n = min_args + uniform_below(rng, f->core_roles.size() - min_args + 1);
  for (auto i : sample_indices(f->core_roles.size(), n, rng)) {
    ev.args[f->core_roles[i]] = r.concepts[uniform_below(rng, r.concepts.size())].var;
  }
  return ev;
}

}  // namespace detail

// A valid record exercising every grammar feature at random.
inline VisualRecord random_record(const SyntheticPools& pools, Rng& rng, std::string image_id) {
  VisualRecord r;
  r.image_id = std::move(image_id);
  r.width = 1 + static_cast<int>(uniform_below(rng, 2000));
  r.height = 1 + static_cast<int>(uniform_below(rng, 2000));
  detail::add_concepts(r, pools, rng, 1 + uniform_below(rng, 5), 0.7, 0.5);
  if (r.concepts.size() > 1) detail::add_relations(r, pools, rng, uniform_below(rng, 4));
  auto events = uniform_below(rng, 3);
  for (std::size_t i = 0; i < events; ++i) r.events.push_back(detail::random_event(r, pools, rng, 0));
  r.source_stage = kRecordStages[uniform_below(rng, std::size(kRecordStages))];
  return r;
}

// A record shaped like the given stage's data: CR one bare concept, OG boxes,
// OA boxes and attributes, OR relations over distinct pairs, E one event.
inline VisualRecord stage_record(Stage stage, const SyntheticPools& pools, Rng& rng,
                                 std::string image_id) {
  VisualRecord r;
  r.image_id = std::move(image_id);
  r.width = 640;
  r.height = 480;
  r.source_stage = stage;
  switch (stage) {
    case Stage::kCR: detail::add_concepts(r, pools, rng, 1, 0.0, 0.0); break;
    case Stage::kOG: detail::add_concepts(r, pools, rng, 1 + uniform_below(rng, 3), 1.0, 0.0); break;
    case Stage::kOA: detail::add_concepts(r, pools, rng, 1 + uniform_below(rng, 3), 1.0, 1.0); break;
    case Stage::kOR:
      detail::add_concepts(r, pools, rng, 2 + uniform_below(rng, 3), 1.0, 0.0);
      detail::add_relations(r, pools, rng, 1 + uniform_below(rng, 3));
      break;
    case Stage::kE:
      detail::add_concepts(r, pools, rng, 1 + uniform_below(rng, 3), 0.0, 0.0);
      r.events.push_back(detail::random_event(r, pools, rng, 1));
      break;
    case Stage::kWarmup: throw Error(ErrorCode::kInvalidArgument, "WARMUP has no records");
  }
  return r;
}

// Staged suite with `sizes[stage]` records per stage; ids are `<stage>-<nnnn>`.
inline std::map<Stage, std::vector<VisualRecord>> synthetic_suite(
    const OntologyRegistry& registry, const std::map<Stage, std::size_t>& sizes, std::uint64_t seed) {
  SyntheticPools pools(registry);
  std::map<Stage, std::vector<VisualRecord>> out;
  for (auto st : kRecordStages) {
    auto& bucket = out[st];
    auto it = sizes.find(st);
    if (it == sizes.end()) continue;
    Rng rng(derive_seed(seed, "synthetic/" + std::string(stage_name(st))));
    for (std::size_t i = 0; i < it->second; ++i) {
      char id[32];
      std::snprintf(id, sizeof id, "%s-%04zu", text::to_lower(stage_name(st)).c_str(), i);
      bucket.push_back(stage_record(st, pools, rng, id));
    }
  }
  return out;
}

// Class-size index over `classes` names where exactly `retained` classes
// reach `threshold`. Sizes straddle the threshold, including threshold - 1
// and threshold itself.
inline std::map<std::string, std::size_t> synthetic_class_index(std::size_t classes,
                                                                std::size_t retained,
                                                                std::size_t threshold,
                                                                std::uint64_t seed) {
  if (retained > classes || threshold == 0) {
    throw Error(ErrorCode::kInvalidArgument, "retained classes exceed the index size");
  }
  Rng rng(derive_seed(seed, "class-index"));
  std::vector<std::size_t> order(classes);
  std::iota(order.begin(), order.end(), std::size_t{0});
  shuffle_in_place(std::span<std::size_t>(order), rng);
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < classes; ++i) {
    char name[16];
    std::snprintf(name, sizeof name, "n%08zu", order[i]);
    std::size_t count;
    if (i < retained) {
      count = (i % 10 == 0) ? threshold : threshold + uniform_below(rng, 3 * threshold);
    } else {
      count = (i % 10 == 0) ? threshold - 1 : uniform_below(rng, threshold);
    }
    index[name] = count;
  }
  return index;
}

}  // namespace vistruct
