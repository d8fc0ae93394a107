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

// Relation recall (R@K, mR@K), situation-recognition scores and zero-shot
// scoring of generated code.

#pragma once

#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "vistruct/codec.hpp"
#include "vistruct/masking.hpp"
#include "vistruct/ontology.hpp"
#include "vistruct/trainer.hpp"

namespace vistruct {

// ---------------------------------------------------------------------------
// Relations

// `sub`/`obj` name the given boxes; labels are the object categories.
struct Triplet {
  std::string sub;
  std::string predicate;
  std::string obj;
  std::string sub_label;
  std::string obj_label;

  bool operator==(const Triplet&) const = default;
  auto operator<=>(const Triplet&) const = default;
};

struct ScoredTriplet {
  Triplet triplet;
  double score = 0.0;
};

struct RelationPrediction {
  std::string image_id;
  std::vector<ScoredTriplet> ranked;  // best first
};

struct RelationGold {
  std::string image_id;
  std::vector<Triplet> triplets;
};

// predicate_only: boxes and categories are given, the predicate must match.
// sgcls: boxes given; predicate and both categories must match.
enum class MatchRule { kPredicateOnly, kSgcls };

inline std::optional<MatchRule> parse_match_rule(std::string_view s) {
  if (s == "predicate_only" || s == "relation") return MatchRule::kPredicateOnly;
  if (s == "sgcls") return MatchRule::kSgcls;
  return std::nullopt;
}

inline bool triplet_matches(const Triplet& pred, const Triplet& gold, MatchRule rule) {
  if (pred.sub != gold.sub || pred.obj != gold.obj || pred.predicate != gold.predicate) return false;
  if (rule == MatchRule::kSgcls) {
    return pred.sub_label == gold.sub_label && pred.obj_label == gold.obj_label;
  }
  return true;
}

struct RecallResult {
  std::size_t k = 0;
  std::size_t matched = 0;
  std::size_t gold = 0;
  double micro = 0.0;
  double macro = 0.0;
  std::map<std::string, std::pair<std::size_t, std::size_t>> per_predicate;  // matched, gold

  double predicate_recall(const std::string& p) const {
    auto [m, g] = per_predicate.at(p);
    return static_cast<double>(m) / static_cast<double>(g);
  }
};

namespace detail {

inline void check_ranking(const RelationPrediction& p) {
  for (std::size_t i = 1; i < p.ranked.size(); ++i) {
    if (p.ranked[i].score > p.ranked[i - 1].score) {
      throw Error(ErrorCode::kInvalidArgument, "predictions for '" + p.image_id +
                                                   "' are not sorted by non-increasing score");
    }
  }
}

inline void check_golds(const RelationGold& g, MatchRule rule) {
  for (std::size_t i = 0; i < g.triplets.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (triplet_matches(g.triplets[i], g.triplets[j], rule)) {
        const auto& t = g.triplets[i];
        throw Error(ErrorCode::kDuplicateGold, "image '" + g.image_id + "' lists (" + t.sub + ", " +
                                                   t.predicate + ", " + t.obj + ") twice");
      }
    }
  }
}

}  // namespace detail

// Per image, a gold triplet counts when one of the top-K predictions matches
// it; a prediction can claim at most one gold. Images without predictions
// score zero.
inline RecallResult relation_recall(const std::vector<RelationPrediction>& preds,
                                    const std::vector<RelationGold>& golds, std::size_t k,
                                    MatchRule rule = MatchRule::kPredicateOnly) {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "K must be at least 1");
  std::map<std::string, const RelationPrediction*> by_image;
  for (const auto& p : preds) {
    detail::check_ranking(p);
    if (!by_image.emplace(p.image_id, &p).second) {
      throw Error(ErrorCode::kInvalidArgument, "two prediction lists for '" + p.image_id + "'");
    }
  }
  RecallResult r;
  r.k = k;
  std::set<std::string> seen;
  for (const auto& g : golds) {
    if (!seen.insert(g.image_id).second) {
      throw Error(ErrorCode::kDuplicateGold, "image '" + g.image_id + "' has two gold entries");
    }
    detail::check_golds(g, rule);
    std::vector<bool> claimed(g.triplets.size(), false);
    if (auto it = by_image.find(g.image_id); it != by_image.end()) {
      const auto& ranked = it->second->ranked;
      auto n = std::min(k, ranked.size());
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < g.triplets.size(); ++j) {
          if (!claimed[j] && triplet_matches(ranked[i].triplet, g.triplets[j], rule)) {
            claimed[j] = true;
            break;
          }
        }
      }
    }
    for (std::size_t j = 0; j < g.triplets.size(); ++j) {
      auto& [m, total] = r.per_predicate[g.triplets[j].predicate];
      ++total;
      ++r.gold;
      if (claimed[j]) {
        ++m;
        ++r.matched;
      }
    }
  }
  r.micro = r.gold ? static_cast<double>(r.matched) / static_cast<double>(r.gold) : 0.0;
  double sum = 0.0;
  for (const auto& [p, mg] : r.per_predicate) {
    sum += static_cast<double>(mg.first) / static_cast<double>(mg.second);
  }
  r.macro = r.per_predicate.empty() ? 0.0 : sum / static_cast<double>(r.per_predicate.size());
  return r;
}

inline double recall_at_k(const std::vector<RelationPrediction>& preds,
                          const std::vector<RelationGold>& golds, std::size_t k,
                          MatchRule rule = MatchRule::kPredicateOnly) {
  return relation_recall(preds, golds, k, rule).micro;
}

inline double mean_recall_at_k(const std::vector<RelationPrediction>& preds,
                               const std::vector<RelationGold>& golds, std::size_t k,
                               MatchRule rule = MatchRule::kPredicateOnly) {
  return relation_recall(preds, golds, k, rule).macro;
}

// Gold triplets of a record; labels are concept symbols.
inline RelationGold relation_gold(const VisualRecord& r, const OntologyRegistry& registry) {
  RelationGold g{r.image_id, {}};
  for (const auto& rel : r.relations) {
    g.triplets.push_back({rel.sub, registry.symbol_of(rel.predicate), rel.obj,
                          registry.symbol_of(r.find_concept(rel.sub)->synset),
                          registry.symbol_of(r.find_concept(rel.obj)->synset)});
  }
  return g;
}

// Relation predictions with gold boxes and categories given: every relation
// name of the record is masked, and each site contributes its top
// `per_slot` predicates. The ranking is merged by score.
inline RelationPrediction predict_relations(const SequenceModel& model, const VisualRecord& record,
                                            const OntologyRegistry& registry,
                                            const ImageFeatures& features, std::size_t per_slot) {
  RelationPrediction out{record.image_id, {}};
  if (record.relations.empty()) return out;
  auto pair = mask_for_stage(serialize_record(record, registry), Stage::kOR);
  auto preds = model.predict_topk(pair.input_tokens, features, per_slot);
  std::size_t order = 0;
  std::vector<std::pair<std::size_t, ScoredTriplet>> all;
  for (std::size_t i = 0; i < preds.size() && i < record.relations.size(); ++i) {
    const auto& rel = record.relations[i];
    auto sub_label = registry.symbol_of(record.find_concept(rel.sub)->synset);
    auto obj_label = registry.symbol_of(record.find_concept(rel.obj)->synset);
    for (const auto& c : preds[i].candidates) {
      if (c.fill.size() != 1) continue;
      all.push_back({order++, {{rel.sub, c.fill[0], rel.obj, sub_label, obj_label}, c.score}});
    }
  }
  std::stable_sort(all.begin(), all.end(),
                   [](const auto& a, const auto& b) { return a.second.score > b.second.score; });
  for (auto& [o, t] : all) out.ranked.push_back(std::move(t));
  return out;
}

// Scene-graph classification: boxes are given, categories are predicted from
// a concept-name mask and substituted into the relation ranking.
inline RelationPrediction predict_sgcls(const SequenceModel& model, const VisualRecord& record,
                                        const OntologyRegistry& registry,
                                        const ImageFeatures& features, std::size_t per_slot) {
  auto out = predict_relations(model, record, registry, features, per_slot);
  auto pair = mask_for_stage(serialize_record(record, registry), Stage::kCR);
  auto preds = model.predict_topk(pair.input_tokens, features, 1);
  std::map<std::string, std::string> label;
  for (std::size_t i = 0; i < preds.size() && i < record.concepts.size(); ++i) {
    const auto& c = preds[i].candidates;
    label[record.concepts[i].var] = (!c.empty() && c[0].fill.size() == 1) ? c[0].fill[0] : "";
  }
  for (auto& t : out.ranked) {
    t.triplet.sub_label = label[t.triplet.sub];
    t.triplet.obj_label = label[t.triplet.obj];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Situation recognition

struct SituationGold {
  std::string image_id;
  std::string verb;
  std::map<std::string, std::set<std::string>> roles;  // role -> accepted fillers
};

struct SituationPrediction {
  std::string image_id;
  std::vector<std::string> verbs;  // ranked, distinct
  std::map<std::string, std::map<std::string, std::string>> fillers;  // verb -> role -> noun
};

struct SituationScores {
  double verb = 0.0;
  double value = 0.0;
  double value_all = 0.0;
};

struct SituationReport {
  SituationScores top1;
  SituationScores top5;
  SituationScores gt_verb;  // verb column is 1 by construction
  std::size_t images = 0;
  std::size_t verbs = 0;
};

// Scores are averaged per gold verb, then across verbs. When `registry` is
// given, every gold role must be a core role of the verb's frame.
inline SituationReport situation_metrics(const std::vector<SituationPrediction>& preds,
                                         const std::vector<SituationGold>& golds,
                                         const OntologyRegistry* registry = nullptr) {
  std::map<std::string, const SituationPrediction*> by_image;
  for (const auto& p : preds) {
    std::set<std::string> distinct(p.verbs.begin(), p.verbs.end());
    if (distinct.size() != p.verbs.size()) {
      throw Error(ErrorCode::kInvalidArgument, "prediction for '" + p.image_id + "' repeats a verb");
    }
    by_image[p.image_id] = &p;
  }
  struct Acc {
    double v1 = 0, val1 = 0, all1 = 0, v5 = 0, val5 = 0, all5 = 0, valg = 0, allg = 0;
    std::size_t n = 0;
  };
  std::map<std::string, Acc> per_verb;
  for (const auto& g : golds) {
    if (g.roles.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "gold '" + g.image_id + "' has no roles");
    }
    if (registry) {
      std::vector<std::string> roles;
      for (const auto& [role, fillers] : g.roles) roles.push_back(role);
      const auto* frame = registry->resolve_trigger(g.verb, {});
      if (!frame) throw Error(ErrorCode::kUnknownSymbol, "gold verb '" + g.verb + "' has no frame");
      for (const auto& role : roles) {
        if (!frame->has_role(role)) {
          throw Error(ErrorCode::kInvalidArgument, "gold role '" + role + "' of '" + g.image_id +
                                                       "' is not in frame " + frame->name);
        }
      }
    }
    const SituationPrediction* p = nullptr;
    if (auto it = by_image.find(g.image_id); it != by_image.end()) p = it->second;

    std::size_t rank = std::numeric_limits<std::size_t>::max();
    double value = 0.0;
    bool all = false;
    if (p) {
      for (std::size_t i = 0; i < p->verbs.size(); ++i) {
        if (p->verbs[i] == g.verb) {
          rank = i;
          break;
        }
      }
      std::size_t right = 0;
      if (auto f = p->fillers.find(g.verb); f != p->fillers.end()) {
        for (const auto& [role, accepted] : g.roles) {
          auto r = f->second.find(role);
          if (r != f->second.end() && accepted.count(r->second)) ++right;
        }
      }
      value = static_cast<double>(right) / static_cast<double>(g.roles.size());
      all = right == g.roles.size();
    }
    auto& a = per_verb[g.verb];
    ++a.n;
    if (rank == 0) {
      a.v1 += 1;
      a.val1 += value;
      a.all1 += all;
    }
    if (rank < 5) {
      a.v5 += 1;
      a.val5 += value;
      a.all5 += all;
    }
    a.valg += value;
    a.allg += all;
  }

  SituationReport rep;
  rep.images = golds.size();
  rep.verbs = per_verb.size();
  if (per_verb.empty()) return rep;
  for (const auto& [verb, a] : per_verb) {
    double n = static_cast<double>(a.n);
    rep.top1.verb += a.v1 / n;
    rep.top1.value += a.val1 / n;
    rep.top1.value_all += a.all1 / n;
    rep.top5.verb += a.v5 / n;
    rep.top5.value += a.val5 / n;
    rep.top5.value_all += a.all5 / n;
    rep.gt_verb.value += a.valg / n;
    rep.gt_verb.value_all += a.allg / n;
  }
  double v = static_cast<double>(per_verb.size());
  for (auto* s : {&rep.top1, &rep.top5, &rep.gt_verb}) {
    s->verb /= v;
    s->value /= v;
    s->value_all /= v;
  }
  rep.gt_verb.verb = 1.0;
  return rep;
}

// Golds from records: each event is one situation; a role's only accepted
// filler is the bound concept's symbol.
inline std::vector<SituationGold> situation_golds(const std::vector<VisualRecord>& records,
                                                  const OntologyRegistry& registry) {
  std::vector<SituationGold> out;
  for (const auto& r : records) {
    for (std::size_t i = 0; i < r.events.size(); ++i) {
      const auto& ev = r.events[i];
      SituationGold g;
      g.image_id = r.events.size() == 1 ? r.image_id : r.image_id + "#" + std::to_string(i);
      g.verb = ev.trigger;
      for (const auto& [role, var] : ev.args) {
        g.roles[role] = {registry.symbol_of(r.find_concept(var)->synset)};
      }
      if (!g.roles.empty()) out.push_back(std::move(g));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Zero-shot generation

struct Generation {
  std::string image_id;
  std::string text;
};

struct ZeroShotReport {
  std::size_t total = 0;
  std::size_t parsed = 0;
  double parse_rate = 0.0;
  std::map<std::size_t, double> recall;         // all golds; failures score 0
  std::map<std::size_t, double> parsed_recall;  // golds of parsed generations only
  std::vector<std::string> failures;            // image ids
};

// Relations of a parsed generation, ranked in the order written.
inline RelationPrediction relations_from_record(const VisualRecord& r, const OntologyRegistry& registry) {
  RelationPrediction p{r.image_id, {}};
  double score = 0.0;
  for (const auto& rel : r.relations) {
    const auto* s = r.find_concept(rel.sub);
    const auto* o = r.find_concept(rel.obj);
    p.ranked.push_back({{rel.sub, registry.symbol_of(rel.predicate), rel.obj,
                         s ? registry.symbol_of(s->synset) : "", o ? registry.symbol_of(o->synset) : ""},
                        score});
    score -= 1.0;
  }
  return p;
}

inline ZeroShotReport score_zero_shot(const std::vector<Generation>& generations,
                                      const std::vector<RelationGold>& golds,
                                      const OntologyRegistry& registry, const std::vector<std::size_t>& ks,
                                      MatchRule rule = MatchRule::kPredicateOnly) {
  ZeroShotReport rep;
  rep.total = generations.size();
  std::vector<RelationPrediction> preds;
  std::set<std::string> parsed_ids;
  for (const auto& g : generations) {
    try {
      VisualRecord base;
      base.image_id = g.image_id;
      auto r = parse_code(g.text, registry, base);
      preds.push_back(relations_from_record(r, registry));
      parsed_ids.insert(g.image_id);
      ++rep.parsed;
    } catch (const Error&) {
      rep.failures.push_back(g.image_id);
    }
  }
  rep.parse_rate = rep.total ? static_cast<double>(rep.parsed) / static_cast<double>(rep.total) : 0.0;
  std::vector<RelationGold> parsed_golds;
  for (const auto& g : golds) {
    if (parsed_ids.count(g.image_id)) parsed_golds.push_back(g);
  }
  for (auto k : ks) {
    rep.recall[k] = recall_at_k(preds, golds, k, rule);
    rep.parsed_recall[k] = recall_at_k(preds, parsed_golds, k, rule);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Reports

inline double percent(double x) { return std::round(x * 10000.0) / 100.0; }

// R@K and mR@K per K as percentages, plus their mean.
inline nlohmann::json relation_report_json(const std::string& task,
                                           const std::vector<RelationPrediction>& preds,
                                           const std::vector<RelationGold>& golds,
                                           const std::vector<std::size_t>& ks, MatchRule rule) {
  nlohmann::json j;
  j["task"] = task;
  j["k"] = ks;
  nlohmann::json scores = nlohmann::json::object();
  nlohmann::json per_class = nlohmann::json::object();
  double sum = 0.0;
  std::size_t gold = 0;
  for (auto k : ks) {
    auto r = relation_recall(preds, golds, k, rule);
    scores["R@" + std::to_string(k)] = percent(r.micro);
    scores["mR@" + std::to_string(k)] = percent(r.macro);
    sum += r.micro + r.macro;
    nlohmann::json pc = nlohmann::json::object();
    for (const auto& [p, mg] : r.per_predicate) pc[p] = percent(r.predicate_recall(p));
    per_class["R@" + std::to_string(k)] = pc;
    gold = r.gold;
  }
  scores["Mean"] = ks.empty() ? 0.0 : percent(sum / (2.0 * static_cast<double>(ks.size())));
  j["scores"] = scores;
  j["per_predicate"] = per_class;
  j["counts"] = {{"images", golds.size()}, {"gold_triplets", gold}};
  return j;
}

inline nlohmann::json situation_report_json(const SituationReport& r) {
  auto cols = [](const SituationScores& s, bool verb) {
    nlohmann::json j;
    if (verb) j["verb"] = percent(s.verb);
    j["value"] = percent(s.value);
    j["value-all"] = percent(s.value_all);
    return j;
  };
  nlohmann::json j;
  j["task"] = "situation";
  j["scores"] = {{"top-1", cols(r.top1, true)}, {"top-5", cols(r.top5, true)},
                 {"gt-verb", cols(r.gt_verb, false)}};
  j["counts"] = {{"images", r.images}, {"verbs", r.verbs}};
  return j;
}

inline nlohmann::json zero_shot_report_json(const ZeroShotReport& r) {
  nlohmann::json j;
  j["task"] = "zero_shot";
  j["parse_rate"] = percent(r.parse_rate);
  nlohmann::json scores = nlohmann::json::object();
  for (const auto& [k, v] : r.recall) scores["R@" + std::to_string(k)] = percent(v);
  for (const auto& [k, v] : r.parsed_recall) scores["parsed R@" + std::to_string(k)] = percent(v);
  j["scores"] = scores;
  j["counts"] = {{"generations", r.total}, {"parsed", r.parsed}};
  j["failures"] = r.failures;
  return j;
}

// ---------------------------------------------------------------------------
// predictions.jsonl

// relation: {image_id, triplets: [{sub, predicate, obj, score, sub_label?, obj_label?}]}
inline nlohmann::json relation_prediction_to_json(const RelationPrediction& p) {
  nlohmann::json ts = nlohmann::json::array();
  for (const auto& t : p.ranked) {
    ts.push_back({{"sub", t.triplet.sub}, {"predicate", t.triplet.predicate}, {"obj", t.triplet.obj},
                  {"sub_label", t.triplet.sub_label}, {"obj_label", t.triplet.obj_label},
                  {"score", t.score}});
  }
  return {{"image_id", p.image_id}, {"triplets", ts}};
}

inline RelationPrediction relation_prediction_from_json(const nlohmann::json& j) {
  try {
    RelationPrediction p{j.at("image_id").get<std::string>(), {}};
    for (const auto& t : j.at("triplets")) {
      p.ranked.push_back({{t.at("sub").get<std::string>(), t.at("predicate").get<std::string>(),
                           t.at("obj").get<std::string>(), t.value("sub_label", std::string{}),
                           t.value("obj_label", std::string{})},
                          t.at("score").get<double>()});
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchema, std::string("malformed relation prediction: ") + e.what());
  }
}

// situation: {image_id, verbs: [...], fillers: {verb: {role: noun}}}
inline nlohmann::json situation_prediction_to_json(const SituationPrediction& p) {
  return {{"image_id", p.image_id}, {"verbs", p.verbs}, {"fillers", p.fillers}};
}

inline SituationPrediction situation_prediction_from_json(const nlohmann::json& j) {
  try {
    SituationPrediction p;
    p.image_id = j.at("image_id").get<std::string>();
    p.verbs = j.at("verbs").get<std::vector<std::string>>();
    p.fillers = j.value("fillers", decltype(p.fillers){});
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchema, std::string("malformed situation prediction: ") + e.what());
  }
}

// situation gold: {image_id, verb, roles: {role: [noun, ...]}}
inline SituationGold situation_gold_from_json(const nlohmann::json& j) {
  try {
    SituationGold g;
    g.image_id = j.at("image_id").get<std::string>();
    g.verb = j.at("verb").get<std::string>();
    for (const auto& [role, fillers] : j.at("roles").items()) {
      auto v = fillers.get<std::vector<std::string>>();
      g.roles[role] = std::set<std::string>(v.begin(), v.end());
    }
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchema, std::string("malformed situation gold: ") + e.what());
  }
}

// Situation predictions from a model: the verb comes from the event prompt's
// ranking, each role filler from a role prompt under that verb.
inline SituationPrediction predict_situation(const SequenceModel& model, const SituationGold& gold,
                                             const OntologyRegistry& registry,
                                             const ImageFeatures& features, std::size_t verbs = 5) {
  SituationPrediction p{gold.image_id, {}, {}};
  DownstreamInput ev;
  ev.answer = gold.verb;
  auto pair = build_downstream_prompt(DownstreamTask::kEventPrediction, ev);
  auto preds = model.predict_topk(pair.input_tokens, features, verbs);
  if (!preds.empty()) {
    for (const auto& c : preds[0].candidates) {
      if (c.fill.size() == 1) p.verbs.push_back(c.fill[0]);
    }
  }
  std::vector<std::string> hyps = p.verbs;
  if (std::find(hyps.begin(), hyps.end(), gold.verb) == hyps.end()) hyps.push_back(gold.verb);
  for (const auto& verb : hyps) {
    const auto* frame = registry.resolve_trigger(verb, {});
    if (!frame) continue;
    for (const auto& role : frame->core_roles) {
      DownstreamInput in;
      in.verb = verb;
      in.role = role;
      in.answer = "object1";
      auto rp = build_downstream_prompt(DownstreamTask::kRolePrediction, in);
      auto rpreds = model.predict_topk(rp.input_tokens, features, 1);
      if (!rpreds.empty() && !rpreds[0].candidates.empty() && rpreds[0].candidates[0].fill.size() == 1) {
        p.fillers[verb][role] = rpreds[0].candidates[0].fill[0];
      }
    }
  }
  return p;
}

}  // namespace vistruct
