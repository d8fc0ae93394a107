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


// Independent reference computations shared by the unit and acceptance
// tests. Nothing here calls the code under test.

#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "vistruct/eval.hpp"

namespace vistruct::oracle {

// Largest number of golds the first `k` predictions can claim, one gold per
// prediction, by trying every assignment.
inline std::size_t best_assignment(const std::vector<Triplet>& preds, const std::vector<Triplet>& golds,
                                   MatchRule rule, std::size_t i, std::vector<bool>& used) {
  if (i == preds.size()) return 0;
  std::size_t best = best_assignment(preds, golds, rule, i + 1, used);  // leave unmatched
  for (std::size_t g = 0; g < golds.size(); ++g) {
    bool same = preds[i].sub == golds[g].sub && preds[i].obj == golds[g].obj &&
                preds[i].predicate == golds[g].predicate &&
                (rule == MatchRule::kPredicateOnly ||
                 (preds[i].sub_label == golds[g].sub_label && preds[i].obj_label == golds[g].obj_label));
    if (used[g] || !same) continue;
    used[g] = true;
    best = std::max(best, 1 + best_assignment(preds, golds, rule, i + 1, used));
    used[g] = false;
  }
  return best;
}

struct BruteRecall {
  double micro = 0.0;
  double macro = 0.0;
};

inline BruteRecall brute_recall(const std::vector<RelationPrediction>& preds,
                                const std::vector<RelationGold>& golds, std::size_t k, MatchRule rule) {
  std::size_t matched = 0, total = 0;
  std::map<std::string, std::pair<std::size_t, std::size_t>> per_pred;
  for (const auto& g : golds) {
    std::vector<Triplet> top;
    for (const auto& p : preds) {
      if (p.image_id != g.image_id) continue;
      for (std::size_t i = 0; i < p.ranked.size() && i < k; ++i) top.push_back(p.ranked[i].triplet);
    }
    // Predicates never match across types, so each type is its own problem.
    std::map<std::string, std::pair<std::vector<Triplet>, std::vector<Triplet>>> by_type;
    for (const auto& t : top) by_type[t.predicate].first.push_back(t);
    for (const auto& t : g.triplets) by_type[t.predicate].second.push_back(t);
    for (const auto& [pred, pg] : by_type) {
      std::vector<bool> used(pg.second.size(), false);
      auto m = best_assignment(pg.first, pg.second, rule, 0, used);
      matched += m;
      total += pg.second.size();
      if (!pg.second.empty()) {
        per_pred[pred].first += m;
        per_pred[pred].second += pg.second.size();
      }
    }
  }
  BruteRecall r;
  if (total) r.micro = static_cast<double>(matched) / static_cast<double>(total);
  if (!per_pred.empty()) {
    for (const auto& [p, mg] : per_pred) r.macro += static_cast<double>(mg.first) / static_cast<double>(mg.second);
    r.macro /= static_cast<double>(per_pred.size());
  }
  return r;
}

struct Case {
  std::vector<RelationPrediction> preds;
  std::vector<RelationGold> golds;
  std::size_t k = 1;
  MatchRule rule = MatchRule::kPredicateOnly;
};

// Up to 3 images, each with <= 4 objects, <= 4 predicate types and <= 6
// ranked predictions (duplicates allowed, scores non-increasing). Golds are
// distinct under the case's rule.
inline Case random_case(std::mt19937_64& rng) {
  auto below = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
  const std::vector<std::string> predicates{"on", "near", "walk_on", "has"};
  const std::vector<std::string> labels{"horse", "grass", "man"};
  Case c;
  c.k = 1 + below(7);
  c.rule = below(2) ? MatchRule::kSgcls : MatchRule::kPredicateOnly;
  auto n_images = 1 + below(3);
  for (std::size_t im = 0; im < n_images; ++im) {
    std::string id = "img" + std::to_string(im);
    auto n_obj = 2 + below(3);
    auto n_pred = 1 + below(4);
    auto random_triplet = [&] {
      Triplet t;
      t.sub = "object" + std::to_string(1 + below(n_obj));
      t.obj = "object" + std::to_string(1 + below(n_obj));
      t.predicate = predicates[below(n_pred)];
      t.sub_label = labels[below(labels.size())];
      t.obj_label = labels[below(labels.size())];
      return t;
    };
    RelationGold g{id, {}};
    auto n_gold = below(6);
    for (std::size_t i = 0; i < n_gold; ++i) {
      auto t = random_triplet();
      bool dup = false;
      for (const auto& o : g.triplets) {
        dup |= triplet_matches(t, o, c.rule) || triplet_matches(o, t, c.rule);
      }
      if (!dup) g.triplets.push_back(t);
    }
    if (below(5)) c.golds.push_back(g);
    if (below(6)) {
      RelationPrediction p{id, {}};
      auto n_p = below(7);
      double score = 0.0;
      for (std::size_t i = 0; i < n_p; ++i) {
        // Mostly copies of golds, sometimes near misses or noise.
        Triplet t = (!g.triplets.empty() && below(3)) ? g.triplets[below(g.triplets.size())] : random_triplet();
        if (below(4) == 0) t.sub_label = labels[below(labels.size())];
        p.ranked.push_back({t, score});
        if (below(3)) score -= 0.5;
      }
      c.preds.push_back(p);
    }
  }
  return c;
}

}  // namespace vistruct::oracle
