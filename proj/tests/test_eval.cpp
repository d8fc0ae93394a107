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


#include <gtest/gtest.h>

#include "oracles.hpp"
#include "test_support.hpp"
#include "vistruct/eval.hpp"
#include "vistruct/synthetic.hpp"

namespace vistruct {
namespace {

using testing::full_registry;
using testing::mini_registry;

Triplet t(const std::string& sub, const std::string& pred, const std::string& obj) { return {sub, pred, obj, "", ""}; }

RelationPrediction ranked(const std::string& id, const std::vector<Triplet>& ts) {
  RelationPrediction p{id, {}};
  double s = 0;
  for (const auto& x : ts) p.ranked.push_back({x, s--});
  return p;
}

TEST(Recall, HandEnumeratedCase) {
  std::vector<RelationGold> golds{{"i", {t("o1", "walk_on", "o2"), t("o1", "near", "o3")}}};
  std::vector<RelationPrediction> preds{
      ranked("i", {t("o1", "walk_on", "o2"), t("o1", "on", "o3"), t("o1", "near", "o3")})};
  EXPECT_DOUBLE_EQ(recall_at_k(preds, golds, 2), 0.5);
  EXPECT_DOUBLE_EQ(recall_at_k(preds, golds, 3), 1.0);
}

TEST(Recall, EmptyPredictionsScoreZero) {
  std::vector<RelationGold> golds{{"i", {t("o1", "on", "o2")}}};
  EXPECT_DOUBLE_EQ(recall_at_k({}, golds, 50), 0.0);
  EXPECT_DOUBLE_EQ(recall_at_k({ranked("i", {})}, golds, 50), 0.0);
}

TEST(Recall, IdentityScoresOne) {
  std::vector<Triplet> ts{t("o1", "on", "o2"), t("o2", "near", "o1"), t("o1", "has", "o3")};
  EXPECT_DOUBLE_EQ(recall_at_k({ranked("i", ts)}, {{"i", ts}}, 3), 1.0);
  EXPECT_DOUBLE_EQ(mean_recall_at_k({ranked("i", ts)}, {{"i", ts}}, 3), 1.0);
}

TEST(Recall, EachPredictionClaimsOneGold) {
  std::vector<RelationGold> golds{{"i", {t("o1", "on", "o2")}}};
  auto preds = ranked("i", {t("o1", "on", "o2"), t("o1", "on", "o2")});
  auto r = relation_recall({preds}, golds, 2);
  EXPECT_EQ(r.matched, 1u);
}

TEST(MeanRecall, MicroVersusMacro) {
  std::vector<RelationGold> golds{{"a", {t("o1", "walk_on", "o2"), t("o1", "near", "o3")}},
                                  {"b", {t("o1", "walk_on", "o2")}}};
  std::vector<RelationPrediction> preds{ranked("a", {t("o1", "walk_on", "o2")}),
                                        ranked("b", {t("o1", "walk_on", "o2")})};
  EXPECT_DOUBLE_EQ(recall_at_k(preds, golds, 1), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(mean_recall_at_k(preds, golds, 1), 0.5);
}

TEST(MeanRecall, SingleTypeEqualsMicro) {
  std::vector<RelationGold> golds{{"a", {t("o1", "on", "o2"), t("o2", "on", "o3")}}, {"b", {t("o1", "on", "o2")}}};
  std::vector<RelationPrediction> preds{ranked("a", {t("o2", "on", "o3")}), ranked("b", {t("o9", "on", "o2")})};
  EXPECT_DOUBLE_EQ(mean_recall_at_k(preds, golds, 5), recall_at_k(preds, golds, 5));
}

TEST(Recall, HygieneErrors) {
  std::vector<RelationGold> dup{{"i", {t("o1", "on", "o2"), t("o1", "on", "o2")}}};
  try {
    recall_at_k({}, dup, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDuplicateGold);
  }
  auto rising = ranked("i", {t("o1", "on", "o2"), t("o1", "near", "o2")});
  rising.ranked[1].score = 5;
  EXPECT_THROW(recall_at_k({rising}, {{"i", {t("o1", "on", "o2")}}}, 1), Error);
}

TEST(Recall, SgclsNeedsLabels) {
  Triplet gold{"o1", "on", "o2", "horse", "grass"};
  Triplet wrong_label{"o1", "on", "o2", "horse", "hay"};
  std::vector<RelationGold> golds{{"i", {gold}}};
  EXPECT_DOUBLE_EQ(recall_at_k({ranked("i", {wrong_label})}, golds, 1, MatchRule::kSgcls), 0.0);
  EXPECT_DOUBLE_EQ(recall_at_k({ranked("i", {wrong_label})}, golds, 1, MatchRule::kPredicateOnly), 1.0);
  EXPECT_DOUBLE_EQ(recall_at_k({ranked("i", {gold})}, golds, 1, MatchRule::kSgcls), 1.0);
}

TEST(Recall, AgreesWithExhaustiveMatcher) {
  std::mt19937_64 rng(2024);
  int cases = 0;
  for (int i = 0; i < 1000; ++i) {
    auto c = oracle::random_case(rng);
    auto brute = oracle::brute_recall(c.preds, c.golds, c.k, c.rule);
    ASSERT_DOUBLE_EQ(recall_at_k(c.preds, c.golds, c.k, c.rule), brute.micro) << "case " << i;
    ASSERT_DOUBLE_EQ(mean_recall_at_k(c.preds, c.golds, c.k, c.rule), brute.macro) << "case " << i;
    ++cases;
  }
  EXPECT_EQ(cases, 1000);
}

TEST(Report, PercentagesAndMean) {
  std::vector<RelationGold> golds{{"a", {t("o1", "walk_on", "o2"), t("o1", "near", "o3")}},
                                  {"b", {t("o1", "walk_on", "o2")}}};
  std::vector<RelationPrediction> preds{ranked("a", {t("o1", "walk_on", "o2")}),
                                        ranked("b", {t("o1", "walk_on", "o2")})};
  auto j = relation_report_json("relation", preds, golds, {50, 100}, MatchRule::kPredicateOnly);
  EXPECT_DOUBLE_EQ(j["scores"]["R@50"].get<double>(), 66.67);
  EXPECT_DOUBLE_EQ(j["scores"]["mR@100"].get<double>(), 50.0);
  EXPECT_DOUBLE_EQ(j["scores"]["Mean"].get<double>(), 58.33);
  EXPECT_DOUBLE_EQ(percent(1.0 / 3.0), 33.33);
}

// ---------------------------------------------------------------------------
// Situations

SituationGold eat_gold(const std::string& id = "g") {
  return {id, "eat", {{"Ingestor", {"horse"}}, {"Ingestibles", {"grass"}}}};
}

TEST(Situation, HalfTheRolesRight) {
  SituationPrediction p{"g", {"eat"}, {{"eat", {{"Ingestor", "horse"}, {"Ingestibles", "hay"}}}}};
  auto r = situation_metrics({p}, {eat_gold()}, &mini_registry());
  EXPECT_DOUBLE_EQ(r.top1.verb, 1.0);
  EXPECT_DOUBLE_EQ(r.top1.value, 0.5);
  EXPECT_DOUBLE_EQ(r.top1.value_all, 0.0);
}

TEST(Situation, GoldVerbAtRankThree) {
  SituationPrediction p{"g", {"walk", "graze", "eat", "run"}, {{"eat", {{"Ingestor", "horse"}, {"Ingestibles", "grass"}}}}};
  auto r = situation_metrics({p}, {eat_gold()});
  EXPECT_DOUBLE_EQ(r.top1.verb, 0.0);
  EXPECT_DOUBLE_EQ(r.top1.value, 0.0);
  EXPECT_DOUBLE_EQ(r.top5.verb, 1.0);
  EXPECT_DOUBLE_EQ(r.top5.value_all, 1.0);
  EXPECT_DOUBLE_EQ(r.gt_verb.value_all, 1.0);
  EXPECT_DOUBLE_EQ(r.gt_verb.verb, 1.0);
}

TEST(Situation, AveragedPerVerbThenAcrossVerbs) {
  // Two eat images (one right, one wrong) and one walk image (right):
  // per verb 0.5 and 1.0, so 0.75 rather than the per-image 2/3.
  std::vector<SituationGold> golds{eat_gold("a"), eat_gold("b"), {"c", "walk", {{"Self_mover", {"man"}}}}};
  std::vector<SituationPrediction> preds{{"a", {"eat"}, {}}, {"b", {"graze"}, {}}, {"c", {"walk"}, {}}};
  auto r = situation_metrics(preds, golds);
  EXPECT_DOUBLE_EQ(r.top1.verb, 0.75);
  EXPECT_EQ(r.verbs, 2u);
}

TEST(Situation, GoldRoleOutsideFrameIsAnError) {
  SituationGold bad{"g", "eat", {{"Driver", {"man"}}}};
  EXPECT_THROW(situation_metrics({}, {bad}, &mini_registry()), Error);
  EXPECT_NO_THROW(situation_metrics({}, {eat_gold()}, &mini_registry()));
}

TEST(Situation, GoldsFromRecords) {
  auto golds = situation_golds({testing::horse_eating_grass()}, mini_registry());
  ASSERT_EQ(golds.size(), 1u);
  EXPECT_EQ(golds[0].verb, "eat");
  EXPECT_EQ(golds[0].roles.at("Ingestor"), std::set<std::string>{"horse"});
}

// ---------------------------------------------------------------------------
// Zero-shot

TEST(ZeroShot, ExactGenerationScoresOne) {
  auto r = testing::horse_grass();
  auto rep = score_zero_shot({{r.image_id, serialize_text(r, mini_registry())}}, {relation_gold(r, mini_registry())},
                             mini_registry(), {50});
  EXPECT_DOUBLE_EQ(rep.parse_rate, 1.0);
  EXPECT_DOUBLE_EQ(rep.recall.at(50), 1.0);
}

TEST(ZeroShot, BrokenGenerationCountsAsMiss) {
  auto r = testing::horse_grass();
  auto rep = score_zero_shot({{r.image_id, "# Generate Relations\nwalk_on(sub=object1"}},
                             {relation_gold(r, mini_registry())}, mini_registry(), {50});
  EXPECT_DOUBLE_EQ(rep.parse_rate, 0.0);
  EXPECT_DOUBLE_EQ(rep.recall.at(50), 0.0);
  EXPECT_EQ(rep.failures, std::vector<std::string>{r.image_id});
}

TEST(ZeroShot, MixedBatch) {
  SyntheticPools pools(full_registry());
  Rng rng(12);
  std::vector<Generation> gens;
  std::vector<RelationGold> golds;
  std::vector<RelationPrediction> parsed_preds;
  std::vector<RelationGold> parsed_golds;
  for (int i = 0; i < 10; ++i) {
    auto r = stage_record(Stage::kOR, pools, rng, "z" + std::to_string(i));
    auto gold = relation_gold(r, full_registry());
    golds.push_back(gold);
    if (i % 3 == 1) {
      gens.push_back({r.image_id, serialize_text(r, full_registry()) + "bogus(sub=object1"});
      continue;
    }
    if (i % 2 == 0) std::reverse(r.relations.begin(), r.relations.end());
    if (!r.relations.empty() && i % 4 == 0) r.relations.pop_back();
    gens.push_back({r.image_id, serialize_text(r, full_registry())});
    parsed_golds.push_back(gold);
    parsed_preds.push_back(relations_from_record(r, full_registry()));
  }
  auto rep = score_zero_shot(gens, golds, full_registry(), {1, 50});
  EXPECT_EQ(rep.parsed, 7u);
  EXPECT_DOUBLE_EQ(rep.parse_rate, 0.7);
  for (std::size_t k : {1u, 50u}) {
    auto brute = oracle::brute_recall(parsed_preds, parsed_golds, k, MatchRule::kPredicateOnly);
    EXPECT_DOUBLE_EQ(rep.parsed_recall.at(k), brute.micro);
    auto all = oracle::brute_recall(parsed_preds, golds, k, MatchRule::kPredicateOnly);
    EXPECT_DOUBLE_EQ(rep.recall.at(k), all.micro);
  }
  EXPECT_LT(rep.parsed_recall.at(50), 1.0);  // dropped relations are misses
}

// ---------------------------------------------------------------------------
// JSON

TEST(Json, PredictionsRoundTrip) {
  auto p = ranked("i", {{"o1", "on", "o2", "horse", "grass"}});
  auto back = relation_prediction_from_json(relation_prediction_to_json(p));
  EXPECT_EQ(back.ranked[0].triplet, p.ranked[0].triplet);
  SituationPrediction s{"g", {"eat", "walk"}, {{"eat", {{"Ingestor", "horse"}}}}};
  auto sb = situation_prediction_from_json(situation_prediction_to_json(s));
  EXPECT_EQ(sb.verbs, s.verbs);
  EXPECT_EQ(sb.fillers, s.fillers);
  EXPECT_THROW(relation_prediction_from_json(nlohmann::json{{"ranked", 3}}), Error);
}

}  // namespace
}  // namespace vistruct
