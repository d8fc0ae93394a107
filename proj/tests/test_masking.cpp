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

#include "test_support.hpp"
#include "vistruct/masking.hpp"
#include "vistruct/synthetic.hpp"

namespace vistruct {
namespace {

using testing::horse_eating_grass;
using testing::horse_grass;
using testing::mini_registry;

std::vector<std::string> loss_tokens(const MaskedPair& p) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < p.target_tokens.size(); ++i) {
    if (p.loss_mask[i]) out.push_back(p.target_tokens[i]);
  }
  return out;
}

std::size_t true_spans(const std::vector<bool>& mask) {
  std::size_t spans = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] && (i == 0 || !mask[i - 1])) ++spans;
  }
  return spans;
}

TEST(Mask, AttributesStage) {
  auto block = serialize_record(horse_eating_grass(), mini_registry());
  auto p = mask_for_stage(block, Stage::kOA);
  EXPECT_EQ(p.target_tokens, block.tokens);
  EXPECT_NE(detokenize(p.input_tokens).find("attributes=[<mask>])"), std::string::npos);
  EXPECT_EQ(loss_tokens(p), (std::vector<std::string>{"\"brown\"", "\"hungry\""}));
  EXPECT_EQ(p.masked_slots.size(), 1u);
}

TEST(Mask, RelationStage) {
  auto p = mask_for_stage(serialize_record(horse_grass(), mini_registry()), Stage::kOR);
  EXPECT_NE(detokenize(p.input_tokens).find("<mask>(sub=object1, obj=object2)"), std::string::npos);
  EXPECT_EQ(loss_tokens(p), std::vector<std::string>{"walk_on"});
  EXPECT_EQ(p.loss_positions(), 1u);
}

TEST(Mask, ConceptStageOnOneConcept) {
  VisualRecord r;
  r.image_id = "one";
  r.concepts = {{"object1", "horse.n.01", std::nullopt, std::nullopt}};
  auto p = mask_for_stage(serialize_record(r, mini_registry()), Stage::kCR);
  EXPECT_EQ(detokenize(p.input_tokens),
            "# Generate Concepts\nobject1 = <mask>(location=None, attributes=None)\n");
  EXPECT_EQ(p.loss_positions(), 1u);
}

TEST(Mask, EventStageMasksTriggerAndArguments) {
  auto p = mask_for_stage(serialize_record(horse_eating_grass(), mini_registry()), Stage::kE);
  EXPECT_EQ(true_spans(p.loss_mask), 3u);
  EXPECT_EQ(loss_tokens(p), (std::vector<std::string>{"eat", "object1", "object2"}));
  EXPECT_NE(detokenize(p.input_tokens).find("<mask>(ingestor=<mask>, ingestibles=<mask>)"), std::string::npos);
}

TEST(Mask, InapplicableStageThrows) {
  VisualRecord r;
  r.image_id = "bare";
  r.concepts = {{"object1", "horse.n.01", std::nullopt, std::nullopt}};
  auto block = serialize_record(r, mini_registry());
  for (auto st : {Stage::kOG, Stage::kOA, Stage::kOR, Stage::kE}) {
    EXPECT_FALSE(stage_applicable(block, st));
    try {
      mask_for_stage(block, st);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kStageInapplicable);
    }
  }
}

TEST(Mask, SinglePolicyMasksOneOwner) {
  auto block = serialize_record(horse_eating_grass(), mini_registry());
  std::set<std::string> owners;
  for (std::uint64_t seed = 0; seed < 32; ++seed) {
    auto p = mask_for_stage(block, Stage::kOG, seed, MaskPolicy::kSingle);
    ASSERT_EQ(p.masked_slots.size(), 1u);
    owners.insert(p.masked_slots[0].owner);
    EXPECT_EQ(p.masked_slots[0].owner,
              mask_for_stage(block, Stage::kOG, seed, MaskPolicy::kSingle).masked_slots[0].owner);
  }
  EXPECT_EQ(owners.size(), 2u);
  // An event's trigger and arguments stay together.
  auto e = mask_for_stage(block, Stage::kE, 5, MaskPolicy::kSingle);
  EXPECT_EQ(e.masked_slots.size(), 3u);
}

TEST(Mask, SameRecordSameMaskedPair) {
  auto a = mask_for_stage(serialize_record(horse_eating_grass(), mini_registry()), Stage::kOA, 3);
  auto text = serialize_text(horse_eating_grass(), mini_registry());
  auto reparsed = parse_code("\n  " + text + "\n\n", mini_registry(), [] {
    VisualRecord base = horse_eating_grass();
    base.concepts.clear();
    base.relations.clear();
    base.events.clear();
    return base;
  }());
  auto b = mask_for_stage(serialize_record(reparsed, mini_registry()), Stage::kOA, 3);
  EXPECT_EQ(a.input_tokens, b.input_tokens);
  EXPECT_EQ(a.target_tokens, b.target_tokens);
  EXPECT_EQ(a.loss_mask, b.loss_mask);
}

TEST(LossMask, RecoveredFromInputAlone) {
  auto block = serialize_record(horse_eating_grass(), mini_registry());
  for (auto st : kRecordStages) {
    auto p = mask_for_stage(block, st);
    EXPECT_EQ(compute_loss_mask(block, p.input_tokens), p.loss_mask) << stage_name(st);
    EXPECT_EQ(fill_masks(p), p.target_tokens);
  }
}

TEST(LossMask, UnmaskedInputIsAnAlignmentError) {
  auto block = serialize_record(horse_grass(), mini_registry());
  try {
    compute_loss_mask(block, block.tokens);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kAlignmentError);
  }
  auto wrong = block.tokens;
  wrong[1] = "<mask>";  // the newline after the header is not a slot
  EXPECT_THROW(compute_loss_mask(block, wrong), Error);
}

// No loss-bearing token is a header, punctuation, keyword or (outside event
// arguments) a variable name, over every stage of many random records.
// Keywords are recognised by position since `location` is also a noun.
TEST(LossMask, NeverOnSyntax) {
  const auto& reg = testing::full_registry();
  SyntheticPools pools(reg);
  Rng rng(5);
  std::size_t pairs = 0, checked = 0;
  for (int i = 0; i < 300; ++i) {
    auto r = random_record(pools, rng, "m" + std::to_string(i));
    auto block = serialize_record(r, reg);
    for (auto st : kRecordStages) {
      if (!stage_applicable(block, st)) continue;
      auto p = mask_for_stage(block, st, static_cast<std::uint64_t>(i));
      ++pairs;
      ASSERT_GE(p.loss_positions(), 1u);
      for (std::size_t k = 0; k < p.target_tokens.size(); ++k) {
        if (!p.loss_mask[k]) continue;
        ++checked;
        const auto& tok = p.target_tokens[k];
        ASSERT_FALSE(is_syntax_token(tok)) << tok;
        ASSERT_NE(tok, "None");
        ASSERT_FALSE(k + 1 < p.target_tokens.size() && p.target_tokens[k + 1] == "=") << tok;
        if (is_object_var(tok)) {
          ASSERT_EQ(st, Stage::kE) << tok;
        }
      }
    }
  }
  EXPECT_GT(pairs, 500u);
  EXPECT_GT(checked, 1000u);
}

TEST(Prompt, RelationDetectionMatchesGolden) {
  DownstreamInput in;
  in.objects = {{"horse", BoundingBox{120, 80, 610, 700}}, {"grass", BoundingBox{0, 550, 999, 999}}};
  in.answer = "walk_on";
  auto p = build_downstream_prompt(DownstreamTask::kRelationDetection, in);
  EXPECT_EQ(detokenize(p.input_tokens), read_file(testing::golden("relation_prompt.input.txt")));
  EXPECT_EQ(detokenize(p.target_tokens), read_file(testing::golden("relation_prompt.target.txt")));
  EXPECT_EQ(loss_tokens(p), std::vector<std::string>{"walk_on"});
}

TEST(Prompt, AttributeExampleMatchesGolden) {
  auto r = horse_eating_grass();
  r.concepts.resize(1);
  r.relations.clear();
  r.events.clear();
  auto p = mask_for_stage(serialize_record(r, testing::mini_registry()), Stage::kOA);
  EXPECT_EQ(detokenize(p.input_tokens), read_file(testing::golden("attribute_example.input.txt")));
  EXPECT_EQ(detokenize(p.target_tokens), read_file(testing::golden("attribute_example.target.txt")));
}

TEST(Prompt, RolePrediction) {
  DownstreamInput in{{}, "eat", "Ingestor", "horse"};
  auto p = build_downstream_prompt(DownstreamTask::kRolePrediction, in);
  EXPECT_EQ(detokenize(p.input_tokens), "# Generate Visual Event with Arguments\neat(ingestor=<mask>)\n");
  EXPECT_EQ(loss_tokens(p), std::vector<std::string>{"horse"});
}

TEST(Prompt, EventPredictionIsHeaderOnly) {
  DownstreamInput in;
  in.answer = "eat";
  auto p = build_downstream_prompt(DownstreamTask::kEventPrediction, in);
  EXPECT_EQ(p.input_tokens, std::vector<std::string>{"# Generate Visual Event with Arguments"});
  EXPECT_EQ(loss_tokens(p), std::vector<std::string>{"eat"});
  auto sites = locate_mask_sites(p.input_tokens);
  ASSERT_EQ(sites.size(), 1u);
  EXPECT_EQ(sites[0].kind, SlotKind::kEventName);
}

TEST(Prompt, ObjectRecognition) {
  DownstreamInput in;
  in.objects = {{std::nullopt, BoundingBox{1, 2, 3, 4}}};
  in.answer = "horse";
  auto p = build_downstream_prompt(DownstreamTask::kObjectRecognition, in);
  EXPECT_EQ(detokenize(p.input_tokens),
            "# Generate Concepts\nobject1 = <mask>(location=[1, 2, 3, 4], attributes=None)\n");
}

TEST(Prompt, MissingFieldIsNamed) {
  DownstreamInput in{{}, "eat", std::nullopt, "horse"};
  try {
    build_downstream_prompt(DownstreamTask::kRolePrediction, in);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingField);
    EXPECT_NE(std::string(e.what()).find("role"), std::string::npos);
  }
}

TEST(Sites, KindsFollowTheGrammar) {
  auto p = mask_for_stage(serialize_record(horse_eating_grass(), mini_registry()), Stage::kE);
  auto sites = locate_mask_sites(p.input_tokens);
  ASSERT_EQ(sites.size(), 3u);
  EXPECT_EQ(sites[0].kind, SlotKind::kEventName);
  EXPECT_EQ(sites[1].kind, SlotKind::kEventArg);
  EXPECT_EQ(sites[2].kind, SlotKind::kEventArg);
  for (std::size_t i = 0; i < sites.size(); ++i) {
    EXPECT_EQ(p.input_tokens[sites[i].index], "<mask>");
  }
}

TEST(Batches, JsonCarriesTokensAndMask) {
  auto p = mask_for_stage(serialize_record(horse_grass(), mini_registry()), Stage::kOR);
  auto j = batch_to_json("horse-grass", p, {"f:horse"});
  EXPECT_EQ(j.at("image_id"), "horse-grass");
  EXPECT_EQ(j.at("loss_mask").size(), p.target_tokens.size());
}

}  // namespace
}  // namespace vistruct
