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
#include "vistruct/weakevents.hpp"

namespace vistruct {
namespace {

using testing::mini_registry;

std::vector<SRLParse> fixture_parses() {
  std::vector<SRLParse> out;
  for (const auto& j : read_jsonl(testing::fixture("srl.jsonl"))) out.push_back(srl_from_json(j));
  return out;
}

TEST(HeadNoun, LastTokenRule) {
  EXPECT_EQ(extract_head_noun("A horse"), "horse");
  EXPECT_EQ(extract_head_noun("the tall brown horse"), "horse");
  EXPECT_EQ(extract_head_noun("  The Hay. "), "hay");
  try {
    extract_head_noun("the");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kHeadNotFound);
  }
  EXPECT_THROW(extract_head_noun("   "), Error);
}

TEST(Convert, BindsExistingConcepts) {
  auto parses = fixture_parses();
  auto record = testing::horse_grass();
  auto result = convert_srl_to_events(parses[0], record, mini_registry());
  ASSERT_EQ(result.events.size(), 1u);
  const auto& ev = result.events[0];
  EXPECT_EQ(ev.frame, "Ingestion");
  EXPECT_EQ(ev.trigger, "eat");
  EXPECT_EQ(ev.args, (std::map<std::string, std::string>{{"Ingestor", "object1"}, {"Ingestibles", "object2"}}));
  EXPECT_TRUE(result.added_concepts.empty());
  EXPECT_EQ(result.report.frames_converted, 1u);
  EXPECT_EQ(result.report.roles_bound, 2u);

  attach_events(record, result);
  EXPECT_NE(serialize_text(record, mini_registry()).find("eat(ingestor=object1, ingestibles=object2)"),
            std::string::npos);
}

TEST(Convert, AddsUngroundedConcepts) {
  auto parses = fixture_parses();
  VisualRecord empty;
  empty.image_id = "man-hay";
  auto result = convert_srl_to_events(parses[1], empty, mini_registry());
  ASSERT_EQ(result.events.size(), 1u);
  ASSERT_EQ(result.added_concepts.size(), 2u);
  EXPECT_EQ(result.added_concepts[0].synset, "person.n.01");
  EXPECT_EQ(result.added_concepts[1].synset, "hay.n.01");
  EXPECT_FALSE(result.added_concepts[0].box.has_value());
  EXPECT_EQ(result.events[0].args.at("Ingestor"), "object1");
  EXPECT_EQ(result.report.concepts_added, 2u);
}

TEST(Convert, UnknownFrameIsSkipped) {
  auto parses = fixture_parses();
  auto result = convert_srl_to_events(parses[2], testing::horse_grass(), mini_registry());
  EXPECT_TRUE(result.events.empty());
  EXPECT_EQ(result.report.frames_skipped, 1u);
  EXPECT_EQ(result.report.frames_total, 1u);
}

TEST(Convert, ZeroFramesGiveEmptyReport) {
  auto parses = fixture_parses();
  auto result = convert_srl_to_events(parses[3], testing::horse_grass(), mini_registry());
  EXPECT_TRUE(result.events.empty());
  EXPECT_EQ(result.report, ConversionReport{});
}

TEST(Convert, NonCoreAndBadSpansAreCounted) {
  SRLParse p{"x", "A horse eats grass quickly", {}};
  p.frames.push_back({"Ingestion", "eat", {{"Ingestor", 0, 7}, {"Manner", 19, 26}, {"Ingestibles", 30, 99}}});
  auto result = convert_srl_to_events(p, testing::horse_grass(), mini_registry());
  EXPECT_EQ(result.report.roles_non_core, 1u);
  EXPECT_EQ(result.report.roles_unresolved, 1u);
  ASSERT_EQ(result.events.size(), 1u);
  EXPECT_EQ(result.events[0].args.size(), 1u);
}

TEST(Convert, SkippedFrameLeavesNoConcepts) {
  SRLParse p{"x", "A horse", {}};
  p.frames.push_back({"Ingestion", "walk", {{"Ingestor", 0, 7}}});  // trigger of another frame
  VisualRecord empty;
  auto result = convert_srl_to_events(p, empty, mini_registry());
  EXPECT_TRUE(result.events.empty());
  EXPECT_TRUE(result.added_concepts.empty());
  EXPECT_EQ(result.report.concepts_added, 0u);
}

TEST(Convert, Deterministic) {
  auto parses = fixture_parses();
  VisualRecord empty;
  auto a = convert_srl_to_events(parses[1], empty, mini_registry());
  auto b = convert_srl_to_events(parses[1], empty, mini_registry());
  EXPECT_EQ(a.events, b.events);
  EXPECT_EQ(a.added_concepts, b.added_concepts);
  EXPECT_EQ(a.report, b.report);
}

TEST(Srl, JsonRoundTrip) {
  for (const auto& p : fixture_parses()) {
    auto q = srl_from_json(srl_to_json(p));
    EXPECT_EQ(q.caption, p.caption);
    EXPECT_EQ(q.frames.size(), p.frames.size());
  }
  EXPECT_THROW(srl_from_json(nlohmann::json{{"image_id", "x"}}), Error);
}

}  // namespace
}  // namespace vistruct
