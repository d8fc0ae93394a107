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

// Stage masks, downstream prompts and the focused loss mask.
//
// Each masked slot collapses to a single `<mask>` token in the input. The loss
// mask marks the semantic tokens of the replaced spans in the target; the
// scaffolding (headers, keywords, punctuation, object variables) never
// carries loss.

#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "vistruct/codec.hpp"
#include "vistruct/error.hpp"
#include "vistruct/rng.hpp"

namespace vistruct {

struct MaskedPair {
  Stage stage = Stage::kCR;
  std::vector<std::string> input_tokens;
  std::vector<std::string> target_tokens;
  std::vector<bool> loss_mask;
  std::vector<Slot> masked_slots;  // spans in target_tokens, in input order

  std::size_t loss_positions() const {
    return static_cast<std::size_t>(std::count(loss_mask.begin(), loss_mask.end(), true));
  }
};

// Tokens that are pure syntax: headers, newlines and punctuation.
inline bool is_syntax_token(std::string_view tok) {
  if (tok.empty() || tok == kNewlineToken || is_header_token(tok)) return true;
  return tok.size() == 1 && std::string_view("=()[],:.").find(tok.front()) != std::string_view::npos;
}

inline std::vector<SlotKind> stage_slot_kinds(Stage stage) {
  switch (stage) {
    case Stage::kCR: return {SlotKind::kConceptName};
    case Stage::kOG: return {SlotKind::kLocation};
    case Stage::kOA: return {SlotKind::kAttributes};
    case Stage::kOR: return {SlotKind::kRelationName};
    case Stage::kE: return {SlotKind::kEventName, SlotKind::kEventArg};
    case Stage::kWarmup: break;
  }
  return {};
}

inline bool stage_applicable(const CodeBlock& block, Stage stage) {
  auto kinds = stage_slot_kinds(stage);
  return std::any_of(block.slots.begin(), block.slots.end(), [&](const Slot& s) {
    return std::find(kinds.begin(), kinds.end(), s.kind) != kinds.end();
  });
}

// Number of slots masked per example. The default masks every eligible slot;
// kSingle keeps one seeded choice (for E, one event: trigger plus arguments).
enum class MaskPolicy { kAll, kSingle };

namespace detail {

inline std::vector<bool> loss_over(const std::vector<std::string>& target,
                                   const std::vector<const Slot*>& slots) {
  std::vector<bool> mask(target.size(), false);
  for (const auto* s : slots) {
    for (std::size_t k = s->begin; k < s->end; ++k) mask[k] = !is_syntax_token(target[k]);
  }
  return mask;
}

inline std::vector<std::string> replace_slots(const std::vector<std::string>& target,
                                              const std::vector<const Slot*>& slots) {
  std::vector<std::string> out;
  std::size_t i = 0;
  for (const auto* s : slots) {
    out.insert(out.end(), target.begin() + static_cast<std::ptrdiff_t>(i),
               target.begin() + static_cast<std::ptrdiff_t>(s->begin));
    out.emplace_back(kMaskToken);
    i = s->end;
  }
  out.insert(out.end(), target.begin() + static_cast<std::ptrdiff_t>(i), target.end());
  return out;
}

inline std::string owner_group(const Slot& s) {
  // "event:3:ingestor" and "event:3" belong to one event.
  if (s.kind == SlotKind::kEventArg) return s.owner.substr(0, s.owner.rfind(':'));
  return s.owner;
}

}  // namespace detail

inline MaskedPair mask_for_stage(const CodeBlock& block, Stage stage, std::uint64_t seed = 0,
                                 MaskPolicy policy = MaskPolicy::kAll) {
  auto kinds = stage_slot_kinds(stage);
  std::vector<const Slot*> chosen;
  for (const auto& s : block.slots) {
    if (std::find(kinds.begin(), kinds.end(), s.kind) != kinds.end()) chosen.push_back(&s);
  }
  if (chosen.empty()) {
    throw Error(ErrorCode::kStageInapplicable,
                "no " + std::string(stage_name(stage)) + " slot in the code block");
  }
  if (policy == MaskPolicy::kSingle) {
    std::vector<std::string> groups;
    for (const auto* s : chosen) {
      auto g = detail::owner_group(*s);
      if (std::find(groups.begin(), groups.end(), g) == groups.end()) groups.push_back(g);
    }
    Rng rng(seed);
    auto pick = groups[uniform_below(rng, groups.size())];
    std::erase_if(chosen, [&](const Slot* s) { return detail::owner_group(*s) != pick; });
  }

  MaskedPair pair;
  pair.stage = stage;
  pair.target_tokens = block.tokens;
  pair.input_tokens = detail::replace_slots(block.tokens, chosen);
  pair.loss_mask = detail::loss_over(block.tokens, chosen);
  for (const auto* s : chosen) pair.masked_slots.push_back(*s);
  return pair;
}

// Recovers which slots of `target` were replaced to obtain `masked_input`,
// walking both sequences against the slot map.
inline std::vector<const Slot*> align_masked_slots(const CodeBlock& target,
                                                   const std::vector<std::string>& masked_input) {
  std::map<std::size_t, const Slot*> by_start;
  for (const auto& s : target.slots) by_start.emplace(s.begin, &s);
  auto fail = [](const std::string& why, std::size_t at) {
    return Error(ErrorCode::kAlignmentError, why + " at input token " + std::to_string(at), at);
  };

  std::vector<const Slot*> out;
  std::size_t i = 0, j = 0;
  const auto& t = target.tokens;
  while (i < t.size() && j < masked_input.size()) {
    if (masked_input[j] == kMaskToken) {
      auto it = by_start.find(i);
      if (it == by_start.end()) throw fail("<mask> does not stand at a slot boundary", j);
      out.push_back(it->second);
      i = it->second->end;
      ++j;
    } else if (masked_input[j] == t[i]) {
      ++i;
      ++j;
    } else {
      throw fail("token '" + masked_input[j] + "' differs from the target", j);
    }
  }
  if (i != t.size() || j != masked_input.size()) {
    throw fail("input and target lengths do not align", j);
  }
  if (out.empty()) throw fail("no <mask> in the input", 0);
  return out;
}

inline std::vector<bool> compute_loss_mask(const CodeBlock& target,
                                           const std::vector<std::string>& masked_input) {
  return detail::loss_over(target.tokens, align_masked_slots(target, masked_input));
}

// Replaces each <mask> with the target span it stands for.
inline std::vector<std::string> fill_masks(const MaskedPair& pair) {
  std::vector<std::string> out;
  std::size_t next = 0;
  for (const auto& tok : pair.input_tokens) {
    if (tok == kMaskToken && next < pair.masked_slots.size()) {
      const auto& s = pair.masked_slots[next++];
      out.insert(out.end(), pair.target_tokens.begin() + static_cast<std::ptrdiff_t>(s.begin),
                 pair.target_tokens.begin() + static_cast<std::ptrdiff_t>(s.end));
    } else {
      out.push_back(tok);
    }
  }
  return out;
}

// Semantic tokens of one masked slot (punctuation inside the span dropped).
inline std::vector<std::string> slot_answer(const MaskedPair& pair, std::size_t slot_index) {
  std::vector<std::string> out;
  const auto& s = pair.masked_slots.at(slot_index);
  for (std::size_t k = s.begin; k < s.end; ++k) {
    if (!is_syntax_token(pair.target_tokens[k])) out.push_back(pair.target_tokens[k]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Downstream prompts

enum class DownstreamTask { kRelationDetection, kObjectRecognition, kEventPrediction, kRolePrediction };

inline std::optional<DownstreamTask> parse_downstream_task(std::string_view s) {
  if (s == "relation_detection") return DownstreamTask::kRelationDetection;
  if (s == "object_recognition") return DownstreamTask::kObjectRecognition;
  if (s == "event_prediction") return DownstreamTask::kEventPrediction;
  if (s == "role_prediction") return DownstreamTask::kRolePrediction;
  return std::nullopt;
}

struct PromptObject {
  std::optional<std::string> category;  // verbalized concept token
  std::optional<BoundingBox> box;
};

// Gold fields a prompt is built from. `answer` is the verbalizer token of the
// queried slot: relation, category, verb, or argument filler.
struct DownstreamInput {
  std::vector<PromptObject> objects;
  std::optional<std::string> verb;
  std::optional<std::string> role;
  std::optional<std::string> answer;
};

namespace detail {

inline void write_prompt_concept(BlockWriter& w, std::size_t k, const PromptObject& obj,
                                 const std::string& name) {
  auto var = "object" + std::to_string(k + 1);
  w.newline();
  w.put(var);
  w.put("=");
  auto at = w.pos();
  w.put(name);
  w.slot(SlotKind::kConceptName, var, at);
  for (auto tok : {"(", "location", "=", "["}) w.put(tok);
  const int coords[] = {obj.box->x1, obj.box->y1, obj.box->x2, obj.box->y2};
  for (int i = 0; i < 4; ++i) {
    if (i) w.put(",");
    w.put(std::to_string(coords[i]));
  }
  for (auto tok : {"]", ",", "attributes", "=", "None", ")"}) w.put(tok);
}

}  // namespace detail

inline MaskedPair build_downstream_prompt(DownstreamTask task, const DownstreamInput& in) {
  auto missing = [](const std::string& field) {
    return Error(ErrorCode::kMissingField, "missing required gold field '" + field + "'");
  };
  auto require_answer = [&]() -> const std::string& {
    if (!in.answer || in.answer->empty()) throw missing("answer");
    return *in.answer;
  };

  BlockWriter w;
  MaskedPair pair;
  switch (task) {
    case DownstreamTask::kRelationDetection: {
      pair.stage = Stage::kOR;
      if (in.objects.size() < 2) throw missing("objects[1]");
      for (std::size_t k = 0; k < 2; ++k) {
        if (!in.objects[k].box) throw missing("objects[" + std::to_string(k) + "].box");
        if (!in.objects[k].category) throw missing("objects[" + std::to_string(k) + "].category");
      }
      const auto& answer = require_answer();
      w.header(kConceptsHeader);
      for (std::size_t k = 0; k < 2; ++k) {
        detail::write_prompt_concept(w, k, in.objects[k], *in.objects[k].category);
      }
      w.header(kRelationsHeader);
      w.newline();
      auto at = w.pos();
      w.put(answer);
      w.slot(SlotKind::kRelationName, "relation:0", at);
      for (auto tok : {"(", "sub", "=", "object1", ",", "obj", "=", "object2", ")"}) w.put(tok);
      break;
    }
    case DownstreamTask::kObjectRecognition: {
      pair.stage = Stage::kCR;
      if (in.objects.empty() || !in.objects[0].box) throw missing("objects[0].box");
      const auto& answer = require_answer();
      w.header(kConceptsHeader);
      detail::write_prompt_concept(w, 0, in.objects[0], answer);
      break;
    }
    case DownstreamTask::kEventPrediction: {
      // Header-only prompt; the verb is generated after it.
      pair.stage = Stage::kE;
      const auto& answer = require_answer();
      pair.input_tokens = {std::string(kEventsHeader)};
      pair.target_tokens = {std::string(kEventsHeader), std::string(kNewlineToken), answer};
      pair.loss_mask = {false, false, true};
      pair.masked_slots = {{SlotKind::kEventName, "event:0", 2, 3}};
      return pair;
    }
    case DownstreamTask::kRolePrediction: {
      pair.stage = Stage::kE;
      if (!in.verb) throw missing("verb");
      if (!in.role) throw missing("role");
      const auto& answer = require_answer();
      auto keyword = FrameEntry::role_keyword(*in.role);
      w.header(kEventsHeader);
      w.newline();
      w.put(*in.verb);
      w.put("(");
      w.put(keyword);
      w.put("=");
      auto at = w.pos();
      w.put(answer);
      w.slot(SlotKind::kEventArg, "event:0:" + keyword, at);
      w.put(")");
      break;
    }
  }

  auto block = w.finish();
  std::vector<const Slot*> query;
  for (const auto& s : block.slots) {
    bool wanted = (task == DownstreamTask::kRelationDetection && s.kind == SlotKind::kRelationName) ||
                  (task == DownstreamTask::kObjectRecognition && s.kind == SlotKind::kConceptName) ||
                  (task == DownstreamTask::kRolePrediction && s.kind == SlotKind::kEventArg);
    if (wanted) query.push_back(&s);
  }
  pair.target_tokens = block.tokens;
  pair.input_tokens = detail::replace_slots(block.tokens, query);
  pair.loss_mask = detail::loss_over(block.tokens, query);
  for (const auto* s : query) pair.masked_slots.push_back(*s);
  return pair;
}

// ---------------------------------------------------------------------------
// Mask sites

// A <mask> position in an input sequence with the slot kind the grammar
// implies there and the statement tokens a model may condition on.
struct MaskSite {
  std::size_t index = 0;  // token index of the <mask>, or input size for an
                          // implicit trailing event slot
  SlotKind kind = SlotKind::kConceptName;
  std::vector<std::string> context;
};

namespace detail {

struct Statement {
  std::size_t head = 0;                 // first token
  std::optional<std::size_t> var;       // concept statements: the variable
  std::size_t callee = 0;               // name / trigger position
  std::vector<std::pair<std::size_t, std::pair<std::size_t, std::size_t>>> kwargs;  // key, [b, e)
};

}  // namespace detail

// Finds every <mask> in a prompt or masked code sequence. A prompt that ends
// in an empty events section yields one implicit event_name site.
inline std::vector<MaskSite> locate_mask_sites(const std::vector<std::string>& tokens) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] != kNewlineToken) idx.push_back(i);
  }
  auto fail = [](std::size_t at, const std::string& why) {
    return Error(ErrorCode::kSyntaxError, why + " at token " + std::to_string(at), at);
  };
  auto tok = [&](std::size_t p) -> const std::string& {
    static const std::string eof;
    return p < idx.size() ? tokens[idx[p]] : eof;
  };

  std::vector<MaskSite> sites;
  std::string section;
  bool section_empty = true;
  std::size_t p = 0;
  while (p < idx.size()) {
    if (is_header_token(tok(p))) {
      section = tok(p);
      section_empty = true;
      ++p;
      continue;
    }
    section_empty = false;
    detail::Statement st;
    st.head = p;
    if (section == kConceptsHeader) {
      st.var = p;
      if (tok(p + 1) != "=") throw fail(idx[p], "expected concept statement");
      p += 2;
    }
    st.callee = p++;
    if (tok(p) != "(") throw fail(p < idx.size() ? idx[p] : tokens.size(), "expected '('");
    ++p;
    while (p < idx.size() && tok(p) != ")") {
      if (tok(p) == ",") {
        ++p;
        continue;
      }
      std::size_t key = p;
      if (tok(p + 1) != "=") throw fail(idx[p], "expected keyword argument");
      p += 2;
      std::size_t b = p;
      if (tok(p) == "[") {
        while (p < idx.size() && tok(p) != "]") ++p;
        ++p;
      } else {
        ++p;
      }
      st.kwargs.push_back({key, {b, p}});
    }
    if (p >= idx.size()) throw fail(tokens.size(), "unterminated statement");
    ++p;

    auto kw_value = [&](std::string_view key) -> std::string {
      for (const auto& [k, range] : st.kwargs) {
        if (tok(k) == key && range.second - range.first == 1) return tok(range.first);
      }
      return {};
    };
    auto add = [&](std::size_t at, SlotKind kind, std::vector<std::string> ctx) {
      sites.push_back({idx[at], kind, std::move(ctx)});
    };
    if (section == kConceptsHeader) {
      if (tok(st.callee) == kMaskToken) add(st.callee, SlotKind::kConceptName, {tok(*st.var)});
      for (const auto& [k, range] : st.kwargs) {
        for (std::size_t q = range.first; q < range.second; ++q) {
          if (tok(q) != kMaskToken) continue;
          auto key = tok(k);
          SlotKind kind = (key == "location" || key == "loc") ? SlotKind::kLocation
                                                                : SlotKind::kAttributes;
          add(q, kind, {tok(*st.var), tok(st.callee)});
        }
      }
    } else if (section == kRelationsHeader) {
      if (tok(st.callee) == kMaskToken) {
        add(st.callee, SlotKind::kRelationName, {kw_value("sub"), kw_value("obj")});
      }
    } else if (section == kEventsHeader) {
      if (tok(st.callee) == kMaskToken) {
        std::vector<std::string> roles;
        for (const auto& [k, range] : st.kwargs) {
          if (roles.size() < 4) roles.push_back(tok(k));
        }
        add(st.callee, SlotKind::kEventName, std::move(roles));
      }
      for (const auto& [k, range] : st.kwargs) {
        for (std::size_t q = range.first; q < range.second; ++q) {
          if (tok(q) == kMaskToken) add(q, SlotKind::kEventArg, {tok(st.callee), tok(k)});
        }
      }
    } else {
      throw fail(idx[st.head], "statement outside a known section");
    }
  }
  if (section == kEventsHeader && section_empty) {
    sites.push_back({tokens.size(), SlotKind::kEventName, {}});
  }
  return sites;
}

// ---------------------------------------------------------------------------
// batches.jsonl

inline nlohmann::json batch_to_json(std::string_view image_id, const MaskedPair& pair,
                                    const std::vector<std::string>& feature_tokens) {
  nlohmann::json j;
  j["image_id"] = image_id;
  j["stage"] = std::string(stage_name(pair.stage));
  j["input_tokens"] = pair.input_tokens;
  j["target_tokens"] = pair.target_tokens;
  j["loss_mask"] = pair.loss_mask;
  j["feature_tokens"] = feature_tokens;
  return j;
}

}  // namespace vistruct
