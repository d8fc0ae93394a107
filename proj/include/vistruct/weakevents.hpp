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

// Caption SRL parses -> event structures grounded to record concepts.

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "vistruct/codec.hpp"
#include "vistruct/ontology.hpp"

namespace vistruct {

struct SRLRole {
  std::string role;
  std::size_t start = 0;  // character offsets into the caption, end exclusive
  std::size_t end = 0;
};

struct SRLFrame {
  std::string frame;
  std::string trigger;
  std::vector<SRLRole> roles;
};

struct SRLParse {
  std::string image_id;
  std::string caption;
  std::vector<SRLFrame> frames;
};

struct ConversionReport {
  std::size_t frames_total = 0;
  std::size_t frames_converted = 0;
  std::size_t frames_skipped = 0;  // unknown frame or trigger not listed for it
  std::size_t roles_total = 0;
  std::size_t roles_bound = 0;
  std::size_t roles_non_core = 0;
  std::size_t roles_unresolved = 0;  // bad span, no head, or alignment failure
  std::size_t concepts_added = 0;

  bool operator==(const ConversionReport&) const = default;
};

struct ConversionResult {
  std::vector<ConceptInstance> added_concepts;
  std::vector<EventInstance> events;
  ConversionReport report;
};

inline const std::vector<std::string>& article_words() {
  static const std::vector<std::string> words{"a", "an", "the"};
  return words;
}

// Last whitespace-delimited word of a span after lowercasing, dropping
// leading articles and trailing punctuation.
inline std::string extract_head_noun(std::string_view span) {
  auto words = text::split(text::to_lower(text::trim(span)), ' ');
  std::vector<std::string> kept;
  for (auto& w : words) {
    auto t = std::string(text::trim(w));
    if (!t.empty()) kept.push_back(std::move(t));
  }
  auto is_article = [](const std::string& w) {
    const auto& a = article_words();
    return std::find(a.begin(), a.end(), w) != a.end();
  };
  std::size_t first = 0;
  while (first < kept.size() && is_article(kept[first])) ++first;
  while (kept.size() > first) {
    auto& last = kept.back();
    while (!last.empty() && std::ispunct(static_cast<unsigned char>(last.back()))) last.pop_back();
    if (!last.empty()) break;
    kept.pop_back();
  }
  if (kept.size() <= first) {
    throw Error(ErrorCode::kHeadNotFound, "no head noun in '" + std::string(span) + "'");
  }
  return kept.back();
}

// Converts each registry frame of the parse into an event. Role heads are
// aligned to noun synsets and bound to an existing concept of that synset, or
// to a new ungrounded concept appended after the record's own.
inline ConversionResult convert_srl_to_events(const SRLParse& parse, const VisualRecord& record,
                                              const OntologyRegistry& registry,
                                              AlignmentTable& table) {
  ConversionResult out;
  auto& rep = out.report;
  VisualRecord scratch;
  scratch.concepts = record.concepts;

  for (const auto& f : parse.frames) {
    ++rep.frames_total;
    rep.roles_total += f.roles.size();
    const auto* frame = registry.find_frame(f.frame);
    auto trigger = text::normalize_label(f.trigger);
    if (!frame || std::find(frame->trigger_lemmas.begin(), frame->trigger_lemmas.end(), trigger) ==
                      frame->trigger_lemmas.end()) {
      ++rep.frames_skipped;
      continue;
    }
    const auto scratch_size = scratch.concepts.size();
    const auto added_size = out.added_concepts.size();
    EventInstance ev;
    ev.frame = frame->name;
    ev.trigger = trigger;
    for (const auto& r : f.roles) {
      auto role = frame->canonical_role(r.role);
      if (!role) {
        ++rep.roles_non_core;
        continue;
      }
      if (r.role.empty() || r.start >= r.end || r.end > parse.caption.size() ||
          ev.args.count(*role)) {
        ++rep.roles_unresolved;
        continue;
      }
      std::string head;
      try {
        head = extract_head_noun(std::string_view(parse.caption).substr(r.start, r.end - r.start));
      } catch (const Error&) {
        ++rep.roles_unresolved;
        continue;
      }
      auto aligned = align_category(head, registry, table, Pos::kNoun);
      if (!aligned.resolved()) {
        ++rep.roles_unresolved;
        continue;
      }
      std::string var;
      for (const auto& c : scratch.concepts) {
        if (c.synset == aligned.synset_id) {
          var = c.var;
          break;
        }
      }
      if (var.empty()) {
        ConceptInstance c{next_object_var(scratch), aligned.synset_id, std::nullopt, std::nullopt};
        var = c.var;
        scratch.concepts.push_back(c);
        out.added_concepts.push_back(std::move(c));
        ++rep.concepts_added;
      }
      ev.args.emplace(*role, var);
      ++rep.roles_bound;
    }
    // The trigger must identify this frame given the bound roles.
    std::vector<std::string> roles;
    for (const auto& [role, var] : ev.args) roles.push_back(role);
    if (registry.resolve_trigger(ev.trigger, roles) != frame) {
      ++rep.frames_skipped;
      rep.roles_bound -= ev.args.size();
      rep.concepts_added -= out.added_concepts.size() - added_size;
      scratch.concepts.resize(scratch_size);
      out.added_concepts.resize(added_size);
      continue;
    }
    ++rep.frames_converted;
    out.events.push_back(std::move(ev));
  }
  return out;
}

inline ConversionResult convert_srl_to_events(const SRLParse& parse, const VisualRecord& record,
                                              const OntologyRegistry& registry) {
  AlignmentTable table;
  return convert_srl_to_events(parse, record, registry, table);
}

// Appends a conversion to its record.
inline void attach_events(VisualRecord& record, ConversionResult result) {
  for (auto& c : result.added_concepts) record.concepts.push_back(std::move(c));
  for (auto& e : result.events) record.events.push_back(std::move(e));
}

// srl.jsonl: {image_id, caption, frames: [{frame, trigger, roles: [{role, start, end}]}]}
inline SRLParse srl_from_json(const nlohmann::json& j) {
  try {
    SRLParse p;
    p.image_id = j.value("image_id", std::string{});
    p.caption = j.at("caption").get<std::string>();
    for (const auto& jf : j.value("frames", nlohmann::json::array())) {
      SRLFrame f;
      f.frame = jf.at("frame").get<std::string>();
      f.trigger = jf.at("trigger").get<std::string>();
      for (const auto& jr : jf.value("roles", nlohmann::json::array())) {
        f.roles.push_back({jr.at("role").get<std::string>(), jr.at("start").get<std::size_t>(),
                           jr.at("end").get<std::size_t>()});
      }
      p.frames.push_back(std::move(f));
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchema, std::string("malformed SRL parse: ") + e.what());
  }
}

inline nlohmann::json srl_to_json(const SRLParse& p) {
  nlohmann::json frames = nlohmann::json::array();
  for (const auto& f : p.frames) {
    nlohmann::json roles = nlohmann::json::array();
    for (const auto& r : f.roles) roles.push_back({{"role", r.role}, {"start", r.start}, {"end", r.end}});
    frames.push_back({{"frame", f.frame}, {"trigger", f.trigger}, {"roles", roles}});
  }
  return {{"image_id", p.image_id}, {"caption", p.caption}, {"frames", frames}};
}

inline nlohmann::json report_to_json(const ConversionReport& r) {
  return {{"frames_total", r.frames_total},       {"frames_converted", r.frames_converted},
          {"frames_skipped", r.frames_skipped},   {"roles_total", r.roles_total},
          {"roles_bound", r.roles_bound},         {"roles_non_core", r.roles_non_core},
          {"roles_unresolved", r.roles_unresolved}, {"concepts_added", r.concepts_added}};
}

}  // namespace vistruct
