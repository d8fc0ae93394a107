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

// Visual records and their code-block form.
//
// A record serializes to up to three sections:
//
//   # Generate Concepts
//   object1 = horse(location=[12, 40, 500, 880], attributes=["brown", "hungry"])
//   object2 = grass(location=None, attributes=None)
//   # Generate Relations
//   walk_on(sub=object1, obj=object2)
//   # Generate Visual Event with Arguments
//   eat(ingestor=object1, ingestibles=object2)
//
// Every semantic span (concept name, location interior, attribute interior,
// relation name, event trigger, event argument value) is recorded as a slot
// so that masking and loss selection work on structure, never on strings.

#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "vistruct/error.hpp"
#include "vistruct/ontology.hpp"
#include "vistruct/text.hpp"

namespace vistruct {

inline constexpr std::string_view kConceptsHeader = "# Generate Concepts";
inline constexpr std::string_view kRelationsHeader = "# Generate Relations";
inline constexpr std::string_view kEventsHeader = "# Generate Visual Event with Arguments";
inline constexpr std::string_view kMaskToken = "<mask>";
inline constexpr std::string_view kNewlineToken = "\n";
inline constexpr int kDefaultBins = 1000;

// Curriculum stages. Records carry one of CR..E; kWarmup only schedules.
enum class Stage { kWarmup, kCR, kOG, kOA, kOR, kE };

inline constexpr Stage kRecordStages[] = {Stage::kCR, Stage::kOG, Stage::kOA, Stage::kOR,
                                          Stage::kE};

inline std::string_view stage_name(Stage stage) {
  switch (stage) {
    case Stage::kWarmup: return "WARMUP";
    case Stage::kCR: return "CR";
    case Stage::kOG: return "OG";
    case Stage::kOA: return "OA";
    case Stage::kOR: return "OR";
    case Stage::kE: return "E";
  }
  return "?";
}

inline std::optional<Stage> parse_stage(std::string_view s) {
  auto up = std::string(s);
  std::transform(up.begin(), up.end(), up.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  for (Stage st : {Stage::kWarmup, Stage::kCR, Stage::kOG, Stage::kOA, Stage::kOR, Stage::kE}) {
    if (stage_name(st) == up) return st;
  }
  return std::nullopt;
}

inline int stage_rank(Stage stage) { return static_cast<int>(stage); }

// ---------------------------------------------------------------------------
// Boxes

struct BoundingBox {
  int x1 = 0, y1 = 0, x2 = 0, y2 = 0;

  bool valid(int bins = kDefaultBins) const {
    return 0 <= x1 && x1 <= x2 && x2 < bins && 0 <= y1 && y1 <= y2 && y2 < bins;
  }
  bool operator==(const BoundingBox&) const = default;
};

struct PixelBox {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;
  bool operator==(const PixelBox&) const = default;
};

inline int quantize_coord(double coord, double extent, int bins) {
  auto bin = static_cast<int>(std::floor(coord / extent * bins));
  return std::clamp(bin, 0, bins - 1);
}

// Pixel box -> bins, floor(coord / extent * bins) clamped to bins - 1.
inline BoundingBox quantize_box(const PixelBox& box, double width, double height,
                                int bins = kDefaultBins) {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "image extent must be positive");
  }
  if (box.x1 > box.x2 || box.y1 > box.y2) {
    throw Error(ErrorCode::kInvalidArgument, "inverted box");
  }
  if (box.x1 < 0 || box.y1 < 0 || box.x2 > width || box.y2 > height) {
    throw Error(ErrorCode::kInvalidArgument, "box outside the image");
  }
  return {quantize_coord(box.x1, width, bins), quantize_coord(box.y1, height, bins),
          quantize_coord(box.x2, width, bins), quantize_coord(box.y2, height, bins)};
}

// Bins -> pixel coordinates of the bin centres.
inline PixelBox dequantize_box(const BoundingBox& box, double width, double height,
                               int bins = kDefaultBins) {
  if (!box.valid(bins)) throw Error(ErrorCode::kInvalidArgument, "inverted or out-of-range box");
  auto centre = [&](int b, double extent) { return (b + 0.5) * extent / bins; };
  return {centre(box.x1, width), centre(box.y1, height), centre(box.x2, width),
          centre(box.y2, height)};
}

// ---------------------------------------------------------------------------
// Records

struct ConceptInstance {
  std::string var;     // object<k>
  std::string synset;  // noun synset id
  std::optional<BoundingBox> box;
  std::optional<std::vector<std::string>> attributes;  // adjective synset ids
  bool operator==(const ConceptInstance&) const = default;
};

struct RelationInstance {
  std::string predicate;  // relation synset id
  std::string sub;
  std::string obj;
  bool operator==(const RelationInstance&) const = default;
};

struct EventInstance {
  std::string frame;
  std::string trigger;
  std::map<std::string, std::string> args;  // core role -> var
  bool operator==(const EventInstance&) const = default;
};

struct VisualRecord {
  std::string image_id;
  std::optional<std::string> image_ref;
  int width = 1;
  int height = 1;
  std::vector<ConceptInstance> concepts;
  std::vector<RelationInstance> relations;
  std::vector<EventInstance> events;
  std::optional<std::string> caption;
  Stage source_stage = Stage::kCR;

  const ConceptInstance* find_concept(std::string_view var) const {
    for (const auto& c : concepts) {
      if (c.var == var) return &c;
    }
    return nullptr;
  }

  bool operator==(const VisualRecord&) const = default;
};

// Equality of what a code block carries (concepts, relations, events).
inline bool same_structure(const VisualRecord& a, const VisualRecord& b) {
  return a.concepts == b.concepts && a.relations == b.relations && a.events == b.events;
}

inline bool is_object_var(std::string_view var) {
  if (var.size() < 7 || var.substr(0, 6) != "object") return false;
  auto digits = var.substr(6);
  if (digits.front() == '0') return false;
  return std::all_of(digits.begin(), digits.end(),
                     [](unsigned char c) { return std::isdigit(c); });
}

// Smallest k such that object<k> is unused.
inline std::string next_object_var(const VisualRecord& record) {
  int top = 0;
  for (const auto& c : record.concepts) {
    if (is_object_var(c.var)) top = std::max(top, std::stoi(c.var.substr(6)));
  }
  return "object" + std::to_string(top + 1);
}

inline void validate_record(const VisualRecord& r, const OntologyRegistry& registry) {
  auto bad = [&](const std::string& why) {
    return Error(ErrorCode::kInvalidRecord, "record '" + r.image_id + "': " + why);
  };
  if (r.width <= 0 || r.height <= 0) throw bad("width and height must be positive");
  std::set<std::string> vars;
  for (const auto& c : r.concepts) {
    if (!is_object_var(c.var)) throw bad("variable '" + c.var + "' is not object<k>");
    if (!vars.insert(c.var).second) throw bad("variable '" + c.var + "' defined twice");
    const auto* s = registry.find_synset(c.synset);
    if (!s) throw Error(ErrorCode::kUnknownSymbol, "unknown synset '" + c.synset + "'");
    if (s->pos != Pos::kNoun) throw bad("concept synset '" + c.synset + "' is not a noun");
    if (c.box && !c.box->valid()) throw bad("box of '" + c.var + "' is out of range");
    if (c.attributes) {
      if (c.attributes->empty()) throw bad("attribute list of '" + c.var + "' is empty");
      for (const auto& a : *c.attributes) {
        const auto* as = registry.find_synset(a);
        if (!as) throw Error(ErrorCode::kUnknownSymbol, "unknown synset '" + a + "'");
        if (as->pos != Pos::kAdj) throw bad("attribute '" + a + "' is not an adjective");
      }
    }
  }
  for (const auto& rel : r.relations) {
    const auto* s = registry.find_synset(rel.predicate);
    if (!s) throw Error(ErrorCode::kUnknownSymbol, "unknown synset '" + rel.predicate + "'");
    if (s->pos != Pos::kVerb) throw bad("predicate '" + rel.predicate + "' is not a verb synset");
    if (!vars.count(rel.sub) || !vars.count(rel.obj)) {
      throw bad("relation references an undefined variable");
    }
    if (rel.sub == rel.obj) throw bad("relation subject equals object");
  }
  for (const auto& ev : r.events) {
    const auto* f = registry.find_frame(ev.frame);
    if (!f) throw Error(ErrorCode::kUnknownSymbol, "unknown frame '" + ev.frame + "'");
    if (std::find(f->trigger_lemmas.begin(), f->trigger_lemmas.end(), ev.trigger) ==
        f->trigger_lemmas.end()) {
      throw bad("'" + ev.trigger + "' is not a trigger of frame " + f->name);
    }
    std::vector<std::string> roles;
    for (const auto& [role, var] : ev.args) {
      if (!f->has_role(role)) throw bad("'" + role + "' is not a core role of " + f->name);
      if (f->canonical_role(role) != role) throw bad("role '" + role + "' is not canonical");
      if (!vars.count(var)) throw bad("event argument references an undefined variable");
      roles.push_back(role);
    }
    if (registry.resolve_trigger(ev.trigger, roles) != f) {
      throw bad("trigger '" + ev.trigger + "' does not identify frame " + f->name);
    }
  }
}

// ---------------------------------------------------------------------------
// Code blocks

enum class SlotKind { kConceptName, kLocation, kAttributes, kRelationName, kEventName, kEventArg };

inline std::string_view slot_kind_name(SlotKind kind) {
  switch (kind) {
    case SlotKind::kConceptName: return "concept_name";
    case SlotKind::kLocation: return "location";
    case SlotKind::kAttributes: return "attributes";
    case SlotKind::kRelationName: return "relation_name";
    case SlotKind::kEventName: return "event_name";
    case SlotKind::kEventArg: return "event_arg";
  }
  return "?";
}

inline std::optional<SlotKind> parse_slot_kind(std::string_view s) {
  for (auto k : {SlotKind::kConceptName, SlotKind::kLocation, SlotKind::kAttributes,
                 SlotKind::kRelationName, SlotKind::kEventName, SlotKind::kEventArg}) {
    if (slot_kind_name(k) == s) return k;
  }
  return std::nullopt;
}

// Token span [begin, end) owned by one semantic element. Owners are the
// concept var, "relation:<i>", "event:<i>" or "event:<i>:<role keyword>".
struct Slot {
  SlotKind kind;
  std::string owner;
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool operator==(const Slot&) const = default;
};

struct CodeBlock {
  std::vector<std::string> tokens;
  std::vector<Slot> slots;
};

inline bool is_header_token(std::string_view tok) { return !tok.empty() && tok.front() == '#'; }

inline std::string quote(std::string_view s) { return "\"" + std::string(s) + "\""; }

inline std::string unquote(std::string_view s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
    return std::string(s.substr(1, s.size() - 2));
  }
  return std::string(s);
}

class BlockWriter {
 public:
  void header(std::string_view h) {
    newline();
    tokens_.emplace_back(h);
  }
  void newline() {
    if (!tokens_.empty()) tokens_.emplace_back(kNewlineToken);
  }
  void put(std::string tok) { tokens_.push_back(std::move(tok)); }
  void slot(SlotKind kind, std::string owner, std::size_t begin) {
    slots_.push_back({kind, std::move(owner), begin, tokens_.size()});
  }
  std::size_t pos() const { return tokens_.size(); }
  CodeBlock finish() { return {std::move(tokens_), std::move(slots_)}; }

 private:
  std::vector<std::string> tokens_;
  std::vector<Slot> slots_;
};

inline CodeBlock serialize_record(const VisualRecord& record, const OntologyRegistry& registry) {
  validate_record(record, registry);
  BlockWriter w;

  if (!record.concepts.empty()) {
    w.header(kConceptsHeader);
    for (const auto& c : record.concepts) {
      w.newline();
      w.put(c.var);
      w.put("=");
      auto at = w.pos();
      w.put(registry.symbol_of(c.synset));
      w.slot(SlotKind::kConceptName, c.var, at);
      w.put("(");
      w.put("location");
      w.put("=");
      if (c.box) {
        w.put("[");
        at = w.pos();
        const int coords[] = {c.box->x1, c.box->y1, c.box->x2, c.box->y2};
        for (int i = 0; i < 4; ++i) {
          if (i) w.put(",");
          w.put(std::to_string(coords[i]));
        }
        w.slot(SlotKind::kLocation, c.var, at);
        w.put("]");
      } else {
        w.put("None");
      }
      w.put(",");
      w.put("attributes");
      w.put("=");
      if (c.attributes) {
        w.put("[");
        at = w.pos();
        for (std::size_t i = 0; i < c.attributes->size(); ++i) {
          if (i) w.put(",");
          w.put(quote(registry.symbol_of((*c.attributes)[i])));
        }
        w.slot(SlotKind::kAttributes, c.var, at);
        w.put("]");
      } else {
        w.put("None");
      }
      w.put(")");
    }
  }

  if (!record.relations.empty()) {
    w.header(kRelationsHeader);
    for (std::size_t i = 0; i < record.relations.size(); ++i) {
      const auto& rel = record.relations[i];
      w.newline();
      auto at = w.pos();
      w.put(registry.symbol_of(rel.predicate));
      w.slot(SlotKind::kRelationName, "relation:" + std::to_string(i), at);
      for (auto tok : {"(", "sub", "="}) w.put(tok);
      w.put(rel.sub);
      for (auto tok : {",", "obj", "="}) w.put(tok);
      w.put(rel.obj);
      w.put(")");
    }
  }

  if (!record.events.empty()) {
    w.header(kEventsHeader);
    for (std::size_t i = 0; i < record.events.size(); ++i) {
      const auto& ev = record.events[i];
      const auto& frame = registry.frame(ev.frame);
      const auto owner = "event:" + std::to_string(i);
      w.newline();
      auto at = w.pos();
      w.put(ev.trigger);
      w.slot(SlotKind::kEventName, owner, at);
      w.put("(");
      bool first = true;
      for (const auto& role : frame.core_roles) {
        auto it = ev.args.find(role);
        if (it == ev.args.end()) continue;
        if (!first) w.put(",");
        first = false;
        auto keyword = FrameEntry::role_keyword(role);
        w.put(keyword);
        w.put("=");
        at = w.pos();
        w.put(it->second);
        w.slot(SlotKind::kEventArg, owner + ":" + keyword, at);
      }
      w.put(")");
    }
  }
  return w.finish();
}

// Canonical text: `=` is spaced at statement level only, `,` is followed by
// one space, every line ends in LF.
inline std::string detokenize(const std::vector<std::string>& tokens) {
  std::string out;
  int depth = 0;
  for (const auto& tok : tokens) {
    if (tok == kNewlineToken) {
      out += '\n';
      depth = 0;
    } else if (tok == "(" || tok == "[") {
      ++depth;
      out += tok;
    } else if (tok == ")" || tok == "]") {
      --depth;
      out += tok;
    } else if (tok == "=") {
      out += depth == 0 ? " = " : "=";
    } else if (tok == ",") {
      out += ", ";
    } else {
      out += tok;
    }
  }
  if (!tokens.empty()) out += '\n';
  return out;
}

inline std::string serialize_text(const VisualRecord& record, const OntologyRegistry& registry) {
  return detokenize(serialize_record(record, registry).tokens);
}

// ---------------------------------------------------------------------------
// Lexer

enum class TokenType { kHeader, kIdentifier, kNone, kInteger, kString, kPunct, kMask };

struct LexToken {
  TokenType type;
  std::string text;
  std::size_t offset = 0;  // byte offset in the source text
};

// Whitespace between tokens is insignificant. Headers run to end of line and
// are normalized to single spaces.
inline std::vector<LexToken> lex(std::string_view src) {
  std::vector<LexToken> out;
  std::size_t i = 0;
  auto fail = [&](const std::string& why) {
    return Error(ErrorCode::kSyntaxError,
                 why + " at byte " + std::to_string(i) + " (token " + std::to_string(out.size()) +
                     ")",
                 out.size());
  };
  while (i < src.size()) {
    char c = src[i];
    if (text::is_space(c)) {
      ++i;
      continue;
    }
    std::size_t start = i;
    if (c == '#') {
      std::size_t eol = src.find('\n', i);
      if (eol == std::string_view::npos) eol = src.size();
      std::string header;
      for (const auto& word : text::split(src.substr(i, eol - i), ' ')) {
        auto w = text::trim(word);
        if (w.empty()) continue;
        if (!header.empty()) header += ' ';
        header += w;
      }
      out.push_back({TokenType::kHeader, header, start});
      i = eol;
    } else if (src.substr(i, kMaskToken.size()) == kMaskToken) {
      out.push_back({TokenType::kMask, std::string(kMaskToken), start});
      i += kMaskToken.size();
    } else if (std::islower(static_cast<unsigned char>(c)) || c == '_') {
      while (i < src.size() && (std::islower(static_cast<unsigned char>(src[i])) ||
                                std::isdigit(static_cast<unsigned char>(src[i])) || src[i] == '_')) {
        ++i;
      }
      out.push_back({TokenType::kIdentifier, std::string(src.substr(start, i - start)), start});
    } else if (src.substr(i, 4) == "None") {
      i += 4;
      out.push_back({TokenType::kNone, "None", start});
    } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '-') {
      ++i;
      while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) ++i;
      if (src.substr(start, i - start) == "-") throw fail("stray '-'");
      out.push_back({TokenType::kInteger, std::string(src.substr(start, i - start)), start});
    } else if (src.substr(i, 3) == "\"\"\"") {
      std::size_t close = src.find("\"\"\"", i + 3);
      if (close == std::string_view::npos) throw fail("unterminated docstring");
      i = close + 3;
      out.push_back({TokenType::kString, std::string(src.substr(start, i - start)), start});
    } else if (c == '"') {
      ++i;
      while (i < src.size() && src[i] != '"' && src[i] != '\n') {
        if (src[i] == '\\') ++i;
        ++i;
      }
      if (i >= src.size() || src[i] != '"') throw fail("unterminated string");
      ++i;
      out.push_back({TokenType::kString, std::string(src.substr(start, i - start)), start});
    } else if (std::string_view("=()[],:.").find(c) != std::string_view::npos) {
      ++i;
      out.push_back({TokenType::kPunct, std::string(1, c), start});
    } else {
      throw fail(std::string("unexpected character '") + c + "'");
    }
  }
  return out;
}

// Token strings of `text` as a CodeBlock token list: lexed tokens with a
// newline token after each header and each completed statement.
inline std::vector<std::string> tokenize(std::string_view src) {
  std::vector<std::string> out;
  int depth = 0;
  for (const auto& t : lex(src)) {
    if (t.type == TokenType::kHeader && !out.empty() && out.back() != kNewlineToken) {
      out.emplace_back(kNewlineToken);
    }
    out.push_back(t.text);
    if (t.type == TokenType::kPunct && (t.text == "(" || t.text == "[")) ++depth;
    if (t.type == TokenType::kPunct && (t.text == ")" || t.text == "]")) --depth;
    if (t.type == TokenType::kHeader || (depth == 0 && t.text == ")")) {
      out.emplace_back(kNewlineToken);
    }
  }
  while (!out.empty() && out.back() == kNewlineToken) out.pop_back();
  return out;
}

// ---------------------------------------------------------------------------
// Parser

namespace detail {

class CodeParser {
 public:
  CodeParser(std::vector<LexToken> toks, const OntologyRegistry& registry)
      : toks_(std::move(toks)), registry_(registry) {}

  VisualRecord parse(VisualRecord record) {
    record.concepts.clear();
    record.relations.clear();
    record.events.clear();
    for (std::size_t i = 0; i < toks_.size(); ++i) {
      if (toks_[i].type == TokenType::kMask) {
        throw Error(ErrorCode::kMaskNotFilled,
                    "<mask> at token " + std::to_string(i) + "; only completed code parses", i);
      }
    }
    enum class Section { kNone, kConcepts, kRelations, kEvents } section = Section::kNone;
    while (pos_ < toks_.size()) {
      const auto& t = toks_[pos_];
      if (t.type == TokenType::kHeader) {
        if (t.text == kConceptsHeader) {
          section = Section::kConcepts;
        } else if (t.text == kRelationsHeader) {
          section = Section::kRelations;
        } else if (t.text == kEventsHeader) {
          section = Section::kEvents;
        } else {
          throw syntax("unknown section header '" + t.text + "'");
        }
        ++pos_;
        continue;
      }
      switch (section) {
        case Section::kNone: throw syntax("statement before any section header");
        case Section::kConcepts: record.concepts.push_back(concept_stmt()); break;
        case Section::kRelations: record.relations.push_back(relation_stmt()); break;
        case Section::kEvents: record.events.push_back(event_stmt()); break;
      }
    }
    check_references(record);
    return record;
  }

 private:
  Error syntax(const std::string& why) const {
    return Error(ErrorCode::kSyntaxError, why + " at token " + std::to_string(pos_), pos_);
  }

  const LexToken& peek() const {
    static const LexToken eof{TokenType::kPunct, "<eof>", 0};
    return pos_ < toks_.size() ? toks_[pos_] : eof;
  }

  bool at_punct(std::string_view p) const {
    return pos_ < toks_.size() && toks_[pos_].type == TokenType::kPunct && toks_[pos_].text == p;
  }

  void expect_punct(std::string_view p) {
    if (!at_punct(p)) throw syntax("expected '" + std::string(p) + "', found '" + peek().text + "'");
    ++pos_;
  }

  std::string expect_identifier(std::string_view what) {
    if (pos_ >= toks_.size() || toks_[pos_].type != TokenType::kIdentifier) {
      throw syntax("expected " + std::string(what) + ", found '" + peek().text + "'");
    }
    return toks_[pos_++].text;
  }

  ConceptInstance concept_stmt() {
    ConceptInstance c;
    std::size_t var_at = pos_;
    c.var = expect_identifier("object variable");
    if (!is_object_var(c.var)) {
      pos_ = var_at;
      throw syntax("'" + c.var + "' is not an object<k> variable");
    }
    if (!defined_.emplace(c.var, var_at).second) {
      pos_ = var_at;
      throw syntax("variable '" + c.var + "' defined twice");
    }
    expect_punct("=");
    std::size_t name_at = pos_;
    auto name = expect_identifier("concept name");
    const auto* s = registry_.resolve_symbol(name, Pos::kNoun);
    if (!s) {
      throw Error(ErrorCode::kUnknownSymbol,
                  "unknown concept '" + name + "' at token " + std::to_string(name_at), name_at);
    }
    c.synset = s->id;
    expect_punct("(");
    bool seen_loc = false, seen_attr = false;
    while (!at_punct(")")) {
      if (seen_loc || seen_attr) expect_punct(",");
      auto key = expect_identifier("keyword argument");
      expect_punct("=");
      if ((key == "location" || key == "loc") && !seen_loc) {
        seen_loc = true;
        c.box = location_value();
      } else if ((key == "attributes" || key == "attribute") && !seen_attr) {
        seen_attr = true;
        c.attributes = attributes_value();
      } else {
        --pos_;
        --pos_;
        throw syntax("unexpected keyword '" + key + "'");
      }
    }
    expect_punct(")");
    return c;
  }

  std::optional<BoundingBox> location_value() {
    if (peek().type == TokenType::kNone) {
      ++pos_;
      return std::nullopt;
    }
    expect_punct("[");
    int v[4];
    std::size_t start = pos_;
    for (int i = 0; i < 4; ++i) {
      if (i) expect_punct(",");
      if (peek().type != TokenType::kInteger) throw syntax("expected a location bin");
      const auto& s = toks_[pos_++].text;
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v[i]);
      if (ec != std::errc()) {
        --pos_;
        throw syntax("location bin out of range");
      }
    }
    expect_punct("]");
    BoundingBox box{v[0], v[1], v[2], v[3]};
    if (!box.valid()) {
      pos_ = start;
      throw syntax("location must satisfy 0 <= x1 <= x2 <= 999 and 0 <= y1 <= y2 <= 999");
    }
    return box;
  }

  std::optional<std::vector<std::string>> attributes_value() {
    if (peek().type == TokenType::kNone) {
      ++pos_;
      return std::nullopt;
    }
    expect_punct("[");
    std::vector<std::string> out;
    while (!at_punct("]")) {
      if (!out.empty()) expect_punct(",");
      if (peek().type != TokenType::kString) throw syntax("expected a quoted attribute");
      std::size_t at = pos_;
      auto symbol = unquote(toks_[pos_++].text);
      const auto* s = registry_.resolve_symbol(symbol, Pos::kAdj);
      if (!s) {
        throw Error(ErrorCode::kUnknownSymbol,
                    "unknown attribute '" + symbol + "' at token " + std::to_string(at), at);
      }
      out.push_back(s->id);
    }
    if (out.empty()) throw syntax("empty attribute list; use None");
    expect_punct("]");
    return out;
  }

  std::string var_reference() {
    std::size_t at = pos_;
    auto var = expect_identifier("object variable");
    references_.emplace_back(var, at);
    return var;
  }

  RelationInstance relation_stmt() {
    RelationInstance rel;
    std::size_t name_at = pos_;
    auto name = expect_identifier("relation name");
    const auto* s = registry_.resolve_symbol(name, Pos::kVerb);
    if (!s) {
      throw Error(ErrorCode::kUnknownSymbol,
                  "unknown relation '" + name + "' at token " + std::to_string(name_at), name_at);
    }
    rel.predicate = s->id;
    expect_punct("(");
    if (expect_identifier("'sub'") != "sub") {
      --pos_;
      throw syntax("expected 'sub'");
    }
    expect_punct("=");
    rel.sub = var_reference();
    expect_punct(",");
    if (expect_identifier("'obj'") != "obj") {
      --pos_;
      throw syntax("expected 'obj'");
    }
    expect_punct("=");
    rel.obj = var_reference();
    expect_punct(")");
    if (rel.sub == rel.obj) throw syntax("relation subject equals object");
    return rel;
  }

  EventInstance event_stmt() {
    EventInstance ev;
    std::size_t trigger_at = pos_;
    ev.trigger = expect_identifier("event trigger");
    expect_punct("(");
    std::vector<std::pair<std::string, std::string>> raw;
    while (!at_punct(")")) {
      if (!raw.empty()) expect_punct(",");
      auto role = expect_identifier("role keyword");
      expect_punct("=");
      raw.emplace_back(role, var_reference());
    }
    expect_punct(")");
    std::vector<std::string> roles;
    for (const auto& [role, var] : raw) roles.push_back(role);
    const auto* frame = registry_.resolve_trigger(ev.trigger, roles);
    if (!frame) {
      throw Error(ErrorCode::kUnknownSymbol,
                  "no frame for trigger '" + ev.trigger + "' with the given roles at token " +
                      std::to_string(trigger_at),
                  trigger_at);
    }
    ev.frame = frame->name;
    for (const auto& [role, var] : raw) {
      auto canonical = *frame->canonical_role(role);
      if (!ev.args.emplace(canonical, var).second) {
        throw syntax("role '" + role + "' given twice");
      }
    }
    return ev;
  }

  void check_references(const VisualRecord&) const {
    for (const auto& [var, at] : references_) {
      if (!defined_.count(var)) {
        throw Error(ErrorCode::kUnknownSymbol,
                    "undefined variable '" + var + "' at token " + std::to_string(at), at);
      }
    }
  }

  std::vector<LexToken> toks_;
  const OntologyRegistry& registry_;
  std::size_t pos_ = 0;
  std::map<std::string, std::size_t> defined_;
  std::vector<std::pair<std::string, std::size_t>> references_;
};

}  // namespace detail

// Parses completed code back into a record. Non-structural fields (id, size,
// caption, stage) are taken from `base`.
inline VisualRecord parse_code(std::string_view text, const OntologyRegistry& registry,
                               VisualRecord base = {}) {
  detail::CodeParser parser(lex(text), registry);
  return parser.parse(std::move(base));
}

// ---------------------------------------------------------------------------
// Class definitions emitted by the ontology

struct ClassDefinition {
  std::string name;
  std::string base;
  std::string doc;
  std::vector<std::string> params;  // constructor parameters after self
};

// Parses one or more `class name(base): """doc""" def __init__(self, ...):
// self.p = p ...` blocks.
inline std::vector<ClassDefinition> parse_class_definitions(std::string_view src) {
  auto toks = lex(src);
  std::size_t pos = 0;
  auto fail = [&](const std::string& why) {
    return Error(ErrorCode::kSyntaxError, why + " at token " + std::to_string(pos), pos);
  };
  auto ident = [&](std::string_view expected = {}) {
    if (pos >= toks.size() || toks[pos].type != TokenType::kIdentifier ||
        (!expected.empty() && toks[pos].text != expected)) {
      throw fail(expected.empty() ? "expected identifier" : "expected '" + std::string(expected) + "'");
    }
    return toks[pos++].text;
  };
  auto punct = [&](std::string_view p) {
    if (pos >= toks.size() || toks[pos].type != TokenType::kPunct || toks[pos].text != p) {
      throw fail("expected '" + std::string(p) + "'");
    }
    ++pos;
  };
  std::vector<ClassDefinition> out;
  while (pos < toks.size()) {
    ClassDefinition def;
    ident("class");
    def.name = ident();
    punct("(");
    def.base = ident();
    punct(")");
    punct(":");
    if (pos >= toks.size() || toks[pos].type != TokenType::kString ||
        toks[pos].text.rfind("\"\"\"", 0) != 0) {
      throw fail("expected docstring");
    }
    const auto& doc = toks[pos++].text;
    def.doc = doc.substr(3, doc.size() - 6);
    ident("def");
    ident("__init__");
    punct("(");
    ident("self");
    while (pos < toks.size() && toks[pos].text == ",") {
      ++pos;
      def.params.push_back(ident());
    }
    punct(")");
    punct(":");
    for (const auto& p : def.params) {
      ident("self");
      punct(".");
      if (ident() != p) throw fail("attribute assignment out of order");
      punct("=");
      if (ident() != p) throw fail("attribute must be assigned its parameter");
    }
    out.push_back(std::move(def));
  }
  return out;
}

// ---------------------------------------------------------------------------
// records.jsonl

inline constexpr int kRecordSchemaVersion = 1;

inline nlohmann::json record_to_json(const VisualRecord& r) {
  using nlohmann::json;
  json j;
  j["schema"] = kRecordSchemaVersion;
  j["image_id"] = r.image_id;
  j["image_ref"] = r.image_ref ? json(*r.image_ref) : json(nullptr);
  j["width"] = r.width;
  j["height"] = r.height;
  j["source_stage"] = std::string(stage_name(r.source_stage));
  json concepts = json::array();
  for (const auto& c : r.concepts) {
    json jc;
    jc["var"] = c.var;
    jc["synset"] = c.synset;
    jc["box"] = c.box ? json::array({c.box->x1, c.box->y1, c.box->x2, c.box->y2}) : json(nullptr);
    jc["attributes"] = c.attributes ? json(*c.attributes) : json(nullptr);
    concepts.push_back(std::move(jc));
  }
  j["concepts"] = std::move(concepts);
  json relations = json::array();
  for (const auto& rel : r.relations) {
    relations.push_back({{"predicate", rel.predicate}, {"sub", rel.sub}, {"obj", rel.obj}});
  }
  j["relations"] = std::move(relations);
  json events = json::array();
  for (const auto& ev : r.events) {
    events.push_back({{"frame", ev.frame}, {"trigger", ev.trigger}, {"args", ev.args}});
  }
  j["events"] = std::move(events);
  j["caption"] = r.caption ? json(*r.caption) : json(nullptr);
  return j;
}

inline VisualRecord record_from_json(const nlohmann::json& j) {
  auto fail = [](const std::string& why) { return Error(ErrorCode::kSchema, why); };
  try {
    if (!j.is_object()) throw fail("record must be a JSON object");
    if (!j.contains("schema") || j.at("schema") != kRecordSchemaVersion) {
      throw fail("unsupported or missing record schema (expected \"schema\": 1)");
    }
    VisualRecord r;
    r.image_id = j.at("image_id").get<std::string>();
    if (r.image_id.empty()) throw fail("empty image_id");
    if (j.contains("image_ref") && !j["image_ref"].is_null()) {
      r.image_ref = j["image_ref"].get<std::string>();
    }
    r.width = j.at("width").get<int>();
    r.height = j.at("height").get<int>();
    auto stage = parse_stage(j.at("source_stage").get<std::string>());
    if (!stage || *stage == Stage::kWarmup) throw fail("invalid source_stage");
    r.source_stage = *stage;
    for (const auto& jc : j.value("concepts", nlohmann::json::array())) {
      ConceptInstance c;
      c.var = jc.at("var").get<std::string>();
      c.synset = jc.at("synset").get<std::string>();
      if (jc.contains("box") && !jc["box"].is_null()) {
        const auto& b = jc["box"];
        if (!b.is_array() || b.size() != 4) throw fail("box must have 4 bins");
        c.box = BoundingBox{b[0].get<int>(), b[1].get<int>(), b[2].get<int>(), b[3].get<int>()};
      }
      if (jc.contains("attributes") && !jc["attributes"].is_null()) {
        c.attributes = jc["attributes"].get<std::vector<std::string>>();
      }
      r.concepts.push_back(std::move(c));
    }
    for (const auto& jr : j.value("relations", nlohmann::json::array())) {
      r.relations.push_back({jr.at("predicate").get<std::string>(),
                             jr.at("sub").get<std::string>(), jr.at("obj").get<std::string>()});
    }
    for (const auto& je : j.value("events", nlohmann::json::array())) {
      EventInstance ev;
      ev.frame = je.at("frame").get<std::string>();
      ev.trigger = je.at("trigger").get<std::string>();
      ev.args = je.value("args", std::map<std::string, std::string>{});
      r.events.push_back(std::move(ev));
    }
    if (j.contains("caption") && !j["caption"].is_null()) {
      r.caption = j["caption"].get<std::string>();
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw fail(std::string("malformed record: ") + e.what());
  }
}

}  // namespace vistruct
