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

// Concept/relation synsets and event frames, category alignment, class
// definition text and verbalizer selection.
//
// Synsets come from a WordNet-shaped TSV (`id, lemma[,alias...], pos,
// parent|-, gloss`) and frames from a FrameNet-shaped TSV (`name, triggers,
// core roles, gloss`). Once built, an OntologyRegistry never changes.

#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "vistruct/error.hpp"
#include "vistruct/rng.hpp"
#include "vistruct/text.hpp"

namespace vistruct {

enum class Pos { kNoun, kVerb, kAdj };

inline std::string_view pos_name(Pos pos) {
  switch (pos) {
    case Pos::kNoun: return "n";
    case Pos::kVerb: return "v";
    case Pos::kAdj: return "a";
  }
  return "?";
}

// Accepts WordNet letters: n, v, and both a/s for adjectives.
inline std::optional<Pos> parse_pos(std::string_view s) {
  if (s == "n" || s == "noun") return Pos::kNoun;
  if (s == "v" || s == "verb") return Pos::kVerb;
  if (s == "a" || s == "s" || s == "adj") return Pos::kAdj;
  return std::nullopt;
}

struct SynsetEntry {
  std::string id;                    // "horse.n.01"
  std::string lemma;                 // canonical lemma, first in the file
  std::vector<std::string> aliases;  // every lemma incl. the canonical one
  Pos pos = Pos::kNoun;
  std::optional<std::string> parent_id;
  std::string gloss;

  // Sense number from the id suffix ("horse.n.01" -> 1).
  int sense_number() const {
    auto dot = id.rfind('.');
    int value = 0;
    if (dot != std::string::npos) {
      std::from_chars(id.data() + dot + 1, id.data() + id.size(), value);
    }
    return value;
  }

  bool operator==(const SynsetEntry&) const = default;
};

struct FrameEntry {
  std::string name;                        // "Ingestion"
  std::vector<std::string> trigger_lemmas;  // lowercase
  std::vector<std::string> core_roles;      // in declaration order
  std::string gloss;

  // Class / call-site spelling of a role.
  static std::string role_keyword(std::string_view role) {
    return text::to_lower(role);
  }

  bool has_role(std::string_view role) const {
    auto key = role_keyword(role);
    return std::any_of(core_roles.begin(), core_roles.end(),
                       [&](const std::string& r) { return role_keyword(r) == key; });
  }

  // Canonical role name for a keyword or differently-cased role, if core.
  std::optional<std::string> canonical_role(std::string_view role) const {
    auto key = role_keyword(role);
    for (const auto& r : core_roles) {
      if (role_keyword(r) == key) return r;
    }
    return std::nullopt;
  }

  bool operator==(const FrameEntry&) const = default;
};

namespace detail {

inline std::string sanitize_symbol(std::string_view lemma) {
  std::string out;
  for (unsigned char c : lemma) {
    if (std::isalnum(c)) {
      out += static_cast<char>(std::tolower(c));
    } else {
      out += '_';
    }
  }
  if (out.empty() || std::isdigit(static_cast<unsigned char>(out.front()))) {
    out.insert(out.begin(), '_');
  }
  return out;
}

inline int pos_rank(Pos pos) { return static_cast<int>(pos); }

}  // namespace detail

class OntologyRegistry {
 public:
  OntologyRegistry() = default;

  // Validates and indexes the entries. Throws Error on duplicate ids,
  // dangling or cyclic parents, and malformed frames.
  static OntologyRegistry build(std::vector<SynsetEntry> synsets,
                                std::vector<FrameEntry> frames) {
    OntologyRegistry reg;
    reg.synsets_ = std::move(synsets);
    reg.frames_ = std::move(frames);
    reg.index();
    return reg;
  }

  std::size_t synset_count() const { return synsets_.size(); }
  std::size_t frame_count() const { return frames_.size(); }
  std::size_t count(Pos pos) const {
    return static_cast<std::size_t>(
        std::count_if(synsets_.begin(), synsets_.end(),
                      [&](const SynsetEntry& s) { return s.pos == pos; }));
  }

  const std::vector<SynsetEntry>& synsets() const { return synsets_; }
  const std::vector<FrameEntry>& frames() const { return frames_; }

  const SynsetEntry* find_synset(std::string_view id) const {
    auto it = by_id_.find(std::string(id));
    return it == by_id_.end() ? nullptr : &synsets_[it->second];
  }

  const SynsetEntry& synset(std::string_view id) const {
    if (const auto* s = find_synset(id)) return *s;
    throw Error(ErrorCode::kUnknownSymbol, "unknown synset '" + std::string(id) + "'");
  }

  const FrameEntry* find_frame(std::string_view name) const {
    auto it = frame_by_name_.find(text::to_lower(name));
    return it == frame_by_name_.end() ? nullptr : &frames_[it->second];
  }

  const FrameEntry& frame(std::string_view name) const {
    if (const auto* f = find_frame(name)) return *f;
    throw Error(ErrorCode::kUnknownSymbol, "unknown frame '" + std::string(name) + "'");
  }

  // Every synset listing `lemma` (after normalization), ordered by part of
  // speech (noun, verb, adj), canonical-lemma matches before aliases, then
  // sense number, then file order.
  std::vector<const SynsetEntry*> senses(std::string_view lemma,
                                         std::optional<Pos> pos = std::nullopt) const {
    std::vector<const SynsetEntry*> out;
    auto it = by_lemma_.find(text::normalize_label(lemma));
    if (it == by_lemma_.end()) return out;
    for (std::size_t idx : it->second) {
      if (!pos || synsets_[idx].pos == *pos) out.push_back(&synsets_[idx]);
    }
    return out;
  }

  // Identifier used for a synset inside code blocks. The lowest sense of a
  // lemma gets the bare lemma; other senses get `lemma_NN`.
  const std::string& symbol_of(std::string_view id) const {
    auto it = by_id_.find(std::string(id));
    if (it == by_id_.end()) {
      throw Error(ErrorCode::kUnknownSymbol, "unknown synset '" + std::string(id) + "'");
    }
    return symbols_[it->second];
  }

  const SynsetEntry* resolve_symbol(std::string_view symbol, Pos pos) const {
    auto it = by_symbol_[detail::pos_rank(pos)].find(std::string(symbol));
    if (it == by_symbol_[detail::pos_rank(pos)].end()) return nullptr;
    return &synsets_[it->second];
  }

  // First frame in file order that lists `trigger` and whose core roles
  // include every role in `roles`.
  const FrameEntry* resolve_trigger(std::string_view trigger,
                                    const std::vector<std::string>& roles = {}) const {
    auto it = frames_by_trigger_.find(text::to_lower(trigger));
    if (it == frames_by_trigger_.end()) return nullptr;
    for (std::size_t idx : it->second) {
      const auto& f = frames_[idx];
      if (std::all_of(roles.begin(), roles.end(),
                      [&](const std::string& r) { return f.has_role(r); })) {
        return &f;
      }
    }
    return nullptr;
  }

  // Hash over every entry field in order; used to check immutability.
  std::uint64_t structural_hash() const {
    std::string buf;
    for (const auto& s : synsets_) {
      buf += s.id + '\t' + text::join(s.aliases, ",") + '\t' +
             std::string(pos_name(s.pos)) + '\t' + s.parent_id.value_or("-") + '\t' +
             s.gloss + '\n';
    }
    for (const auto& f : frames_) {
      buf += f.name + '\t' + text::join(f.trigger_lemmas, ",") + '\t' +
             text::join(f.core_roles, ",") + '\t' + f.gloss + '\n';
    }
    return stable_hash(buf);
  }

 private:
  void index();

  std::vector<SynsetEntry> synsets_;
  std::vector<FrameEntry> frames_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_lemma_;
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, std::size_t> by_symbol_[3];
  std::unordered_map<std::string, std::size_t> frame_by_name_;
  std::unordered_map<std::string, std::vector<std::size_t>> frames_by_trigger_;
};

inline void OntologyRegistry::index() {
  for (std::size_t i = 0; i < synsets_.size(); ++i) {
    auto& s = synsets_[i];
    if (s.lemma.empty()) {
      throw Error(ErrorCode::kMalformedLine, "synset '" + s.id + "' has an empty lemma");
    }
    if (s.aliases.empty() || s.aliases.front() != s.lemma) {
      s.aliases.insert(s.aliases.begin(), s.lemma);
    }
    auto parts = text::split(s.id, '.');
    if (parts.size() < 3 || parse_pos(parts[parts.size() - 2]) != s.pos) {
      throw Error(ErrorCode::kMalformedLine,
                  "synset id '" + s.id + "' does not carry pos '" +
                      std::string(pos_name(s.pos)) + "'");
    }
    if (!by_id_.emplace(s.id, i).second) {
      throw Error(ErrorCode::kMalformedLine, "duplicate synset id '" + s.id + "'");
    }
  }

  std::vector<std::string> dangling;
  for (const auto& s : synsets_) {
    if (s.parent_id && !by_id_.count(*s.parent_id)) dangling.push_back(*s.parent_id);
  }
  if (!dangling.empty()) {
    throw Error(ErrorCode::kDanglingParent,
                "unresolved parent ids: " + text::join(dangling, ", "));
  }
  for (const auto& s : synsets_) {
    std::size_t steps = 0;
    const SynsetEntry* cur = &s;
    while (cur->parent_id) {
      cur = &synsets_[by_id_.at(*cur->parent_id)];
      if (++steps > synsets_.size()) {
        throw Error(ErrorCode::kDanglingParent, "parent cycle through '" + s.id + "'");
      }
    }
  }

  for (std::size_t i = 0; i < synsets_.size(); ++i) {
    for (const auto& alias : synsets_[i].aliases) {
      by_lemma_[text::normalize_label(alias)].push_back(i);
    }
  }
  // Sense numbers belong to the id's own lemma, so synsets whose canonical
  // lemma is the query rank ahead of alias matches.
  for (auto& [lemma, ids] : by_lemma_) {
    std::stable_sort(ids.begin(), ids.end(), [&, key = lemma](std::size_t a, std::size_t b) {
      const auto& x = synsets_[a];
      const auto& y = synsets_[b];
      if (x.pos != y.pos) return detail::pos_rank(x.pos) < detail::pos_rank(y.pos);
      bool xa = text::normalize_label(x.lemma) != key;
      bool ya = text::normalize_label(y.lemma) != key;
      if (xa != ya) return !xa;
      return x.sense_number() < y.sense_number();
    });
  }

  // Symbols: per pos, synsets ordered by (sanitized lemma, sense, file order);
  // the first of each lemma keeps the bare name.
  symbols_.assign(synsets_.size(), {});
  std::vector<std::size_t> order(synsets_.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = synsets_[a];
    const auto& y = synsets_[b];
    if (x.pos != y.pos) return detail::pos_rank(x.pos) < detail::pos_rank(y.pos);
    auto lx = detail::sanitize_symbol(x.lemma);
    auto ly = detail::sanitize_symbol(y.lemma);
    if (lx != ly) return lx < ly;
    return x.sense_number() < y.sense_number();
  });
  for (std::size_t idx : order) {
    const auto& s = synsets_[idx];
    auto& table = by_symbol_[detail::pos_rank(s.pos)];
    std::string symbol = detail::sanitize_symbol(s.lemma);
    if (table.count(symbol)) {
      char suffix[16];
      std::snprintf(suffix, sizeof(suffix), "_%02d", s.sense_number());
      symbol += suffix;
    }
    if (!table.emplace(symbol, idx).second) {
      throw Error(ErrorCode::kMalformedLine,
                  "symbol '" + symbol + "' for synset '" + s.id + "' is ambiguous");
    }
    symbols_[idx] = symbol;
  }

  for (std::size_t i = 0; i < frames_.size(); ++i) {
    auto& f = frames_[i];
    if (f.name.empty() || !text::is_identifier(text::to_lower(f.name))) {
      throw Error(ErrorCode::kMalformedLine, "invalid frame name '" + f.name + "'");
    }
    if (f.core_roles.empty()) {
      throw Error(ErrorCode::kMalformedLine, "frame '" + f.name + "' has no core roles");
    }
    if (f.trigger_lemmas.empty()) {
      throw Error(ErrorCode::kMalformedLine, "frame '" + f.name + "' has no triggers");
    }
    std::set<std::string> seen;
    for (const auto& r : f.core_roles) {
      auto key = FrameEntry::role_keyword(r);
      if (!text::is_identifier(key) || !seen.insert(key).second) {
        throw Error(ErrorCode::kMalformedLine,
                    "frame '" + f.name + "' has invalid or repeated role '" + r + "'");
      }
    }
    for (auto& t : f.trigger_lemmas) {
      t = text::normalize_label(t);
      if (!text::is_identifier(t)) {
        throw Error(ErrorCode::kMalformedLine,
                    "frame '" + f.name + "' has invalid trigger '" + t + "'");
      }
      frames_by_trigger_[t].push_back(i);
    }
    if (!frame_by_name_.emplace(text::to_lower(f.name), i).second) {
      throw Error(ErrorCode::kMalformedLine, "duplicate frame '" + f.name + "'");
    }
  }
}

// ---------------------------------------------------------------------------
// TSV loading

inline std::vector<SynsetEntry> parse_synsets_tsv(std::istream& in,
                                                  std::string_view source = "synsets.tsv") {
  std::vector<SynsetEntry> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty() || line.front() == '#') continue;
    auto fields = text::split(line, '\t');
    auto fail = [&](const std::string& why) {
      return Error(ErrorCode::kMalformedLine,
                   std::string(source) + ":" + std::to_string(lineno) + ": " + why, lineno);
    };
    if (fields.size() != 5) throw fail("expected 5 tab-separated fields");
    SynsetEntry s;
    s.id = std::string(text::trim(fields[0]));
    s.aliases = text::split_list(fields[1]);
    if (s.id.empty()) throw fail("empty id");
    if (s.aliases.empty()) throw fail("empty lemma");
    s.lemma = s.aliases.front();
    auto pos = parse_pos(text::trim(fields[2]));
    if (!pos) throw fail("unknown pos '" + fields[2] + "'");
    s.pos = *pos;
    auto parent = text::trim(fields[3]);
    if (parent.empty()) throw fail("empty parent field (use '-')");
    if (parent != "-") s.parent_id = std::string(parent);
    s.gloss = std::string(text::trim(fields[4]));
    out.push_back(std::move(s));
  }
  return out;
}

inline std::vector<FrameEntry> parse_frames_tsv(std::istream& in,
                                                std::string_view source = "frames.tsv") {
  std::vector<FrameEntry> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty() || line.front() == '#') continue;
    auto fields = text::split(line, '\t');
    auto fail = [&](const std::string& why) {
      return Error(ErrorCode::kMalformedLine,
                   std::string(source) + ":" + std::to_string(lineno) + ": " + why, lineno);
    };
    if (fields.size() != 4) throw fail("expected 4 tab-separated fields");
    FrameEntry f;
    f.name = std::string(text::trim(fields[0]));
    f.trigger_lemmas = text::split_list(fields[1]);
    f.core_roles = text::split_list(fields[2]);
    f.gloss = std::string(text::trim(fields[3]));
    if (f.name.empty()) throw fail("empty frame name");
    if (f.trigger_lemmas.empty()) throw fail("no trigger lemmas");
    if (f.core_roles.empty()) throw fail("no core roles");
    out.push_back(std::move(f));
  }
  return out;
}

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  return in;
}

inline OntologyRegistry load_registry(const std::filesystem::path& synset_file,
                                      const std::filesystem::path& frame_file) {
  auto sin = open_input(synset_file);
  auto fin = open_input(frame_file);
  auto synsets = parse_synsets_tsv(sin, synset_file.filename().string());
  auto frames = parse_frames_tsv(fin, frame_file.filename().string());
  return OntologyRegistry::build(std::move(synsets), std::move(frames));
}

// Loads `synsets.tsv` and `frames.tsv` from one directory.
inline OntologyRegistry load_registry(const std::filesystem::path& dir) {
  return load_registry(dir / "synsets.tsv", dir / "frames.tsv");
}

// ---------------------------------------------------------------------------
// Alignment

struct AlignmentTable {
  std::map<std::string, std::string> mapping;    // normalized category -> synset
  std::map<std::string, std::string> overrides;  // normalized category -> synset
  std::vector<std::string> unresolved;

  std::size_t size() const { return mapping.size(); }
};

inline void load_overrides(AlignmentTable& table, const std::filesystem::path& path,
                           const OntologyRegistry& registry) {
  auto in = open_input(path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty() || line.front() == '#') continue;
    auto fields = text::split(line, '\t');
    if (fields.size() != 2) {
      throw Error(ErrorCode::kMalformedLine,
                  path.filename().string() + ":" + std::to_string(lineno) +
                      ": expected category<TAB>synset_id",
                  lineno);
    }
    auto synset = std::string(text::trim(fields[1]));
    if (!registry.find_synset(synset)) {
      throw Error(ErrorCode::kUnknownSymbol,
                  path.filename().string() + ":" + std::to_string(lineno) +
                      ": unknown synset '" + synset + "'",
                  lineno);
    }
    table.overrides[text::normalize_label(fields[0])] = synset;
  }
}

enum class AlignStatus { kResolved, kUnresolved, kCollisionNeedsOverride };

struct AlignResult {
  AlignStatus status = AlignStatus::kUnresolved;
  std::string synset_id;    // set when resolved, or the contested synset
  std::string conflicting;  // category already holding the synset

  bool resolved() const { return status == AlignStatus::kResolved; }
};

// Maps a dataset category to a synset: overrides first, then exact lemma
// lookup taking the lowest sense of the requested part of speech (nouns
// first when `pos` is unset). Two different categories landing on one synset
// need an override entry.
inline AlignResult align_category(std::string_view label, const OntologyRegistry& registry,
                                  AlignmentTable& table,
                                  std::optional<Pos> pos = std::nullopt) {
  const std::string key = text::normalize_label(label);
  AlignResult result;

  if (auto it = table.overrides.find(key); it != table.overrides.end()) {
    table.mapping[key] = it->second;
    result.status = AlignStatus::kResolved;
    result.synset_id = it->second;
    return result;
  }
  if (auto it = table.mapping.find(key); it != table.mapping.end()) {
    const auto* s = registry.find_synset(it->second);
    if (!pos || (s && s->pos == *pos)) {
      result.status = AlignStatus::kResolved;
      result.synset_id = it->second;
      return result;
    }
  }

  auto candidates = registry.senses(key, pos);
  if (candidates.empty()) {
    if (std::find(table.unresolved.begin(), table.unresolved.end(), key) ==
        table.unresolved.end()) {
      table.unresolved.push_back(key);
    }
    return result;
  }
  const std::string& synset = candidates.front()->id;
  for (const auto& [category, mapped] : table.mapping) {
    if (mapped == synset && category != key && !table.overrides.count(category)) {
      result.status = AlignStatus::kCollisionNeedsOverride;
      result.synset_id = synset;
      result.conflicting = category;
      return result;
    }
  }
  table.mapping[key] = synset;
  result.status = AlignStatus::kResolved;
  result.synset_id = synset;
  return result;
}

// ---------------------------------------------------------------------------
// Class definitions

inline std::string emit_class_definition(const SynsetEntry& entry,
                                         const OntologyRegistry& registry) {
  std::string base = entry.parent_id ? registry.symbol_of(*entry.parent_id) : "concept";
  std::ostringstream out;
  out << "class " << registry.symbol_of(entry.id) << "(" << base << "):\n"
      << "    \"\"\"" << entry.gloss << "\"\"\"\n"
      << "\n"
      << "    def __init__(self, location, attributes):\n"
      << "        self.location = location\n"
      << "        self.attributes = attributes\n";
  return out.str();
}

inline std::string emit_class_definition(const FrameEntry& entry) {
  std::vector<std::string> params;
  for (const auto& r : entry.core_roles) params.push_back(FrameEntry::role_keyword(r));
  std::ostringstream out;
  out << "class " << text::to_lower(entry.name) << "(event):\n"
      << "    \"\"\"" << entry.gloss << "\"\"\"\n"
      << "\n"
      << "    def __init__(self, " << text::join(params, ", ") << "):\n";
  for (const auto& p : params) out << "        self." << p << " = " << p << "\n";
  return out.str();
}

// All definitions of a registry, blank-line separated, synsets then frames.
inline std::string emit_all_class_definitions(const OntologyRegistry& registry) {
  std::string out;
  for (const auto& s : registry.synsets()) {
    if (!out.empty()) out += "\n";
    out += emit_class_definition(s, registry);
  }
  for (const auto& f : registry.frames()) {
    if (!out.empty()) out += "\n";
    out += emit_class_definition(f);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Verbalizers

using EmbeddingTable = std::unordered_map<std::string, std::vector<double>>;

inline double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kInvalidArgument, "embedding dimension mismatch");
  }
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0 || nb == 0) return -std::numeric_limits<double>::infinity();
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

// Picks the single vocabulary token standing for `label`: the label itself
// when it is in the vocabulary, else the vocabulary token with the highest
// cosine similarity (earliest token on ties). Labels missing from the table
// are embedded as the mean of their `_`-separated pieces.
inline std::string map_verbalizer(std::string_view label, const std::vector<std::string>& vocab,
                                  const EmbeddingTable* embeddings = nullptr) {
  if (vocab.empty()) throw Error(ErrorCode::kInvalidArgument, "empty verbalizer vocabulary");
  if (std::find(vocab.begin(), vocab.end(), label) != vocab.end()) return std::string(label);

  auto manual = [&] {
    return Error(ErrorCode::kNoEmbedding,
                 "no embedding coverage for '" + std::string(label) +
                     "'; add a manual verbalizer entry");
  };
  if (!embeddings) throw manual();

  std::vector<double> query;
  if (auto it = embeddings->find(std::string(label)); it != embeddings->end()) {
    query = it->second;
  } else {
    std::size_t hits = 0;
    for (const auto& piece : text::split(label, '_')) {
      auto p = embeddings->find(piece);
      if (piece.empty() || p == embeddings->end()) continue;
      if (query.empty()) query.assign(p->second.size(), 0.0);
      if (p->second.size() != query.size()) {
        throw Error(ErrorCode::kInvalidArgument, "embedding dimension mismatch");
      }
      for (std::size_t i = 0; i < query.size(); ++i) query[i] += p->second[i];
      ++hits;
    }
    if (hits == 0) throw manual();
    for (auto& v : query) v /= static_cast<double>(hits);
  }

  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    auto it = embeddings->find(vocab[i]);
    if (it == embeddings->end()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "vocabulary token '" + vocab[i] + "' has no embedding");
    }
    double score = cosine_similarity(query, it->second);
    if (i == 0 || score > best_score) {
      best = i;
      best_score = score;
    }
  }
  return vocab[best];
}

}  // namespace vistruct
