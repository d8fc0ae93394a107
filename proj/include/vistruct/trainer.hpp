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

// Sequence-model contract, the count-based reference model and the curriculum
// training loop.

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "vistruct/codec.hpp"
#include "vistruct/curriculum.hpp"
#include "vistruct/io.hpp"
#include "vistruct/masking.hpp"
#include "vistruct/ontology.hpp"
#include "vistruct/rng.hpp"

namespace vistruct {

// Discrete stand-ins for visual evidence.
struct ImageFeatures {
  std::vector<std::string> tokens;
};

inline constexpr std::string_view kSlotEndToken = "</slot>";
inline constexpr std::size_t kVisualCodes = 4096;

// Sorted, de-duplicated feature tokens joined by spaces.
inline std::string feature_signature(const ImageFeatures& f) {
  auto toks = f.tokens;
  std::sort(toks.begin(), toks.end());
  toks.erase(std::unique(toks.begin(), toks.end()), toks.end());
  return text::join(toks, " ");
}

inline bool is_feature_token(std::string_view tok) {
  if (tok.starts_with("f:")) return text::is_identifier(tok.substr(2));
  if (tok.starts_with("v:") && tok.size() > 2) {
    auto digits = tok.substr(2);
    if (!std::all_of(digits.begin(), digits.end(), [](unsigned char c) { return std::isdigit(c); })) {
      return false;
    }
    return digits.size() <= 4 && std::stoul(std::string(digits)) < kVisualCodes;
  }
  return false;
}

// Synthetic evidence for a record: each concept's symbol as `f:<symbol>` with
// probability 0.9, plus two image codes `v:<n>`. Seeded by the image id, so a
// record always gets the same features.
inline ImageFeatures synthesize_features(const VisualRecord& record, const OntologyRegistry& registry,
                                         std::uint64_t seed) {
  Rng rng(derive_seed(seed, "features/" + record.image_id));
  ImageFeatures f;
  for (const auto& c : record.concepts) {
    if (uniform_unit(rng) < 0.9) f.tokens.push_back("f:" + registry.symbol_of(c.synset));
  }
  for (int i = 0; i < 2; ++i) f.tokens.push_back("v:" + std::to_string(uniform_below(rng, kVisualCodes)));
  std::sort(f.tokens.begin(), f.tokens.end());
  f.tokens.erase(std::unique(f.tokens.begin(), f.tokens.end()), f.tokens.end());
  return f;
}

// ---------------------------------------------------------------------------
// Model contract

struct Candidate {
  std::vector<std::string> fill;  // tokens that replace the <mask>
  double score = 0.0;             // log-probability
};

struct SlotPrediction {
  MaskSite site;
  std::vector<Candidate> candidates;  // best first
};

class SequenceModel {
 public:
  virtual ~SequenceModel() = default;

  // Negative log-likelihood of the masked content, computed before learning
  // from the pair.
  virtual double train_step(const MaskedPair& pair, const ImageFeatures& features) = 0;

  virtual std::vector<SlotPrediction> predict_topk(const std::vector<std::string>& input_tokens,
                                                   const ImageFeatures& features,
                                                   std::size_t k) const = 0;

  // Unmasked text seen during warm-up.
  virtual void observe_text(std::string_view /*text*/) {}
};

// Content tokens of a slot span: the span minus punctuation.
inline std::vector<std::string> slot_content(const std::vector<std::string>& target, const Slot& s) {
  std::vector<std::string> out;
  for (std::size_t k = s.begin; k < s.end; ++k) {
    if (!is_syntax_token(target[k])) out.push_back(target[k]);
  }
  return out;
}

// Rebuilds the token span of a slot from its content tokens.
inline std::vector<std::string> slot_fill(SlotKind kind, const std::vector<std::string>& content) {
  if (kind != SlotKind::kLocation && kind != SlotKind::kAttributes) return content;
  std::vector<std::string> out;
  for (std::size_t i = 0; i < content.size(); ++i) {
    if (i) out.emplace_back(",");
    out.push_back(content[i]);
  }
  return out;
}

// Pairs each mask site of the input with the slot it stands for.
inline std::vector<std::pair<MaskSite, const Slot*>> pair_sites(const MaskedPair& pair) {
  auto sites = locate_mask_sites(pair.input_tokens);
  if (sites.size() != pair.masked_slots.size()) {
    throw Error(ErrorCode::kAlignmentError, "input has " + std::to_string(sites.size()) +
                                                " mask sites but the pair records " +
                                                std::to_string(pair.masked_slots.size()) + " slots");
  }
  std::vector<std::pair<MaskSite, const Slot*>> out;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    if (sites[i].kind != pair.masked_slots[i].kind) {
      throw Error(ErrorCode::kAlignmentError,
                  "mask site " + std::to_string(i) + " is " +
                      std::string(slot_kind_name(sites[i].kind)) + " but the slot is " +
                      std::string(slot_kind_name(pair.masked_slots[i].kind)));
    }
    out.emplace_back(sites[i], &pair.masked_slots[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reference model

// Candidate tokens per slot kind, each list sorted.
struct SlotVocabulary {
  std::map<SlotKind, std::vector<std::string>> tokens;

  const std::vector<std::string>& of(SlotKind kind) const { return tokens.at(kind); }

  std::size_t index_of(SlotKind kind, std::string_view tok) const {
    const auto& v = of(kind);
    auto it = std::lower_bound(v.begin(), v.end(), tok);
    if (it == v.end() || *it != tok) {
      throw Error(ErrorCode::kVocabulary, "token '" + std::string(tok) + "' is not in the " +
                                              std::string(slot_kind_name(kind)) + " vocabulary");
    }
    return static_cast<std::size_t>(it - v.begin());
  }
};

inline constexpr std::size_t kDefaultMaxVars = 64;
inline constexpr std::size_t kMaxAttributes = 8;

inline SlotVocabulary build_vocabulary(const OntologyRegistry& registry,
                                       std::size_t max_vars = kDefaultMaxVars) {
  SlotVocabulary v;
  auto& concept_tok = v.tokens[SlotKind::kConceptName];
  auto& loc = v.tokens[SlotKind::kLocation];
  auto& attrs = v.tokens[SlotKind::kAttributes];
  auto& rel = v.tokens[SlotKind::kRelationName];
  auto& ev = v.tokens[SlotKind::kEventName];
  auto& arg = v.tokens[SlotKind::kEventArg];
  for (const auto& s : registry.synsets()) {
    const auto& sym = registry.symbol_of(s.id);
    switch (s.pos) {
      case Pos::kNoun:
        concept_tok.push_back(sym);
        arg.push_back(sym);
        break;
      case Pos::kVerb: rel.push_back(sym); break;
      case Pos::kAdj: attrs.push_back(quote(sym)); break;
    }
  }
  for (int b = 0; b < kDefaultBins; ++b) loc.push_back(std::to_string(b));
  attrs.emplace_back(kSlotEndToken);
  for (const auto& f : registry.frames()) ev.insert(ev.end(), f.trigger_lemmas.begin(), f.trigger_lemmas.end());
  for (std::size_t k = 1; k <= max_vars; ++k) arg.push_back("object" + std::to_string(k));
  for (auto& [kind, toks] : v.tokens) {
    std::sort(toks.begin(), toks.end());
    toks.erase(std::unique(toks.begin(), toks.end()), toks.end());
  }
  return v;
}

// Smoothed conditional counts. A slot position is keyed three ways, from
// specific to general:
//   kind|position|context|features, kind|position|context, kind|position
// and is scored by the most specific key seen so far (uniform when none is):
//   p(t | key) = (c(key, t) + alpha) / (N(key) + alpha * |V_kind|)
class ReferenceModel : public SequenceModel {
 public:
  struct Counts {
    std::map<std::string, std::uint64_t> by_token;
    std::uint64_t total = 0;
  };

  explicit ReferenceModel(SlotVocabulary vocab, double alpha = 1.0)
      : vocab_(std::move(vocab)), alpha_(alpha) {
    if (!(alpha_ > 0)) throw Error(ErrorCode::kInvalidArgument, "alpha must be positive");
  }

  double train_step(const MaskedPair& pair, const ImageFeatures& features) override {
    if (pair.loss_mask.size() != pair.target_tokens.size()) {
      throw Error(ErrorCode::kInvalidArgument, "loss mask and target lengths differ");
    }
    if (pair.loss_positions() == 0) {
      throw Error(ErrorCode::kInvalidArgument, "pair has no loss positions");
    }
    const auto sig = feature_signature(features);
    struct Update {
      std::vector<std::string> keys;
      std::string token;
    };
    std::vector<Update> updates;
    double loss = 0.0;
    for (const auto& [site, slot] : pair_sites(pair)) {
      std::size_t p = 0;
      for (std::size_t k = slot->begin; k < slot->end; ++k) {
        if (!pair.loss_mask[k]) continue;
        const auto& tok = pair.target_tokens[k];
        vocab_.index_of(site.kind, tok);
        auto keys = keys_for(site, p++, sig);
        loss -= std::log(prob(site.kind, keys, tok));
        updates.push_back({std::move(keys), tok});
      }
      if (site.kind == SlotKind::kAttributes) {
        updates.push_back({keys_for(site, p, sig), std::string(kSlotEndToken)});
      }
    }
    for (const auto& u : updates) {
      for (const auto& key : u.keys) {
        auto& c = tables_[key];
        ++c.by_token[u.token];
        ++c.total;
      }
    }
    ++steps_;
    return loss;
  }

  std::vector<SlotPrediction> predict_topk(const std::vector<std::string>& input_tokens,
                                           const ImageFeatures& features,
                                           std::size_t k) const override {
    if (k < 1) throw Error(ErrorCode::kInvalidArgument, "k must be at least 1");
    const auto sig = feature_signature(features);
    std::vector<SlotPrediction> out;
    for (const auto& site : locate_mask_sites(input_tokens)) {
      out.push_back({site, beam(site, sig, k)});
    }
    return out;
  }

  void observe_text(std::string_view text) override {
    ++texts_observed_;
    (void)text;
  }

  // Smoothed distribution at a position, in vocabulary order.
  std::vector<double> distribution(const MaskSite& site, std::size_t position,
                                   const ImageFeatures& features) const {
    auto keys = keys_for(site, position, feature_signature(features));
    std::vector<double> out;
    for (const auto& tok : vocab_.of(site.kind)) out.push_back(prob(site.kind, keys, tok));
    return out;
  }

  const SlotVocabulary& vocabulary() const { return vocab_; }
  double alpha() const { return alpha_; }
  std::size_t steps() const { return steps_; }
  const std::map<std::string, Counts>& tables() const { return tables_; }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["schema"] = 1;
    j["model"] = "reference";
    j["alpha"] = alpha_;
    j["steps"] = steps_;
    j["texts_observed"] = texts_observed_;
    nlohmann::json vocab = nlohmann::json::object();
    for (const auto& [kind, toks] : vocab_.tokens) vocab[std::string(slot_kind_name(kind))] = toks;
    j["vocab"] = vocab;
    nlohmann::json tables = nlohmann::json::object();
    for (const auto& [key, c] : tables_) tables[key] = c.by_token;
    j["tables"] = tables;
    return j;
  }

  static ReferenceModel from_json(const nlohmann::json& j) {
    try {
      if (j.at("schema") != 1 || j.at("model") != "reference") {
        throw Error(ErrorCode::kSchema, "not a reference model state (schema 1)");
      }
      SlotVocabulary v;
      for (const auto& [name, toks] : j.at("vocab").items()) {
        auto kind = parse_slot_kind(name);
        if (!kind) throw Error(ErrorCode::kSchema, "unknown slot kind '" + name + "'");
        v.tokens[*kind] = toks.get<std::vector<std::string>>();
        if (!std::is_sorted(v.tokens[*kind].begin(), v.tokens[*kind].end())) {
          throw Error(ErrorCode::kSchema, "vocabulary of " + name + " is not sorted");
        }
      }
      ReferenceModel m(std::move(v), j.at("alpha").get<double>());
      m.steps_ = j.value("steps", std::size_t{0});
      m.texts_observed_ = j.value("texts_observed", std::size_t{0});
      for (const auto& [key, counts] : j.at("tables").items()) {
        auto& c = m.tables_[key];
        for (const auto& [tok, n] : counts.items()) {
          c.by_token[tok] = n.get<std::uint64_t>();
          c.total += n.get<std::uint64_t>();
        }
      }
      return m;
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kSchema, std::string("malformed model state: ") + e.what());
    }
  }

 private:
  std::vector<std::string> keys_for(const MaskSite& site, std::size_t position,
                                    const std::string& sig) const {
    auto base = std::string(slot_kind_name(site.kind)) + "|" + std::to_string(position);
    auto ctx = base + "|" + text::join(site.context, " ");
    return {ctx + "|" + sig, ctx, base};
  }

  double prob(SlotKind kind, const std::vector<std::string>& keys, const std::string& tok) const {
    const double v = static_cast<double>(vocab_.of(kind).size());
    for (const auto& key : keys) {
      auto it = tables_.find(key);
      if (it == tables_.end() || it->second.total == 0) continue;
      auto c = it->second.by_token.find(tok);
      double n = c == it->second.by_token.end() ? 0.0 : static_cast<double>(c->second);
      return (n + alpha_) / (static_cast<double>(it->second.total) + alpha_ * v);
    }
    return 1.0 / v;
  }

  // Top-k entries of one position: (log p, vocabulary index), best first.
  std::vector<std::pair<double, std::size_t>> top_tokens(const MaskSite& site, std::size_t position,
                                                         const std::string& sig, std::size_t k,
                                                         bool allow_end) const {
    auto keys = keys_for(site, position, sig);
    const auto& v = vocab_.of(site.kind);
    std::vector<std::pair<double, std::size_t>> scored;
    scored.reserve(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!allow_end && v[i] == kSlotEndToken) continue;
      scored.emplace_back(std::log(prob(site.kind, keys, v[i])), i);
    }
    auto n = std::min(k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n), scored.end(),
                      [](const auto& a, const auto& b) {
                        return a.first != b.first ? a.first > b.first : a.second < b.second;
                      });
    scored.resize(n);
    return scored;
  }

  // Positions are conditionally independent given the key, so keeping the
  // k best tokens per position is enough for an exact k-best list.
  std::vector<Candidate> beam(const MaskSite& site, const std::string& sig, std::size_t k) const {
    const auto& v = vocab_.of(site.kind);
    struct Hyp {
      double score;
      std::vector<std::size_t> toks;
    };
    auto better = [](const Hyp& a, const Hyp& b) {
      return a.score != b.score ? a.score > b.score : a.toks < b.toks;
    };
    std::size_t length = 1;
    if (site.kind == SlotKind::kLocation) length = 4;
    if (site.kind == SlotKind::kAttributes) length = kMaxAttributes + 1;

    std::vector<Hyp> live{{0.0, {}}};
    std::vector<Hyp> done;
    for (std::size_t p = 0; p < length && !live.empty(); ++p) {
      std::vector<Hyp> next;
      bool attrs = site.kind == SlotKind::kAttributes;
      bool must_end = attrs && p == kMaxAttributes;
      for (const auto& h : live) {
        for (const auto& [lp, idx] : top_tokens(site, p, sig, must_end ? v.size() : k, attrs && p > 0)) {
          if (must_end && v[idx] != kSlotEndToken) continue;
          Hyp n{h.score + lp, h.toks};
          n.toks.push_back(idx);
          if (attrs && v[idx] == kSlotEndToken) {
            done.push_back(std::move(n));
          } else {
            next.push_back(std::move(n));
          }
        }
      }
      std::sort(next.begin(), next.end(), better);
      if (next.size() > k) next.resize(k);
      live = std::move(next);
    }
    if (site.kind != SlotKind::kAttributes) done = std::move(live);
    std::sort(done.begin(), done.end(), better);
    if (done.size() > k) done.resize(k);

    std::vector<Candidate> out;
    for (const auto& h : done) {
      std::vector<std::string> content;
      for (auto idx : h.toks) {
        if (v[idx] != kSlotEndToken) content.push_back(v[idx]);
      }
      out.push_back({slot_fill(site.kind, content), h.score});
    }
    return out;
  }

  SlotVocabulary vocab_;
  double alpha_ = 1.0;
  std::map<std::string, Counts> tables_;
  std::size_t steps_ = 0;
  std::size_t texts_observed_ = 0;
};

// Answers from a lookup of gold pairs; predicts nothing for unknown inputs.
class OracleModel : public SequenceModel {
 public:
  double train_step(const MaskedPair& pair, const ImageFeatures& features) override {
    auto& fills = gold_[key(pair.input_tokens, features)];
    fills.clear();
    for (const auto& [site, slot] : pair_sites(pair)) {
      fills.push_back(slot_fill(site.kind, slot_content(pair.target_tokens, *slot)));
    }
    return 0.0;
  }

  std::vector<SlotPrediction> predict_topk(const std::vector<std::string>& input_tokens,
                                           const ImageFeatures& features,
                                           std::size_t k) const override {
    if (k < 1) throw Error(ErrorCode::kInvalidArgument, "k must be at least 1");
    auto sites = locate_mask_sites(input_tokens);
    auto it = gold_.find(key(input_tokens, features));
    std::vector<SlotPrediction> out;
    for (std::size_t i = 0; i < sites.size(); ++i) {
      SlotPrediction p{sites[i], {}};
      if (it != gold_.end() && i < it->second.size()) p.candidates.push_back({it->second[i], 0.0});
      out.push_back(std::move(p));
    }
    return out;
  }

 private:
  static std::string key(const std::vector<std::string>& input, const ImageFeatures& f) {
    return text::join(input, "\x1f") + "\x1e" + feature_signature(f);
  }

  std::map<std::string, std::vector<std::vector<std::string>>> gold_;
};

// ---------------------------------------------------------------------------
// Training loop

using FeatureProvider = std::function<ImageFeatures(const VisualRecord&)>;

struct TrainingOptions {
  MaskPolicy policy = MaskPolicy::kAll;
  FeatureProvider features;  // synthesized from the plan seed when unset
  std::optional<std::filesystem::path> out_dir;
};

struct LogEntry {
  Stage stage;
  int epoch;
  std::optional<double> mean_loss;  // unset for an epoch with no records
  std::size_t records = 0;
  std::size_t texts = 0;
  std::size_t replayed = 0;
  std::size_t skipped = 0;  // records with nothing to mask for their stage

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["stage"] = std::string(stage_name(stage));
    j["epoch"] = epoch;
    j["mean_loss"] = mean_loss ? nlohmann::json(*mean_loss) : nlohmann::json(nullptr);
    j["records"] = records;
    j["texts"] = texts;
    j["replayed"] = replayed;
    j["skipped"] = skipped;
    return j;
  }
};

struct TrainingRun {
  std::vector<LogEntry> log;
  std::string buffer_manifest;     // buffer-manifest.jsonl content
  std::map<Stage, std::size_t> buffer_sizes;

  std::string log_jsonl() const {
    std::vector<nlohmann::json> rows;
    for (const auto& e : log) rows.push_back(e.to_json());
    return to_jsonl(rows);
  }
};

inline std::uint64_t feature_seed(std::uint64_t seed) { return derive_seed(seed, "features"); }

// The masked pair a record trains on: its own stage's slots.
inline MaskedPair training_pair(const VisualRecord& record, const OntologyRegistry& registry,
                                std::uint64_t seed, MaskPolicy policy = MaskPolicy::kAll) {
  auto block = serialize_record(record, registry);
  return mask_for_stage(block, record.source_stage, derive_seed(seed, "mask/" + record.image_id),
                        policy);
}

// Runs the whole schedule. Writes training-log.jsonl, model-state.json (for
// the reference model) and buffer-manifest.jsonl when `out_dir` is set.
inline TrainingRun run_training(const CurriculumPlan& plan, const SuiteData& data,
                                const OntologyRegistry& registry, SequenceModel& model,
                                const TrainingOptions& options = {}) {
  if (data.record_count() == 0) {
    throw Error(ErrorCode::kInvalidPlan, "plan has no records to train on");
  }
  Scheduler scheduler(plan, data.sizes(), data.warmup_texts.size());
  const auto fseed = feature_seed(plan.seed);
  auto features = options.features ? options.features : FeatureProvider([&](const VisualRecord& r) {
    return synthesize_features(r, registry, fseed);
  });

  // Pairs and features are fixed per record, so build them once.
  std::map<Stage, std::vector<std::unique_ptr<MaskedPair>>> pairs;  // null: nothing to mask
  std::map<Stage, std::vector<ImageFeatures>> feats;
  for (const auto& [stage, records] : data.records) {
    for (const auto& r : records) {
      try {
        pairs[stage].push_back(
            std::make_unique<MaskedPair>(training_pair(r, registry, plan.seed, options.policy)));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kStageInapplicable) throw;
        pairs[stage].push_back(nullptr);
      }
      feats[stage].push_back(features(r));
    }
  }

  TrainingRun run;
  while (auto mix = scheduler.next()) {
    LogEntry entry{mix->stage, mix->epoch, std::nullopt};
    double total = 0.0;
    for (const auto& item : mix->items) {
      if (item.source == Stage::kWarmup) {
        model.observe_text(data.warmup_texts.at(item.index));
        ++entry.texts;
        continue;
      }
      const auto& pair = pairs.at(item.source).at(item.index);
      if (!pair) {
        ++entry.skipped;
        continue;
      }
      total += model.train_step(*pair, feats.at(item.source).at(item.index));
      ++entry.records;
      if (item.replay) ++entry.replayed;
    }
    if (entry.records) entry.mean_loss = total / static_cast<double>(entry.records);
    run.log.push_back(entry);
  }
  run.buffer_manifest = buffer_manifest_jsonl(scheduler, data);
  run.buffer_sizes = scheduler.buffer_sizes();

  if (options.out_dir) {
    write_file_atomic(*options.out_dir / "training-log.jsonl", run.log_jsonl());
    write_file_atomic(*options.out_dir / "buffer-manifest.jsonl", run.buffer_manifest);
    if (const auto* ref = dynamic_cast<const ReferenceModel*>(&model)) {
      auto state = ref->to_json();
      state["feature_seed"] = fseed;
      write_file_atomic(*options.out_dir / "model-state.json", state.dump() + "\n");
    }
  }
  return run;
}

// Share of training slots whose rank-1 prediction equals the gold fill.
struct SlotAccuracy {
  std::size_t slots = 0;
  std::size_t correct = 0;
  double rate() const { return slots ? static_cast<double>(correct) / static_cast<double>(slots) : 0.0; }
};

inline SlotAccuracy training_slot_accuracy(const SequenceModel& model, const SuiteData& data,
                                           const OntologyRegistry& registry, std::uint64_t seed,
                                           const FeatureProvider& features = {},
                                           MaskPolicy policy = MaskPolicy::kAll) {
  SlotAccuracy acc;
  const auto fseed = feature_seed(seed);
  for (const auto& [stage, records] : data.records) {
    for (const auto& r : records) {
      MaskedPair pair;
      try {
        pair = training_pair(r, registry, seed, policy);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kStageInapplicable) throw;
        continue;
      }
      auto f = features ? features(r) : synthesize_features(r, registry, fseed);
      auto preds = model.predict_topk(pair.input_tokens, f, 1);
      auto sites = pair_sites(pair);
      for (std::size_t i = 0; i < sites.size(); ++i) {
        ++acc.slots;
        auto gold = slot_fill(sites[i].first.kind, slot_content(pair.target_tokens, *sites[i].second));
        if (i < preds.size() && !preds[i].candidates.empty() && preds[i].candidates[0].fill == gold) {
          ++acc.correct;
        }
      }
    }
  }
  return acc;
}

}  // namespace vistruct
