#ifndef LEXFORGE_PRETRAIN_INSTANCES_HPP
#define LEXFORGE_PRETRAIN_INSTANCES_HPP

// Masked-LM + next-sentence-prediction instance generation.
//
// Randomness is partitioned so that every (pass, document) pair can be
// processed independently:
//   - chunk targets for a document come from a generator keyed on
//     (seed, document), so every pass packs a document identically and each
//     pass yields the same number of instances;
//   - A/B split points, the next-sentence coin, random-document sampling,
//     truncation side and masking come from a generator keyed on
//     (seed, pass, document).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "lexforge/error.hpp"
#include "lexforge/io.hpp"
#include "lexforge/rng.hpp"
#include "lexforge/wordpiece.hpp"

namespace lexforge {

struct PretrainConfig {
  std::size_t max_seq_length = 128;
  std::size_t dupe_factor = 5;
  double masked_lm_prob = 0.15;
  std::size_t max_predictions_per_seq = 20;
  double short_seq_prob = 0.1;
  std::uint64_t random_seed = 12345;

  void validate() const {
    if (max_seq_length < 5) throw Error(ErrorKind::kInvalidConfig, "max_seq_length must be >= 5");
    if (dupe_factor < 1) throw Error(ErrorKind::kInvalidConfig, "dupe_factor must be >= 1");
    if (!(masked_lm_prob > 0.0 && masked_lm_prob < 1.0))
      throw Error(ErrorKind::kInvalidConfig, "masked_lm_prob must be in (0,1)");
    if (max_predictions_per_seq < 1) throw Error(ErrorKind::kInvalidConfig, "max_predictions_per_seq must be >= 1");
    if (!(short_seq_prob >= 0.0 && short_seq_prob <= 1.0))
      throw Error(ErrorKind::kInvalidConfig, "short_seq_prob must be in [0,1]");
  }
};

enum class MaskAction { kMask, kRandom, kKeep };

struct PretrainInstance {
  std::vector<std::string> tokens;
  std::vector<int> segment_ids;
  bool is_random_next = false;
  std::vector<std::size_t> masked_lm_positions;
  std::vector<std::string> masked_lm_labels;
  // Provenance: index of the document each segment was drawn from.
  std::size_t a_document = 0;
  std::size_t b_document = 0;

  bool operator==(const PretrainInstance&) const = default;
};

struct MaskResult {
  std::vector<std::string> tokens;
  std::vector<std::size_t> positions;  // ascending
  std::vector<std::string> labels;     // original tokens, aligned with positions
  std::vector<MaskAction> actions;     // aligned with positions
};

// Round half up; the epsilon absorbs products like 0.15 * 10 landing just
// under the half.
inline std::size_t predictions_for_length(std::size_t length, const PretrainConfig& cfg) {
  const double raw = static_cast<double>(length) * cfg.masked_lm_prob;
  const auto rounded = static_cast<std::size_t>(std::floor(raw + 0.5 + 1e-9));
  return std::min(cfg.max_predictions_per_seq, std::max<std::size_t>(1, rounded));
}

namespace detail {

inline std::vector<TokenId> non_special_ids(const Vocabulary& vocab) {
  std::vector<TokenId> ids;
  ids.reserve(vocab.size());
  for (std::size_t i = 0; i < vocab.size(); ++i)
    if (!vocab.is_special(static_cast<TokenId>(i))) ids.push_back(static_cast<TokenId>(i));
  return ids;
}

}  // namespace detail

// Selects min(cap, max(1, round(len * masked_lm_prob))) of the non-[CLS]
// non-[SEP] positions and applies 80% [MASK] / 10% random non-special token
// / 10% unchanged.
inline MaskResult mask_tokens(std::span<const std::string> tokens, const Vocabulary& vocab, const PretrainConfig& cfg,
                              Rng& rng, std::span<const TokenId> replacement_pool = {}) {
  const auto& sp = vocab.specials();
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < tokens.size(); ++i)
    if (tokens[i] != sp.cls && tokens[i] != sp.sep) candidates.push_back(i);
  if (candidates.empty()) throw Error(ErrorKind::kNoMaskablePosition, "sequence has no maskable token");

  std::vector<TokenId> owned_pool;
  if (replacement_pool.empty()) {
    owned_pool = detail::non_special_ids(vocab);
    replacement_pool = owned_pool;
  }

  rng.shuffle(std::span<std::size_t>(candidates));
  const std::size_t count = std::min(predictions_for_length(tokens.size(), cfg), candidates.size());

  MaskResult r;
  r.tokens.assign(tokens.begin(), tokens.end());
  std::vector<std::size_t> chosen(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(count));
  std::vector<MaskAction> drawn;
  drawn.reserve(count);
  for (std::size_t pos : chosen) {
    const double u = rng.uniform();
    if (u < 0.8) {
      r.tokens[pos] = sp.mask;
      drawn.push_back(MaskAction::kMask);
    } else if (u < 0.9) {
      if (replacement_pool.empty()) {
        r.tokens[pos] = sp.mask;
        drawn.push_back(MaskAction::kMask);
      } else {
        r.tokens[pos] = vocab.token(replacement_pool[rng.below(replacement_pool.size())]);
        drawn.push_back(MaskAction::kRandom);
      }
    } else {
      drawn.push_back(MaskAction::kKeep);
    }
  }

  std::vector<std::size_t> order(count);
  for (std::size_t i = 0; i < count; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return chosen[a] < chosen[b]; });
  for (std::size_t i : order) {
    r.positions.push_back(chosen[i]);
    r.labels.push_back(tokens[chosen[i]]);
    r.actions.push_back(drawn[i]);
  }
  return r;
}

// Wordpiece-tokenized document: one token list per non-empty sentence.
using TokenizedDoc = std::vector<std::vector<std::string>>;

inline std::vector<TokenizedDoc> tokenize_documents(std::span<const std::vector<std::string>> docs,
                                                    const Vocabulary& vocab) {
  std::vector<TokenizedDoc> out;
  out.reserve(docs.size());
  for (const auto& doc : docs) {
    TokenizedDoc t;
    for (const auto& sentence : doc) {
      auto pieces = tokenize(sentence, vocab);
      if (!pieces.empty()) t.push_back(std::move(pieces));
    }
    out.push_back(std::move(t));
  }
  return out;
}

// Chunk boundaries for one document: each entry is the exclusive end
// sentence index of a chunk.
inline std::vector<std::size_t> pack_chunks(const TokenizedDoc& doc, std::size_t target) {
  std::vector<std::size_t> ends;
  std::size_t length = 0;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    length += doc[i].size();
    if (i + 1 == doc.size() || length >= target) {
      ends.push_back(i + 1);
      length = 0;
    }
  }
  return ends;
}

namespace detail {

inline void truncate_pair_random(std::vector<std::string>& a, std::vector<std::string>& b, std::size_t budget,
                                 Rng& rng) {
  while (a.size() + b.size() > budget) {
    auto& longer = a.size() > b.size() ? a : b;
    if (rng.bernoulli(0.5))
      longer.erase(longer.begin());
    else
      longer.pop_back();
  }
}

inline std::size_t chunk_target(std::size_t doc_index, const PretrainConfig& cfg) {
  const std::size_t max_tokens = cfg.max_seq_length - 3;
  Rng rng(derive_seed(cfg.random_seed, {0x7061636BULL, doc_index}));
  if (rng.bernoulli(cfg.short_seq_prob)) return static_cast<std::size_t>(rng.between(2, static_cast<std::int64_t>(max_tokens)));
  return max_tokens;
}

}  // namespace detail

// Instances of one document for one pass. `docs` must hold at least two
// documents.
inline std::vector<PretrainInstance> instances_from_document(std::span<const TokenizedDoc> docs, std::size_t doc_index,
                                                             std::size_t pass, const Vocabulary& vocab,
                                                             const PretrainConfig& cfg,
                                                             std::span<const TokenId> replacement_pool) {
  const TokenizedDoc& doc = docs[doc_index];
  const std::size_t max_tokens = cfg.max_seq_length - 3;
  const std::size_t target = detail::chunk_target(doc_index, cfg);
  Rng rng(derive_seed(cfg.random_seed, {0x70617373ULL, pass, doc_index}));

  std::vector<PretrainInstance> out;
  std::size_t begin = 0;
  for (std::size_t end : pack_chunks(doc, target)) {
    const std::size_t n = end - begin;
    std::vector<std::string> a, b;
    const bool random_next = rng.bernoulli(0.5);
    std::size_t b_document = doc_index;

    if (n >= 2) {
      const std::size_t a_end = begin + static_cast<std::size_t>(rng.between(1, static_cast<std::int64_t>(n) - 1));
      for (std::size_t j = begin; j < a_end; ++j) a.insert(a.end(), doc[j].begin(), doc[j].end());
      if (!random_next)
        for (std::size_t j = a_end; j < end; ++j) b.insert(b.end(), doc[j].begin(), doc[j].end());
    } else {
      a = doc[begin];
      // A one-sentence chunk with a real continuation is split inside the
      // sentence; a one-token sentence can only be paired at random.
      if (!random_next && a.size() >= 2) {
        const auto cut = static_cast<std::ptrdiff_t>(rng.between(1, static_cast<std::int64_t>(a.size()) - 1));
        b.assign(a.begin() + cut, a.end());
        a.erase(a.begin() + cut, a.end());
      }
    }

    const bool use_random = random_next || b.empty();
    if (use_random) {
      // Uniform over the other documents.
      std::size_t other = static_cast<std::size_t>(rng.below(docs.size() - 1));
      if (other >= doc_index) ++other;
      const TokenizedDoc& random_doc = docs[other];
      const std::size_t target_b = target > a.size() ? target - a.size() : 1;
      const std::size_t start = static_cast<std::size_t>(rng.below(random_doc.size()));
      for (std::size_t j = start; j < random_doc.size(); ++j) {
        b.insert(b.end(), random_doc[j].begin(), random_doc[j].end());
        if (b.size() >= target_b) break;
      }
      b_document = other;
    }
    detail::truncate_pair_random(a, b, max_tokens, rng);

    PretrainInstance inst;
    inst.tokens.reserve(a.size() + b.size() + 3);
    inst.tokens.push_back(vocab.specials().cls);
    inst.tokens.insert(inst.tokens.end(), a.begin(), a.end());
    inst.tokens.push_back(vocab.specials().sep);
    inst.segment_ids.assign(inst.tokens.size(), 0);
    inst.tokens.insert(inst.tokens.end(), b.begin(), b.end());
    inst.tokens.push_back(vocab.specials().sep);
    inst.segment_ids.resize(inst.tokens.size(), 1);
    inst.is_random_next = use_random;
    inst.a_document = doc_index;
    inst.b_document = b_document;

    auto masked = mask_tokens(inst.tokens, vocab, cfg, rng, replacement_pool);
    inst.tokens = std::move(masked.tokens);
    inst.masked_lm_positions = std::move(masked.positions);
    inst.masked_lm_labels = std::move(masked.labels);
    out.push_back(std::move(inst));
    begin = end;
  }
  return out;
}

// All passes over the corpus, emitted in (pass, document) order. Empty
// documents (no tokens at all) are skipped but keep their index.
inline std::vector<PretrainInstance> create_instances_from_tokenized(std::span<const TokenizedDoc> docs,
                                                                     const Vocabulary& vocab,
                                                                     const PretrainConfig& cfg) {
  cfg.validate();
  const auto usable = std::count_if(docs.begin(), docs.end(), [](const TokenizedDoc& d) { return !d.empty(); });
  if (usable < 2) throw Error(ErrorKind::kTooFewDocuments, "need at least two non-empty documents");
  // Random-document sampling only ever lands on non-empty documents.
  std::vector<TokenizedDoc> compact;
  std::vector<std::size_t> original_index;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (docs[i].empty()) continue;
    compact.push_back(docs[i]);
    original_index.push_back(i);
  }
  const auto pool = detail::non_special_ids(vocab);
  std::vector<PretrainInstance> out;
  for (std::size_t pass = 0; pass < cfg.dupe_factor; ++pass) {
    for (std::size_t d = 0; d < compact.size(); ++d) {
      auto part = instances_from_document(compact, d, pass, vocab, cfg, pool);
      for (auto& inst : part) {
        inst.a_document = original_index[inst.a_document];
        inst.b_document = original_index[inst.b_document];
        out.push_back(std::move(inst));
      }
    }
  }
  return out;
}

inline std::vector<PretrainInstance> create_instances(std::span<const std::vector<std::string>> docs,
                                                      const Vocabulary& vocab, const PretrainConfig& cfg) {
  const auto tokenized = tokenize_documents(docs, vocab);
  return create_instances_from_tokenized(tokenized, vocab, cfg);
}

// ---------------------------------------------------------------------------
// Line-oriented record format: one JSON object per line with the fields
// input_ids, input_mask, segment_ids (padded to max_seq_length),
// masked_lm_positions, masked_lm_ids, masked_lm_weights (padded to
// max_predictions_per_seq) and next_sentence_label.

inline std::string serialize_instance(const PretrainInstance& inst, const Vocabulary& vocab,
                                      const PretrainConfig& cfg) {
  if (inst.tokens.size() > cfg.max_seq_length)
    throw Error(ErrorKind::kInvalidConfig, "instance longer than max_seq_length");
  if (inst.masked_lm_positions.size() > cfg.max_predictions_per_seq)
    throw Error(ErrorKind::kInvalidConfig, "instance has more predictions than max_predictions_per_seq");

  std::vector<TokenId> input_ids = convert_tokens_to_ids(inst.tokens, vocab);
  std::vector<int> input_mask(input_ids.size(), 1);
  std::vector<int> segment_ids = inst.segment_ids;
  input_ids.resize(cfg.max_seq_length, vocab.pad_id());
  input_mask.resize(cfg.max_seq_length, 0);
  segment_ids.resize(cfg.max_seq_length, 0);

  std::vector<std::size_t> positions = inst.masked_lm_positions;
  std::vector<TokenId> label_ids = convert_tokens_to_ids(inst.masked_lm_labels, vocab);
  std::vector<double> weights(positions.size(), 1.0);
  positions.resize(cfg.max_predictions_per_seq, 0);
  label_ids.resize(cfg.max_predictions_per_seq, 0);
  weights.resize(cfg.max_predictions_per_seq, 0.0);

  nlohmann::ordered_json j;
  j["input_ids"] = input_ids;
  j["input_mask"] = input_mask;
  j["segment_ids"] = segment_ids;
  j["masked_lm_positions"] = positions;
  j["masked_lm_ids"] = label_ids;
  j["masked_lm_weights"] = weights;
  j["next_sentence_label"] = inst.is_random_next ? 1 : 0;
  return j.dump();
}

// Inverse of serialize_instance. Provenance fields are not stored and come
// back as zero.
inline PretrainInstance deserialize_instance(std::string_view line, const Vocabulary& vocab) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line.begin(), line.end());
    PretrainInstance inst;
    const auto ids = j.at("input_ids").get<std::vector<TokenId>>();
    const auto mask = j.at("input_mask").get<std::vector<int>>();
    const auto segments = j.at("segment_ids").get<std::vector<int>>();
    if (ids.size() != mask.size() || ids.size() != segments.size())
      throw Error(ErrorKind::kFormatError, "field lengths differ");
    for (std::size_t i = 0; i < ids.size() && mask[i] == 1; ++i) {
      if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= vocab.size())
        throw Error(ErrorKind::kFormatError, "token id out of range");
      inst.tokens.push_back(vocab.token(ids[i]));
      inst.segment_ids.push_back(segments[i]);
    }
    const auto positions = j.at("masked_lm_positions").get<std::vector<std::size_t>>();
    const auto label_ids = j.at("masked_lm_ids").get<std::vector<TokenId>>();
    const auto weights = j.at("masked_lm_weights").get<std::vector<double>>();
    if (positions.size() != label_ids.size() || positions.size() != weights.size())
      throw Error(ErrorKind::kFormatError, "prediction field lengths differ");
    for (std::size_t i = 0; i < weights.size() && weights[i] > 0.0; ++i) {
      if (label_ids[i] < 0 || static_cast<std::size_t>(label_ids[i]) >= vocab.size())
        throw Error(ErrorKind::kFormatError, "label id out of range");
      inst.masked_lm_positions.push_back(positions[i]);
      inst.masked_lm_labels.push_back(vocab.token(label_ids[i]));
    }
    inst.is_random_next = j.at("next_sentence_label").get<int>() == 1;
    return inst;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kFormatError, e.what());
  }
}

inline std::size_t serialize_instances(std::span<const PretrainInstance> instances, const Vocabulary& vocab,
                                       const PretrainConfig& cfg, const std::filesystem::path& out_path) {
  std::string out;
  for (const auto& inst : instances) {
    out += serialize_instance(inst, vocab, cfg);
    out += '\n';
  }
  io::write_file(out_path, out);
  return instances.size();
}

inline std::vector<PretrainInstance> read_instances(const std::filesystem::path& path, const Vocabulary& vocab) {
  std::vector<PretrainInstance> out;
  const auto lines = io::read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    try {
      out.push_back(deserialize_instance(lines[i], vocab));
    } catch (const Error& e) {
      throw Error(ErrorKind::kFormatError, path.string() + ": " + e.what(), static_cast<std::int64_t>(i + 1));
    }
  }
  return out;
}

}  // namespace lexforge

#endif  // LEXFORGE_PRETRAIN_INSTANCES_HPP
