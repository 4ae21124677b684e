#ifndef LEXFORGE_WORDPIECE_HPP
#define LEXFORGE_WORDPIECE_HPP

// WordPiece vocabulary, tokenizer and encoder, plus the legal-term
// vocabulary extension.
//
// Tokenization is the usual two stages. The basic stage cleans the text,
// lowercases it for uncased vocabularies, and splits on whitespace and
// punctuation; multi-word or punctuated vocabulary entries ("habeas corpus",
// "pro-rata") are matched longest-first before punctuation splitting so
// they survive as one token. The second stage splits each word greedily
// into the longest vocabulary prefixes, continuation pieces carrying "##".

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "lexforge/error.hpp"
#include "lexforge/io.hpp"
#include "lexforge/summarizer.hpp"
#include "lexforge/text.hpp"

namespace lexforge {

inline constexpr std::size_t kMaxCharsPerWord = 100;
inline constexpr std::string_view kContinuationPrefix = "##";

struct SpecialTokens {
  std::string pad = "[PAD]";
  std::string unk = "[UNK]";
  std::string cls = "[CLS]";
  std::string sep = "[SEP]";
  std::string mask = "[MASK]";
};

using TokenId = std::int32_t;

class Vocabulary {
 public:
  Vocabulary() = default;

  // Ids are positions in `tokens`.
  static Vocabulary from_tokens(std::vector<std::string> tokens, bool cased, SpecialTokens specials = {}) {
    Vocabulary v;
    v.cased_ = cased;
    v.specials_ = std::move(specials);
    v.tokens_ = std::move(tokens);
    for (std::size_t i = 0; i < v.tokens_.size(); ++i) {
      if (v.tokens_[i].empty())
        throw Error(ErrorKind::kFormatError, "empty token", static_cast<std::int64_t>(i + 1));
      if (!v.index_.emplace(v.tokens_[i], static_cast<TokenId>(i)).second)
        throw Error(ErrorKind::kDuplicateToken, "duplicate token '" + v.tokens_[i] + "'",
                    static_cast<std::int64_t>(i + 1));
    }
    v.resolve_specials();
    v.collect_protected();
    return v;
  }

  std::size_t size() const { return tokens_.size(); }
  bool cased() const { return cased_; }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const SpecialTokens& specials() const { return specials_; }
  const std::string& token(TokenId id) const { return tokens_.at(static_cast<std::size_t>(id)); }

  std::optional<TokenId> find(std::string_view token) const {
    auto it = index_.find(std::string(token));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  bool contains(std::string_view token) const { return find(token).has_value(); }

  TokenId id(std::string_view token) const {
    if (auto found = find(token)) return *found;
    return unk_id_;
  }

  TokenId pad_id() const { return pad_id_; }
  TokenId unk_id() const { return unk_id_; }
  TokenId cls_id() const { return cls_id_; }
  TokenId sep_id() const { return sep_id_; }
  TokenId mask_id() const { return mask_id_; }

  bool is_special(TokenId id) const {
    return id == pad_id_ || id == unk_id_ || id == cls_id_ || id == sep_id_ || id == mask_id_;
  }

  // Entries the basic tokenizer would otherwise split apart, longest first.
  const std::vector<std::string>& protected_terms() const { return protected_; }

  Vocabulary with_appended(std::span<const std::string> extra) const {
    std::vector<std::string> tokens = tokens_;
    tokens.insert(tokens.end(), extra.begin(), extra.end());
    return from_tokens(std::move(tokens), cased_, specials_);
  }

  std::string to_text() const {
    std::string out;
    for (const auto& t : tokens_) {
      out += t;
      out += '\n';
    }
    return out;
  }

 private:
  void resolve_specials() {
    const auto need = [&](const std::string& token, const char* name) {
      auto found = find(token);
      if (!found) throw Error(ErrorKind::kMissingSpecial, std::string(name) + " token '" + token + "' not in vocabulary");
      return *found;
    };
    pad_id_ = need(specials_.pad, "pad");
    unk_id_ = need(specials_.unk, "unk");
    cls_id_ = need(specials_.cls, "cls");
    sep_id_ = need(specials_.sep, "sep");
    mask_id_ = need(specials_.mask, "mask");
  }

  static bool needs_protection(std::string_view t) {
    if (t.size() < 2 || t.starts_with(kContinuationPrefix)) return false;
    if (t.front() == '[' && t.back() == ']') return false;
    bool alnum = false, splits = false;
    for (std::size_t pos = 0; pos < t.size();) {
      const char32_t c = text::decode_utf8(t, pos);
      if (text::is_alnum(c)) alnum = true;
      if (text::is_space(c) || text::is_punct(c)) splits = true;
    }
    return alnum && splits;
  }

  void collect_protected() {
    protected_.clear();
    for (std::size_t i = 0; i < tokens_.size(); ++i)
      if (!is_special(static_cast<TokenId>(i)) && needs_protection(tokens_[i])) protected_.push_back(tokens_[i]);
    std::stable_sort(protected_.begin(), protected_.end(),
                     [](const std::string& a, const std::string& b) { return a.size() > b.size(); });
  }

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
  SpecialTokens specials_;
  std::vector<std::string> protected_;
  bool cased_ = false;
  TokenId pad_id_ = 0, unk_id_ = 0, cls_id_ = 0, sep_id_ = 0, mask_id_ = 0;
};

inline Vocabulary load_vocab(const std::filesystem::path& path, bool cased = false, SpecialTokens specials = {}) {
  return Vocabulary::from_tokens(io::read_lines(path), cased, std::move(specials));
}

inline void save_vocab(const Vocabulary& vocab, const std::filesystem::path& path) {
  io::write_file(path, vocab.to_text());
}

namespace detail {

inline bool boundary_after(std::string_view s, std::size_t at) {
  if (at >= s.size()) return true;
  std::size_t pos = at;
  const char32_t c = text::decode_utf8(s, pos);
  return text::is_space(c) || text::is_punct(c);
}

inline void flush_word(std::string& word, std::vector<std::string>& out) {
  if (!word.empty()) {
    out.push_back(std::move(word));
    word.clear();
  }
}

}  // namespace detail

// Whitespace/punctuation split with protected-term matching.
inline std::vector<std::string> basic_tokenize(std::string_view raw, const Vocabulary& vocab) {
  std::string s = text::clean(raw);
  if (!vocab.cased()) s = text::to_lower(s);
  const auto& terms = vocab.protected_terms();

  std::vector<std::string> out;
  std::string word;
  bool at_boundary = true;
  for (std::size_t pos = 0; pos < s.size();) {
    if (at_boundary && word.empty() && !terms.empty()) {
      const std::string_view rest = std::string_view(s).substr(pos);
      auto hit = std::find_if(terms.begin(), terms.end(), [&](const std::string& t) {
        return rest.starts_with(t) && detail::boundary_after(s, pos + t.size());
      });
      if (hit != terms.end()) {
        out.push_back(*hit);
        pos += hit->size();
        continue;
      }
    }
    const std::size_t start = pos;
    const char32_t c = text::decode_utf8(s, pos);
    if (text::is_space(c)) {
      detail::flush_word(word, out);
      at_boundary = true;
    } else if (text::is_punct(c)) {
      detail::flush_word(word, out);
      out.emplace_back(s.substr(start, pos - start));
      at_boundary = true;
    } else {
      word.append(s, start, pos - start);
      at_boundary = false;
    }
  }
  detail::flush_word(word, out);
  return out;
}

// Greedy longest-prefix split of one basic token.
inline std::vector<std::string> wordpiece_split(std::string_view word, const Vocabulary& vocab) {
  const std::string& unk = vocab.specials().unk;
  std::vector<std::size_t> bounds;  // byte offset of every code point, plus end
  for (std::size_t pos = 0; pos < word.size();) {
    bounds.push_back(pos);
    text::decode_utf8(word, pos);
  }
  bounds.push_back(word.size());
  const std::size_t chars = bounds.size() - 1;
  if (chars == 0) return {};
  if (chars > kMaxCharsPerWord) return {unk};

  std::vector<std::string> pieces;
  std::size_t start = 0;
  std::string candidate;
  while (start < chars) {
    std::size_t end = chars;
    bool found = false;
    for (; end > start; --end) {
      candidate.assign(start > 0 ? kContinuationPrefix : std::string_view{});
      candidate.append(word.substr(bounds[start], bounds[end] - bounds[start]));
      if (vocab.contains(candidate)) {
        found = true;
        break;
      }
    }
    if (!found) return {unk};
    pieces.push_back(candidate);
    start = end;
  }
  return pieces;
}

inline std::vector<std::string> tokenize(std::string_view input, const Vocabulary& vocab) {
  std::vector<std::string> out;
  for (const auto& word : basic_tokenize(input, vocab)) {
    for (auto& piece : wordpiece_split(word, vocab)) out.push_back(std::move(piece));
  }
  return out;
}

inline std::vector<TokenId> convert_tokens_to_ids(std::span<const std::string> tokens, const Vocabulary& vocab) {
  std::vector<TokenId> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(vocab.id(t));
  return ids;
}

struct Encoding {
  std::vector<TokenId> ids;
  std::vector<int> segment_ids;
  std::vector<int> attention_mask;
};

// Longest-first: drops the last token of the longer side (B on ties) until
// the pair fits in `budget`.
inline void truncate_pair(std::vector<std::string>& a, std::vector<std::string>& b, std::size_t budget) {
  while (a.size() + b.size() > budget) {
    if (a.size() > b.size())
      a.pop_back();
    else
      b.pop_back();
  }
}

inline Encoding encode(std::string_view text_a, const std::optional<std::string>& text_b, const Vocabulary& vocab,
                       std::size_t max_seq_length) {
  const std::size_t reserved = text_b ? 3 : 2;
  if (max_seq_length < reserved + 1)
    throw Error(ErrorKind::kLengthTooSmall,
                "max_seq_length " + std::to_string(max_seq_length) + " leaves no room for tokens");
  auto a = tokenize(text_a, vocab);
  std::vector<std::string> b;
  if (text_b) {
    b = tokenize(*text_b, vocab);
    truncate_pair(a, b, max_seq_length - reserved);
  } else if (a.size() > max_seq_length - reserved) {
    a.resize(max_seq_length - reserved);
  }

  Encoding e;
  e.ids.reserve(max_seq_length);
  e.ids.push_back(vocab.cls_id());
  for (const auto& t : a) e.ids.push_back(vocab.id(t));
  e.ids.push_back(vocab.sep_id());
  e.segment_ids.assign(e.ids.size(), 0);
  if (text_b) {
    for (const auto& t : b) e.ids.push_back(vocab.id(t));
    e.ids.push_back(vocab.sep_id());
    e.segment_ids.resize(e.ids.size(), 1);
  }
  e.attention_mask.assign(e.ids.size(), 1);
  e.ids.resize(max_seq_length, vocab.pad_id());
  e.segment_ids.resize(max_seq_length, 0);
  e.attention_mask.resize(max_seq_length, 0);
  return e;
}

// ---------------------------------------------------------------------------
// Legal vocabulary.

struct LegalTerm {
  std::string term;
  std::string definition;
  std::size_t doc_frequency = 0;
  // False when the dictionary row had no frequency column.
  bool frequency_known = false;
};

// Rows `term<TAB>definition[<TAB>doc_frequency]`; an optional header row
// starting with "term<TAB>" is skipped.
inline std::vector<LegalTerm> load_legal_dictionary(const std::filesystem::path& path) {
  std::vector<LegalTerm> out;
  const auto lines = io::read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (text::trim(lines[i]).empty()) continue;
    if (i == 0 && lines[i].starts_with("term\t")) continue;
    const auto fields = text::split(lines[i], '\t');
    const auto line_no = static_cast<std::int64_t>(i + 1);
    if (fields.size() < 2 || fields.size() > 3)
      throw Error(ErrorKind::kFormatError, path.string() + ": expected 2 or 3 fields", line_no);
    LegalTerm t;
    t.term = std::string(text::trim(fields[0]));
    t.definition = fields[1];
    if (t.term.empty()) throw Error(ErrorKind::kFormatError, path.string() + ": empty term", line_no);
    if (fields.size() == 3 && !text::trim(fields[2]).empty()) {
      const std::string df(text::trim(fields[2]));
      if (df.find_first_not_of("0123456789") != std::string::npos)
        throw Error(ErrorKind::kFormatError, path.string() + ": bad doc_frequency", line_no);
      t.doc_frequency = std::stoull(df);
      t.frequency_known = true;
    }
    out.push_back(std::move(t));
  }
  return out;
}

inline std::string format_legal_dictionary(std::span<const LegalTerm> terms) {
  std::string out;
  for (const auto& t : terms) {
    out += text::tsv_cell(t.term) + '\t' + text::tsv_cell(t.definition) + '\t' + std::to_string(t.doc_frequency) + '\n';
  }
  return out;
}

namespace detail {

inline bool alnum_at(std::string_view s, std::size_t at) {
  std::size_t pos = at;
  return text::is_alnum(text::decode_utf8(s, pos));
}

inline bool alnum_before(std::string_view s, std::size_t at) {
  if (at == 0) return false;
  std::size_t start = at - 1;
  while (start > 0 && (static_cast<unsigned char>(s[start]) & 0xC0) == 0x80) --start;
  return alnum_at(s, start);
}

// Case-insensitive whole-word containment; both inputs already lowered.
inline bool contains_word(std::string_view haystack, std::string_view needle) {
  if (needle.empty()) return false;
  for (std::size_t at = haystack.find(needle); at != std::string_view::npos; at = haystack.find(needle, at + 1)) {
    const std::size_t end = at + needle.size();
    const bool left_ok = !alnum_before(haystack, at) || !alnum_at(needle, 0);
    const bool right_ok = end >= haystack.size() || !alnum_at(haystack, end) || !alnum_before(needle, needle.size());
    if (left_ok && right_ok) return true;
  }
  return false;
}

}  // namespace detail

// Number of records whose text contains the term as a whole word,
// case-insensitively; repeated occurrences in a record count once.
inline std::vector<LegalTerm> term_doc_frequency(std::span<const LegalTerm> terms,
                                                 std::span<const ClassificationRecord> corpus) {
  std::vector<std::string> lowered;
  lowered.reserve(corpus.size());
  for (const auto& r : corpus) lowered.push_back(text::to_lower(text::clean(r.text)));
  std::vector<LegalTerm> out(terms.begin(), terms.end());
  for (auto& t : out) {
    const std::string needle = text::to_lower(text::clean(t.term));
    t.doc_frequency = static_cast<std::size_t>(std::count_if(
        lowered.begin(), lowered.end(), [&](const std::string& doc) { return detail::contains_word(doc, needle); }));
    t.frequency_known = true;
  }
  return out;
}

struct VocabExtension {
  Vocabulary vocab;
  std::vector<std::string> added;
};

// Appends terms with doc_frequency >= threshold that are not already in the
// vocabulary, in input order. Existing ids never move.
inline VocabExtension extend_vocab(const Vocabulary& vocab, std::span<const LegalTerm> terms, std::size_t threshold) {
  std::vector<std::string> added;
  std::unordered_set<std::string> pending;
  for (const auto& t : terms) {
    if (t.doc_frequency < threshold) continue;
    std::string normalized = text::clean(t.term);
    if (!vocab.cased()) normalized = text::to_lower(normalized);
    if (normalized.empty() || vocab.contains(normalized) || !pending.insert(normalized).second) continue;
    added.push_back(std::move(normalized));
  }
  return {vocab.with_appended(added), std::move(added)};
}

}  // namespace lexforge

#endif  // LEXFORGE_WORDPIECE_HPP
