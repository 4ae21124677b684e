#ifndef LEXFORGE_NER_SILVER_HPP
#define LEXFORGE_NER_SILVER_HPP

// Silver-standard NER corpus construction: two toolkits' token tags are
// mapped onto one canonical tag set, merged token by token, then run
// through pattern-based corrections.
//
// Merge rules per token:
//   equal tags            -> that tag
//   one side O            -> the other side's entity tag
//   two different entities -> conflict; tag_a kept until resolved

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lexforge/error.hpp"
#include "lexforge/io.hpp"
#include "lexforge/split.hpp"
#include "lexforge/text.hpp"

namespace lexforge {

inline constexpr std::string_view kOutsideTag = "O";
inline const std::vector<std::string> kEntityTags = {"PERSON", "ORG", "DATE", "GPE", "CARDINAL"};

inline bool is_entity(std::string_view tag) { return tag != kOutsideTag; }

// Canonical tags: the five entity types, O, and any extensions.
class TagSet {
 public:
  TagSet() : tags_(kEntityTags.begin(), kEntityTags.end()) { tags_.emplace(kOutsideTag); }
  explicit TagSet(std::span<const std::string> extensions) : TagSet() { tags_.insert(extensions.begin(), extensions.end()); }

  bool contains(std::string_view tag) const { return tags_.count(std::string(tag)) > 0; }
  void add(const std::string& tag) { tags_.insert(tag); }

 private:
  std::set<std::string> tags_;
};

struct TokenProvenance {
  enum class Origin { kNone, kAgree, kFirst, kSecond, kConflict, kResolved, kCorrected };
  Origin origin = Origin::kNone;
  // For conflicts, the second toolkit's tag.
  std::string alternate;

  bool operator==(const TokenProvenance&) const = default;
};

struct TaggedSentence {
  std::vector<std::string> tokens;
  std::vector<std::string> tags;
  // Empty, or one entry per token.
  std::vector<TokenProvenance> provenance;

  bool operator==(const TaggedSentence&) const = default;
};

struct MergeConflict {
  std::size_t sentence_index = 0;
  std::size_t token_index = 0;
  std::string tag_a;
  std::string tag_b;
  // Blank until someone edits the conflict file.
  std::string resolution;

  bool operator==(const MergeConflict&) const = default;
};

// ---------------------------------------------------------------------------
// Tag mapping. File rows: `toolkit<TAB>source_tag<TAB>canonical_tag`.

class TagMapping {
 public:
  void add(const std::string& toolkit, const std::string& source, const std::string& canonical) {
    table_[toolkit][source] = canonical;
  }

  bool has_toolkit(const std::string& toolkit) const { return table_.count(toolkit) > 0; }

  const std::string& map(const std::string& toolkit, const std::string& source) const {
    auto kit = table_.find(toolkit);
    if (kit == table_.end()) throw Error(ErrorKind::kUnmappedTag, "no mapping for toolkit '" + toolkit + "'");
    auto it = kit->second.find(source);
    if (it == kit->second.end())
      throw Error(ErrorKind::kUnmappedTag, "toolkit '" + toolkit + "' tag '" + source + "' has no canonical mapping");
    return it->second;
  }

 private:
  std::map<std::string, std::map<std::string, std::string>> table_;
};

inline TagMapping load_tag_mapping(const std::filesystem::path& path, const TagSet& tags = {}) {
  TagMapping m;
  const auto lines = io::read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = text::trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    const auto fields = text::split(line, '\t');
    const auto line_no = static_cast<std::int64_t>(i + 1);
    if (fields.size() != 3) throw Error(ErrorKind::kFormatError, path.string() + ": expected 3 fields", line_no);
    if (!tags.contains(fields[2]))
      throw Error(ErrorKind::kUnmappedTag, path.string() + ": '" + fields[2] + "' is not a canonical tag", line_no);
    m.add(fields[0], fields[1], fields[2]);
  }
  return m;
}

inline TaggedSentence map_tags(const TaggedSentence& source, const TagMapping& mapping, const std::string& toolkit) {
  TaggedSentence out = source;
  for (auto& tag : out.tags) tag = mapping.map(toolkit, tag);
  return out;
}

// ---------------------------------------------------------------------------
// Merge.

struct MergedSentence {
  TaggedSentence sentence;
  std::vector<MergeConflict> conflicts;
};

inline MergedSentence merge(const TaggedSentence& a, const TaggedSentence& b, std::size_t sentence_index = 0) {
  if (a.tokens != b.tokens) throw Error(ErrorKind::kTokenMismatch, "sentence " + std::to_string(sentence_index) + " tokens differ");
  if (a.tags.size() != a.tokens.size() || b.tags.size() != b.tokens.size())
    throw Error(ErrorKind::kShapeMismatch, "sentence " + std::to_string(sentence_index) + " has tag/token length mismatch");
  using Origin = TokenProvenance::Origin;
  MergedSentence out;
  out.sentence.tokens = a.tokens;
  out.sentence.tags.reserve(a.tags.size());
  out.sentence.provenance.reserve(a.tags.size());
  for (std::size_t i = 0; i < a.tags.size(); ++i) {
    const std::string& ta = a.tags[i];
    const std::string& tb = b.tags[i];
    if (ta == tb) {
      out.sentence.tags.push_back(ta);
      out.sentence.provenance.push_back({is_entity(ta) ? Origin::kAgree : Origin::kNone, {}});
    } else if (!is_entity(tb)) {
      out.sentence.tags.push_back(ta);
      out.sentence.provenance.push_back({Origin::kFirst, {}});
    } else if (!is_entity(ta)) {
      out.sentence.tags.push_back(tb);
      out.sentence.provenance.push_back({Origin::kSecond, {}});
    } else {
      out.sentence.tags.push_back(ta);
      out.sentence.provenance.push_back({Origin::kConflict, tb});
      out.conflicts.push_back({sentence_index, i, ta, tb, {}});
    }
  }
  return out;
}

struct MergedCorpus {
  std::vector<TaggedSentence> corpus;
  std::vector<MergeConflict> conflicts;
};

inline MergedCorpus merge_corpora(std::span<const TaggedSentence> a, std::span<const TaggedSentence> b) {
  if (a.size() != b.size())
    throw Error(ErrorKind::kTokenMismatch,
                "corpora have " + std::to_string(a.size()) + " and " + std::to_string(b.size()) + " sentences");
  MergedCorpus out;
  out.corpus.reserve(a.size());
  for (std::size_t s = 0; s < a.size(); ++s) {
    auto merged = merge(a[s], b[s], s);
    out.corpus.push_back(std::move(merged.sentence));
    out.conflicts.insert(out.conflicts.end(), merged.conflicts.begin(), merged.conflicts.end());
  }
  return out;
}

inline constexpr std::string_view kConflictHeader = "sentence_index\ttoken_index\ttag_a\ttag_b\tresolution";

inline std::string format_conflicts(std::span<const MergeConflict> conflicts) {
  std::string out(kConflictHeader);
  out += '\n';
  for (const auto& c : conflicts) {
    out += std::to_string(c.sentence_index) + '\t' + std::to_string(c.token_index) + '\t' + c.tag_a + '\t' + c.tag_b +
           '\t' + c.resolution + '\n';
  }
  return out;
}

inline std::vector<MergeConflict> read_conflicts(const std::filesystem::path& path) {
  std::vector<MergeConflict> out;
  const auto lines = io::read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty() || (i == 0 && lines[i] == kConflictHeader)) continue;
    auto fields = text::split(lines[i], '\t');
    const auto line_no = static_cast<std::int64_t>(i + 1);
    if (fields.size() == 4) fields.emplace_back();
    if (fields.size() != 5) throw Error(ErrorKind::kFormatError, path.string() + ": expected 5 fields", line_no);
    MergeConflict c;
    try {
      c.sentence_index = std::stoull(fields[0]);
      c.token_index = std::stoull(fields[1]);
    } catch (const std::exception&) {
      throw Error(ErrorKind::kFormatError, path.string() + ": bad index", line_no);
    }
    c.tag_a = fields[2];
    c.tag_b = fields[3];
    c.resolution = std::string(text::trim(fields[4]));
    out.push_back(std::move(c));
  }
  return out;
}

// Applies edited conflict rows; rows with a blank resolution stay as they
// are. Returns how many tokens were resolved.
inline std::size_t apply_resolutions(std::vector<TaggedSentence>& corpus, std::span<const MergeConflict> conflicts,
                                     const TagSet& tags = {}) {
  std::size_t applied = 0;
  for (const auto& c : conflicts) {
    if (c.resolution.empty()) continue;
    if (!tags.contains(c.resolution))
      throw Error(ErrorKind::kUnmappedTag, "resolution '" + c.resolution + "' is not a canonical tag");
    if (c.sentence_index >= corpus.size() || c.token_index >= corpus[c.sentence_index].tags.size())
      throw Error(ErrorKind::kShapeMismatch, "conflict refers to a token outside the corpus");
    auto& s = corpus[c.sentence_index];
    s.tags[c.token_index] = c.resolution;
    if (s.provenance.size() == s.tags.size()) s.provenance[c.token_index] = {TokenProvenance::Origin::kResolved, {}};
    ++applied;
  }
  return applied;
}

// ---------------------------------------------------------------------------
// Corrections.
//
// A pattern is a space-separated sequence of elements; each element is an
// ECMAScript regex that must match a whole token. An element ending in
// "{+}" matches one or more consecutive tokens. applies_to names the
// elements (0-based, "1", "0,2", "1-3" or "*") whose tokens are re-tagged.

struct CorrectionRule {
  std::string name;
  std::string pattern;
  std::string assign_tag;
  std::string applies_to = "*";
};

namespace detail {

struct PatternElement {
  std::regex re;
  bool repeat = false;
};

struct CompiledRule {
  const CorrectionRule* rule = nullptr;
  std::vector<PatternElement> elements;
  std::vector<bool> applies;
};

inline CompiledRule compile_rule(const CorrectionRule& rule, const TagSet& tags) {
  CompiledRule c;
  c.rule = &rule;
  if (!tags.contains(rule.assign_tag))
    throw Error(ErrorKind::kInvalidRule, "rule '" + rule.name + "': unknown tag '" + rule.assign_tag + "'");
  for (auto& part : text::split(rule.pattern, ' ')) {
    if (part.empty()) continue;
    PatternElement e;
    if (part.size() > 3 && part.ends_with("{+}")) {
      e.repeat = true;
      part.resize(part.size() - 3);
    }
    try {
      e.re = std::regex(part, std::regex::ECMAScript);
    } catch (const std::regex_error& err) {
      throw Error(ErrorKind::kInvalidRule, "rule '" + rule.name + "': " + err.what());
    }
    c.elements.push_back(std::move(e));
  }
  if (c.elements.empty()) throw Error(ErrorKind::kInvalidRule, "rule '" + rule.name + "': empty pattern");

  c.applies.assign(c.elements.size(), false);
  const std::string spec(text::trim(rule.applies_to));
  if (spec.empty() || spec == "*") {
    c.applies.assign(c.elements.size(), true);
    return c;
  }
  for (const auto& item : text::split(spec, ',')) {
    try {
      const auto dash = item.find('-');
      std::size_t lo = 0, hi = 0;
      if (dash == std::string::npos) {
        lo = hi = std::stoull(item);
      } else {
        lo = std::stoull(item.substr(0, dash));
        hi = dash + 1 == item.size() ? c.elements.size() - 1 : std::stoull(item.substr(dash + 1));
      }
      if (lo > hi || hi >= c.elements.size()) throw std::out_of_range("element index");
      for (std::size_t k = lo; k <= hi; ++k) c.applies[k] = true;
    } catch (const std::exception&) {
      throw Error(ErrorKind::kInvalidRule, "rule '" + rule.name + "': bad applies_to '" + rule.applies_to + "'");
    }
  }
  return c;
}

// Tries to match at `start`; on success fills `element_of` (token offset ->
// element index) and returns the match length.
inline std::size_t match_at(const CompiledRule& rule, std::span<const std::string> tokens, std::size_t start,
                            std::vector<std::size_t>& element_of) {
  element_of.clear();
  std::size_t at = start;
  for (std::size_t k = 0; k < rule.elements.size(); ++k) {
    const auto& e = rule.elements[k];
    if (at >= tokens.size() || !std::regex_match(tokens[at], e.re)) return 0;
    element_of.push_back(k);
    ++at;
    if (e.repeat) {
      while (at < tokens.size() && std::regex_match(tokens[at], e.re)) {
        element_of.push_back(k);
        ++at;
      }
    }
  }
  return at - start;
}

}  // namespace detail

inline std::vector<CorrectionRule> builtin_correction_rules() {
  return {
      {"month_day_year",
       "(January|February|March|April|May|June|July|August|September|October|November|December|Jan\\.|Feb\\.|"
       "Mar\\.|Apr\\.|Jun\\.|Jul\\.|Aug\\.|Sept?\\.|Oct\\.|Nov\\.|Dec\\.) (0?[1-9]|[12][0-9]|3[01]) , [0-9]{4}",
       "DATE", "*"},
      {"honorific_person", "(President|Sir|Dr\\.) [A-Z][a-z]+([A-Z][a-z]+)*{+}", "PERSON", "1"},
  };
}

inline std::vector<CorrectionRule> load_correction_rules(const std::filesystem::path& path) {
  std::vector<CorrectionRule> out;
  const auto lines = io::read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (text::trim(lines[i]).empty() || lines[i].front() == '#') continue;
    const auto fields = text::split(lines[i], '\t');
    if (fields.size() != 4)
      throw Error(ErrorKind::kFormatError, path.string() + ": expected 4 fields", static_cast<std::int64_t>(i + 1));
    out.push_back({fields[0], fields[1], fields[2], fields[3]});
  }
  return out;
}

struct CorrectionChange {
  std::string rule;
  std::size_t sentence = 0;
  std::size_t begin = 0;  // token range [begin, end)
  std::size_t end = 0;
  std::string old_tag;
  std::string new_tag;

  bool operator==(const CorrectionChange&) const = default;
};

struct CorrectionResult {
  std::vector<TaggedSentence> corpus;
  std::vector<CorrectionChange> changes;
};

// Rules run in order over every sentence; where two rules cover the same
// token the later one wins. Targets are resolved before any tag is written,
// so a second pass with the same rules changes nothing.
inline CorrectionResult apply_corrections(std::vector<TaggedSentence> corpus, std::span<const CorrectionRule> rules,
                                          const TagSet& tags = {}) {
  std::vector<detail::CompiledRule> compiled;
  compiled.reserve(rules.size());
  for (const auto& r : rules) compiled.push_back(detail::compile_rule(r, tags));

  struct Target {
    std::size_t rule = 0;
    std::size_t match = 0;
  };
  CorrectionResult result;
  std::vector<std::size_t> element_of;
  for (std::size_t s = 0; s < corpus.size(); ++s) {
    auto& sentence = corpus[s];
    std::vector<std::optional<Target>> target(sentence.tokens.size());
    std::size_t match_id = 0;
    for (std::size_t r = 0; r < compiled.size(); ++r) {
      for (std::size_t start = 0; start < sentence.tokens.size();) {
        const std::size_t len = detail::match_at(compiled[r], sentence.tokens, start, element_of);
        if (len == 0) {
          ++start;
          continue;
        }
        ++match_id;
        for (std::size_t k = 0; k < len; ++k)
          if (compiled[r].applies[element_of[k]]) target[start + k] = Target{r, match_id};
        start += len;
      }
    }
    for (std::size_t i = 0; i < sentence.tokens.size();) {
      if (!target[i] || sentence.tags[i] == compiled[target[i]->rule].rule->assign_tag) {
        ++i;
        continue;
      }
      const Target t = *target[i];
      const std::string& new_tag = compiled[t.rule].rule->assign_tag;
      const std::string old_tag = sentence.tags[i];
      std::size_t j = i;
      while (j < sentence.tokens.size() && target[j] && target[j]->match == t.match && sentence.tags[j] == old_tag) {
        sentence.tags[j] = new_tag;
        if (sentence.provenance.size() == sentence.tags.size())
          sentence.provenance[j] = {TokenProvenance::Origin::kCorrected, old_tag};
        ++j;
      }
      result.changes.push_back({compiled[t.rule].rule->name, s, i, j, old_tag, new_tag});
      i = j;
    }
  }
  result.corpus = std::move(corpus);
  return result;
}

inline std::string format_change_log(std::span<const CorrectionChange> changes) {
  std::string out = "rule\tsentence\tbegin\tend\told_tag\tnew_tag\n";
  for (const auto& c : changes)
    out += c.rule + '\t' + std::to_string(c.sentence) + '\t' + std::to_string(c.begin) + '\t' + std::to_string(c.end) +
           '\t' + c.old_tag + '\t' + c.new_tag + '\n';
  return out;
}

// ---------------------------------------------------------------------------
// Population and splits.

// Entity-token counts; the five canonical types are always present.
inline std::map<std::string, std::size_t> tag_population(std::span<const TaggedSentence> corpus) {
  std::map<std::string, std::size_t> counts;
  for (const auto& t : kEntityTags) counts[t] = 0;
  for (const auto& s : corpus)
    for (const auto& tag : s.tags)
      if (is_entity(tag)) ++counts[tag];
  return counts;
}

inline SplitSpec ner_split_spec(std::uint64_t seed) { return SplitSpec{{{"train", 0.7}, {"test", 0.2}, {"dev", 0.1}}, seed}; }

inline std::vector<NamedSplit<TaggedSentence>> split_ner(std::span<const TaggedSentence> corpus, std::uint64_t seed) {
  return split_dataset(corpus, ner_split_spec(seed));
}

// ---------------------------------------------------------------------------
// CoNLL-style corpus: `token<TAB>tag` per line, one blank line between
// sentences. With `bio`, tags are written as B-/I- spans and the prefixes
// are stripped again on read.

inline std::string format_conll(std::span<const TaggedSentence> corpus, bool bio = false) {
  std::string out;
  for (std::size_t s = 0; s < corpus.size(); ++s) {
    const auto& sentence = corpus[s];
    if (sentence.tokens.empty() || sentence.tokens.size() != sentence.tags.size())
      throw Error(ErrorKind::kShapeMismatch, "sentence " + std::to_string(s) + " is empty or misaligned");
    if (s > 0) out += '\n';
    for (std::size_t i = 0; i < sentence.tokens.size(); ++i) {
      const auto& tok = sentence.tokens[i];
      const auto& tag = sentence.tags[i];
      if (tok.empty() || tok.find_first_of("\t\n") != std::string::npos)
        throw Error(ErrorKind::kFormatError, "token cannot be written: '" + tok + "'");
      out += tok;
      out += '\t';
      if (bio && is_entity(tag))
        out += (i > 0 && sentence.tags[i - 1] == tag ? "I-" : "B-");
      out += tag;
      out += '\n';
    }
  }
  return out;
}

inline void write_conll(std::span<const TaggedSentence> corpus, const std::filesystem::path& path, bool bio = false) {
  io::write_file(path, format_conll(corpus, bio));
}

inline std::vector<TaggedSentence> read_conll(const std::filesystem::path& path, bool bio = false) {
  std::vector<TaggedSentence> out;
  TaggedSentence current;
  const auto lines = io::read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto& line = lines[i];
    if (line.empty()) {
      if (!current.tokens.empty()) out.push_back(std::move(current));
      current = {};
      continue;
    }
    const auto fields = text::split(line, '\t');
    if (fields.size() != 2 || fields[0].empty() || fields[1].empty())
      throw Error(ErrorKind::kFormatError, path.string() + ": expected token<TAB>tag", static_cast<std::int64_t>(i + 1));
    std::string tag = fields[1];
    if (bio && tag.size() > 2 && (tag.starts_with("B-") || tag.starts_with("I-"))) tag.erase(0, 2);
    current.tokens.push_back(fields[0]);
    current.tags.push_back(std::move(tag));
  }
  if (!current.tokens.empty()) out.push_back(std::move(current));
  return out;
}

}  // namespace lexforge

#endif  // LEXFORGE_NER_SILVER_HPP
