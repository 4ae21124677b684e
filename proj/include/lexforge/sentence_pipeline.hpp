#ifndef LEXFORGE_SENTENCE_PIPELINE_HPP
#define LEXFORGE_SENTENCE_PIPELINE_HPP

// Opinion text -> sentences -> pretraining documents -> rotated text files.
//
// Output format: one sentence per line, one blank line between documents,
// no blank line after the last document of a file, LF endings. Files are
// named part-00000.txt, part-00001.txt, ... and a document never spans two
// files.

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lexforge/corpus_ingest.hpp"
#include "lexforge/error.hpp"
#include "lexforge/io.hpp"
#include "lexforge/text.hpp"

namespace lexforge {

inline constexpr std::size_t kMinDocumentSentences = 10;
inline constexpr std::uint64_t kDefaultMaxFileBytes = 43ULL << 20;

struct QualityRules {
  std::size_t min_tokens = 5;
  double min_alpha_ratio = 0.5;
  std::size_t max_chars = 1000;

  void validate() const {
    if (min_tokens < 1) throw Error(ErrorKind::kInvalidConfig, "min_tokens must be >= 1");
    if (!(min_alpha_ratio >= 0.0 && min_alpha_ratio <= 1.0))
      throw Error(ErrorKind::kInvalidConfig, "min_alpha_ratio must be in [0,1]");
    if (max_chars < 1) throw Error(ErrorKind::kInvalidConfig, "max_chars must be positive");
  }
};

struct SentenceDoc {
  std::vector<std::string> sentences;
  std::int64_t source_case_id = 0;
  std::size_t source_opinion_index = 0;
};

// Tokens that end in a period but do not end a sentence.
inline constexpr std::array<std::string_view, 14> kProtectedAbbreviations = {
    "Dr.", "Mr.", "Mrs.", "Ms.", "St.", "No.", "U.S.", "v.", "Inc.", "Co.", "Jr.", "Sr.", "J.", "JJ."};

// Quoted spans shorter than this (in characters, quotes included) are
// never split.
inline constexpr std::size_t kMaxProtectedQuote = 40;

namespace detail {

struct ByteRange {
  std::size_t begin;
  std::size_t end;  // inclusive: byte offset of the closing quote
};

inline bool starts_with_at(std::string_view s, std::size_t at, std::string_view what) {
  return s.substr(at, what.size()) == what;
}

inline std::vector<ByteRange> short_quote_spans(std::string_view s) {
  static constexpr std::string_view kOpenCurly = "\xE2\x80\x9C";   // U+201C
  static constexpr std::string_view kCloseCurly = "\xE2\x80\x9D";  // U+201D
  std::vector<ByteRange> spans;
  std::size_t straight_open = std::string_view::npos;
  std::size_t curly_open = std::string_view::npos;
  const auto keep = [&](std::size_t b, std::size_t e) {
    if (text::code_point_count(s.substr(b, e - b + 1)) < kMaxProtectedQuote) spans.push_back({b, e});
  };
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') {
      if (straight_open == std::string_view::npos) {
        straight_open = i;
      } else {
        keep(straight_open, i);
        straight_open = std::string_view::npos;
      }
    } else if (starts_with_at(s, i, kOpenCurly)) {
      curly_open = i;
      i += 2;
    } else if (starts_with_at(s, i, kCloseCurly)) {
      if (curly_open != std::string_view::npos) keep(curly_open, i + 2);
      curly_open = std::string_view::npos;
      i += 2;
    }
  }
  return spans;
}

inline bool inside(const std::vector<ByteRange>& spans, std::size_t at) {
  return std::any_of(spans.begin(), spans.end(),
                     [&](const ByteRange& r) { return at > r.begin && at < r.end; });
}

// Length in bytes of a closing quote/bracket at `at`, or 0.
inline std::size_t closer_length(std::string_view s, std::size_t at) {
  const char c = s[at];
  if (c == '"' || c == '\'' || c == ')' || c == ']') return 1;
  if (starts_with_at(s, at, "\xE2\x80\x9D") || starts_with_at(s, at, "\xE2\x80\x99")) return 3;
  return 0;
}

inline bool is_protected_abbreviation(std::string_view token) {
  while (!token.empty() && (token.front() == '(' || token.front() == '[' || token.front() == '"'))
    token.remove_prefix(1);
  return std::find(kProtectedAbbreviations.begin(), kProtectedAbbreviations.end(), token) !=
         kProtectedAbbreviations.end();
}

}  // namespace detail

// Rule-based segmentation. A boundary is a terminator in {. ! ?}, optional
// closing quotes or brackets, one space, then an ASCII uppercase letter or a
// digit. Boundaries after a protected abbreviation or inside a short quoted
// span are suppressed. The input is cleaned first, so joining the result
// with single spaces gives back text::clean(input).
inline std::vector<std::string> segment(std::string_view raw) {
  const std::string s = text::clean(raw);
  std::vector<std::string> out;
  if (s.empty()) return out;
  const auto quotes = detail::short_quote_spans(s);

  std::size_t sentence_start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (c != '.' && c != '!' && c != '?') continue;
    std::size_t j = i + 1;
    while (j < s.size()) {
      const std::size_t len = detail::closer_length(s, j);
      if (len == 0) break;
      j += len;
    }
    if (j + 1 >= s.size() || s[j] != ' ') continue;
    const char next = s[j + 1];
    if (!((next >= 'A' && next <= 'Z') || (next >= '0' && next <= '9'))) continue;
    if (detail::inside(quotes, j)) continue;
    if (c == '.') {
      const std::size_t word_start = s.rfind(' ', i);
      const std::size_t from = word_start == std::string::npos ? 0 : word_start + 1;
      if (detail::is_protected_abbreviation(std::string_view(s).substr(from, i + 1 - from))) continue;
    }
    out.push_back(s.substr(sentence_start, j - sentence_start));
    sentence_start = j + 1;
    i = j;
  }
  out.push_back(s.substr(sentence_start));
  return out;
}

// Alphabetic fraction is measured over non-space characters; length is in
// characters.
inline bool quality_filter(std::string_view sentence, const QualityRules& rules) {
  const auto tokens = text::split_whitespace(sentence);
  if (tokens.size() < rules.min_tokens) return false;
  std::size_t chars = 0, visible = 0, alpha = 0;
  for (std::size_t pos = 0; pos < sentence.size();) {
    const char32_t c = text::decode_utf8(sentence, pos);
    ++chars;
    if (text::is_space(c)) continue;
    ++visible;
    if (text::is_alpha(c)) ++alpha;
  }
  if (chars > rules.max_chars) return false;
  if (visible == 0) return false;
  return static_cast<double>(alpha) >= rules.min_alpha_ratio * static_cast<double>(visible);
}

// Splits one opinion into runs of consecutive sentences that pass the
// filter; runs shorter than kMinDocumentSentences are dropped.
inline std::vector<SentenceDoc> documents_from_opinion(const Opinion& opinion, const QualityRules& rules,
                                                       std::int64_t case_id, std::size_t opinion_index) {
  std::vector<SentenceDoc> docs;
  SentenceDoc current{{}, case_id, opinion_index};
  const auto close_run = [&] {
    if (current.sentences.size() >= kMinDocumentSentences) docs.push_back(std::move(current));
    current = SentenceDoc{{}, case_id, opinion_index};
  };
  for (auto& sentence : segment(opinion.text)) {
    if (quality_filter(sentence, rules))
      current.sentences.push_back(std::move(sentence));
    else
      close_run();
  }
  close_run();
  return docs;
}

inline std::vector<SentenceDoc> build_documents(std::span<const Opinion> opinions, const QualityRules& rules,
                                                std::int64_t case_id = 0) {
  std::vector<SentenceDoc> docs;
  for (std::size_t i = 0; i < opinions.size(); ++i) {
    auto part = documents_from_opinion(opinions[i], rules, case_id, i);
    std::move(part.begin(), part.end(), std::back_inserter(docs));
  }
  return docs;
}

inline std::vector<SentenceDoc> build_documents(const LegalCase& c, const QualityRules& rules) {
  return build_documents(std::span<const Opinion>(c.opinions), rules, c.id);
}

inline std::string pretrain_file_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "part-%05zu.txt", index);
  return buf;
}

// Streaming writer behind write_pretrain_files; lets the CLI write
// documents as cases are ingested instead of holding the corpus.
class PretrainWriter {
 public:
  PretrainWriter(std::filesystem::path out_dir, std::uint64_t max_file_bytes)
      : out_dir_(std::move(out_dir)), max_file_bytes_(max_file_bytes) {
    if (max_file_bytes_ == 0) throw Error(ErrorKind::kInvalidConfig, "max_file_bytes must be positive");
    std::error_code ec;
    std::filesystem::create_directories(out_dir_, ec);
    if (ec) throw Error(ErrorKind::kIoError, "cannot create " + out_dir_.string());
  }

  void add(const SentenceDoc& doc) {
    std::string block;
    for (const auto& s : doc.sentences) {
      block += s;
      block += '\n';
    }
    const std::size_t extra = buffer_.empty() ? block.size() : block.size() + 1;
    if (!buffer_.empty() && buffer_.size() + extra > max_file_bytes_) flush();
    if (!buffer_.empty()) buffer_ += '\n';
    buffer_ += block;
  }

  std::vector<std::filesystem::path> finish() {
    flush();
    return written_;
  }

 private:
  void flush() {
    if (buffer_.empty()) return;
    auto path = out_dir_ / pretrain_file_name(written_.size());
    io::write_file(path, buffer_);
    written_.push_back(std::move(path));
    buffer_.clear();
  }

  std::filesystem::path out_dir_;
  std::uint64_t max_file_bytes_;
  std::string buffer_;
  std::vector<std::filesystem::path> written_;
};

inline std::vector<std::filesystem::path> write_pretrain_files(std::span<const SentenceDoc> docs,
                                                               const std::filesystem::path& out_dir,
                                                               std::uint64_t max_file_bytes = kDefaultMaxFileBytes) {
  PretrainWriter writer(out_dir, max_file_bytes);
  for (const auto& d : docs) writer.add(d);
  return writer.finish();
}

// Reads pretraining files back into documents (sentence lists), splitting
// on blank lines.
inline std::vector<std::vector<std::string>> read_pretrain_files(std::span<const std::filesystem::path> paths) {
  std::vector<std::vector<std::string>> docs;
  for (const auto& path : paths) {
    std::vector<std::string> current;
    for (auto& line : io::read_lines(path)) {
      if (line.empty()) {
        if (!current.empty()) docs.push_back(std::move(current));
        current.clear();
      } else {
        current.push_back(std::move(line));
      }
    }
    if (!current.empty()) docs.push_back(std::move(current));
  }
  return docs;
}

// part-*.txt files of a directory in name order.
inline std::vector<std::filesystem::path> list_pretrain_files(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
    const auto name = entry.path().filename().string();
    if (entry.is_regular_file() && name.starts_with("part-") && name.ends_with(".txt"))
      files.push_back(entry.path());
  }
  if (ec) throw Error(ErrorKind::kIoError, "cannot list " + dir.string());
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace lexforge

#endif  // LEXFORGE_SENTENCE_PIPELINE_HPP
