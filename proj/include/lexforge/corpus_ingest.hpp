#ifndef LEXFORGE_CORPUS_INGEST_HPP
#define LEXFORGE_CORPUS_INGEST_HPP

// Case-record ingestion. A record is one JSON object in the case.law bulk
// layout (id, decision_date, jurisdiction.name_long,
// casebody.data.opinions[].{type,text,author}); a file holds any number of
// records, either one per line or pretty-printed back to back.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lexforge/error.hpp"
#include "lexforge/io.hpp"
#include "lexforge/text.hpp"

namespace lexforge {

enum class OpinionKind { kMajority, kDissent, kOther };

inline std::string_view to_string(OpinionKind kind) {
  switch (kind) {
    case OpinionKind::kMajority: return "majority";
    case OpinionKind::kDissent: return "dissent";
    case OpinionKind::kOther: return "other";
  }
  return "other";
}

struct Opinion {
  OpinionKind kind = OpinionKind::kOther;
  // The record's "type" string, verbatim. For kOther this is how callers
  // tell a concurrence from anything else.
  std::string raw_type;
  std::optional<std::string> author;
  std::string text;

  bool operator==(const Opinion&) const = default;
};

struct LegalCase {
  std::int64_t id = 0;
  // Set only when the record's date parses as YYYY-MM-DD.
  std::optional<std::string> decision_date;
  // The record's date string when it failed to parse; kept for round trips.
  std::optional<std::string> raw_decision_date;
  std::optional<std::string> jurisdiction_name;
  std::vector<Opinion> opinions;
  // Opinions whose text was empty after stripping.
  std::size_t empty_opinions_skipped = 0;

  bool date_flagged() const { return raw_decision_date.has_value(); }
  bool operator==(const LegalCase&) const = default;
};

inline OpinionKind opinion_kind_from(std::string_view type) {
  if (type == "majority") return OpinionKind::kMajority;
  if (type == "dissent") return OpinionKind::kDissent;
  return OpinionKind::kOther;
}

namespace detail {

inline bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

inline bool is_iso_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  for (std::size_t i : {0, 1, 2, 3, 5, 6, 8, 9})
    if (s[i] < '0' || s[i] > '9') return false;
  const auto num = [&](std::size_t at, std::size_t len) {
    int v = 0;
    for (std::size_t i = at; i < at + len; ++i) v = v * 10 + (s[i] - '0');
    return v;
  };
  const int y = num(0, 4), m = num(5, 2), d = num(8, 2);
  if (m < 1 || m > 12 || d < 1) return false;
  static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  const int max_day = (m == 2 && is_leap(y)) ? 29 : kDays[m - 1];
  return d <= max_day;
}

inline const nlohmann::json* find_path(const nlohmann::json& j,
                                       std::initializer_list<const char*> keys) {
  const nlohmann::json* cur = &j;
  for (const char* key : keys) {
    if (!cur->is_object()) return nullptr;
    auto it = cur->find(key);
    if (it == cur->end()) return nullptr;
    cur = &*it;
  }
  return cur;
}

}  // namespace detail

// Parses one complete record. Error offsets are relative to `record_text`.
inline LegalCase parse_case(std::string_view record_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(record_text.begin(), record_text.end());
  } catch (const nlohmann::json::parse_error& e) {
    const auto at = e.byte > 0 ? static_cast<std::int64_t>(e.byte) - 1 : 0;
    throw Error(ErrorKind::kMalformedRecord, e.what(), at);
  }
  if (!j.is_object()) throw Error(ErrorKind::kMalformedRecord, "record is not an object", 0);

  LegalCase c;
  const auto id = j.find("id");
  if (id == j.end() || !id->is_number_integer() || id->get<std::int64_t>() < 0)
    throw Error(ErrorKind::kMalformedRecord, "missing or invalid id", 0);
  c.id = id->get<std::int64_t>();

  if (auto date = j.find("decision_date"); date != j.end() && date->is_string()) {
    auto value = date->get<std::string>();
    if (detail::is_iso_date(value))
      c.decision_date = std::move(value);
    else
      c.raw_decision_date = std::move(value);
  }
  if (const auto* name = detail::find_path(j, {"jurisdiction", "name_long"});
      name != nullptr && name->is_string())
    c.jurisdiction_name = name->get<std::string>();

  const auto* opinions = detail::find_path(j, {"casebody", "data", "opinions"});
  if (opinions == nullptr || !opinions->is_array())
    throw Error(ErrorKind::kMissingCaseBody, "no casebody.data.opinions array", 0);

  for (const auto& op : *opinions) {
    if (!op.is_object()) throw Error(ErrorKind::kMalformedRecord, "opinion is not an object", 0);
    Opinion o;
    if (auto type = op.find("type"); type != op.end() && type->is_string())
      o.raw_type = type->get<std::string>();
    o.kind = opinion_kind_from(o.raw_type);
    if (auto author = op.find("author"); author != op.end() && author->is_string())
      o.author = author->get<std::string>();
    if (auto body = op.find("text"); body != op.end() && body->is_string())
      o.text = std::string(text::trim(body->get_ref<const std::string&>()));
    if (o.text.empty()) {
      ++c.empty_opinions_skipped;
      continue;
    }
    c.opinions.push_back(std::move(o));
  }
  return c;
}

// Canonical single-line record form; parse_case(to_record(c)) == c for any
// case with no skipped opinions.
inline std::string to_record(const LegalCase& c) {
  nlohmann::ordered_json j;
  j["id"] = c.id;
  if (c.decision_date)
    j["decision_date"] = *c.decision_date;
  else if (c.raw_decision_date)
    j["decision_date"] = *c.raw_decision_date;
  if (c.jurisdiction_name) j["jurisdiction"]["name_long"] = *c.jurisdiction_name;
  auto opinions = nlohmann::ordered_json::array();
  for (const auto& o : c.opinions) {
    nlohmann::ordered_json op;
    op["type"] = o.raw_type;
    op["text"] = o.text;
    if (o.author) op["author"] = *o.author;
    opinions.push_back(std::move(op));
  }
  j["casebody"]["data"]["opinions"] = std::move(opinions);
  return j.dump();
}

inline std::vector<Opinion> extract_opinions(const LegalCase& c, const std::set<OpinionKind>& kinds) {
  std::vector<Opinion> out;
  for (const auto& o : c.opinions)
    if (kinds.count(o.kind)) out.push_back(o);
  return out;
}

struct IngestError {
  std::string file;
  std::int64_t offset = 0;
  ErrorKind kind = ErrorKind::kMalformedRecord;
  std::string message;
};

// One line per failure: `<file>:<byte-offset>\t<error-kind>`.
inline std::string format_error_report(const std::vector<IngestError>& errors) {
  std::string out;
  for (const auto& e : errors) {
    out += e.file;
    out += ':';
    out += std::to_string(e.offset);
    out += '\t';
    out += to_string(e.kind);
    out += '\n';
  }
  return out;
}

namespace detail {

struct RecordSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  bool balanced = false;
};

// Locates the next top-level value starting at `pos` by brace matching
// outside of string literals.
inline std::optional<RecordSpan> next_record_span(std::string_view data, std::size_t pos) {
  while (pos < data.size() && (data[pos] == ' ' || data[pos] == '\n' || data[pos] == '\r' ||
                               data[pos] == '\t'))
    ++pos;
  if (pos >= data.size()) return std::nullopt;
  RecordSpan span{pos, pos, false};
  if (data[pos] != '{') {
    const std::size_t eol = data.find('\n', pos);
    span.end = eol == std::string_view::npos ? data.size() : eol;
    return span;
  }
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = pos; i < data.size(); ++i) {
    const char c = data[i];
    if (in_string) {
      if (c == '\\')
        ++i;
      else if (c == '"')
        in_string = false;
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{' || c == '[') {
      ++depth;
    } else if (c == '}' || c == ']') {
      if (--depth == 0) {
        span.end = i + 1;
        span.balanced = true;
        return span;
      }
    }
  }
  // Unterminated: the bad record ends at its own line so the records that
  // follow a truncated line are still recovered.
  const std::size_t eol = data.find('\n', pos);
  span.end = eol == std::string_view::npos ? data.size() : eol;
  return span;
}

}  // namespace detail

// Lazily yields cases from a list of files, in file order then record
// order, keeping at most `page_size` parsed cases buffered. Per-record
// failures (including duplicate ids, first occurrence wins) go to errors()
// and are skipped; an unreadable file throws kIoError.
class CaseStream {
 public:
  CaseStream(std::vector<std::filesystem::path> paths, std::size_t page_size)
      : paths_(std::move(paths)), page_size_(page_size) {
    if (page_size_ == 0) throw Error(ErrorKind::kInvalidConfig, "page_size must be positive");
  }

  std::optional<LegalCase> next() {
    if (page_.empty()) fill_page();
    if (page_.empty()) return std::nullopt;
    LegalCase c = std::move(page_.front());
    page_.pop_front();
    return c;
  }

  const std::vector<IngestError>& errors() const { return errors_; }
  std::size_t records_seen() const { return records_seen_; }
  std::size_t max_buffered() const { return max_buffered_; }

  class iterator {
   public:
    using value_type = LegalCase;
    using difference_type = std::ptrdiff_t;

    iterator() = default;
    explicit iterator(CaseStream* stream) : stream_(stream) { ++*this; }

    const LegalCase& operator*() const { return *current_; }
    const LegalCase* operator->() const { return &*current_; }
    iterator& operator++() {
      current_ = stream_->next();
      if (!current_) stream_ = nullptr;
      return *this;
    }
    void operator++(int) { ++*this; }
    bool operator==(std::default_sentinel_t) const { return stream_ == nullptr; }

   private:
    CaseStream* stream_ = nullptr;
    std::optional<LegalCase> current_;
  };

  iterator begin() { return iterator(this); }
  std::default_sentinel_t end() { return {}; }

 private:
  void fill_page() {
    while (page_.size() < page_size_) {
      if (!file_open_) {
        if (file_index_ >= paths_.size()) return;
        data_ = io::read_file(paths_[file_index_]);
        cursor_ = 0;
        file_open_ = true;
      }
      const auto span = detail::next_record_span(data_, cursor_);
      if (!span) {
        file_open_ = false;
        data_.clear();
        ++file_index_;
        continue;
      }
      cursor_ = span->end;
      ++records_seen_;
      const std::string file = paths_[file_index_].string();
      try {
        LegalCase c = parse_case(std::string_view(data_).substr(span->begin, span->end - span->begin));
        if (!seen_ids_.insert(c.id).second) {
          errors_.push_back({file, static_cast<std::int64_t>(span->begin), ErrorKind::kDuplicateCaseId,
                             "duplicate id " + std::to_string(c.id)});
          continue;
        }
        page_.push_back(std::move(c));
        max_buffered_ = std::max(max_buffered_, page_.size());
      } catch (const Error& e) {
        errors_.push_back({file, static_cast<std::int64_t>(span->begin), e.kind(), e.what()});
      }
    }
  }

  std::vector<std::filesystem::path> paths_;
  std::size_t page_size_;
  std::size_t file_index_ = 0;
  bool file_open_ = false;
  std::string data_;
  std::size_t cursor_ = 0;
  std::deque<LegalCase> page_;
  std::unordered_set<std::int64_t> seen_ids_;
  std::vector<IngestError> errors_;
  std::size_t records_seen_ = 0;
  std::size_t max_buffered_ = 0;
};

inline CaseStream stream_cases(std::vector<std::filesystem::path> paths, std::size_t page_size) {
  return CaseStream(std::move(paths), page_size);
}

}  // namespace lexforge

#endif  // LEXFORGE_CORPUS_INGEST_HPP
