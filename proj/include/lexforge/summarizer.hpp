#ifndef LEXFORGE_SUMMARIZER_HPP
#define LEXFORGE_SUMMARIZER_HPP

// TextRank extractive summarization and the opinion-classification dataset.
//
// Sentence graph: undirected, edge weight
//   sim(Si, Sj) = |types(Si) ∩ types(Sj)| / (log|Si| + log|Sj|)
// over lowercased alphanumeric word types, and 0 when either sentence has
// fewer than two words. Scores follow the damped update
//   s'(i) = (1 - d) + d * sum_j w(j,i) / out(j) * s(j)
// applied synchronously from s = 1 until the L-infinity change drops to
// `tol` or `max_iter` is hit.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "lexforge/corpus_ingest.hpp"
#include "lexforge/error.hpp"
#include "lexforge/io.hpp"
#include "lexforge/sentence_pipeline.hpp"
#include "lexforge/split.hpp"
#include "lexforge/text.hpp"

namespace lexforge {

struct TextRankParams {
  std::size_t target_words = 150;
  double damping = 0.85;
  double tol = 1e-6;
  std::size_t max_iter = 100;

  void validate() const {
    if (target_words == 0) throw Error(ErrorKind::kInvalidConfig, "target_words must be positive");
    if (!(damping >= 0.0 && damping <= 1.0)) throw Error(ErrorKind::kInvalidConfig, "damping must be in [0,1]");
    if (!(tol > 0.0)) throw Error(ErrorKind::kInvalidConfig, "tol must be positive");
    if (max_iter == 0) throw Error(ErrorKind::kInvalidConfig, "max_iter must be positive");
  }
};

struct TextRankResult {
  std::vector<std::string> sentences;
  std::vector<double> scores;
  // L-infinity distance between consecutive iterates, one per iteration.
  std::vector<double> residuals;
  bool converged = false;
  // Indices into `sentences`, ascending.
  std::vector<std::size_t> selected;
  std::string summary;
};

// Lowercased alphanumeric word runs.
inline std::vector<std::string> sentence_words(std::string_view sentence) {
  std::vector<std::string> words;
  std::string current;
  for (std::size_t pos = 0; pos < sentence.size();) {
    const char32_t c = text::decode_utf8(sentence, pos);
    if (text::is_alnum(c)) {
      text::append_utf8(current, text::to_lower(c));
    } else if (!current.empty()) {
      words.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) words.push_back(std::move(current));
  return words;
}

inline double sentence_similarity(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  if (a.size() < 2 || b.size() < 2) return 0.0;
  const std::unordered_set<std::string> types_a(a.begin(), a.end());
  const std::unordered_set<std::string> types_b(b.begin(), b.end());
  std::size_t overlap = 0;
  for (const auto& w : types_a) overlap += types_b.count(w);
  return static_cast<double>(overlap) /
         (std::log(static_cast<double>(a.size())) + std::log(static_cast<double>(b.size())));
}

inline std::vector<std::vector<double>> similarity_matrix(std::span<const std::string> sentences) {
  std::vector<std::vector<std::string>> words;
  words.reserve(sentences.size());
  for (const auto& s : sentences) words.push_back(sentence_words(s));
  const std::size_t n = sentences.size();
  std::vector<std::vector<double>> w(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) w[i][j] = w[j][i] = sentence_similarity(words[i], words[j]);
  return w;
}

// Ranks sentences of an explicit weight matrix (symmetric, zero diagonal).
inline void rank_sentences(const std::vector<std::vector<double>>& weights, const TextRankParams& params,
                           TextRankResult& result) {
  const std::size_t n = weights.size();
  struct Edge {
    std::size_t from;
    double share;  // w(from, to) / out(from)
  };
  std::vector<double> out_weight(n, 0.0);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = 0; k < n; ++k) out_weight[j] += weights[j][k];
  std::vector<std::vector<Edge>> incoming(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (weights[j][i] > 0.0) incoming[i].push_back({j, weights[j][i] / out_weight[j]});

  std::vector<double> scores(n, 1.0), next(n);
  result.residuals.clear();
  result.converged = false;
  for (std::size_t iter = 0; iter < params.max_iter; ++iter) {
    double residual = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double sum = 0.0;
      for (const auto& e : incoming[i]) sum += e.share * scores[e.from];
      next[i] = (1.0 - params.damping) + params.damping * sum;
      residual = std::max(residual, std::abs(next[i] - scores[i]));
    }
    scores.swap(next);
    result.residuals.push_back(residual);
    if (residual <= params.tol) {
      result.converged = true;
      break;
    }
  }
  result.scores = std::move(scores);
}

// Highest score first, earlier position on ties; stops before the first
// sentence that would push the word count past the target, but always
// keeps at least one sentence.
inline std::vector<std::size_t> select_sentences(std::span<const std::string> sentences,
                                                 std::span<const double> scores, std::size_t target_words) {
  std::vector<std::size_t> order(sentences.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<std::size_t> chosen;
  std::size_t words = 0;
  for (std::size_t idx : order) {
    const std::size_t w = text::split_whitespace(sentences[idx]).size();
    if (!chosen.empty() && words + w > target_words) break;
    chosen.push_back(idx);
    words += w;
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

inline TextRankResult textrank(std::string_view text, const TextRankParams& params) {
  params.validate();
  TextRankResult result;
  result.sentences = segment(text);
  if (result.sentences.empty()) return result;
  rank_sentences(similarity_matrix(result.sentences), params, result);
  result.selected = select_sentences(result.sentences, result.scores, params.target_words);
  std::vector<std::string> picked;
  for (std::size_t i : result.selected) picked.push_back(result.sentences[i]);
  result.summary = text::join(picked, " ");
  return result;
}

inline std::string textrank_summarize(std::string_view text, std::size_t target_words, double damping = 0.85,
                                      double tol = 1e-6, std::size_t max_iter = 100) {
  return textrank(text, TextRankParams{target_words, damping, tol, max_iter}).summary;
}

struct ClassificationRecord {
  std::string text;
  OpinionKind label = OpinionKind::kMajority;
  std::int64_t case_id = 0;
  // Never dropped; flagged so callers can filter.
  bool empty_summary = false;

  bool operator==(const ClassificationRecord&) const = default;
};

inline void append_classification_records(const LegalCase& c, const TextRankParams& params,
                                          std::vector<ClassificationRecord>& out) {
  for (const auto& op : c.opinions) {
    if (op.kind != OpinionKind::kMajority && op.kind != OpinionKind::kDissent) continue;
    ClassificationRecord r;
    r.text = textrank(op.text, params).summary;
    r.label = op.kind;
    r.case_id = c.id;
    r.empty_summary = r.text.empty();
    out.push_back(std::move(r));
  }
}

inline std::vector<ClassificationRecord> build_classification_dataset(std::span<const LegalCase> cases,
                                                                      const TextRankParams& params) {
  std::vector<ClassificationRecord> out;
  for (const auto& c : cases) append_classification_records(c, params, out);
  return out;
}

inline constexpr std::string_view kClassificationHeader = "text\tlabel\tcase_id";

inline std::string format_classification_tsv(std::span<const ClassificationRecord> records) {
  std::string out(kClassificationHeader);
  out += '\n';
  for (const auto& r : records) {
    out += text::tsv_cell(r.text);
    out += '\t';
    out += to_string(r.label);
    out += '\t';
    out += std::to_string(r.case_id);
    out += '\n';
  }
  return out;
}

inline void write_classification_tsv(std::span<const ClassificationRecord> records,
                                     const std::filesystem::path& path) {
  io::write_file(path, format_classification_tsv(records));
}

inline std::vector<ClassificationRecord> read_classification_tsv(const std::filesystem::path& path) {
  const auto lines = io::read_lines(path);
  if (lines.empty() || lines.front() != kClassificationHeader)
    throw Error(ErrorKind::kFormatError, path.string() + ": missing header", 1);
  std::vector<ClassificationRecord> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto fields = text::split(lines[i], '\t');
    const auto line_no = static_cast<std::int64_t>(i + 1);
    if (fields.size() != 3) throw Error(ErrorKind::kFormatError, path.string() + ": expected 3 fields", line_no);
    ClassificationRecord r;
    r.text = fields[0];
    if (fields[1] == "majority")
      r.label = OpinionKind::kMajority;
    else if (fields[1] == "dissent")
      r.label = OpinionKind::kDissent;
    else
      throw Error(ErrorKind::kFormatError, path.string() + ": bad label '" + fields[1] + "'", line_no);
    try {
      r.case_id = std::stoll(fields[2]);
    } catch (const std::exception&) {
      throw Error(ErrorKind::kFormatError, path.string() + ": bad case_id", line_no);
    }
    r.empty_summary = r.text.empty();
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace lexforge

#endif  // LEXFORGE_SUMMARIZER_HPP
