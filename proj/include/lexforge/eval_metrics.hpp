#ifndef LEXFORGE_EVAL_METRICS_HPP
#define LEXFORGE_EVAL_METRICS_HPP

// Classification reports (per-label precision/recall/F1/support, accuracy,
// macro and support-weighted averages) and token-level NER scoring over
// entity tokens. Zero denominators give 0 with `degenerate` set, never NaN.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lexforge/error.hpp"
#include "lexforge/ner_silver.hpp"

namespace lexforge {

struct ConfusionMatrix {
  std::vector<std::string> labels;
  // counts[true][predicted]
  std::vector<std::vector<std::size_t>> counts;

  std::size_t total() const {
    std::size_t n = 0;
    for (const auto& row : counts)
      for (std::size_t c : row) n += c;
    return n;
  }
  std::size_t trace() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) n += counts[i][i];
    return n;
  }
};

inline ConfusionMatrix confusion(std::span<const std::string> y_true, std::span<const std::string> y_pred,
                                 std::span<const std::string> labels) {
  if (y_true.size() != y_pred.size())
    throw Error(ErrorKind::kLengthMismatch,
                std::to_string(y_true.size()) + " truth labels vs " + std::to_string(y_pred.size()) + " predictions");
  ConfusionMatrix m;
  m.labels.assign(labels.begin(), labels.end());
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < m.labels.size(); ++i) index.emplace(m.labels[i], i);
  m.counts.assign(m.labels.size(), std::vector<std::size_t>(m.labels.size(), 0));
  const auto lookup = [&](const std::string& label) {
    auto it = index.find(label);
    if (it == index.end()) throw Error(ErrorKind::kUnknownLabel, "label '" + label + "' is not declared");
    return it->second;
  };
  for (std::size_t k = 0; k < y_true.size(); ++k) ++m.counts[lookup(y_true[k])][lookup(y_pred[k])];
  return m;
}

// Labels in order of first appearance in truth, then predictions.
inline ConfusionMatrix confusion(std::span<const std::string> y_true, std::span<const std::string> y_pred) {
  std::vector<std::string> labels;
  std::set<std::string> seen;
  for (auto list : {y_true, y_pred})
    for (const auto& l : list)
      if (seen.insert(l).second) labels.push_back(l);
  return confusion(y_true, y_pred, labels);
}

struct ClassMetrics {
  std::string label;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
  // Some metric hit a zero denominator.
  bool degenerate = false;
};

struct Averages {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct ClassificationReport {
  std::vector<ClassMetrics> rows;
  double accuracy = 0.0;
  Averages macro;
  Averages weighted;
  std::size_t total = 0;
};

inline double safe_ratio(double num, double den, bool& degenerate) {
  if (den == 0.0) {
    degenerate = true;
    return 0.0;
  }
  return num / den;
}

inline double harmonic_mean(double p, double r, bool& degenerate) {
  return safe_ratio(2.0 * p * r, p + r, degenerate);
}

inline ClassMetrics class_metrics(std::string label, std::size_t tp, std::size_t fp, std::size_t fn) {
  ClassMetrics c;
  c.label = std::move(label);
  c.support = tp + fn;
  c.precision = safe_ratio(static_cast<double>(tp), static_cast<double>(tp + fp), c.degenerate);
  c.recall = safe_ratio(static_cast<double>(tp), static_cast<double>(tp + fn), c.degenerate);
  c.f1 = harmonic_mean(c.precision, c.recall, c.degenerate);
  return c;
}

inline void fill_averages(ClassificationReport& r) {
  const double k = static_cast<double>(r.rows.size());
  r.macro = {};
  r.weighted = {};
  double support = 0.0;
  for (const auto& row : r.rows) {
    r.macro.precision += row.precision / k;
    r.macro.recall += row.recall / k;
    r.macro.f1 += row.f1 / k;
    const double s = static_cast<double>(row.support);
    r.weighted.precision += row.precision * s;
    r.weighted.recall += row.recall * s;
    r.weighted.f1 += row.f1 * s;
    support += s;
  }
  if (support > 0.0) {
    r.weighted.precision /= support;
    r.weighted.recall /= support;
    r.weighted.f1 /= support;
  }
}

inline ClassificationReport classification_report(const ConfusionMatrix& m) {
  const std::size_t total = m.total();
  if (total == 0 || m.labels.empty()) throw Error(ErrorKind::kEmptyMatrix, "confusion matrix has no items");
  ClassificationReport r;
  r.total = total;
  const std::size_t n = m.labels.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t predicted = 0, actual = 0;
    for (std::size_t i = 0; i < n; ++i) {
      predicted += m.counts[i][c];
      actual += m.counts[c][i];
    }
    const std::size_t tp = m.counts[c][c];
    r.rows.push_back(class_metrics(m.labels[c], tp, predicted - tp, actual - tp));
  }
  r.accuracy = static_cast<double>(m.trace()) / static_cast<double>(total);
  fill_averages(r);
  return r;
}

// Averages over externally supplied per-label precision/recall/support
// (e.g. rows copied from a published report). F1 is recomputed from p and
// r; accuracy is left at 0 because it cannot be recovered from rows alone.
inline ClassificationReport report_from_rows(std::span<const ClassMetrics> rows) {
  ClassificationReport r;
  for (const auto& row : rows) {
    ClassMetrics c = row;
    c.degenerate = false;
    c.f1 = harmonic_mean(c.precision, c.recall, c.degenerate);
    r.total += c.support;
    r.rows.push_back(std::move(c));
  }
  fill_averages(r);
  return r;
}

// Rebuilds the 2x2 matrix behind a binary report: TP per class from
// recall * support, the off-diagonal from the supports. Throws InvalidSpec
// when the precisions do not agree with the rebuilt counts at 4 decimals.
inline ConfusionMatrix confusion_from_binary_rows(std::span<const ClassMetrics> rows) {
  if (rows.size() != 2) throw Error(ErrorKind::kInvalidSpec, "binary reconstruction needs exactly two rows");
  std::size_t tp[2];
  for (int c = 0; c < 2; ++c) {
    tp[c] = static_cast<std::size_t>(std::llround(rows[c].recall * static_cast<double>(rows[c].support)));
    if (tp[c] > rows[c].support) throw Error(ErrorKind::kInvalidSpec, "recall exceeds 1");
  }
  ConfusionMatrix m;
  m.labels = {rows[0].label, rows[1].label};
  m.counts = {{tp[0], rows[0].support - tp[0]}, {rows[1].support - tp[1], tp[1]}};
  for (int c = 0; c < 2; ++c) {
    const std::size_t predicted = m.counts[0][c] + m.counts[1][c];
    const double precision = predicted ? static_cast<double>(tp[c]) / static_cast<double>(predicted) : 0.0;
    if (std::abs(precision - rows[c].precision) > 5e-5)
      throw Error(ErrorKind::kInvalidSpec, "precision of '" + rows[c].label + "' inconsistent with recall/support");
  }
  return m;
}

// Half-up rounding to 4 decimals, for display.
inline double round4(double v) { return std::floor(v * 1e4 + 0.5 + 1e-7) / 1e4; }

inline std::string format4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", round4(v));
  return buf;
}

inline std::string format_report(const ClassificationReport& r) {
  std::string out = "label\tprecision\trecall\tf1-score\tsupport\n";
  for (const auto& row : r.rows)
    out += row.label + '\t' + format4(row.precision) + '\t' + format4(row.recall) + '\t' + format4(row.f1) + '\t' +
           std::to_string(row.support) + '\n';
  const std::string total = std::to_string(r.total);
  out += "accuracy\t\t\t" + format4(r.accuracy) + '\t' + total + '\n';
  out += "macro avg\t" + format4(r.macro.precision) + '\t' + format4(r.macro.recall) + '\t' + format4(r.macro.f1) +
         '\t' + total + '\n';
  out += "weighted avg\t" + format4(r.weighted.precision) + '\t' + format4(r.weighted.recall) + '\t' +
         format4(r.weighted.f1) + '\t' + total + '\n';
  return out;
}

// ---------------------------------------------------------------------------
// NER scoring, token level.

struct NerScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
  std::size_t tokens = 0;
  // Neither truth nor prediction has an entity token.
  bool all_outside = false;
  bool degenerate = false;
};

using TagSequences = std::vector<std::vector<std::string>>;

namespace detail {

inline void check_shapes(const TagSequences& truth, const TagSequences& pred) {
  if (truth.size() != pred.size())
    throw Error(ErrorKind::kShapeMismatch,
                std::to_string(truth.size()) + " truth sentences vs " + std::to_string(pred.size()) + " predicted");
  for (std::size_t s = 0; s < truth.size(); ++s)
    if (truth[s].size() != pred[s].size())
      throw Error(ErrorKind::kShapeMismatch, "sentence " + std::to_string(s) + " lengths differ");
}

}  // namespace detail

// TP: pred == truth != O. FP: pred != O and pred != truth. FN: truth != O
// and pred != truth. Accuracy is over every token, O included.
inline NerScores ner_scores(const TagSequences& truth, const TagSequences& pred) {
  detail::check_shapes(truth, pred);
  NerScores s;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    for (std::size_t k = 0; k < truth[i].size(); ++k) {
      const auto& t = truth[i][k];
      const auto& p = pred[i][k];
      ++s.tokens;
      if (t == p) {
        ++correct;
        if (is_entity(t)) ++s.true_positives;
        continue;
      }
      if (is_entity(p)) ++s.false_positives;
      if (is_entity(t)) ++s.false_negatives;
    }
  }
  s.all_outside = s.true_positives + s.false_positives + s.false_negatives == 0;
  const auto tp = static_cast<double>(s.true_positives);
  s.precision = safe_ratio(tp, tp + static_cast<double>(s.false_positives), s.degenerate);
  s.recall = safe_ratio(tp, tp + static_cast<double>(s.false_negatives), s.degenerate);
  s.f1 = harmonic_mean(s.precision, s.recall, s.degenerate);
  s.accuracy = s.tokens ? static_cast<double>(correct) / static_cast<double>(s.tokens) : 0.0;
  return s;
}

// One row per entity tag: the five canonical types first, then any other
// entity tag seen in truth or predictions, alphabetically.
inline std::vector<ClassMetrics> per_entity_report(const TagSequences& truth, const TagSequences& pred) {
  detail::check_shapes(truth, pred);
  std::vector<std::string> tags = kEntityTags;
  std::set<std::string> extra;
  for (const auto* side : {&truth, &pred})
    for (const auto& sentence : *side)
      for (const auto& tag : sentence)
        if (is_entity(tag) && std::find(tags.begin(), tags.end(), tag) == tags.end()) extra.insert(tag);
  tags.insert(tags.end(), extra.begin(), extra.end());

  std::map<std::string, std::size_t> tp, fp, fn;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    for (std::size_t k = 0; k < truth[i].size(); ++k) {
      const auto& t = truth[i][k];
      const auto& p = pred[i][k];
      if (t == p) {
        if (is_entity(t)) ++tp[t];
        continue;
      }
      if (is_entity(p)) ++fp[p];
      if (is_entity(t)) ++fn[t];
    }
  }
  std::vector<ClassMetrics> rows;
  for (const auto& tag : tags) rows.push_back(class_metrics(tag, tp[tag], fp[tag], fn[tag]));
  return rows;
}

inline std::string format_ner_report(const NerScores& s, std::span<const ClassMetrics> rows) {
  std::string out = "label\tprecision\trecall\tf1-score\tsupport\n";
  for (const auto& row : rows)
    out += row.label + '\t' + format4(row.precision) + '\t' + format4(row.recall) + '\t' + format4(row.f1) + '\t' +
           std::to_string(row.support) + '\n';
  const std::string support = std::to_string(s.true_positives + s.false_negatives);
  out += "entity micro avg\t" + format4(s.precision) + '\t' + format4(s.recall) + '\t' + format4(s.f1) + '\t' + support +
         '\n';
  out += "accuracy\t\t\t" + format4(s.accuracy) + '\t' + std::to_string(s.tokens) + '\n';
  return out;
}

}  // namespace lexforge

#endif  // LEXFORGE_EVAL_METRICS_HPP
