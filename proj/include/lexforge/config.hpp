#ifndef LEXFORGE_CONFIG_HPP
#define LEXFORGE_CONFIG_HPP

// Flat key-value configuration shared by every subcommand. File syntax is
// `key = value` per line with `#` comments. Keys are the command-line flag
// names, so a dumped effective config can be replayed with --config.

#include <cerrno>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lexforge/error.hpp"
#include "lexforge/io.hpp"
#include "lexforge/pretrain_instances.hpp"
#include "lexforge/sentence_pipeline.hpp"
#include "lexforge/split.hpp"
#include "lexforge/summarizer.hpp"
#include "lexforge/text.hpp"

namespace lexforge {

inline constexpr std::string_view kConfigEnvVar = "LEXFORGE_CONFIG";

using ConfigMap = std::map<std::string, std::string>;

inline ConfigMap parse_config(std::string_view contents, std::string_view origin = "config") {
  ConfigMap out;
  std::size_t line_no = 0;
  for (const auto& raw : text::split(contents, '\n')) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = text::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw Error(ErrorKind::kInvalidConfig, std::string(origin) + ": expected key = value",
                  static_cast<std::int64_t>(line_no));
    const std::string key(text::trim(line.substr(0, eq)));
    if (key.empty())
      throw Error(ErrorKind::kInvalidConfig, std::string(origin) + ": empty key", static_cast<std::int64_t>(line_no));
    out[key] = std::string(text::trim(line.substr(eq + 1)));
  }
  return out;
}

class PipelineConfig {
 public:
  PipelineConfig() {
    const QualityRules q;
    const PretrainConfig p;
    const TextRankParams t;
    values_ = {
        // ingestion and shared paths
        {"inputs", ""},
        {"page_size", "256"},
        {"out", ""},
        {"out_dir", ""},
        // sentence pipeline
        {"min_tokens", std::to_string(q.min_tokens)},
        {"min_alpha_ratio", "0.5"},
        {"max_chars", std::to_string(q.max_chars)},
        {"max_file_bytes", std::to_string(kDefaultMaxFileBytes)},
        // summarizer
        {"target_words", std::to_string(t.target_words)},
        {"damping", "0.85"},
        {"tol", "1e-06"},
        {"max_iter", std::to_string(t.max_iter)},
        {"split", "train:0.7,validation:0.15,test:0.15"},
        {"seed", "12345"},
        // vocabulary
        {"vocab", ""},
        {"dictionary", ""},
        {"corpus", ""},
        {"threshold", "30"},
        {"do_lower_case", "true"},
        // instances
        {"pretrain_dir", ""},
        {"max_seq_length", std::to_string(p.max_seq_length)},
        {"dupe_factor", std::to_string(p.dupe_factor)},
        {"masked_lm_prob", "0.15"},
        {"max_predictions_per_seq", std::to_string(p.max_predictions_per_seq)},
        {"short_seq_prob", "0.1"},
        {"random_seed", std::to_string(p.random_seed)},
        // ner
        {"a", ""},
        {"b", ""},
        {"a_toolkit", "nltk"},
        {"b_toolkit", "spacy"},
        {"mapping", ""},
        {"rules", ""},
        {"resolutions", ""},
        {"bio", "false"},
        {"ner_split", "false"},
        // eval
        {"truth", ""},
        {"pred", ""},
        {"mode", "classify"},
        {"labels", ""},
    };
  }

  bool has(std::string_view key) const { return values_.count(std::string(key)) > 0; }

  // Storage for a key, for binding command-line options.
  std::string& slot(const std::string& key) {
    auto it = values_.find(key);
    if (it == values_.end()) throw Error(ErrorKind::kInvalidConfig, "unknown config key '" + key + "'");
    return it->second;
  }

  void set(const std::string& key, std::string value) { slot(key) = std::move(value); }

  void merge(const ConfigMap& m) {
    for (const auto& [k, v] : m) set(k, v);
  }

  void merge_file(const std::filesystem::path& path) { merge(parse_config(io::read_file(path), path.string())); }

  const std::string& str(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw Error(ErrorKind::kInvalidConfig, "unknown config key '" + key + "'");
    return it->second;
  }

  const std::string& required(const std::string& key) const {
    const auto& v = str(key);
    if (v.empty()) throw Error(ErrorKind::kInvalidConfig, "--" + key + " is required");
    return v;
  }

  std::uint64_t u64(const std::string& key) const {
    const auto& v = str(key);
    errno = 0;
    char* end = nullptr;
    const unsigned long long parsed = std::strtoull(v.c_str(), &end, 10);
    if (v.empty() || v.front() == '-' || errno != 0 || end != v.c_str() + v.size())
      throw Error(ErrorKind::kInvalidConfig, key + " must be a non-negative integer, got '" + v + "'");
    return parsed;
  }

  std::size_t size(const std::string& key) const { return static_cast<std::size_t>(u64(key)); }

  double real(const std::string& key) const {
    const auto& v = str(key);
    errno = 0;
    char* end = nullptr;
    const double parsed = std::strtod(v.c_str(), &end);
    if (v.empty() || errno != 0 || end != v.c_str() + v.size())
      throw Error(ErrorKind::kInvalidConfig, key + " must be a number, got '" + v + "'");
    return parsed;
  }

  bool flag(const std::string& key) const {
    const auto v = text::to_lower(str(key));
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw Error(ErrorKind::kInvalidConfig, key + " must be true or false, got '" + str(key) + "'");
  }

  std::vector<std::string> list(const std::string& key) const {
    std::vector<std::string> out;
    for (const auto& part : text::split(str(key), ',')) {
      const auto item = text::trim(part);
      if (!item.empty()) out.emplace_back(item);
    }
    return out;
  }

  QualityRules quality_rules() const {
    QualityRules q{size("min_tokens"), real("min_alpha_ratio"), size("max_chars")};
    q.validate();
    return q;
  }

  TextRankParams textrank() const {
    TextRankParams t{size("target_words"), real("damping"), real("tol"), size("max_iter")};
    t.validate();
    return t;
  }

  SplitSpec split_spec() const { return parse_split_spec(str("split"), u64("seed")); }

  PretrainConfig pretrain() const {
    PretrainConfig p;
    p.max_seq_length = size("max_seq_length");
    p.dupe_factor = size("dupe_factor");
    p.masked_lm_prob = real("masked_lm_prob");
    p.max_predictions_per_seq = size("max_predictions_per_seq");
    p.short_seq_prob = real("short_seq_prob");
    p.random_seed = u64("random_seed");
    p.validate();
    return p;
  }

  std::string dump(std::span<const std::string> keys) const {
    std::string out = "# effective configuration\n";
    for (const auto& k : keys) out += k + " = " + str(k) + '\n';
    return out;
  }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace lexforge

#endif  // LEXFORGE_CONFIG_HPP
