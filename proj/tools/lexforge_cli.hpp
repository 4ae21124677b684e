#ifndef LEXFORGE_TOOLS_LEXFORGE_CLI_HPP
#define LEXFORGE_TOOLS_LEXFORGE_CLI_HPP

// Command-line front end. Every subcommand reads its parameters from the
// shared PipelineConfig: defaults, then the config file (--config, or the
// path in $LEXFORGE_CONFIG), then flags. The effective values are written
// next to the outputs so a run can be replayed with --config.
//
// Exit codes: 0 success, 1 validation error, 2 I/O error. Failures print
// `ERROR <kind>: <message>` on stderr.

#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lexforge.hpp"

namespace lexforge::cli {

namespace fs = std::filesystem;

struct Context {
  PipelineConfig& cfg;
  std::ostream& out;
};

using Keys = std::vector<std::string>;

inline void write_sidecar(const PipelineConfig& cfg, const Keys& keys, const fs::path& path) {
  io::write_file(path, cfg.dump(keys));
}

inline std::vector<fs::path> input_paths(const PipelineConfig& cfg) {
  std::vector<fs::path> paths;
  for (const auto& p : cfg.list("inputs")) paths.emplace_back(p);
  if (paths.empty()) throw Error(ErrorKind::kInvalidConfig, "--inputs is required");
  for (const auto& p : paths)
    if (!fs::exists(p)) throw Error(ErrorKind::kIoError, "input not found: " + p.string());
  return paths;
}

inline fs::path with_suffix(const fs::path& p, const std::string& suffix) { return fs::path(p.string() + suffix); }

inline void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
    if (ec) throw Error(ErrorKind::kIoError, "cannot create " + p.parent_path().string());
  }
}

// ---------------------------------------------------------------------------

inline const Keys kIngestKeys = {"inputs", "page_size", "out"};

inline int run_ingest(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const fs::path out = cfg.required("out");
  const std::size_t page_size = cfg.size("page_size");
  auto paths = input_paths(cfg);
  ensure_parent(out);

  auto stream = stream_cases(paths, page_size);
  std::string report = "id\tdecision_date\tjurisdiction\tmajority\tdissent\tother\tdate_flagged\n";
  std::size_t cases = 0;
  for (const auto& c : stream) {
    std::size_t counts[3] = {0, 0, 0};
    for (const auto& op : c.opinions) ++counts[static_cast<int>(op.kind)];
    report += std::to_string(c.id) + '\t' + c.decision_date.value_or(c.raw_decision_date.value_or("")) + '\t' +
              text::tsv_cell(c.jurisdiction_name.value_or("")) + '\t' + std::to_string(counts[0]) + '\t' +
              std::to_string(counts[1]) + '\t' + std::to_string(counts[2]) + '\t' + (c.date_flagged() ? "1" : "0") +
              '\n';
    ++cases;
  }
  io::write_file(out, report);
  io::write_file(with_suffix(out, ".errors"), format_error_report(stream.errors()));
  write_sidecar(cfg, kIngestKeys, with_suffix(out, ".config"));
  ctx.out << "cases\t" << cases << "\nerrors\t" << stream.errors().size() << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

inline const Keys kPretrainDataKeys = {"inputs",     "page_size", "out_dir",  "min_tokens",
                                       "min_alpha_ratio", "max_chars", "max_file_bytes"};

inline int run_pretrain_data(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const fs::path out_dir = cfg.required("out_dir");
  const auto rules = cfg.quality_rules();
  const std::uint64_t max_bytes = cfg.u64("max_file_bytes");
  if (max_bytes == 0) throw Error(ErrorKind::kInvalidConfig, "max_file_bytes must be positive");
  auto paths = input_paths(cfg);
  auto stream = stream_cases(paths, cfg.size("page_size"));

  PretrainWriter writer(out_dir, max_bytes);
  std::size_t cases = 0, opinions = 0, docs = 0, sentences = 0;
  for (const auto& c : stream) {
    ++cases;
    opinions += c.opinions.size();
    for (const auto& d : build_documents(c, rules)) {
      ++docs;
      sentences += d.sentences.size();
      writer.add(d);
    }
  }
  const auto files = writer.finish();
  io::write_file(out_dir / "ingest_errors.txt", format_error_report(stream.errors()));
  write_sidecar(cfg, kPretrainDataKeys, out_dir / "effective.conf");
  for (const auto& f : files) ctx.out << f.string() << '\n';
  ctx.out << "cases\t" << cases << "\nopinions\t" << opinions << "\ndocuments\t" << docs << "\nsentences\t"
          << sentences << "\nfiles\t" << files.size() << "\nerrors\t" << stream.errors().size() << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

inline const Keys kClassifyDataKeys = {"inputs", "page_size", "out_dir", "target_words", "damping",
                                       "tol",    "max_iter",  "split",   "seed"};

inline int run_classify_data(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const fs::path out_dir = cfg.required("out_dir");
  const auto params = cfg.textrank();
  const auto split = cfg.split_spec();
  auto paths = input_paths(cfg);
  auto stream = stream_cases(paths, cfg.size("page_size"));

  std::vector<ClassificationRecord> records;
  for (const auto& c : stream) append_classification_records(c, params, records);

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorKind::kIoError, "cannot create " + out_dir.string());
  write_classification_tsv(records, out_dir / "dataset.tsv");
  const auto parts = split_dataset(std::span<const ClassificationRecord>(records), split);
  for (const auto& part : parts) write_classification_tsv(part.items, out_dir / (part.name + ".tsv"));
  io::write_file(out_dir / "ingest_errors.txt", format_error_report(stream.errors()));
  write_sidecar(cfg, kClassifyDataKeys, out_dir / "effective.conf");

  std::size_t majority = 0, dissent = 0, empty = 0;
  for (const auto& r : records) {
    (r.label == OpinionKind::kMajority ? majority : dissent) += 1;
    empty += r.empty_summary;
  }
  ctx.out << "records\t" << records.size() << "\nmajority\t" << majority << "\ndissent\t" << dissent
          << "\nempty_summaries\t" << empty << '\n';
  for (const auto& part : parts) ctx.out << part.name << '\t' << part.items.size() << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

inline const Keys kVocabExtendKeys = {"vocab", "dictionary", "corpus", "threshold", "do_lower_case", "out"};

inline int run_vocab_extend(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const fs::path out = cfg.required("out");
  const std::size_t threshold = cfg.size("threshold");
  const bool cased = !cfg.flag("do_lower_case");
  const auto vocab = load_vocab(cfg.required("vocab"), cased);
  auto terms = load_legal_dictionary(cfg.required("dictionary"));
  if (!cfg.str("corpus").empty()) {
    const auto corpus = read_classification_tsv(cfg.str("corpus"));
    terms = term_doc_frequency(terms, corpus);
  } else {
    for (const auto& t : terms)
      if (!t.frequency_known)
        throw Error(ErrorKind::kInvalidConfig, "term '" + t.term + "' has no doc_frequency and no --corpus was given");
  }
  const auto ext = extend_vocab(vocab, terms, threshold);
  ensure_parent(out);
  save_vocab(ext.vocab, out);
  std::string added;
  for (const auto& t : ext.added) added += t + '\n';
  io::write_file(with_suffix(out, ".added"), added);
  io::write_file(with_suffix(out, ".terms.tsv"), format_legal_dictionary(terms));
  write_sidecar(cfg, kVocabExtendKeys, with_suffix(out, ".config"));
  ctx.out << "added\t" << ext.added.size() << "\nvocab_size\t" << ext.vocab.size() << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

inline const Keys kInstancesKeys = {"pretrain_dir",     "vocab",       "do_lower_case",
                                    "max_seq_length",   "dupe_factor", "masked_lm_prob",
                                    "max_predictions_per_seq", "short_seq_prob", "random_seed", "out"};

inline int run_instances(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const fs::path out = cfg.required("out");
  const auto pcfg = cfg.pretrain();
  const auto vocab = load_vocab(cfg.required("vocab"), !cfg.flag("do_lower_case"));
  const auto files = list_pretrain_files(cfg.required("pretrain_dir"));
  const auto docs = read_pretrain_files(files);
  const auto instances = create_instances(docs, vocab, pcfg);
  ensure_parent(out);
  const auto written = serialize_instances(instances, vocab, pcfg, out);
  write_sidecar(cfg, kInstancesKeys, with_suffix(out, ".config"));
  std::size_t random_next = 0;
  for (const auto& i : instances) random_next += i.is_random_next;
  ctx.out << "documents\t" << docs.size() << "\ninstances\t" << written << "\nrandom_next\t" << random_next << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

inline const Keys kNerMergeKeys = {"a",           "b",   "a_toolkit", "b_toolkit", "mapping", "rules",
                                   "resolutions", "bio", "out",       "ner_split", "seed"};

inline int run_ner_merge(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const fs::path out = cfg.required("out");
  const bool bio = cfg.flag("bio");
  const bool do_split = cfg.flag("ner_split");
  const std::uint64_t seed = cfg.u64("seed");
  const TagSet tags;
  const auto mapping = load_tag_mapping(cfg.required("mapping"), tags);
  auto rules = builtin_correction_rules();
  if (!cfg.str("rules").empty()) {
    auto extra = load_correction_rules(cfg.str("rules"));
    rules.insert(rules.end(), extra.begin(), extra.end());
  }
  const auto raw_a = read_conll(cfg.required("a"), bio);
  const auto raw_b = read_conll(cfg.required("b"), bio);

  std::vector<TaggedSentence> a, b;
  for (const auto& s : raw_a) a.push_back(map_tags(s, mapping, cfg.str("a_toolkit")));
  for (const auto& s : raw_b) b.push_back(map_tags(s, mapping, cfg.str("b_toolkit")));
  auto merged = merge_corpora(a, b);

  if (!cfg.str("resolutions").empty()) {
    const auto edited = read_conflicts(cfg.str("resolutions"));
    apply_resolutions(merged.corpus, edited, tags);
    std::map<std::pair<std::size_t, std::size_t>, std::string> resolved;
    for (const auto& c : edited)
      if (!c.resolution.empty()) resolved[{c.sentence_index, c.token_index}] = c.resolution;
    for (auto& c : merged.conflicts)
      if (auto it = resolved.find({c.sentence_index, c.token_index}); it != resolved.end()) c.resolution = it->second;
  }
  auto corrected = apply_corrections(std::move(merged.corpus), rules, tags);

  ensure_parent(out);
  write_conll(corrected.corpus, out, bio);
  io::write_file(with_suffix(out, ".conflicts.tsv"), format_conflicts(merged.conflicts));
  io::write_file(with_suffix(out, ".changes.tsv"), format_change_log(corrected.changes));
  std::string population = "tag\ttokens\n";
  for (const auto& [tag, n] : tag_population(corrected.corpus)) population += tag + '\t' + std::to_string(n) + '\n';
  io::write_file(with_suffix(out, ".population.tsv"), population);
  if (do_split) {
    for (const auto& part : split_ner(corrected.corpus, seed))
      write_conll(part.items, with_suffix(out, "." + part.name), bio);
  }
  write_sidecar(cfg, kNerMergeKeys, with_suffix(out, ".config"));

  std::size_t unresolved = 0;
  for (const auto& c : merged.conflicts) unresolved += c.resolution.empty();
  ctx.out << "sentences\t" << corrected.corpus.size() << "\nconflicts\t" << merged.conflicts.size()
          << "\nunresolved\t" << unresolved << "\ncorrections\t" << corrected.changes.size() << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

inline const Keys kEvalKeys = {"truth", "pred", "mode", "labels", "out"};

inline std::vector<std::string> read_label_lines(const fs::path& path) {
  std::vector<std::string> labels;
  for (auto& line : io::read_lines(path)) {
    const auto trimmed = text::trim(line);
    if (!trimmed.empty()) labels.emplace_back(trimmed);
  }
  return labels;
}

inline TagSequences read_tag_sequences(const fs::path& path) {
  TagSequences out;
  for (auto& s : read_conll(path)) out.push_back(std::move(s.tags));
  return out;
}

inline int run_eval(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const std::string mode = cfg.str("mode");
  if (mode != "classify" && mode != "ner") throw Error(ErrorKind::kInvalidConfig, "--mode must be classify or ner");
  const fs::path truth_path = cfg.required("truth");
  const fs::path pred_path = cfg.required("pred");

  std::string report;
  if (mode == "classify") {
    const auto truth = read_label_lines(truth_path);
    const auto pred = read_label_lines(pred_path);
    const auto declared = cfg.list("labels");
    const auto m = declared.empty() ? confusion(truth, pred) : confusion(truth, pred, declared);
    report = format_report(classification_report(m));
  } else {
    const auto truth = read_tag_sequences(truth_path);
    const auto pred = read_tag_sequences(pred_path);
    const auto scores = ner_scores(truth, pred);
    report = format_ner_report(scores, per_entity_report(truth, pred));
  }
  if (cfg.str("out").empty()) {
    ctx.out << report;
  } else {
    const fs::path out = cfg.str("out");
    ensure_parent(out);
    io::write_file(out, report);
    write_sidecar(cfg, kEvalKeys, with_suffix(out, ".config"));
  }
  return 0;
}

// ---------------------------------------------------------------------------

// Finds --config in the raw arguments so file values can be applied before
// flags are parsed.
inline std::string find_config_path(const std::vector<std::string>& args) {
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
    if (args[i].starts_with("--config=")) return args[i].substr(9);
  }
  if (const char* env = std::getenv(std::string(kConfigEnvVar).c_str()); env != nullptr && *env != '\0') return env;
  return {};
}

inline int report_error(std::ostream& err, std::string_view kind, const std::string& message, int code) {
  err << "ERROR " << kind << ": " << message << '\n';
  return code;
}

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  PipelineConfig cfg;
  CLI::App app{"Legal-corpus preparation toolkit: pretraining data, classification and NER datasets, vocabulary "
               "extension, and evaluation.",
               "lexforge"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "Config file of `key = value` lines (default: $LEXFORGE_CONFIG)");

  const auto bind = [&](CLI::App* sub, const std::string& key, const std::string& help) {
    sub->add_option("--" + key, cfg.slot(key), help);
  };

  std::vector<std::pair<CLI::App*, std::function<int(Context&)>>> commands;
  const auto inputs_option = [&](CLI::App* sub) {
    sub->add_option("--inputs", cfg.slot("inputs"), "Comma-separated case-record files")->delimiter('\0');
    bind(sub, "page_size", "Parsed cases held in memory at once");
  };

  auto* ingest = app.add_subcommand("ingest", "Parse case records and write a per-case summary");
  inputs_option(ingest);
  bind(ingest, "out", "Summary report path");
  commands.emplace_back(ingest, run_ingest);

  auto* pretrain = app.add_subcommand("pretrain-data", "Write sentence-per-line pretraining files");
  inputs_option(pretrain);
  bind(pretrain, "out_dir", "Output directory");
  bind(pretrain, "min_tokens", "Minimum tokens per kept sentence");
  bind(pretrain, "min_alpha_ratio", "Minimum alphabetic fraction per kept sentence");
  bind(pretrain, "max_chars", "Maximum characters per kept sentence");
  bind(pretrain, "max_file_bytes", "Rotate output files at this size");
  commands.emplace_back(pretrain, run_pretrain_data);

  auto* classify = app.add_subcommand("classify-data", "Summarize opinions and write the classification dataset");
  inputs_option(classify);
  bind(classify, "out_dir", "Output directory");
  bind(classify, "target_words", "Summary length target in words");
  bind(classify, "damping", "TextRank damping factor");
  bind(classify, "tol", "TextRank convergence tolerance");
  bind(classify, "max_iter", "TextRank iteration cap");
  bind(classify, "split", "Splits as name:fraction,...");
  bind(classify, "seed", "Shuffle seed for the split");
  commands.emplace_back(classify, run_classify_data);

  auto* vocab = app.add_subcommand("vocab-extend", "Append frequent legal terms to a WordPiece vocabulary");
  bind(vocab, "vocab", "Base vocabulary file");
  bind(vocab, "dictionary", "Legal dictionary TSV");
  bind(vocab, "corpus", "Classification dataset TSV used to count document frequency");
  bind(vocab, "threshold", "Minimum document frequency");
  bind(vocab, "do_lower_case", "Lowercase input (uncased vocabulary)");
  bind(vocab, "out", "Extended vocabulary path");
  commands.emplace_back(vocab, run_vocab_extend);

  auto* instances = app.add_subcommand("instances", "Create masked-LM / next-sentence instances");
  bind(instances, "pretrain_dir", "Directory of part-*.txt pretraining files");
  bind(instances, "vocab", "Vocabulary file");
  bind(instances, "do_lower_case", "Lowercase input (uncased vocabulary)");
  bind(instances, "max_seq_length", "Maximum sequence length");
  bind(instances, "dupe_factor", "Passes over the corpus");
  bind(instances, "masked_lm_prob", "Masked LM probability");
  bind(instances, "max_predictions_per_seq", "Maximum masked predictions per sequence");
  bind(instances, "short_seq_prob", "Probability of a shorter target length");
  bind(instances, "random_seed", "Random seed");
  bind(instances, "out", "Record file path");
  commands.emplace_back(instances, run_instances);

  auto* ner = app.add_subcommand("ner-merge", "Merge two toolkits' NER tags into a silver corpus");
  bind(ner, "a", "First toolkit's tagged corpus");
  bind(ner, "b", "Second toolkit's tagged corpus");
  bind(ner, "a_toolkit", "Mapping name of the first toolkit");
  bind(ner, "b_toolkit", "Mapping name of the second toolkit");
  bind(ner, "mapping", "Tag mapping TSV");
  bind(ner, "rules", "Extra correction rules TSV");
  bind(ner, "resolutions", "Edited conflict file to apply");
  bind(ner, "bio", "Read and write B-/I- prefixed tags");
  bind(ner, "out", "Merged corpus path");
  bind(ner, "ner_split", "Also write train/test/dev splits");
  bind(ner, "seed", "Shuffle seed for the split");
  commands.emplace_back(ner, run_ner_merge);

  auto* eval = app.add_subcommand("eval", "Score predictions against truth");
  bind(eval, "truth", "Truth file");
  bind(eval, "pred", "Prediction file");
  bind(eval, "mode", "classify or ner");
  bind(eval, "labels", "Comma-separated label order (classify)");
  bind(eval, "out", "Report path (default: stdout)");
  commands.emplace_back(eval, run_eval);

  try {
    if (const auto path = find_config_path(args); !path.empty()) cfg.merge_file(path);
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
      app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
      out << app.help();
      return 0;
    } catch (const CLI::CallForAllHelp&) {
      out << app.help("", CLI::AppFormatMode::All);
      return 0;
    } catch (const CLI::ParseError& e) {
      return report_error(err, "InvalidConfig", e.what(), 1);
    }
    Context ctx{cfg, out};
    for (auto& [sub, fn] : commands)
      if (sub->parsed()) return fn(ctx);
    return report_error(err, "InvalidConfig", "no subcommand", 1);
  } catch (const Error& e) {
    // what() already reads "<kind>: <message>".
    err << "ERROR " << e.what() << '\n';
    return e.is_io() ? 2 : 1;
  } catch (const fs::filesystem_error& e) {
    return report_error(err, "IoError", e.what(), 2);
  } catch (const std::exception& e) {
    return report_error(err, "Internal", e.what(), 1);
  }
}

}  // namespace lexforge::cli

#endif  // LEXFORGE_TOOLS_LEXFORGE_CLI_HPP
