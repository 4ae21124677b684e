#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>
#include <sys/wait.h>

#include "lexforge_cli.hpp"
#include "support.hpp"

using namespace lexforge;
using namespace testing_support;

namespace {

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
};

Outcome run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "lexforge");
  std::ostringstream out, err;
  Outcome o;
  o.code = cli::run(args, out, err);
  o.out = out.str();
  o.err = err.str();
  return o;
}

// `n` cases, each with a majority opinion and every third with a dissent.
std::string case_file(int n) {
  std::string out;
  for (int i = 0; i < n; ++i) {
    std::string ops = opinion_json("majority", sentences_text(12, i * 100), "Judge A");
    if (i % 3 == 0) ops += ", " + opinion_json("dissent", sentences_text(11, i * 100 + 50));
    out += case_record(1000 + i, ops) + "\n";
  }
  return out;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    cases_ = dir_ / "cases.jsonl";
    write(cases_, case_file(30));
  }
  TempDir dir_;
  fs::path cases_;
};

void make_pretrain_dir(const fs::path& cases, const fs::path& out_dir) {
  const auto r = run_cli({"pretrain-data", "--inputs", cases.string(), "--out_dir", out_dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
}

}  // namespace

TEST_F(Cli, IngestReport) {
  const auto out = dir_ / "report" / "cases.tsv";
  const auto r = run_cli({"ingest", "--inputs", cases_.string(), "--out", out.string(), "--page_size", "4"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "cases\t30\nerrors\t0\n");
  const auto report = slurp(out);
  EXPECT_TRUE(report.starts_with("id\tdecision_date\tjurisdiction\tmajority\tdissent\tother\tdate_flagged\n"
                                 "1000\t1997-12-17\tNew Mexico\t1\t1\t0\t0\n1001\t1997-12-17\tNew Mexico\t1\t0\t0\t0\n"));
  EXPECT_EQ(std::count(report.begin(), report.end(), '\n'), 31);
  EXPECT_EQ(slurp(fs::path(out.string() + ".errors")), format_error_report({}));
  EXPECT_NE(slurp(fs::path(out.string() + ".config")).find("page_size = 4\n"), std::string::npos);
}

TEST_F(Cli, IngestCountsBadRecords) {
  write(cases_, case_file(2) + "{ not json\n" + case_file(1));
  const auto r = run_cli({"ingest", "--inputs", cases_.string(), "--out", (dir_ / "r.tsv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("errors\t"), std::string::npos);
  EXPECT_EQ(r.out.find("errors\t0"), std::string::npos);
}

TEST_F(Cli, PretrainDataFilesReadBack) {
  const auto out_dir = dir_ / "pre";
  const auto r = run_cli({"pretrain-data", "--inputs", cases_.string(), "--out_dir", out_dir.string(),
                          "--max_file_bytes", "4000"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto files = list_pretrain_files(out_dir);
  ASSERT_GT(files.size(), 1u);
  const auto docs = read_pretrain_files(files);
  // 30 majority opinions of 12 sentences, 10 dissents of 11.
  EXPECT_EQ(docs.size(), 40u);
  EXPECT_NE(r.out.find("documents\t40\n"), std::string::npos);
  EXPECT_NE(r.out.find("sentences\t470\n"), std::string::npos);
  EXPECT_TRUE(fs::exists(out_dir / "effective.conf"));
}

TEST_F(Cli, ClassifyDataSplits) {
  const auto out_dir = dir_ / "cls";
  const auto r = run_cli({"classify-data", "--inputs", cases_.string(), "--out_dir", out_dir.string(),
                          "--target_words", "30", "--seed", "5"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(r.out.starts_with("records\t40\nmajority\t30\ndissent\t10\n")) << r.out;
  EXPECT_NE(r.out.find("train\t28\nvalidation\t6\ntest\t6\n"), std::string::npos) << r.out;
  const auto all = read_classification_tsv(out_dir / "dataset.tsv");
  std::size_t parts = 0;
  for (auto name : {"train", "validation", "test"}) parts += read_classification_tsv(out_dir / (std::string(name) + ".tsv")).size();
  EXPECT_EQ(all.size(), 40u);
  EXPECT_EQ(parts, 40u);
}

TEST_F(Cli, VocabExtendMatchesLibrary) {
  const auto out = dir_ / "vocab.txt";
  const auto r = run_cli({"vocab-extend", "--vocab", (kDataDir / "vocab_cased.txt").string(), "--dictionary",
                          (kDataDir / "legal_dictionary.tsv").string(), "--threshold", "30", "--do_lower_case",
                          "false", "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto terms = load_legal_dictionary(kDataDir / "legal_dictionary.tsv");
  const auto ext = extend_vocab(load_vocab(kDataDir / "vocab_cased.txt", true), terms, 30);
  std::string expected;
  for (const auto& t : ext.added) expected += t + '\n';
  EXPECT_EQ(slurp(fs::path(out.string() + ".added")), expected);
  EXPECT_EQ(expected, "impermissible\nestoppel\nhabeas corpus\nlaches\n");
  const auto back = load_vocab(out, true);
  EXPECT_EQ(back.size(), ext.vocab.size());
  EXPECT_EQ(r.out, "added\t4\nvocab_size\t" + std::to_string(ext.vocab.size()) + "\n");
}

TEST_F(Cli, VocabExtendCountsCorpus) {
  write(dir_ / "dict.tsv", "term\tdefinition\nestoppel\tA bar.\nlaches\tDelay.\n");
  std::vector<ClassificationRecord> records;
  for (int i = 0; i < 3; ++i) records.push_back({"Estoppel applies here.", OpinionKind::kMajority, i, false});
  records.push_back({"Laches too.", OpinionKind::kDissent, 9, false});
  write_classification_tsv(records, dir_ / "corpus.tsv");
  const auto out = dir_ / "v.txt";
  const auto r = run_cli({"vocab-extend", "--vocab", (kDataDir / "vocab_uncased.txt").string(), "--dictionary",
                          (dir_ / "dict.tsv").string(), "--corpus", (dir_ / "corpus.tsv").string(), "--threshold", "2",
                          "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(fs::path(out.string() + ".added")), "estoppel\n");

  // Without a corpus, a dictionary lacking frequencies is a validation error.
  const auto bad = run_cli({"vocab-extend", "--vocab", (kDataDir / "vocab_uncased.txt").string(), "--dictionary",
                            (dir_ / "dict.tsv").string(), "--out", out.string()});
  EXPECT_EQ(bad.code, 1);
  EXPECT_TRUE(bad.err.starts_with("ERROR InvalidConfig:")) << bad.err;
}

TEST_F(Cli, InstancesDeterministic) {
  const auto pre = dir_ / "pre";
  make_pretrain_dir(cases_, pre);
  std::vector<std::string> outputs;
  for (auto name : {"a.tsv", "b.tsv"}) {
    const auto out = dir_ / name;
    const auto r = run_cli({"instances", "--pretrain_dir", pre.string(), "--vocab",
                            (kDataDir / "vocab_uncased.txt").string(), "--dupe_factor", "5", "--random_seed", "12345",
                            "--out", out.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(r.out.starts_with("documents\t40\ninstances\t")) << r.out;
    outputs.push_back(slurp(out));
  }
  ASSERT_FALSE(outputs[0].empty());
  EXPECT_EQ(outputs[0], outputs[1]);

  const auto vocab = load_vocab(kDataDir / "vocab_uncased.txt");
  EXPECT_FALSE(read_instances(dir_ / "a.tsv", vocab).empty());

  const auto other = dir_ / "c.tsv";
  ASSERT_EQ(run_cli({"instances", "--pretrain_dir", pre.string(), "--vocab", (kDataDir / "vocab_uncased.txt").string(),
                     "--random_seed", "1", "--out", other.string()})
                .code,
            0);
  EXPECT_NE(slurp(other), outputs[0]);
}

TEST_F(Cli, NerMerge) {
  write(dir_ / "a.conll",
        "Justice\tO\nMinzner\tPERSON\nof\tO\nNew\tGPE\nMexico\tGPE\n\n"
        "On\tO\nMay\tDATE\n3\tCARDINAL\n,\tO\n1997\tDATE\n");
  write(dir_ / "b.conll",
        "Justice\tO\nMinzner\tORG\nof\tO\nNew\tGPE\nMexico\tLOC\n\n"
        "On\tO\nMay\tDATE\n3\tDATE\n,\tO\n1997\tO\n");
  const auto out = dir_ / "silver.conll";
  const auto r = run_cli({"ner-merge", "--a", (dir_ / "a.conll").string(), "--b", (dir_ / "b.conll").string(),
                          "--mapping", (kDataDir / "tag_mapping.tsv").string(), "--rules",
                          (kDataDir / "correction_rules.tsv").string(), "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  // Minzner PERSON/ORG and 3 CARDINAL/DATE conflict; the rules then fix both.
  EXPECT_TRUE(r.out.starts_with("sentences\t2\nconflicts\t2\nunresolved\t2\n")) << r.out;
  const auto corpus = read_conll(out);
  ASSERT_EQ(corpus.size(), 2u);
  EXPECT_EQ(corpus[0].tags, (std::vector<std::string>{"O", "PERSON", "O", "GPE", "GPE"}));
  EXPECT_EQ(corpus[1].tags, (std::vector<std::string>{"O", "DATE", "DATE", "DATE", "DATE"}));
  EXPECT_TRUE(fs::exists(out.string() + ".conflicts.tsv"));
  EXPECT_TRUE(fs::exists(out.string() + ".changes.tsv"));
  EXPECT_TRUE(slurp(fs::path(out.string() + ".population.tsv")).starts_with("tag\ttokens\n"));

  // Resolving a conflict by hand is carried into the conflict file.
  auto conflicts = read_conflicts(out.string() + ".conflicts.tsv");
  ASSERT_EQ(conflicts.size(), 2u);
  conflicts[0].resolution = "PERSON";
  write(dir_ / "edited.tsv", format_conflicts(conflicts));
  const auto out2 = dir_ / "silver2.conll";
  const auto r2 = run_cli({"ner-merge", "--a", (dir_ / "a.conll").string(), "--b", (dir_ / "b.conll").string(),
                           "--mapping", (kDataDir / "tag_mapping.tsv").string(), "--resolutions",
                           (dir_ / "edited.tsv").string(), "--out", out2.string()});
  ASSERT_EQ(r2.code, 0) << r2.err;
  EXPECT_NE(r2.out.find("unresolved\t1\n"), std::string::npos) << r2.out;
}

TEST_F(Cli, NerMergeUnmappedTagIsValidationError) {
  write(dir_ / "a.conll", "x\tWEIRD\n");
  write(dir_ / "b.conll", "x\tO\n");
  const auto r = run_cli({"ner-merge", "--a", (dir_ / "a.conll").string(), "--b", (dir_ / "b.conll").string(),
                          "--mapping", (kDataDir / "tag_mapping.tsv").string(), "--out", (dir_ / "o").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_TRUE(r.err.starts_with("ERROR UnmappedTag:")) << r.err;
}

TEST_F(Cli, EvalClassifyMatchesLibrary) {
  const std::vector<std::string> truth = {"majority", "majority", "dissent", "dissent", "majority", "dissent"};
  const std::vector<std::string> pred = {"majority", "dissent", "dissent", "majority", "majority", "dissent"};
  std::string t, p;
  for (const auto& s : truth) t += s + "\n";
  for (const auto& s : pred) p += s + "\n";
  write(dir_ / "truth.txt", t);
  write(dir_ / "pred.txt", p);
  const auto r = run_cli({"eval", "--truth", (dir_ / "truth.txt").string(), "--pred", (dir_ / "pred.txt").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, format_report(classification_report(confusion(truth, pred))));

  const auto out = dir_ / "report.tsv";
  const auto r2 = run_cli({"eval", "--truth", (dir_ / "truth.txt").string(), "--pred", (dir_ / "pred.txt").string(),
                           "--labels", "dissent,majority", "--out", out.string()});
  ASSERT_EQ(r2.code, 0) << r2.err;
  const std::vector<std::string> order = {"dissent", "majority"};
  EXPECT_EQ(slurp(out), format_report(classification_report(confusion(truth, pred, order))));
}

TEST_F(Cli, EvalNer) {
  write(dir_ / "t.conll", "A\tPERSON\nb\tO\n\nC\tORG\n");
  write(dir_ / "p.conll", "A\tPERSON\nb\tGPE\n\nC\tO\n");
  const auto r = run_cli({"eval", "--mode", "ner", "--truth", (dir_ / "t.conll").string(), "--pred",
                          (dir_ / "p.conll").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const TagSequences truth = {{"PERSON", "O"}, {"ORG"}};
  const TagSequences pred = {{"PERSON", "GPE"}, {"O"}};
  EXPECT_EQ(r.out, format_ner_report(ner_scores(truth, pred), per_entity_report(truth, pred)));
}

TEST_F(Cli, ErrorsAndExitCodes) {
  auto r = run_cli({"ingest", "--inputs", (dir_ / "missing.jsonl").string(), "--out", (dir_ / "o").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_TRUE(r.err.starts_with("ERROR IoError: ")) << r.err;

  r = run_cli({"ingest", "--inputs", cases_.string(), "--out", (dir_ / "o").string(), "--page_size", "zero"});
  EXPECT_EQ(r.code, 1);
  EXPECT_TRUE(r.err.starts_with("ERROR InvalidConfig: ")) << r.err;

  r = run_cli({"instances", "--bogus_flag", "1"});
  EXPECT_EQ(r.code, 1);
  EXPECT_TRUE(r.err.starts_with("ERROR InvalidConfig: ")) << r.err;

  r = run_cli({});
  EXPECT_EQ(r.code, 1);

  r = run_cli({"ingest", "--inputs", cases_.string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("--out is required"), std::string::npos) << r.err;

  r = run_cli({"eval", "--mode", "span", "--truth", "x", "--pred", "y"});
  EXPECT_EQ(r.code, 1);

  r = run_cli({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("vocab-extend"), std::string::npos);
}

TEST_F(Cli, ConfigFileThenFlags) {
  write(dir_ / "run.conf", "# shared settings\nseed = 77\ntarget_words = 25\n");
  const auto out_dir = dir_ / "cls";
  const auto r = run_cli({"--config", (dir_ / "run.conf").string(), "classify-data", "--inputs", cases_.string(),
                          "--out_dir", out_dir.string(), "--seed", "78"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto conf = slurp(out_dir / "effective.conf");
  EXPECT_NE(conf.find("target_words = 25\n"), std::string::npos);
  EXPECT_NE(conf.find("seed = 78\n"), std::string::npos);

  write(dir_ / "bad.conf", "seeed = 1\n");
  const auto bad = run_cli({"--config", (dir_ / "bad.conf").string(), "classify-data"});
  EXPECT_EQ(bad.code, 1);
  EXPECT_TRUE(bad.err.starts_with("ERROR InvalidConfig:")) << bad.err;
}

TEST_F(Cli, EnvironmentConfig) {
  write(dir_ / "env.conf", "target_words = 20\nseed = 3\n");
  ::setenv("LEXFORGE_CONFIG", (dir_ / "env.conf").c_str(), 1);
  const auto out_dir = dir_ / "cls";
  const auto r = run_cli({"classify-data", "--inputs", cases_.string(), "--out_dir", out_dir.string()});
  ::unsetenv("LEXFORGE_CONFIG");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto conf = slurp(out_dir / "effective.conf");
  EXPECT_NE(conf.find("target_words = 20\n"), std::string::npos);
  EXPECT_NE(conf.find("seed = 3\n"), std::string::npos);
}

// Replaying a sidecar reproduces every output byte for byte.
TEST_F(Cli, SidecarReplay) {
  const auto first = dir_ / "first";
  auto r = run_cli({"classify-data", "--inputs", cases_.string(), "--out_dir", first.string(), "--seed", "9",
                    "--target_words", "40", "--split", "train:0.5,test:0.5"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto second = dir_ / "second";
  r = run_cli({"--config", (first / "effective.conf").string(), "classify-data", "--out_dir", second.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  for (auto name : {"dataset.tsv", "train.tsv", "test.tsv"}) EXPECT_EQ(slurp(first / name), slurp(second / name)) << name;

  const auto pre = dir_ / "pre";
  make_pretrain_dir(cases_, pre);
  const auto a = dir_ / "inst_a.tsv";
  r = run_cli({"instances", "--pretrain_dir", pre.string(), "--vocab", (kDataDir / "vocab_uncased.txt").string(),
               "--random_seed", "4", "--max_seq_length", "64", "--out", a.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto b = dir_ / "inst_b.tsv";
  r = run_cli({"--config", a.string() + ".config", "instances", "--out", b.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(a), slurp(b));
}

// The installed binary behaves like the in-process entry point.
TEST(CliBinary, ExitCodesFromProcess) {
  TempDir dir;
  const std::string bin = LEXFORGE_BIN;
  const std::string cmd = "'" + bin + "' ingest --inputs '" + (dir / "nope.jsonl").string() + "' --out '" +
                          (dir / "o.tsv").string() + "' 2> '" + (dir / "err.txt").string() + "'";
  const int status = std::system(cmd.c_str());
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 2);
  EXPECT_TRUE(slurp(dir / "err.txt").starts_with("ERROR IoError: "));
}
