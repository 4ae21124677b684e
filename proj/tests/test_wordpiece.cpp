#include <gtest/gtest.h>

#include <random>

#include "lexforge/wordpiece.hpp"
#include "support.hpp"

using namespace lexforge;
using namespace testing_support;

namespace {

using Strings = std::vector<std::string>;

const Strings kSpecials = {"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"};

Vocabulary make_vocab(Strings extra, bool cased = false) {
  Strings tokens = kSpecials;
  tokens.insert(tokens.end(), extra.begin(), extra.end());
  return Vocabulary::from_tokens(tokens, cased);
}

Vocabulary uncased() { return load_vocab(kDataDir / "vocab_uncased.txt", false); }
Vocabulary cased() { return load_vocab(kDataDir / "vocab_cased.txt", true); }

LegalTerm term(std::string t, std::size_t df) { return LegalTerm{std::move(t), "", df, true}; }

}  // namespace

TEST(Tokenize, CourtHadErredExample) {
  EXPECT_EQ(tokenize("The Court had erred in overturning original decision", uncased()),
            (Strings{"the", "court", "had", "er", "##red", "in", "over", "##turn", "##ing", "original", "decision"}));
}

TEST(Tokenize, ImpermissibleBeforeAndAfterExtension) {
  const auto base = cased();
  const std::string input = "Ethnic discrimination is impermissible by law.";
  EXPECT_EQ(tokenize(input, base),
            (Strings{"Ethnic", "discrimination", "is", "imp", "##er", "##missible", "by", "law", "."}));
  const auto dict = load_legal_dictionary(kDataDir / "legal_dictionary.tsv");
  const auto ext = extend_vocab(base, dict, 30);
  EXPECT_EQ(tokenize(input, ext.vocab),
            (Strings{"Ethnic", "discrimination", "is", "impermissible", "by", "law", "."}));
}

TEST(Tokenize, EmptyAndUnknown) {
  const auto v = uncased();
  EXPECT_TRUE(tokenize("", v).empty());
  EXPECT_EQ(tokenize("zzz", v), Strings{"[UNK]"});
  EXPECT_EQ(tokenize(std::string(101, 'a'), make_vocab({"a", "##a"})), Strings{"[UNK]"});
  EXPECT_EQ(tokenize(std::string(100, 'a'), make_vocab({"a", "##a"})).size(), 100u);
}

TEST(Tokenize, PunctuationAndCase) {
  const auto v = make_vocab({"hello", "world", ",", "!"});
  EXPECT_EQ(tokenize("Hello, WORLD!", v), (Strings{"hello", ",", "world", "!"}));
  const auto c = make_vocab({"Hello", "hello"}, true);
  EXPECT_EQ(tokenize("Hello hello", c), (Strings{"Hello", "hello"}));
}

TEST(Tokenize, MultiWordTermsStayWhole) {
  const auto v = make_vocab({"habeas corpus", "habeas", "corpus", "writ", "of", "u.s.", "u", "s", "."});
  EXPECT_EQ(tokenize("Writ of Habeas  Corpus", v), (Strings{"writ", "of", "habeas corpus"}));
  EXPECT_EQ(tokenize("U.S. writ", v), (Strings{"u.s.", "writ"}));
  // Not at a word boundary: falls back to ordinary splitting.
  EXPECT_EQ(tokenize("habeas corpusx", v), (Strings{"habeas", "[UNK]"}));
}

// First piece of each word is the longest vocabulary prefix; checked
// against brute force over random words on a 50-token vocabulary.
TEST(Tokenize, GreedyMatchesBruteForce) {
  std::mt19937 gen(21);
  const std::string alphabet = "abcd";
  Strings extra;
  std::set<std::string> seen;
  while (extra.size() < 45) {
    std::string t;
    const bool cont = gen() % 2;
    const int len = 1 + static_cast<int>(gen() % 3);
    for (int i = 0; i < len; ++i) t += alphabet[gen() % alphabet.size()];
    if (cont) t = "##" + t;
    if (seen.insert(t).second) extra.push_back(t);
  }
  const auto v = make_vocab(extra);
  ASSERT_EQ(v.size(), 50u);
  for (int trial = 0; trial < 2000; ++trial) {
    std::string word;
    const int len = 1 + static_cast<int>(gen() % 8);
    for (int i = 0; i < len; ++i) word += alphabet[gen() % alphabet.size()];

    // Oracle: repeatedly take the longest matching prefix.
    Strings expected;
    std::size_t at = 0;
    bool unk = false;
    while (at < word.size()) {
      std::size_t best = 0;
      for (std::size_t l = 1; at + l <= word.size(); ++l) {
        const std::string cand = (at ? "##" : "") + word.substr(at, l);
        if (v.contains(cand)) best = l;
      }
      if (best == 0) {
        unk = true;
        break;
      }
      expected.push_back((at ? "##" : "") + word.substr(at, best));
      at += best;
    }
    if (unk) expected = {"[UNK]"};
    EXPECT_EQ(wordpiece_split(word, v), expected) << word;
  }
}

TEST(Tokenize, DetokenizeAndMembershipProperties) {
  std::mt19937 gen(8);
  const auto v = uncased();
  const Strings words = {"The", "court", "erred", "overturning", "judgment,", "appeal.", "xyz", "Seller's",
                         "(a)",  "12",    "defendants", "reversed", "had"};
  for (int trial = 0; trial < 300; ++trial) {
    std::string input;
    for (int i = 0; i < 8; ++i) input += words[gen() % words.size()] + " ";
    for (const auto& word : basic_tokenize(input, v)) {
      const auto pieces = wordpiece_split(word, v);
      for (const auto& p : pieces) EXPECT_TRUE(v.contains(p)) << p;
      if (pieces.size() == 1 && pieces[0] == "[UNK]") continue;
      std::string joined;
      for (const auto& p : pieces) joined += p.starts_with("##") ? p.substr(2) : p;
      EXPECT_EQ(joined, word);
    }
  }
}

TEST(Vocab, LoadAndValidate) {
  TempDir dir;
  write(dir / "v7.txt", "[PAD]\n[UNK]\n[CLS]\n[SEP]\n[MASK]\ncourt\nlaw\n");
  const auto v = load_vocab(dir / "v7.txt");
  EXPECT_EQ(v.size(), 7u);
  EXPECT_EQ(v.id("law"), 6);
  EXPECT_EQ(v.id("nothing"), v.unk_id());

  write(dir / "dup.txt", "[PAD]\n[UNK]\n[CLS]\n[SEP]\n[MASK]\nlaw\nlaw\n");
  try {
    load_vocab(dir / "dup.txt");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDuplicateToken);
    EXPECT_EQ(e.offset(), 7);
  }
  write(dir / "nomask.txt", "[PAD]\n[UNK]\n[CLS]\n[SEP]\nlaw\n");
  try {
    load_vocab(dir / "nomask.txt");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kMissingSpecial);
  }
  EXPECT_THROW(load_vocab(dir / "missing.txt"), Error);
}

TEST(Vocab, SaveRoundTrip) {
  TempDir dir;
  const auto v = uncased();
  save_vocab(v, dir / "out.txt");
  EXPECT_EQ(slurp(dir / "out.txt"), slurp(kDataDir / "vocab_uncased.txt"));
}

TEST(Encode, SingleAndPair) {
  const auto v = uncased();
  auto e = encode("", std::nullopt, v, 8);
  EXPECT_EQ(e.ids, (std::vector<TokenId>{v.cls_id(), v.sep_id(), 0, 0, 0, 0, 0, 0}));
  EXPECT_EQ(std::count(e.attention_mask.begin(), e.attention_mask.end(), 1), 2);

  e = encode("the court", std::string("had erred"), v, 16);
  EXPECT_EQ(e.ids.size(), 16u);
  EXPECT_EQ(e.ids[0], v.cls_id());
  EXPECT_EQ(std::count(e.ids.begin(), e.ids.end(), v.sep_id()), 2);
  EXPECT_EQ(e.segment_ids, (std::vector<int>{0, 0, 0, 0, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0}));
  EXPECT_EQ(std::count(e.attention_mask.begin(), e.attention_mask.end(), 1), 8);
  EXPECT_EQ(v.token(e.ids[5]), "er");
}

TEST(Encode, LongestFirstTruncation) {
  const auto v = make_vocab({"a", "b"});
  // A has 6 tokens, B has 2; budget 5 leaves A=3, B=2.
  const auto e = encode("a a a a a a", std::string("b b"), v, 8);
  EXPECT_EQ(e.segment_ids, (std::vector<int>{0, 0, 0, 0, 0, 1, 1, 1}));
  Strings a = {"1", "2", "3"}, b = {"x", "y", "z"};
  truncate_pair(a, b, 4);
  EXPECT_EQ(a, (Strings{"1", "2"}));
  EXPECT_EQ(b, (Strings{"x", "y"}));
}

TEST(Encode, LengthTooSmall) {
  const auto v = uncased();
  EXPECT_NO_THROW(encode("court", std::nullopt, v, 3));
  EXPECT_NO_THROW(encode("court", std::string("law"), v, 4));
  try {
    encode("court", std::string("law"), v, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kLengthTooSmall);
  }
  EXPECT_THROW(encode("court", std::nullopt, v, 2), Error);
}

TEST(Encode, LengthInvariants) {
  std::mt19937 gen(4);
  const auto v = uncased();
  for (int trial = 0; trial < 200; ++trial) {
    std::string a, b;
    for (unsigned i = 0; i < gen() % 40; ++i) a += "the court ";
    for (unsigned i = 0; i < gen() % 40; ++i) b += "had erred ";
    const std::size_t max_len = 4 + gen() % 60;
    const auto e = encode(a, gen() % 2 ? std::optional<std::string>(b) : std::nullopt, v, max_len);
    EXPECT_EQ(e.ids.size(), max_len);
    EXPECT_EQ(e.segment_ids.size(), max_len);
    const auto real = static_cast<std::size_t>(std::count(e.attention_mask.begin(), e.attention_mask.end(), 1));
    for (std::size_t i = real; i < max_len; ++i) EXPECT_EQ(e.ids[i], v.pad_id());
    for (std::size_t i = 0; i < real; ++i) EXPECT_NE(e.ids[i], v.pad_id());
  }
}

TEST(DocFrequency, Counting) {
  const std::vector<ClassificationRecord> corpus = {
      {"The contract was void. The contract, again.", OpinionKind::kMajority, 1, false},
      {"No contracts here; only an act.", OpinionKind::kDissent, 2, false},
      {"CONTRACT law applies", OpinionKind::kMajority, 3, false}};
  const std::vector<LegalTerm> terms = {term("contract", 0), term("act", 0), term("Habeas Corpus", 0)};
  const auto counted = term_doc_frequency(terms, corpus);
  EXPECT_EQ(counted[0].doc_frequency, 2u);
  EXPECT_EQ(counted[1].doc_frequency, 1u);
  EXPECT_EQ(counted[2].doc_frequency, 0u);
  const std::vector<ClassificationRecord> one = {{"term term term term term", OpinionKind::kMajority, 1, false}};
  EXPECT_EQ(term_doc_frequency(std::vector<LegalTerm>{term("term", 0)}, one)[0].doc_frequency, 1u);
  EXPECT_EQ(term_doc_frequency(terms, {})[0].doc_frequency, 0u);
}

TEST(ExtendVocab, ThresholdAndStability) {
  const auto base = uncased();
  const std::vector<LegalTerm> terms = {term("estoppel", 30), term("certiorari", 29), term("court", 500),
                                        term("Laches", 31), term("estoppel", 40)};
  const auto ext = extend_vocab(base, terms, 30);
  EXPECT_EQ(ext.added, (Strings{"estoppel", "laches"}));
  EXPECT_EQ(ext.vocab.size(), base.size() + 2);
  for (std::size_t i = 0; i < base.size(); ++i)
    EXPECT_EQ(ext.vocab.id(base.tokens()[i]), static_cast<TokenId>(i));
  EXPECT_EQ(ext.vocab.id("estoppel"), static_cast<TokenId>(base.size()));

  const auto again = extend_vocab(ext.vocab, terms, 30);
  EXPECT_TRUE(again.added.empty());
  EXPECT_EQ(again.vocab.tokens(), ext.vocab.tokens());
}

TEST(LegalDictionary, LoadFormats) {
  TempDir dir;
  write(dir / "d.tsv", "term\tdefinition\tdoc_frequency\nfoo\tA foo.\t12\nbar\tA bar.\n");
  const auto d = load_legal_dictionary(dir / "d.tsv");
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d[0].doc_frequency, 12u);
  EXPECT_TRUE(d[0].frequency_known);
  EXPECT_FALSE(d[1].frequency_known);
  write(dir / "bad.tsv", "foo\n");
  EXPECT_THROW(load_legal_dictionary(dir / "bad.tsv"), Error);
}
