#include <gtest/gtest.h>

#include "scnn/text.hpp"
#include "tempdir.hpp"

using namespace scnn;
using testutil::TempDir;
using testutil::write_text;

TEST(Tokenize, LowercasesAndSplitsPunctuation) {
    EXPECT_EQ(tokenize("Hello, World!"), (Tokens{"hello", ",", "world", "!"}));
    EXPECT_EQ(tokenize("  a\tb\n"), (Tokens{"a", "b"}));
    EXPECT_EQ(tokenize("it's"), (Tokens{"it", "'", "s"}));
    EXPECT_TRUE(tokenize("").empty());
}

TEST(Tokenize, KeepsStopwordsAndNonAsciiBytes) {
    EXPECT_EQ(tokenize("the CAFÉ is"), (Tokens{"the", "caf\xc3\x89", "is"}));
}

TEST(Vocabulary, PadIsIdZero) {
    Vocabulary v;
    EXPECT_EQ(v.size(), 1u);
    EXPECT_EQ(v.word(0), "<pad>");
    EXPECT_FALSE(v.find("<pad>"));
}

TEST(Vocabulary, FrequencyOrderWithLexicographicTies) {
    const auto v = build_vocab({{"b", "a", "c"}, {"c", "b", "c"}}, 10);
    EXPECT_EQ(v.words(), (std::vector<std::string>{"<pad>", "c", "b", "a"}));
    const auto small = build_vocab({{"b", "a", "c"}, {"c", "b", "c"}}, 3);
    EXPECT_EQ(small.size(), 3u);
    EXPECT_FALSE(small.find("a"));
}

TEST(Vocabulary, DuplicateWordsRejected) {
    EXPECT_THROW(Vocabulary::from_words({"<pad>", "x", "x"}), FormatError);
    EXPECT_THROW(Vocabulary::from_words({"x"}), FormatError);
}

TEST(Encode, PadsTruncatesAndMapsUnknownToPad) {
    const auto v = build_vocab({{"good", "movie"}}, 10);
    const auto good = *v.find("good"), movie = *v.find("movie");
    EXPECT_EQ(encode({"good", "movie"}, v, 4), (TokenIds{good, movie, 0, 0}));
    EXPECT_EQ(encode({"good", "movie", "good"}, v, 2), (TokenIds{good, movie}));
    EXPECT_EQ(encode({"bad", "movie"}, v, 3), (TokenIds{0, movie, 0}));
    EXPECT_THROW(encode({"x"}, v, 0), InvalidInput);
}

TEST(Encode, DecodeInvertsUpToPadding) {
    const auto v = build_vocab({{"a", "b", "c"}}, 10);
    const Tokens t{"c", "a", "b"};
    EXPECT_EQ(decode(encode(t, v, 8), v), t);
}

TEST(Vocabulary, ExportRoundTripKeepsHash) {
    TempDir d;
    const auto v = build_vocab({{"x", "y", "y"}}, 10);
    write_vocab(v, d / "vocab.tsv");
    const auto back = read_vocab(d / "vocab.tsv");
    EXPECT_EQ(back, v);
    EXPECT_EQ(vocab_hash(back), vocab_hash(v));
    EXPECT_EQ(vocab_hash(v).size(), 16u);
    EXPECT_NE(vocab_hash(v), vocab_hash(build_vocab({{"x", "y"}}, 10)));
}

TEST(Vocabulary, FnvHashOfEmptyVocabulary) {
    // FNV-1a 64 of "<pad>\t0\n", computed independently.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : std::string("<pad>\t0\n")) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    EXPECT_EQ(vocab_hash(Vocabulary{}), buf);
}

TEST(Vocabulary, MalformedExportIsParseError) {
    TempDir d;
    write_text(d / "v.tsv", "<pad>\t0\nword\t5\n");
    EXPECT_THROW(read_vocab(d / "v.tsv"), ParseError);
}

TEST(TextEmbeddings, LoadsKnownWordsAndReportsCoverage) {
    TempDir d;
    write_text(d / "e.txt", "3 2\ngood 0.5 -1\nunused 9 9\nmovie 1e-1 2\ngood 7 7\n");
    const auto v = build_vocab({{"good", "movie", "plot"}}, 10);
    const auto t = load_text_embeddings(d / "e.txt", v, 2);
    EXPECT_EQ(t.dim, 2u);
    EXPECT_EQ(t.found, 2u);
    EXPECT_NEAR(t.coverage, 2.0 / 3.0, 1e-15);
    const auto g = static_cast<std::size_t>(*v.find("good"));
    EXPECT_EQ(t.matrix.at(g, 0), 0.5);
    EXPECT_EQ(t.matrix.at(g, 1), -1.0);
    const auto p = static_cast<std::size_t>(*v.find("plot"));
    EXPECT_EQ(t.matrix.at(p, 0), 0.0);
    EXPECT_EQ(t.matrix.at(0, 0), 0.0);
}

TEST(TextEmbeddings, DimensionInferredWithoutHeader) {
    TempDir d;
    write_text(d / "e.txt", "a 1 2 3\n");
    EXPECT_EQ(load_text_embeddings(d / "e.txt", build_vocab({{"a"}}, 5), 0).dim, 3u);
}

TEST(TextEmbeddings, ErrorsCarryFileAndLine) {
    TempDir d;
    const auto v = build_vocab({{"a"}}, 5);
    write_text(d / "bad.txt", "a 1 2\nb 1 x\n");
    try {
        load_text_embeddings(d / "bad.txt", v, 2);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("bad.txt:2"), std::string::npos);
    }
    write_text(d / "dim.txt", "a 1 2 3\n");
    EXPECT_THROW(load_text_embeddings(d / "dim.txt", v, 2), FormatError);
}

TEST(BinaryEmbeddings, RoundTripThroughWriter) {
    TempDir d;
    write_binary_embeddings(d / "e.bin", {{"good", {0.25f, -2.0f, 3.5f}}, {"zzz", {1, 1, 1}}, {"bad", {1.5f, 0, -0.125f}}}, 3);
    const auto v = build_vocab({{"good", "bad", "meh"}}, 10);
    const auto t = load_binary_embeddings(d / "e.bin", v, 3);
    EXPECT_EQ(t.found, 2u);
    const auto b = static_cast<std::size_t>(*v.find("bad"));
    EXPECT_EQ(t.matrix.at(b, 0), 1.5);
    EXPECT_EQ(t.matrix.at(b, 2), -0.125);
    EXPECT_EQ(t.matrix.at(static_cast<std::size_t>(*v.find("good")), 1), -2.0);
}

TEST(BinaryEmbeddings, HandBuiltBytesWithoutRecordNewlines) {
    TempDir d;
    std::string bytes = "1 2\nhi ";
    const float vals[2] = {1.0f, -0.5f};
    for (float f : vals) {
        std::uint32_t u;
        std::memcpy(&u, &f, 4);
        for (int k = 0; k < 4; ++k) bytes.push_back(static_cast<char>((u >> (8 * k)) & 0xff));
    }
    write_text(d / "e.bin", bytes);
    const auto v = build_vocab({{"hi"}}, 5);
    const auto t = load_binary_embeddings(d / "e.bin", v, 0);
    EXPECT_EQ(t.matrix.at(1, 0), 1.0);
    EXPECT_EQ(t.matrix.at(1, 1), -0.5);
}

TEST(BinaryEmbeddings, TruncationIsParseErrorWithOffset) {
    TempDir d;
    write_text(d / "e.bin", std::string("1 4\nhi \x01\x02", 9));
    try {
        load_binary_embeddings(d / "e.bin", build_vocab({{"hi"}}, 5), 4);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("offset"), std::string::npos);
    }
    write_text(d / "h.bin", "garbage\n");
    EXPECT_THROW(load_binary_embeddings(d / "h.bin", build_vocab({{"hi"}}, 5), 4), ParseError);
}

TEST(RandomEmbeddings, SeededBoundedAndPadIsZero) {
    const auto v = build_vocab({{"a", "b", "c"}}, 10);
    Rng r1(3), r2(3);
    const auto a = random_embeddings(v, 4, 0.25, r1), b = random_embeddings(v, 4, 0.25, r2);
    EXPECT_EQ(a.matrix, b.matrix);
    for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(a.matrix.at(0, k), 0.0);
    for (double x : a.matrix.data()) EXPECT_LE(std::abs(x), 0.25);
}

TEST(Datasets, PairOfFilesAtCorpusScale) {
    TempDir d;
    std::string neg, pos;
    for (int i = 0; i < 5331; ++i) {
        neg += "bad film number " + std::to_string(i) + "\n";
        pos += "fine film number " + std::to_string(i) + "\n";
    }
    write_text(d / "mr" / "rt-polarity.neg", neg);
    write_text(d / "mr" / "rt-polarity.pos", pos);
    const auto ds = load_dataset((d / "mr").string(), Layout::pair_of_files);
    EXPECT_EQ(ds.size(), 10662u);
    EXPECT_EQ(ds.class_names, (std::vector<std::string>{"rt-polarity.neg", "rt-polarity.pos"}));
    EXPECT_FALSE(ds.predefined_split);
    EXPECT_EQ(ds.examples.front().label, 0);
    EXPECT_EQ(ds.examples.back().label, 1);
    EXPECT_EQ(ds.examples.back().tokens, (Tokens{"fine", "film", "number", "5330"}));
}

TEST(Datasets, LabeledPrefixUsesCoarseClass) {
    TempDir d;
    write_text(d / "train.txt", "DESC:manner How did serfdom develop ?\nLOC:city What is the capital ?\n");
    write_text(d / "test.txt", "DESC:def What is a fish ?\n");
    const auto ds = load_dataset({(d / "train.txt").string(), Layout::labeled_prefix, (d / "test.txt").string(), {}});
    EXPECT_EQ(ds.class_names, (std::vector<std::string>{"DESC", "LOC"}));
    EXPECT_TRUE(ds.predefined_split);
    EXPECT_EQ(ds.examples[0].tokens.front(), "how");
    EXPECT_EQ(ds.examples[2].split, Split::test);
    EXPECT_EQ(ds.examples[2].label, 0);
}

TEST(Datasets, TsvLayout) {
    TempDir d;
    write_text(d / "x.tsv", "pos\tGreat fun\n\nneg\tDull .\r\n");
    const auto ds = load_dataset((d / "x.tsv").string(), Layout::tsv);
    ASSERT_EQ(ds.size(), 2u);
    EXPECT_EQ(ds.examples[0].label, 1);
    EXPECT_EQ(ds.examples[1].tokens, (Tokens{"dull", "."}));
}

TEST(Datasets, DirectoryPerClassWithTrainTestSplit) {
    TempDir d;
    write_text(d / "imdb" / "train" / "neg" / "0.txt", "awful");
    write_text(d / "imdb" / "train" / "pos" / "0.txt", "superb");
    write_text(d / "imdb" / "train" / "pos" / "1.txt", "great");
    write_text(d / "imdb" / "test" / "neg" / "0.txt", "boring");
    write_text(d / "imdb" / "test" / "pos" / "0.txt", "lovely");
    const auto ds = load_dataset((d / "imdb").string(), Layout::directory_per_class);
    EXPECT_TRUE(ds.predefined_split);
    EXPECT_EQ(ds.indices(Split::train).size(), 3u);
    EXPECT_EQ(ds.indices(Split::test).size(), 2u);
    EXPECT_EQ(ds.class_names, (std::vector<std::string>{"neg", "pos"}));
}

TEST(Datasets, EmptyOrMissingInputsAreDataErrors) {
    TempDir d;
    write_text(d / "empty.tsv", "");
    EXPECT_THROW(load_dataset((d / "empty.tsv").string(), Layout::tsv), DataError);
    EXPECT_THROW(load_dataset((d / "nope.tsv").string(), Layout::tsv), DataError);
    write_text(d / "bad.tsv", "no tab here\n");
    EXPECT_THROW(load_dataset((d / "bad.tsv").string(), Layout::tsv), DataError);
}

TEST(Datasets, LayoutNames) {
    EXPECT_EQ(parse_layout("directory-per-class"), Layout::directory_per_class);
    EXPECT_THROW(parse_layout("csv"), ConfigError);
}
