#include <gtest/gtest.h>

#include <numeric>
#include <set>

#include "scnn/kfold.hpp"

using namespace scnn;

namespace {

std::vector<int> labels_with(std::vector<std::size_t> per_class) {
    std::vector<int> out;
    for (std::size_t c = 0; c < per_class.size(); ++c)
        for (std::size_t i = 0; i < per_class[c]; ++i) out.push_back(static_cast<int>(c));
    // Interleave so class membership does not follow index order.
    Rng rng(99);
    shuffle_range(out.begin(), out.end(), rng);
    return out;
}

void expect_partition(const FoldAssignment& a, std::size_t n) {
    std::vector<int> seen(n, 0);
    for (std::size_t f = 0; f < a.k; ++f) {
        const auto m = a.members(f), c = a.complement(f);
        EXPECT_EQ(m.size() + c.size(), n);
        for (auto i : m) ++seen[i];
    }
    for (int s : seen) EXPECT_EQ(s, 1);
}

} // namespace

TEST(Folds, DisjointExhaustiveAndStratified) {
    const auto labels = labels_with({331, 669});
    const auto a = assign_folds(labels, 10, 5);
    EXPECT_TRUE(a.stratified);
    expect_partition(a, labels.size());
    for (int cls : {0, 1}) {
        const double total = static_cast<double>(std::count(labels.begin(), labels.end(), cls));
        for (std::size_t f = 0; f < 10; ++f) {
            std::size_t k = 0;
            for (auto i : a.members(f)) k += labels[i] == cls;
            EXPECT_LE(std::abs(static_cast<double>(k) - total / 10.0), 1.0) << "fold " << f << " class " << cls;
        }
    }
    std::vector<std::size_t> sizes;
    for (std::size_t f = 0; f < 10; ++f) sizes.push_back(a.members(f).size());
    EXPECT_LE(*std::max_element(sizes.begin(), sizes.end()) - *std::min_element(sizes.begin(), sizes.end()), 1u);
}

TEST(Folds, SeedReproducibleAndSeedSensitive) {
    const auto labels = labels_with({50, 50, 20});
    EXPECT_EQ(assign_folds(labels, 5, 1).fold_of, assign_folds(labels, 5, 1).fold_of);
    EXPECT_NE(assign_folds(labels, 5, 1).fold_of, assign_folds(labels, 5, 2).fold_of);
}

TEST(Folds, RareClassFallsBackWithWarning) {
    const auto labels = labels_with({40, 3});
    std::vector<std::string> warnings;
    const auto a = assign_folds(labels, 10, 1, [&](const std::string& m) { warnings.push_back(m); });
    EXPECT_FALSE(a.stratified);
    ASSERT_EQ(warnings.size(), 1u);
    EXPECT_NE(warnings[0].find("unstratified"), std::string::npos);
    expect_partition(a, labels.size());
}

TEST(Folds, InvalidArguments) {
    const std::vector<int> labels{0, 1, 0};
    EXPECT_THROW(assign_folds(labels, 1, 1), InvalidInput);
    EXPECT_THROW(assign_folds(labels, 4, 1), InvalidInput);
}

TEST(MeanStd, SampleStandardDeviation) {
    const std::vector<double> v{2, 4, 4, 4, 5, 5, 7, 9};
    const auto m = mean_std(v);
    EXPECT_DOUBLE_EQ(m.mean, 5.0);
    EXPECT_NEAR(m.stddev, std::sqrt(32.0 / 7.0), 1e-15);
    EXPECT_EQ(mean_std(std::vector<double>{3}).stddev, 0.0);
}

TEST(KFold, EachFoldTrainsOnComplementAndResultsOrdered) {
    const auto labels = labels_with({30, 30});
    auto fn = [&](std::size_t fold, const std::vector<std::size_t>& tr, const std::vector<std::size_t>& te) {
        EXPECT_EQ(tr.size() + te.size(), labels.size());
        std::set<std::size_t> s(tr.begin(), tr.end());
        for (auto i : te) EXPECT_FALSE(s.count(i));
        FoldOutcome o;
        o.metrics = metrics_from_confusion({{fold + 1, 0}, {0, 9 - fold}});
        o.metrics.accuracy = static_cast<double>(fold);
        return o;
    };
    for (std::size_t jobs : {1u, 3u}) {
        const auto r = kfold_cv(labels, 6, 4, fn, jobs);
        ASSERT_EQ(r.outcomes.size(), 6u);
        for (std::size_t f = 0; f < 6; ++f) EXPECT_EQ(r.outcomes[f].metrics.accuracy, static_cast<double>(f));
        EXPECT_DOUBLE_EQ(r.summary.accuracy.mean, 2.5);
        EXPECT_TRUE(r.summary.positive_f1);
    }
}

TEST(KFold, WorkerExceptionsPropagate) {
    const auto labels = labels_with({10, 10});
    auto fn = [](std::size_t fold, const std::vector<std::size_t>&, const std::vector<std::size_t>&) -> FoldOutcome {
        if (fold == 2) throw NumericError("fold 2 diverged");
        return FoldOutcome{metrics_from_confusion({{1, 0}, {0, 1}}), {}};
    };
    EXPECT_THROW(kfold_cv(labels, 4, 1, fn, 2), NumericError);
}

TEST(KFold, ParallelMatchesSequentialOnRealTraining) {
    // Tiny model; folds use independent derived streams so thread count is irrelevant.
    Dataset ds;
    ds.class_names = {"a", "b"};
    for (int i = 0; i < 40; ++i) ds.examples.push_back({{i % 2 ? "yes" : "no", "filler", "x"}, i % 2, Split::train});
    const auto vocab = build_vocab({{"yes", "no", "filler", "x"}}, 10);
    const auto enc = encode_dataset(ds, vocab, 6);
    auto mc = ModelConfig::for_variant(Variant::ShortCNN, 3);
    mc.vocab_size = vocab.size();
    mc.embed_dim = 4;
    mc.max_len = 6;
    Rng er(1);
    const auto emb = random_embeddings(vocab, 4, 0.5, er).matrix;
    TrainConfig tc;
    tc.epochs = 3;
    tc.batch_size = 8;
    const auto fn = make_fold_trainer(tc, mc, enc, emb);
    const auto a = kfold_cv(enc.labels, 4, 7, fn, 1);
    const auto b = kfold_cv(enc.labels, 4, 7, fn, 4);
    for (std::size_t f = 0; f < 4; ++f) {
        EXPECT_EQ(a.outcomes[f].metrics.confusion, b.outcomes[f].metrics.confusion);
        ASSERT_EQ(a.outcomes[f].history.size(), 3u);
        EXPECT_EQ(a.outcomes[f].history[2].train_loss, b.outcomes[f].history[2].train_loss);
    }
}
