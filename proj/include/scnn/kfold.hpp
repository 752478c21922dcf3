#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "scnn/error.hpp"
#include "scnn/metrics.hpp"
#include "scnn/rng.hpp"
#include "scnn/train.hpp"

namespace scnn {

struct FoldAssignment {
    std::size_t k = 0;
    std::vector<std::size_t> fold_of; // per example
    bool stratified = true;

    std::vector<std::size_t> members(std::size_t fold) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < fold_of.size(); ++i)
            if (fold_of[i] == fold) out.push_back(i);
        return out;
    }
    std::vector<std::size_t> complement(std::size_t fold) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < fold_of.size(); ++i)
            if (fold_of[i] != fold) out.push_back(i);
        return out;
    }
};

using WarnFn = std::function<void(const std::string&)>;

inline void warn_stderr(const std::string& msg) { std::cerr << "warning: " << msg << '\n'; }

/// Stratified assignment: each class is shuffled and dealt round-robin, the
/// deal continuing across classes so fold sizes differ by at most one. Falls
/// back to an unstratified deal when a class has fewer than k members.
inline FoldAssignment assign_folds(std::span<const int> labels, std::size_t k, std::uint64_t seed,
                                   const WarnFn& warn = warn_stderr) {
    if (k < 2) throw InvalidInput("k-fold needs k >= 2");
    if (labels.size() < k)
        throw InvalidInput("dataset of " + std::to_string(labels.size()) + " examples is smaller than k = " +
                           std::to_string(k));
    auto rng = make_rng(seed, Stream::folds);
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);

    FoldAssignment a;
    a.k = k;
    a.fold_of.assign(labels.size(), 0);
    for (const auto& [cls, members] : by_class)
        if (members.size() < k) {
            a.stratified = false;
            if (warn)
                warn("class " + std::to_string(cls) + " has " + std::to_string(members.size()) +
                     " examples, fewer than k = " + std::to_string(k) + "; using unstratified folds");
            break;
        }

    std::size_t next = 0;
    auto deal = [&](std::vector<std::size_t> idx) {
        shuffle_range(idx.begin(), idx.end(), rng);
        for (auto i : idx) a.fold_of[i] = next++ % k;
    };
    if (a.stratified) {
        for (const auto& [_, members] : by_class) deal(members);
    } else {
        std::vector<std::size_t> all(labels.size());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        deal(std::move(all));
    }
    return a;
}

struct FoldOutcome {
    Metrics metrics;
    std::vector<EpochRecord> history;
};

struct MeanStd {
    double mean = 0;
    double stddev = 0; // sample standard deviation (n - 1)
};

inline MeanStd mean_std(std::span<const double> v) {
    MeanStd r;
    if (v.empty()) return r;
    double s = 0;
    for (double x : v) s += x;
    r.mean = s / static_cast<double>(v.size());
    if (v.size() > 1) {
        double ss = 0;
        for (double x : v) ss += (x - r.mean) * (x - r.mean);
        r.stddev = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    return r;
}

struct CvSummary {
    MeanStd accuracy;
    MeanStd macro_f1;
    std::optional<MeanStd> positive_f1;
};

struct CvResult {
    FoldAssignment folds;
    std::vector<FoldOutcome> outcomes;
    CvSummary summary;
};

inline CvSummary summarize(const std::vector<FoldOutcome>& outs) {
    std::vector<double> acc, mf1, pf1;
    for (const auto& o : outs) {
        acc.push_back(o.metrics.accuracy);
        mf1.push_back(o.metrics.macro_f1);
        if (o.metrics.positive_f1) pf1.push_back(*o.metrics.positive_f1);
    }
    CvSummary s{mean_std(acc), mean_std(mf1), std::nullopt};
    if (!pf1.empty() && pf1.size() == outs.size()) s.positive_f1 = mean_std(pf1);
    return s;
}

/// train_fn(fold, train_indices, test_indices) -> FoldOutcome. Folds run on
/// up to `jobs` threads; results are ordered by fold.
using FoldTrainFn =
    std::function<FoldOutcome(std::size_t, const std::vector<std::size_t>&, const std::vector<std::size_t>&)>;

inline CvResult kfold_cv(std::span<const int> labels, std::size_t k, std::uint64_t seed, const FoldTrainFn& train_fn,
                         std::size_t jobs = 1, const WarnFn& warn = warn_stderr) {
    CvResult r;
    r.folds = assign_folds(labels, k, seed, warn);
    r.outcomes.resize(k);
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex err_mu;
    auto worker = [&] {
        for (std::size_t f; (f = next.fetch_add(1)) < k;) {
            try {
                r.outcomes[f] = train_fn(f, r.folds.complement(f), r.folds.members(f));
            } catch (...) {
                std::lock_guard lock(err_mu);
                if (!err) err = std::current_exception();
            }
        }
    };
    jobs = std::max<std::size_t>(1, std::min(jobs, k));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (err) std::rethrow_exception(err);
    r.summary = summarize(r.outcomes);
    return r;
}

/// Standard fold trainer: train on the complement, evaluate on the fold.
inline FoldTrainFn make_fold_trainer(const TrainConfig& tc, const ModelConfig& mc, const EncodedSet& data,
                                     const Tensor& embedding) {
    return [&tc, &mc, &data, &embedding](std::size_t fold, const std::vector<std::size_t>& tr,
                                         const std::vector<std::size_t>& te) {
        const auto train_set = data.subset(tr);
        const auto test_set = data.subset(te);
        auto res = train(tc, mc, train_set, embedding, nullptr, fold + 1);
        return FoldOutcome{evaluate(res.params, mc, test_set), std::move(res.history)};
    };
}

} // namespace scnn
