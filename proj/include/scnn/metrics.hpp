#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scnn/error.hpp"

namespace scnn {

/// Classification metrics derived from a confusion matrix indexed
/// [true class][predicted class].
struct Metrics {
    std::vector<std::vector<std::size_t>> confusion;
    std::size_t n_examples = 0;
    double accuracy = 0;
    std::vector<double> precision;
    std::vector<double> recall;
    std::vector<double> f1;
    double macro_f1 = 0;
    std::optional<double> positive_f1; // class 1, binary tasks only
};

inline double harmonic_f1(double p, double r) { return p + r > 0 ? 2.0 * p * r / (p + r) : 0.0; }

inline Metrics metrics_from_confusion(std::vector<std::vector<std::size_t>> confusion) {
    const std::size_t k = confusion.size();
    if (k < 2) throw InvalidInput("metrics need at least two classes");
    Metrics m;
    std::size_t correct = 0;
    std::vector<std::size_t> row(k, 0), col(k, 0);
    for (std::size_t i = 0; i < k; ++i) {
        if (confusion[i].size() != k) throw DimensionError("confusion matrix must be square");
        for (std::size_t j = 0; j < k; ++j) {
            m.n_examples += confusion[i][j];
            row[i] += confusion[i][j];
            col[j] += confusion[i][j];
        }
        correct += confusion[i][i];
    }
    m.accuracy = m.n_examples ? static_cast<double>(correct) / static_cast<double>(m.n_examples) : 0.0;
    double f1_sum = 0;
    for (std::size_t c = 0; c < k; ++c) {
        const double tp = static_cast<double>(confusion[c][c]);
        const double p = col[c] ? tp / static_cast<double>(col[c]) : 0.0;
        const double r = row[c] ? tp / static_cast<double>(row[c]) : 0.0;
        m.precision.push_back(p);
        m.recall.push_back(r);
        m.f1.push_back(harmonic_f1(p, r));
        f1_sum += m.f1.back();
    }
    m.macro_f1 = f1_sum / static_cast<double>(k);
    if (k == 2) m.positive_f1 = m.f1[1];
    m.confusion = std::move(confusion);
    return m;
}

inline Metrics compute_metrics(std::span<const int> truth, std::span<const int> predicted, std::size_t num_classes) {
    if (truth.size() != predicted.size()) throw DimensionError("truth and prediction counts differ");
    std::vector<std::vector<std::size_t>> conf(num_classes, std::vector<std::size_t>(num_classes, 0));
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const auto t = static_cast<std::size_t>(truth[i]), p = static_cast<std::size_t>(predicted[i]);
        if (truth[i] < 0 || predicted[i] < 0 || t >= num_classes || p >= num_classes)
            throw InvalidInput("class id out of range in metrics");
        ++conf[t][p];
    }
    return metrics_from_confusion(std::move(conf));
}

} // namespace scnn
