#pragma once

// Seeded synthetic corpora with planted class cue words. Used by tests and by
// the desk-scale comparison runs when the real benchmark files are absent.

#include <random>
#include <string>
#include <vector>

#include "scnn/error.hpp"
#include "scnn/rng.hpp"
#include "scnn/text.hpp"

namespace scnn {

struct SyntheticSpec {
    std::size_t examples = 2000;
    std::size_t num_classes = 2;
    std::size_t neutral_words = 400;
    std::size_t cue_words_per_class = 25;
    std::size_t min_len = 6;
    std::size_t max_len = 18;
    std::size_t min_cues = 1;
    std::size_t max_cues = 3;
    double confuser_prob = 0.3; // chance of one cue from a wrong class
    double label_noise = 0.1;   // chance the label is replaced by another class
};

inline std::string class_name(std::size_t c, std::size_t k) {
    if (k == 2) return c == 0 ? "neg" : "pos";
    return "c" + std::to_string(c);
}

inline Dataset make_synthetic_dataset(const SyntheticSpec& s, std::uint64_t seed) {
    if (s.num_classes < 2 || s.examples < s.num_classes || s.min_len == 0 || s.min_len > s.max_len ||
        s.min_cues > s.max_cues || s.max_cues > s.min_len || s.neutral_words == 0 || s.cue_words_per_class == 0)
        throw ConfigError("inconsistent synthetic corpus settings");
    auto rng = make_rng(seed, Stream::data);
    Dataset ds;
    for (std::size_t c = 0; c < s.num_classes; ++c) ds.class_names.push_back(class_name(c, s.num_classes));

    // Zipf-like neutral word frequencies so the vocabulary has a long tail.
    std::vector<double> weights(s.neutral_words);
    for (std::size_t i = 0; i < weights.size(); ++i) weights[i] = 1.0 / static_cast<double>(i + 1);
    std::discrete_distribution<std::size_t> neutral(weights.begin(), weights.end());
    std::uniform_int_distribution<std::size_t> len_d(s.min_len, s.max_len), cues_d(s.min_cues, s.max_cues);
    std::uniform_int_distribution<std::size_t> cue_d(0, s.cue_words_per_class - 1);
    std::uniform_int_distribution<std::size_t> other_d(1, s.num_classes - 1);
    std::uniform_real_distribution<double> u(0.0, 1.0);

    auto cue = [&](std::size_t cls) { return "cue" + std::to_string(cls) + "x" + std::to_string(cue_d(rng)); };
    for (std::size_t i = 0; i < s.examples; ++i) {
        const std::size_t cls = i % s.num_classes;
        Tokens t(len_d(rng));
        for (auto& w : t) w = "w" + std::to_string(neutral(rng));
        std::uniform_int_distribution<std::size_t> pos_d(0, t.size() - 1);
        const std::size_t n_cues = cues_d(rng);
        for (std::size_t j = 0; j < n_cues; ++j) t[pos_d(rng)] = cue(cls);
        if (u(rng) < s.confuser_prob) t[pos_d(rng)] = cue((cls + other_d(rng)) % s.num_classes);
        int label = static_cast<int>(cls);
        if (u(rng) < s.label_noise) label = static_cast<int>((cls + other_d(rng)) % s.num_classes);
        ds.examples.push_back({std::move(t), label, Split::train});
    }
    return ds;
}

/// Write as "label TAB text" lines.
inline void write_tsv(const Dataset& ds, const fs::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot write " + path.string());
    for (const auto& e : ds.examples) {
        os << ds.class_names[static_cast<std::size_t>(e.label)] << '\t';
        for (std::size_t i = 0; i < e.tokens.size(); ++i) os << (i ? " " : "") << e.tokens[i];
        os << '\n';
    }
}

} // namespace scnn
