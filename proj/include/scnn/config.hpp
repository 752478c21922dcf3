#pragma once

// Run configuration: a flat "key = value" file with dotted keys. Unknown keys
// are rejected. Later assignments (and command-line overrides) win.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "scnn/error.hpp"
#include "scnn/layers.hpp"
#include "scnn/model.hpp"
#include "scnn/moments.hpp"
#include "scnn/serialize.hpp"
#include "scnn/text.hpp"
#include "scnn/synthetic.hpp"
#include "scnn/train.hpp"

namespace scnn {

struct DatasetDefaults {
    std::size_t max_len;
    std::size_t vocab_size;
    std::size_t filters_per_width;
};

/// Per-corpus defaults; unknown names use the "custom" row.
inline DatasetDefaults dataset_defaults(const std::string& name) {
    static const std::map<std::string, DatasetDefaults> table{
        {"MR", {60, 20000, 70}},   {"SO", {60, 20000, 70}},     {"CR", {60, 20000, 30}},
        {"MPQA", {60, 20000, 30}}, {"TREC", {40, 20000, 70}},   {"IMDB", {400, 30000, 70}},
        {"custom", {60, 20000, 70}},
    };
    auto it = table.find(name);
    return it == table.end() ? table.at("custom") : it->second;
}

struct RunConfig {
    // dataset
    std::string dataset_path;
    std::string dataset_layout = "tsv";
    std::string dataset_name = "custom";
    std::string dataset_test_path;
    std::vector<std::string> dataset_classes;
    std::size_t max_len = 0;    // 0: per-corpus default
    std::size_t vocab_size = 0; // 0: per-corpus default

    // embeddings
    std::string embeddings_path;
    std::string embeddings_format = "random";
    std::size_t embeddings_dim = 300; // 0: infer from the file
    double embeddings_scale = 0.25;   // random format only

    // model ("auto" and 0 pick the variant / corpus defaults)
    std::string variant = "SCNN";
    std::vector<std::size_t> kernel_widths{3, 4, 5};
    std::size_t filters_per_width = 0;
    std::string activation = "auto";
    std::string conv_init = "auto";
    std::string dropout_kind = "auto";
    double dropout_rate = 0.5;
    bool trainable_embeddings = false;
    double elu_alpha = 1.0;
    std::size_t num_classes = 2; // used when no dataset is read (params)

    TrainConfig training{};
    std::size_t folds = 10;
    bool cv_override_split = false;
    std::size_t jobs = 1;

    std::string out_dir = "out";

    // moment probe
    std::size_t probe_depth = 20;
    std::size_t probe_width = 256;
    std::size_t probe_samples = 10000;
    std::vector<std::string> probe_activations{"selu"};
    std::vector<std::string> probe_inits{"lecun_normal"};
    std::string probe_dropout_kind = "none";
    double probe_dropout_rate = 0.1;
    double probe_input_sigma = 1.0;

    // synthetic corpus generation
    SyntheticSpec synth{};
};

namespace detail {

inline std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    s = s.substr(b, e - b + 1);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return s;
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
    T out{};
    auto r = std::from_chars(v.data(), v.data() + v.size(), out);
    if (r.ec != std::errc{} || r.ptr != v.data() + v.size())
        throw ConfigError("key '" + key + "' expects a number, got '" + v + "'");
    return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("key '" + key + "' expects true or false, got '" + v + "'");
}

using Setter = std::function<void(const std::string& key, const std::string& value)>;

inline Setter set_str(std::string& f) {
    return [&f](const std::string&, const std::string& v) { f = v; };
}
template <typename T>
Setter set_num(T& f) {
    return [&f](const std::string& k, const std::string& v) { f = parse_number<T>(k, v); };
}
inline Setter set_bool(bool& f) {
    return [&f](const std::string& k, const std::string& v) { f = parse_bool(k, v); };
}
inline Setter set_list(std::vector<std::string>& f) {
    return [&f](const std::string&, const std::string& v) {
        f.clear();
        for (auto& s : split_list(v)) f.push_back(trim(s));
    };
}
inline Setter set_size_list(std::vector<std::size_t>& f) {
    return [&f](const std::string& k, const std::string& v) {
        f.clear();
        for (auto& s : split_list(v)) f.push_back(parse_number<std::size_t>(k, trim(s)));
    };
}

inline std::map<std::string, Setter> schema(RunConfig& c) {
    return {
        {"dataset.path", set_str(c.dataset_path)},
        {"dataset.layout", set_str(c.dataset_layout)},
        {"dataset.name", set_str(c.dataset_name)},
        {"dataset.test_path", set_str(c.dataset_test_path)},
        {"dataset.classes", set_list(c.dataset_classes)},
        {"dataset.max_len", set_num(c.max_len)},
        {"dataset.vocab_size", set_num(c.vocab_size)},
        {"embeddings.path", set_str(c.embeddings_path)},
        {"embeddings.format", set_str(c.embeddings_format)},
        {"embeddings.dim", set_num(c.embeddings_dim)},
        {"embeddings.scale", set_num(c.embeddings_scale)},
        {"model.variant", set_str(c.variant)},
        {"model.kernel_widths", set_size_list(c.kernel_widths)},
        {"model.filters_per_width", set_num(c.filters_per_width)},
        {"model.activation", set_str(c.activation)},
        {"model.conv_init", set_str(c.conv_init)},
        {"model.dropout_kind", set_str(c.dropout_kind)},
        {"model.dropout_rate", set_num(c.dropout_rate)},
        {"model.trainable_embeddings", set_bool(c.trainable_embeddings)},
        {"model.elu_alpha", set_num(c.elu_alpha)},
        {"model.num_classes", set_num(c.num_classes)},
        {"training.learning_rate", set_num(c.training.learning_rate)},
        {"training.beta1", set_num(c.training.beta1)},
        {"training.beta2", set_num(c.training.beta2)},
        {"training.epsilon", set_num(c.training.epsilon)},
        {"training.batch_size", set_num(c.training.batch_size)},
        {"training.epochs", set_num(c.training.epochs)},
        {"training.seed", set_num(c.training.seed)},
        {"training.shuffle", set_bool(c.training.shuffle)},
        {"cv.folds", set_num(c.folds)},
        {"cv.override_split", set_bool(c.cv_override_split)},
        {"run.jobs", set_num(c.jobs)},
        {"output.dir", set_str(c.out_dir)},
        {"moments.depth", set_num(c.probe_depth)},
        {"moments.width", set_num(c.probe_width)},
        {"moments.samples", set_num(c.probe_samples)},
        {"moments.activations", set_list(c.probe_activations)},
        {"moments.inits", set_list(c.probe_inits)},
        {"moments.dropout_kind", set_str(c.probe_dropout_kind)},
        {"moments.dropout_rate", set_num(c.probe_dropout_rate)},
        {"moments.input_sigma", set_num(c.probe_input_sigma)},
        {"synth.examples", set_num(c.synth.examples)},
        {"synth.num_classes", set_num(c.synth.num_classes)},
        {"synth.neutral_words", set_num(c.synth.neutral_words)},
        {"synth.cue_words_per_class", set_num(c.synth.cue_words_per_class)},
        {"synth.min_len", set_num(c.synth.min_len)},
        {"synth.max_len", set_num(c.synth.max_len)},
        {"synth.label_noise", set_num(c.synth.label_noise)},
        {"synth.confuser_prob", set_num(c.synth.confuser_prob)},
    };
}

} // namespace detail

inline std::vector<std::string> config_keys() {
    RunConfig c;
    std::vector<std::string> keys;
    for (auto& [k, _] : detail::schema(c)) keys.push_back(k);
    return keys;
}

inline void set_config_value(RunConfig& c, const std::string& key, const std::string& value) {
    auto s = detail::schema(c);
    auto it = s.find(key);
    if (it == s.end()) throw ConfigError("unknown config key '" + key + "'");
    it->second(key, detail::trim(value));
}

/// Apply "key = value" lines; '#' starts a comment line.
inline void apply_config_text(RunConfig& c, const std::string& text, const std::string& origin = "<config>") {
    std::istringstream is(text);
    std::string line;
    std::size_t n = 0;
    while (std::getline(is, line)) {
        ++n;
        const auto t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(n) + ": expected 'key = value'");
        try {
            set_config_value(c, detail::trim(t.substr(0, eq)), t.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError(origin + ":" + std::to_string(n) + ": " + e.what());
        }
    }
}

inline RunConfig load_run_config(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot read config file " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    RunConfig c;
    apply_config_text(c, ss.str(), path);
    return c;
}

/// "key=value" command-line override.
inline void apply_override(RunConfig& c, const std::string& kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + kv + "' must be key=value");
    set_config_value(c, detail::trim(kv.substr(0, eq)), kv.substr(eq + 1));
}

/// Model settings after applying variant and corpus defaults.
inline ModelConfig resolve_model_config(const RunConfig& r, std::size_t num_classes, std::size_t vocab_size,
                                        std::size_t embed_dim) {
    const auto dd = dataset_defaults(r.dataset_name);
    const auto variant = parse_variant(r.variant);
    auto c = ModelConfig::for_variant(variant, r.filters_per_width ? r.filters_per_width : dd.filters_per_width);
    if (variant == Variant::StaticCNN && r.filters_per_width) c.filters_per_width = r.filters_per_width;
    c.kernel_widths = r.kernel_widths;
    c.embed_dim = embed_dim;
    c.max_len = r.max_len ? r.max_len : dd.max_len;
    c.vocab_size = vocab_size;
    c.num_classes = num_classes;
    if (r.activation != "auto") c.activation = parse_activation(r.activation);
    if (r.conv_init != "auto") c.conv_init = parse_init(r.conv_init);
    if (r.dropout_kind != "auto") c.dropout.kind = parse_dropout_kind(r.dropout_kind);
    c.dropout.rate = r.dropout_rate;
    c.trainable_embeddings = r.trainable_embeddings;
    c.elu_alpha = r.elu_alpha;
    c.validate();
    return c;
}

inline Json to_json(const RunConfig& r) {
    Json j;
    j["dataset.path"] = r.dataset_path;
    j["dataset.layout"] = r.dataset_layout;
    j["dataset.name"] = r.dataset_name;
    j["dataset.test_path"] = r.dataset_test_path;
    j["dataset.classes"] = r.dataset_classes;
    j["dataset.max_len"] = r.max_len;
    j["dataset.vocab_size"] = r.vocab_size;
    j["embeddings.path"] = r.embeddings_path;
    j["embeddings.format"] = r.embeddings_format;
    j["embeddings.dim"] = r.embeddings_dim;
    j["embeddings.scale"] = r.embeddings_scale;
    j["model.variant"] = r.variant;
    j["model.kernel_widths"] = r.kernel_widths;
    j["model.filters_per_width"] = r.filters_per_width;
    j["model.activation"] = r.activation;
    j["model.conv_init"] = r.conv_init;
    j["model.dropout_kind"] = r.dropout_kind;
    j["model.dropout_rate"] = r.dropout_rate;
    j["model.trainable_embeddings"] = r.trainable_embeddings;
    j["model.elu_alpha"] = r.elu_alpha;
    j["model.num_classes"] = r.num_classes;
    j["training"] = to_json(r.training);
    j["cv.folds"] = r.folds;
    j["cv.override_split"] = r.cv_override_split;
    j["run.jobs"] = r.jobs;
    j["output.dir"] = r.out_dir;
    return j;
}

} // namespace scnn
