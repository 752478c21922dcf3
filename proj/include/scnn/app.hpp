#pragma once

// Command implementations behind the `scnn` executable. Each command reads a
// RunConfig, writes its artifacts under `out_dir`, and reports to `log`.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "scnn/checkpoint.hpp"
#include "scnn/config.hpp"
#include "scnn/kfold.hpp"
#include "scnn/metrics.hpp"
#include "scnn/model.hpp"
#include "scnn/moments.hpp"
#include "scnn/serialize.hpp"
#include "scnn/synthetic.hpp"
#include "scnn/text.hpp"
#include "scnn/train.hpp"

namespace scnn::app {

inline constexpr const char* tool_version = "1.0.0";

inline void write_file(const fs::path& p, const std::string& content) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw DataError("cannot write " + p.string());
    os << content;
}

inline std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

/// Long-format CSV with columns fold, epoch, split, metric, value.
class LongCsv {
public:
    LongCsv() { os_ << "fold,epoch,split,metric,value\n"; }

    void row(const std::string& fold, std::size_t epoch, const std::string& split, const std::string& metric,
             double value) {
        os_ << fold << ',' << epoch << ',' << split << ',' << metric << ',' << detail::num(value) << '\n';
    }

    void metrics(const std::string& fold, std::size_t epoch, const std::string& split, const Metrics& m) {
        row(fold, epoch, split, "accuracy", m.accuracy);
        row(fold, epoch, split, "macro_f1", m.macro_f1);
        if (m.positive_f1) row(fold, epoch, split, "positive_f1", *m.positive_f1);
    }

    void history(const std::string& fold, const std::vector<EpochRecord>& h) {
        for (const auto& e : h) {
            row(fold, e.epoch, "train", "loss", e.train_loss);
            if (e.validation) metrics(fold, e.epoch, "test", *e.validation);
        }
    }

    std::string str() const { return os_.str(); }

private:
    std::ostringstream os_;
};

inline Json history_json(const std::vector<EpochRecord>& h) {
    Json arr = Json::array();
    for (const auto& e : h) {
        Json j{{"epoch", e.epoch}, {"train_loss", e.train_loss}};
        j["test"] = e.validation ? to_json(*e.validation) : Json(nullptr);
        arr.push_back(j);
    }
    return arr;
}

inline DatasetSource dataset_source(const RunConfig& r) {
    if (r.dataset_path.empty()) throw ConfigError("dataset.path is required");
    return DatasetSource{r.dataset_path, parse_layout(r.dataset_layout), r.dataset_test_path, r.dataset_classes};
}

inline EmbeddingTable make_embeddings(const RunConfig& r, const Vocabulary& vocab) {
    const auto fmt = parse_embedding_format(r.embeddings_format);
    if (fmt == EmbeddingFormat::random) {
        auto rng = make_rng(r.training.seed, Stream::embeddings);
        return random_embeddings(vocab, r.embeddings_dim, r.embeddings_scale, rng);
    }
    if (r.embeddings_path.empty())
        throw ConfigError("embeddings.format = " + r.embeddings_format + " requires embeddings.path");
    return fmt == EmbeddingFormat::text ? load_text_embeddings(r.embeddings_path, vocab, r.embeddings_dim)
                                        : load_binary_embeddings(r.embeddings_path, vocab, r.embeddings_dim);
}

struct Prepared {
    Dataset data;
    Vocabulary vocab;
    EmbeddingTable embeddings;
    ModelConfig model;
};

/// Load the corpus, build the vocabulary from the examples selected by
/// `vocab_from`, and resolve the model configuration.
inline Prepared prepare(const RunConfig& r, bool vocab_from_train_only) {
    Prepared p;
    p.data = load_dataset(dataset_source(r));
    const auto dd = dataset_defaults(r.dataset_name);
    std::vector<Tokens> corpus;
    for (const auto& e : p.data.examples)
        if (!vocab_from_train_only || e.split == Split::train) corpus.push_back(e.tokens);
    p.vocab = build_vocab(corpus, r.vocab_size ? r.vocab_size : dd.vocab_size);
    p.embeddings = make_embeddings(r, p.vocab);
    p.model = resolve_model_config(r, p.data.num_classes(), p.vocab.size(), p.embeddings.dim);
    return p;
}

inline Json dataset_json(const Dataset& d) {
    return Json{{"examples", d.size()},
                {"classes", d.class_names},
                {"predefined_split", d.predefined_split},
                {"train_examples", d.indices(Split::train).size()},
                {"test_examples", d.indices(Split::test).size()}};
}

inline Json manifest(const std::string& command, const RunConfig& r, const Prepared* p,
                     const std::vector<std::string>& outputs) {
    Json j{{"command", command}, {"tool_version", tool_version}, {"created_utc", utc_timestamp()},
           {"seed", r.training.seed}, {"config", to_json(r)}};
    if (p) {
        j["model"] = to_json(p->model);
        j["parameter_count"] = parameter_count(p->model);
        j["dataset"] = dataset_json(p->data);
        j["vocab_size"] = p->vocab.size();
        j["vocab_hash"] = vocab_hash(p->vocab);
        j["embeddings"] = Json{{"format", r.embeddings_format},
                               {"path", r.embeddings_path},
                               {"dim", p->embeddings.dim},
                               {"found", p->embeddings.found},
                               {"coverage", p->embeddings.coverage}};
    }
    j["outputs"] = outputs;
    return j;
}

// ---- train ----------------------------------------------------------------

struct TrainOutputs {
    Metrics train_metrics;
    std::optional<Metrics> test_metrics;
    fs::path checkpoint;
};

inline TrainOutputs cmd_train(const RunConfig& r, std::ostream& log) {
    const auto p = prepare(r, true);
    const fs::path out(r.out_dir);
    fs::create_directories(out);
    const auto train_set = encode_dataset(p.data, p.vocab, p.model.max_len, Split::train);
    std::optional<EncodedSet> test_set;
    if (p.data.predefined_split) test_set = encode_dataset(p.data, p.vocab, p.model.max_len, Split::test);
    log << "train: " << train_set.size() << " examples"
        << (test_set ? ", test: " + std::to_string(test_set->size()) : std::string()) << ", vocabulary "
        << p.vocab.size() << ", embedding coverage " << p.embeddings.coverage << ", parameters "
        << parameter_count(p.model) << '\n';

    auto res = train(r.training, p.model, train_set, p.embeddings.matrix, test_set ? &*test_set : nullptr);

    TrainOutputs o;
    o.train_metrics = evaluate(res.params, p.model, train_set);
    if (test_set) o.test_metrics = evaluate(res.params, p.model, *test_set);
    o.checkpoint = out / "checkpoint.scnn";
    save_checkpoint(Checkpoint{p.model, p.vocab, vocab_hash(p.vocab), p.data.class_names, res.params}, o.checkpoint);
    write_vocab(p.vocab, out / "vocab.tsv");

    LongCsv hist;
    hist.history("-1", res.history);
    write_file(out / "history.csv", hist.str());
    write_file(out / "history.json", history_json(res.history).dump(2) + "\n");

    Json metrics{{"command", "train"}, {"train", to_json(o.train_metrics)}};
    metrics["test"] = o.test_metrics ? to_json(*o.test_metrics) : Json(nullptr);
    write_file(out / "metrics.json", metrics.dump(2) + "\n");
    write_file(out / "manifest.json",
               manifest("train", r, &p,
                        {"checkpoint.scnn", "vocab.tsv", "history.csv", "history.json", "metrics.json"})
                       .dump(2) +
                   "\n");
    log << "train accuracy " << o.train_metrics.accuracy;
    if (o.test_metrics) log << ", test accuracy " << o.test_metrics->accuracy;
    log << '\n';
    return o;
}

// ---- cross-validation -----------------------------------------------------

inline CvResult cmd_cv(const RunConfig& r, std::ostream& log) {
    const auto p = prepare(r, false);
    if (p.data.predefined_split && !r.cv_override_split)
        throw ConfigError("dataset has a predefined test split; set cv.override_split = true to cross-validate");
    if (r.folds > p.data.size())
        throw ConfigError("cv.folds = " + std::to_string(r.folds) + " exceeds the dataset size " +
                          std::to_string(p.data.size()));
    const fs::path out(r.out_dir);
    fs::create_directories(out);
    const auto data = encode_dataset(p.data, p.vocab, p.model.max_len);
    log << "cv: " << r.folds << " folds over " << data.size() << " examples, vocabulary " << p.vocab.size()
        << ", parameters " << parameter_count(p.model) << '\n';

    auto res = kfold_cv(data.labels, r.folds, r.training.seed,
                        make_fold_trainer(r.training, p.model, data, p.embeddings.matrix), r.jobs,
                        [&log](const std::string& m) { log << "warning: " << m << '\n'; });

    LongCsv hist, mcsv;
    Json folds = Json::array();
    for (std::size_t f = 0; f < res.outcomes.size(); ++f) {
        const auto& o = res.outcomes[f];
        hist.history(std::to_string(f), o.history);
        mcsv.metrics(std::to_string(f), r.training.epochs, "test", o.metrics);
        Json fj{{"fold", f}, {"test_examples", res.folds.members(f).size()}};
        fj["metrics"] = to_json(o.metrics);
        folds.push_back(fj);
    }
    const auto& s = res.summary;
    mcsv.row("mean", r.training.epochs, "test", "accuracy", s.accuracy.mean);
    mcsv.row("stddev", r.training.epochs, "test", "accuracy", s.accuracy.stddev);
    mcsv.row("mean", r.training.epochs, "test", "macro_f1", s.macro_f1.mean);
    mcsv.row("stddev", r.training.epochs, "test", "macro_f1", s.macro_f1.stddev);
    if (s.positive_f1) {
        mcsv.row("mean", r.training.epochs, "test", "positive_f1", s.positive_f1->mean);
        mcsv.row("stddev", r.training.epochs, "test", "positive_f1", s.positive_f1->stddev);
    }
    Json metrics{{"command", "cv"}, {"k", r.folds}, {"stratified", res.folds.stratified}, {"folds", folds}};
    metrics["summary"] = to_json(s);
    write_file(out / "history.csv", hist.str());
    write_file(out / "metrics.csv", mcsv.str());
    write_file(out / "metrics.json", metrics.dump(2) + "\n");
    write_file(out / "manifest.json",
               manifest("cv", r, &p, {"history.csv", "metrics.csv", "metrics.json"}).dump(2) + "\n");
    log << "cv accuracy " << s.accuracy.mean << " +- " << s.accuracy.stddev << ", macro-F1 " << s.macro_f1.mean
        << " +- " << s.macro_f1.stddev << '\n';
    return res;
}

// ---- eval -----------------------------------------------------------------

inline Metrics cmd_eval(const RunConfig& r, const std::string& checkpoint_path, const std::string& vocab_path,
                        std::ostream& log) {
    const auto ck = load_checkpoint(checkpoint_path);
    if (!vocab_path.empty()) {
        const auto v = read_vocab(vocab_path);
        if (vocab_hash(v) != ck.vocab_hash)
            throw DataError("vocabulary hash " + vocab_hash(v) + " does not match checkpoint hash " + ck.vocab_hash +
                            "; refusing to evaluate with misaligned ids");
    }
    const auto data = load_dataset(dataset_source(r));
    if (data.class_names != ck.class_names)
        throw DataError("dataset classes do not match the checkpoint's classes");
    const std::optional<Split> split =
        data.predefined_split ? std::optional<Split>(Split::test) : std::optional<Split>();
    const auto enc = encode_dataset(data, ck.vocab, ck.config.max_len, split);
    const auto m = evaluate(ck.params, ck.config, enc);
    const fs::path out(r.out_dir);
    fs::create_directories(out);
    Json j{{"command", "eval"}, {"checkpoint", checkpoint_path}, {"split", split ? "test" : "all"},
           {"vocab_hash", ck.vocab_hash}};
    j["metrics"] = to_json(m);
    write_file(out / "eval_metrics.json", j.dump(2) + "\n");
    log << "eval on " << enc.size() << " examples: accuracy " << m.accuracy << ", macro-F1 " << m.macro_f1 << '\n';
    return m;
}

// ---- params ---------------------------------------------------------------

struct ParamRow {
    Variant variant;
    std::size_t filters_per_width;
    std::size_t total_filters;
    std::size_t parameters;
    std::size_t embedding_parameters;
};

inline std::vector<ParamRow> cmd_params(const RunConfig& r, std::ostream& log) {
    const auto dd = dataset_defaults(r.dataset_name);
    const std::size_t vocab = r.vocab_size ? r.vocab_size : dd.vocab_size;
    std::vector<ParamRow> rows;
    for (auto v : {Variant::SCNN, Variant::SCNN_SELU, Variant::ShortCNN, Variant::StaticCNN}) {
        RunConfig rv = r;
        rv.variant = to_string(v);
        // An explicit filter budget applies to the reduced variants only.
        if (v == Variant::StaticCNN) rv.filters_per_width = 0;
        const auto mc = resolve_model_config(rv, r.num_classes, vocab, r.embeddings_dim ? r.embeddings_dim : 300);
        rows.push_back({v, mc.filters_per_width, mc.features(), parameter_count(mc), embedding_parameter_count(mc)});
    }
    log << std::left << std::setw(12) << "variant" << std::right << std::setw(10) << "filters" << std::setw(8)
        << "total" << std::setw(14) << "parameters" << std::setw(14) << "embedding" << '\n';
    for (const auto& row : rows)
        log << std::left << std::setw(12) << to_string(row.variant) << std::right << std::setw(10)
            << row.filters_per_width << std::setw(8) << row.total_filters << std::setw(14) << row.parameters
            << std::setw(14) << row.embedding_parameters << '\n';
    return rows;
}

// ---- moments --------------------------------------------------------------

inline std::vector<MomentReport> cmd_moments(const RunConfig& r, std::ostream& log) {
    if (r.probe_activations.empty()) throw ConfigError("moments.activations must not be empty");
    if (r.probe_inits.size() != 1 && r.probe_inits.size() != r.probe_activations.size())
        throw ConfigError("moments.inits must list one initializer or one per activation");
    std::optional<DropoutSpec> dropout;
    if (r.probe_dropout_kind != "none")
        dropout = DropoutSpec{parse_dropout_kind(r.probe_dropout_kind), r.probe_dropout_rate};
    std::vector<ProbeConfig> probes;
    for (std::size_t i = 0; i < r.probe_activations.size(); ++i) {
        ProbeConfig pc;
        pc.depth = r.probe_depth;
        pc.width = r.probe_width;
        pc.n_samples = r.probe_samples;
        pc.activation = parse_activation(r.probe_activations[i]);
        pc.init = parse_init(r.probe_inits.size() == 1 ? r.probe_inits[0] : r.probe_inits[i]);
        pc.dropout = dropout;
        pc.input.sigma = r.probe_input_sigma;
        pc.elu_alpha = r.elu_alpha;
        pc.validate();
        probes.push_back(pc);
    }
    const fs::path out(r.out_dir);
    fs::create_directories(out);
    std::vector<MomentReport> reports;
    std::vector<std::string> outputs;
    for (std::size_t i = 0; i < probes.size(); ++i) {
        auto rng = make_rng(r.training.seed, Stream::probe, i);
        auto rep = propagate(probes[i], rng);
        const std::string stem = "moments_" + std::to_string(i) + "_" + rep.label;
        std::ostringstream csv;
        write_csv(csv, rep);
        write_file(out / (stem + ".csv"), csv.str());
        write_file(out / (stem + ".json"), to_json(rep).dump(2) + "\n");
        outputs.push_back(stem + ".csv");
        outputs.push_back(stem + ".json");
        const auto& last = rep.layers.back();
        log << rep.label << ": layer " << last.layer << " mean " << last.mean << ", variance " << last.variance
            << '\n';
        reports.push_back(std::move(rep));
    }
    if (reports.size() >= 2) {
        std::ostringstream csv;
        write_csv(csv, compare(reports));
        write_file(out / "moments_comparison.csv", csv.str());
        outputs.push_back("moments_comparison.csv");
    }
    write_file(out / "manifest.json", manifest("moments", r, nullptr, outputs).dump(2) + "\n");
    return reports;
}

// ---- synthetic corpus -----------------------------------------------------

inline fs::path cmd_synth(const RunConfig& r, std::ostream& log) {
    const auto ds = make_synthetic_dataset(r.synth, r.training.seed);
    const fs::path out(r.out_dir);
    fs::create_directories(out);
    const auto path = out / "synthetic.tsv";
    write_tsv(ds, path);
    log << "wrote " << ds.size() << " examples to " << path.string() << '\n';
    return path;
}

} // namespace scnn::app
