#pragma once

#include <string>

#include "json.hpp"

#include "scnn/error.hpp"
#include "scnn/kfold.hpp"
#include "scnn/metrics.hpp"
#include "scnn/model.hpp"
#include "scnn/moments.hpp"
#include "scnn/train.hpp"

namespace scnn {

using Json = nlohmann::ordered_json;

inline Json to_json(const ModelConfig& c) {
    return Json{
        {"variant", to_string(c.variant)},
        {"kernel_widths", c.kernel_widths},
        {"filters_per_width", c.filters_per_width},
        {"embed_dim", c.embed_dim},
        {"max_len", c.max_len},
        {"vocab_size", c.vocab_size},
        {"num_classes", c.num_classes},
        {"dropout_kind", to_string(c.dropout.kind)},
        {"dropout_rate", c.dropout.rate},
        {"activation", to_string(c.activation)},
        {"conv_init", to_string(c.conv_init)},
        {"trainable_embeddings", c.trainable_embeddings},
        {"elu_alpha", c.elu_alpha},
        {"selu_alpha", c.selu.alpha},
        {"selu_lambda", c.selu.lambda},
    };
}

inline ModelConfig model_config_from_json(const Json& j) {
    try {
        ModelConfig c;
        c.variant = parse_variant(j.at("variant").get<std::string>());
        c.kernel_widths = j.at("kernel_widths").get<std::vector<std::size_t>>();
        c.filters_per_width = j.at("filters_per_width").get<std::size_t>();
        c.embed_dim = j.at("embed_dim").get<std::size_t>();
        c.max_len = j.at("max_len").get<std::size_t>();
        c.vocab_size = j.at("vocab_size").get<std::size_t>();
        c.num_classes = j.at("num_classes").get<std::size_t>();
        c.dropout.kind = parse_dropout_kind(j.at("dropout_kind").get<std::string>());
        c.dropout.rate = j.at("dropout_rate").get<double>();
        c.activation = parse_activation(j.at("activation").get<std::string>());
        c.conv_init = parse_init(j.at("conv_init").get<std::string>());
        c.trainable_embeddings = j.at("trainable_embeddings").get<bool>();
        c.elu_alpha = j.at("elu_alpha").get<double>();
        c.selu.alpha = j.at("selu_alpha").get<double>();
        c.selu.lambda = j.at("selu_lambda").get<double>();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("model config: ") + e.what());
    } catch (const ConfigError& e) {
        throw FormatError(std::string("model config: ") + e.what());
    }
}

inline Json to_json(const TrainConfig& t) {
    return Json{{"learning_rate", t.learning_rate}, {"beta1", t.beta1},   {"beta2", t.beta2},
                {"epsilon", t.epsilon},             {"batch_size", t.batch_size}, {"epochs", t.epochs},
                {"seed", t.seed},                   {"shuffle", t.shuffle}};
}

inline Json to_json(const Metrics& m) {
    Json j{{"n_examples", m.n_examples}, {"accuracy", m.accuracy}, {"macro_f1", m.macro_f1}};
    j["positive_f1"] = m.positive_f1 ? Json(*m.positive_f1) : Json(nullptr);
    j["precision"] = m.precision;
    j["recall"] = m.recall;
    j["f1"] = m.f1;
    j["confusion"] = m.confusion;
    return j;
}

inline Json to_json(const MeanStd& s) { return Json{{"mean", s.mean}, {"stddev", s.stddev}}; }

inline Json to_json(const CvSummary& s) {
    Json j{{"accuracy", to_json(s.accuracy)}, {"macro_f1", to_json(s.macro_f1)}};
    j["positive_f1"] = s.positive_f1 ? to_json(*s.positive_f1) : Json(nullptr);
    return j;
}

inline Json to_json(const MomentReport& r) {
    const auto& c = r.config;
    Json cfg{{"depth", c.depth},
             {"width", c.width},
             {"activation", to_string(c.activation)},
             {"init", to_string(c.init)},
             {"input", c.input.name()},
             {"input_sigma", c.input.sigma},
             {"n_samples", c.n_samples}};
    cfg["dropout"] = c.dropout ? Json{{"kind", to_string(c.dropout->kind)}, {"rate", c.dropout->rate}}
                               : Json(nullptr);
    Json layers = Json::array();
    for (const auto& l : r.layers)
        layers.push_back(
            {{"layer", l.layer}, {"mean", l.mean}, {"variance", l.variance}, {"second_moment", l.second_moment}});
    return Json{{"label", r.label}, {"config", cfg}, {"layers", layers}};
}

} // namespace scnn
