// SPDX-License-Identifier: Apache-2.0
#include "linefix/model.hpp"

#include <stdexcept>

namespace linefix {

const char* to_string(Optimizer o) {
    return o == Optimizer::sgd ? "sgd" : "nag";
}
const char* to_string(Criterion c) {
    return c == Criterion::default_ce ? "default" : "smoothed";
}

std::optional<Optimizer> optimizer_from_string(std::string_view s) {
    if (s == "sgd") return Optimizer::sgd;
    if (s == "nag") return Optimizer::nag;
    return std::nullopt;
}

std::optional<Criterion> criterion_from_string(std::string_view s) {
    if (s == "default") return Criterion::default_ce;
    if (s == "smoothed") return Criterion::smoothed;
    return std::nullopt;
}

void HyperParams::validate() const {
    auto fail = [](const std::string& what) {
        throw std::invalid_argument("hyperparams: " + what);
    };
    if (src_embed_dim == 0 || trg_embed_dim == 0 || out_embed_dim == 0)
        fail("embedding dims must be positive");
    if (encoder_layers.empty() || decoder_layers.empty())
        fail("layer lists must be non-empty");
    for (const auto& l : encoder_layers) {
        if (l.channels == 0 || l.kernel == 0) fail("encoder layer dims positive");
        if (l.kernel % 2 == 0) fail("encoder kernel widths must be odd");
    }
    for (const auto& l : decoder_layers)
        if (l.channels == 0 || l.kernel == 0) fail("decoder layer dims positive");
    if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout in [0,1)");
    if (!(clip_norm > 0.0 && clip_norm <= 1.0)) fail("clip_norm in (0,1]");
    if (!(learning_rate > 0.0 && learning_rate <= 1.0)) fail("learning_rate in (0,1]");
    if (!(momentum >= 0.0 && momentum < 1.0)) fail("momentum in [0,1)");
}

nlohmann::json HyperParams::to_json() const {
    nlohmann::json j;
    j["src_embed_dim"] = src_embed_dim;
    j["trg_embed_dim"] = trg_embed_dim;
    j["out_embed_dim"] = out_embed_dim;
    auto layers = [](const std::vector<LayerSpec>& ls) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& l : ls) arr.push_back({l.channels, l.kernel});
        return arr;
    };
    j["encoder_layers"] = layers(encoder_layers);
    j["decoder_layers"] = layers(decoder_layers);
    j["dropout"] = dropout;
    j["clip_norm"] = clip_norm;
    j["optimizer"] = to_string(optimizer);
    j["criterion"] = to_string(criterion);
    j["learning_rate"] = learning_rate;
    j["momentum"] = momentum;
    j["seed"] = seed;
    return j;
}

HyperParams HyperParams::from_json(const nlohmann::json& j) {
    HyperParams hp;
    hp.src_embed_dim = j.at("src_embed_dim").get<size_t>();
    hp.trg_embed_dim = j.at("trg_embed_dim").get<size_t>();
    hp.out_embed_dim = j.at("out_embed_dim").get<size_t>();
    auto layers = [](const nlohmann::json& arr) {
        std::vector<LayerSpec> ls;
        for (const auto& e : arr)
            ls.push_back({e.at(0).get<size_t>(), e.at(1).get<size_t>()});
        return ls;
    };
    hp.encoder_layers = layers(j.at("encoder_layers"));
    hp.decoder_layers = layers(j.at("decoder_layers"));
    hp.dropout = j.at("dropout").get<double>();
    hp.clip_norm = j.at("clip_norm").get<double>();
    auto opt = optimizer_from_string(j.at("optimizer").get<std::string>());
    auto crit = criterion_from_string(j.at("criterion").get<std::string>());
    if (!opt || !crit) throw std::invalid_argument("hyperparams: bad enum value");
    hp.optimizer = *opt;
    hp.criterion = *crit;
    hp.learning_rate = j.at("learning_rate").get<double>();
    hp.momentum = j.at("momentum").get<double>();
    hp.seed = j.at("seed").get<uint64_t>();
    hp.validate();
    return hp;
}

std::string HyperParams::canonical_json() const { return to_json().dump(); }

HyperParams HyperParams::tiny(uint64_t seed) {
    HyperParams hp;
    hp.src_embed_dim = 24;
    hp.trg_embed_dim = 24;
    hp.out_embed_dim = 24;
    hp.encoder_layers = {{32, 3}};
    hp.decoder_layers = {{32, 3}};
    hp.dropout = 0.0;
    hp.clip_norm = 1.0;
    hp.optimizer = Optimizer::sgd;
    hp.criterion = Criterion::default_ce;
    hp.learning_rate = 0.5;
    hp.momentum = 0.9;
    hp.seed = seed;
    return hp;
}

}  // namespace linefix
