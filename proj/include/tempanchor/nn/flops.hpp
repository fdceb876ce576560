#ifndef TEMPANCHOR_NN_FLOPS_HPP
#define TEMPANCHOR_NN_FLOPS_HPP

// Forward-pass FLOPs for one input item.
//
// Convention: a multiply and an add are two operations; bias adds count;
// ReLU and max-pool comparisons count zero. Per-layer rules live next to
// each layer's flops() (see layers.hpp). Transformer-family models use the
// closed-form estimate 2N + 2 * n_layer * n_context * d_model.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tempanchor/nn/model.hpp"

namespace tempanchor::nn {

struct TransformerShape {
    std::uint64_t n_params = 0;
    std::uint64_t n_layer = 0;
    std::uint64_t n_context = 0;
    std::uint64_t d_model = 0;
};

struct FlopsEstimate {
    std::string model;
    std::uint64_t total = 0;
    std::vector<std::pair<std::string, std::uint64_t>> breakdown;
    std::optional<TransformerShape> transformer;
};

/// `sequence_length` is required for lstm (FLOPs scale with steps) and
/// ignored otherwise.
inline FlopsEstimate count_flops(const ModelSpec& spec, std::size_t sequence_length = 0) {
    if (spec.kind == ModelKind::lstm && sequence_length == 0) {
        throw PreconditionError("flops: an lstm estimate needs a sequence length");
    }
    Network net(spec);
    FlopsEstimate est;
    est.model = to_string(spec.kind);
    Shape shape = net.input_shape(sequence_length);
    for (std::size_t i = 0; i < net.layer_count(); ++i) {
        const auto& layer = net.layer(i);
        const std::uint64_t f = layer.flops(shape);
        est.breakdown.emplace_back(layer.name(), f);
        est.total += f;
        shape = layer.output_shape(shape);
    }
    return est;
}

inline FlopsEstimate count_flops(const TransformerShape& t) {
    if (t.n_params == 0 || t.n_layer == 0 || t.n_context == 0 || t.d_model == 0) {
        throw PreconditionError("flops: transformer estimate needs positive N, n_layer, n_context and d_model");
    }
    FlopsEstimate est;
    est.model = "transformer";
    est.transformer = t;
    est.breakdown.emplace_back("parameters (2N)", 2 * t.n_params);
    est.breakdown.emplace_back("attention context (2 n_layer n_context d_model)", 2 * t.n_layer * t.n_context * t.d_model);
    est.total = est.breakdown[0].second + est.breakdown[1].second;
    return est;
}

inline nlohmann::ordered_json to_json(const FlopsEstimate& e) {
    nlohmann::ordered_json j;
    j["model"] = e.model;
    j["total"] = e.total;
    auto parts = nlohmann::ordered_json::array();
    for (const auto& [name, f] : e.breakdown) parts.push_back({{"layer", name}, {"flops", f}});
    j["breakdown"] = std::move(parts);
    if (e.transformer) {
        j["N"] = e.transformer->n_params;
        j["n_layer"] = e.transformer->n_layer;
        j["n_context"] = e.transformer->n_context;
        j["d_model"] = e.transformer->d_model;
    }
    return j;
}

} // namespace tempanchor::nn

#endif // TEMPANCHOR_NN_FLOPS_HPP
