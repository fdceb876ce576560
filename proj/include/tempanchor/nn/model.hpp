#ifndef TEMPANCHOR_NN_MODEL_HPP
#define TEMPANCHOR_NN_MODEL_HPP

// Model specifications, layer stacks and softmax cross-entropy.
//
//  feedforward: dense(input -> h1), act, ..., dense(h_last -> 2)
//  cnn1d:       [conv1d, act, maxpool]* -> global average pool -> dense(C -> 2)
//               on inputs right-padded/truncated to sequence_length
//  lstm:        lstm(input -> H) -> dense(H -> 2) on the final valid state
//
// The flat parameter array concatenates each layer's slice in stack order.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "tempanchor/error.hpp"
#include "tempanchor/nn/layers.hpp"
#include "tempanchor/rng.hpp"

namespace tempanchor::nn {

enum class ModelKind { feedforward, cnn1d, lstm };

inline std::string to_string(ModelKind kind) {
    switch (kind) {
    case ModelKind::feedforward: return "feedforward";
    case ModelKind::cnn1d: return "cnn1d";
    case ModelKind::lstm: return "lstm";
    }
    return "feedforward";
}

inline ModelKind parse_model_kind(const std::string& text) {
    if (text == "feedforward") return ModelKind::feedforward;
    if (text == "cnn1d") return ModelKind::cnn1d;
    if (text == "lstm") return ModelKind::lstm;
    throw PreconditionError("unknown model kind '" + text + "' (expected feedforward, cnn1d or lstm)");
}

struct ConvBlock {
    std::size_t filters = 32;
    std::size_t kernel = 5;
    std::size_t stride = 1;
    std::size_t pool = 2; // 0 or 1 disables pooling

    bool operator==(const ConvBlock&) const = default;
};

struct ModelSpec {
    ModelKind kind = ModelKind::feedforward;
    std::size_t input_size = 30; // features (feedforward) or channels
    std::vector<std::size_t> hidden{64, 32};
    std::vector<ConvBlock> conv{{32, 5, 1, 2}, {64, 5, 1, 2}};
    std::size_t lstm_hidden = 64;
    std::size_t sequence_length = 512; // cnn1d padded length
    std::string activation = "relu";
    std::uint64_t seed = 0;

    static ModelSpec feedforward(std::size_t inputs = 30, std::vector<std::size_t> hidden = {64, 32}) {
        ModelSpec s;
        s.kind = ModelKind::feedforward;
        s.input_size = inputs;
        s.hidden = std::move(hidden);
        return s;
    }
    static ModelSpec cnn1d(std::size_t channels = 1, std::size_t length = 512) {
        ModelSpec s;
        s.kind = ModelKind::cnn1d;
        s.input_size = channels;
        s.sequence_length = length;
        return s;
    }
    static ModelSpec lstm(std::size_t channels = 1, std::size_t hidden = 64) {
        ModelSpec s;
        s.kind = ModelKind::lstm;
        s.input_size = channels;
        s.lstm_hidden = hidden;
        return s;
    }

    bool is_sequence() const { return kind != ModelKind::feedforward; }

    bool operator==(const ModelSpec&) const = default;
};

/// One training or evaluation example. x is channels x steps; feature
/// vectors are a single step.
struct Sample {
    MatrixXd x;
    int label = 0;
};

using SampleRefs = std::span<const Sample* const>;

struct LayerSlice {
    std::string name;
    std::size_t offset = 0;
    std::size_t count = 0;
};

class Network {
public:
    explicit Network(const ModelSpec& spec) : spec_(spec) {
        tempanchor::detail::require(spec.input_size >= 1, "model: input size must be positive");
        const auto in = static_cast<Index>(spec.input_size);
        switch (spec.kind) {
        case ModelKind::feedforward: {
            Index width = in;
            for (std::size_t h : spec.hidden) {
                tempanchor::detail::require(h >= 1, "model: hidden sizes must be positive");
                add(std::make_unique<Dense>(width, static_cast<Index>(h)));
                add(std::make_unique<Activation>(spec.activation));
                width = static_cast<Index>(h);
            }
            add(std::make_unique<Dense>(width, 2));
            break;
        }
        case ModelKind::cnn1d: {
            tempanchor::detail::require(!spec.conv.empty(), "model: cnn1d needs at least one conv block");
            Index channels = in;
            for (const auto& block : spec.conv) {
                add(std::make_unique<Conv1d>(channels, static_cast<Index>(block.filters),
                                             static_cast<Index>(block.kernel), static_cast<Index>(block.stride)));
                add(std::make_unique<Activation>(spec.activation));
                if (block.pool > 1) add(std::make_unique<MaxPool1d>(static_cast<Index>(block.pool)));
                channels = static_cast<Index>(block.filters);
            }
            add(std::make_unique<GlobalAveragePool>());
            add(std::make_unique<Dense>(channels, 2));
            // Fails early when the padded length cannot pass through the stack.
            output_shapes(input_shape());
            break;
        }
        case ModelKind::lstm:
            tempanchor::detail::require(spec.lstm_hidden >= 1, "model: lstm hidden size must be positive");
            add(std::make_unique<Lstm>(in, static_cast<Index>(spec.lstm_hidden)));
            add(std::make_unique<Dense>(static_cast<Index>(spec.lstm_hidden), 2));
            break;
        }
    }

    const ModelSpec& spec() const { return spec_; }
    std::size_t parameter_count() const { return slices_.empty() ? 0 : slices_.back().offset + slices_.back().count; }
    const std::vector<LayerSlice>& layout() const { return slices_; }
    std::size_t layer_count() const { return layers_.size(); }
    const Layer& layer(std::size_t i) const { return *layers_[i]; }

    /// Shape of one input item; `steps` is the sequence length for lstm.
    Shape input_shape(std::size_t steps = 1) const {
        switch (spec_.kind) {
        case ModelKind::feedforward: return {static_cast<Index>(spec_.input_size), 1};
        case ModelKind::cnn1d: return {static_cast<Index>(spec_.input_size), static_cast<Index>(spec_.sequence_length)};
        case ModelKind::lstm: return {static_cast<Index>(spec_.input_size), static_cast<Index>(steps)};
        }
        return {};
    }

    /// Output shape after each layer.
    std::vector<Shape> output_shapes(Shape in) const {
        std::vector<Shape> shapes;
        for (const auto& l : layers_) {
            in = l->output_shape(in);
            shapes.push_back(in);
        }
        return shapes;
    }

    std::vector<double> initial_parameters(std::uint64_t seed) const {
        std::vector<double> params(parameter_count(), 0.0);
        Rng rng(derive_seed(seed, "init"));
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            layers_[i]->initialize(std::span<double>(params).subspan(slices_[i].offset, slices_[i].count), rng);
        }
        return params;
    }

    /// Packs samples into a batch: feature vectors side by side, sequences
    /// right-padded to the longest item (lstm) or to sequence_length (cnn1d,
    /// truncating longer items).
    Batch make_batch(SampleRefs samples) const {
        const auto channels = static_cast<Index>(spec_.input_size);
        Index steps = 1;
        if (spec_.kind == ModelKind::cnn1d) {
            steps = static_cast<Index>(spec_.sequence_length);
        } else if (spec_.kind == ModelKind::lstm) {
            for (const Sample* s : samples) steps = std::max(steps, s->x.cols());
        }
        Batch batch{channels, steps, {}, MatrixXd::Zero(channels, steps * static_cast<Index>(samples.size()))};
        for (std::size_t b = 0; b < samples.size(); ++b) {
            const MatrixXd& x = samples[b]->x;
            if (x.rows() != channels) {
                throw PreconditionError("model: input has " + std::to_string(x.rows()) + " channels, spec expects " +
                                        std::to_string(channels));
            }
            if (x.cols() < 1) throw PreconditionError("model: empty input item");
            if (spec_.kind == ModelKind::feedforward && x.cols() != 1) {
                throw PreconditionError("model: feedforward input must be a single feature vector");
            }
            const Index len = std::min(x.cols(), steps);
            batch.data.middleCols(static_cast<Index>(b) * steps, len) = x.leftCols(len);
            batch.lengths.push_back(len);
        }
        return batch;
    }

    /// Logits, 2 x items.
    MatrixXd forward(const Batch& in, std::span<const double> params) {
        const auto aligned = stage(params);
        Batch x = in;
        for (std::size_t i = 0; i < layers_.size(); ++i) x = layers_[i]->forward(x, slice(aligned, i));
        return std::move(x.data);
    }

    MatrixXd forward(SampleRefs samples, std::span<const double> params) {
        return forward(make_batch(samples), params);
    }

    /// Back-propagates dlogits (2 x items) from the last forward call,
    /// accumulating into grads.
    void backward(const MatrixXd& dlogits, std::span<const double> params, std::span<double> grads) {
        const auto aligned = stage(params);
        tempanchor::detail::require(grads.size() == params.size(), "model: gradient array has the wrong size");
        grad_buffer_.setZero(static_cast<Index>(grads.size()));
        const std::span<double> g_aligned(grad_buffer_.data(), grads.size());
        Batch g{2, 1, std::vector<Index>(static_cast<std::size_t>(dlogits.cols()), 1), dlogits};
        for (std::size_t i = layers_.size(); i-- > 0;) {
            g = layers_[i]->backward(g, slice(aligned, i),
                                     g_aligned.subspan(slices_[i].offset, slices_[i].count), i > 0);
        }
        for (std::size_t k = 0; k < grads.size(); ++k) grads[k] += g_aligned[k];
    }

private:
    void add(std::unique_ptr<Layer> layer) {
        const std::size_t offset = parameter_count();
        slices_.push_back({layer->name(), offset, layer->parameter_count()});
        layers_.push_back(std::move(layer));
    }

    void check_params(std::span<const double> params) const {
        if (params.size() != parameter_count()) {
            throw PreconditionError("model: expected " + std::to_string(parameter_count()) + " parameters, got " +
                                    std::to_string(params.size()));
        }
    }

    // Layers see parameters and gradients in Eigen-aligned storage: Eigen's
    // vectorized kernels peel by address, so caller-owned buffers at varying
    // alignment would change summation order between otherwise equal runs.
    std::span<const double> stage(std::span<const double> params) {
        check_params(params);
        if (params.data() != param_buffer_.data()) {
            param_buffer_ = Eigen::Map<const VectorXd>(params.data(), static_cast<Index>(params.size()));
        }
        return {param_buffer_.data(), params.size()};
    }

    std::span<const double> slice(std::span<const double> params, std::size_t i) const {
        return params.subspan(slices_[i].offset, slices_[i].count);
    }

    ModelSpec spec_;
    std::vector<std::unique_ptr<Layer>> layers_;
    std::vector<LayerSlice> slices_;
    VectorXd param_buffer_;
    VectorXd grad_buffer_;
};

/// Closed-form parameter count for a spec.
inline std::size_t closed_form_parameter_count(const ModelSpec& spec) {
    std::size_t n = 0;
    switch (spec.kind) {
    case ModelKind::feedforward: {
        std::size_t width = spec.input_size;
        for (std::size_t h : spec.hidden) {
            n += width * h + h;
            width = h;
        }
        return n + width * 2 + 2;
    }
    case ModelKind::cnn1d: {
        std::size_t channels = spec.input_size;
        for (const auto& b : spec.conv) {
            n += b.filters * b.kernel * channels + b.filters;
            channels = b.filters;
        }
        return n + channels * 2 + 2;
    }
    case ModelKind::lstm: {
        const std::size_t h = spec.lstm_hidden, i = spec.input_size;
        return 4 * h * (i + h) + 4 * h + h * 2 + 2;
    }
    }
    return n;
}

// ---------------------------------------------------------------------------
// Loss
// ---------------------------------------------------------------------------

struct LossResult {
    double loss = 0.0;
    MatrixXd dlogits; // 2 x items, already divided by the batch size
};

inline MatrixXd softmax(const MatrixXd& logits) {
    MatrixXd p(logits.rows(), logits.cols());
    for (Index j = 0; j < logits.cols(); ++j) {
        const double m = logits.col(j).maxCoeff();
        p.col(j) = (logits.col(j).array() - m).exp().matrix();
        p.col(j) /= p.col(j).sum();
    }
    return p;
}

/// Mean softmax cross-entropy over the batch and its gradient at the logits.
inline LossResult softmax_cross_entropy(const MatrixXd& logits, std::span<const int> labels) {
    tempanchor::detail::require(static_cast<std::size_t>(logits.cols()) == labels.size(), "loss: label count mismatch");
    const auto n = static_cast<double>(labels.size());
    LossResult r{0.0, softmax(logits)};
    for (Index j = 0; j < logits.cols(); ++j) {
        const int y = labels[static_cast<std::size_t>(j)];
        tempanchor::detail::require(y == 0 || y == 1, "loss: labels must be 0 or 1");
        const double m = logits.col(j).maxCoeff();
        const double lse = m + std::log((logits.col(j).array() - m).exp().sum());
        r.loss += lse - logits(y, j);
        r.dlogits(y, j) -= 1.0;
    }
    r.loss /= n;
    r.dlogits /= n;
    return r;
}

struct LossAndGradient {
    double loss = 0.0;
    std::vector<double> gradient;
};

inline LossAndGradient loss_and_gradients(Network& net, std::span<const double> params, SampleRefs samples) {
    std::vector<int> labels;
    for (const Sample* s : samples) labels.push_back(s->label);
    const MatrixXd logits = net.forward(samples, params);
    auto lr = softmax_cross_entropy(logits, labels);
    LossAndGradient out{lr.loss, std::vector<double>(params.size(), 0.0)};
    net.backward(lr.dlogits, params, out.gradient);
    return out;
}

/// Condition-class probability for each sample, evaluated in chunks.
inline std::vector<double> predict_probabilities(Network& net, std::span<const double> params,
                                                 std::span<const Sample> samples, std::size_t chunk = 64) {
    std::vector<double> probs;
    probs.reserve(samples.size());
    std::vector<const Sample*> refs;
    for (std::size_t start = 0; start < samples.size(); start += chunk) {
        refs.clear();
        for (std::size_t i = start; i < std::min(samples.size(), start + chunk); ++i) refs.push_back(&samples[i]);
        const MatrixXd p = softmax(net.forward(refs, params));
        for (Index j = 0; j < p.cols(); ++j) probs.push_back(p(1, j));
    }
    return probs;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline nlohmann::ordered_json to_json(const ModelSpec& s) {
    nlohmann::ordered_json j;
    j["kind"] = to_string(s.kind);
    j["input_size"] = s.input_size;
    j["activation"] = s.activation;
    switch (s.kind) {
    case ModelKind::feedforward: j["hidden"] = s.hidden; break;
    case ModelKind::cnn1d: {
        auto blocks = nlohmann::ordered_json::array();
        for (const auto& b : s.conv) {
            blocks.push_back({{"filters", b.filters}, {"kernel", b.kernel}, {"stride", b.stride}, {"pool", b.pool}});
        }
        j["conv"] = std::move(blocks);
        j["sequence_length"] = s.sequence_length;
        break;
    }
    case ModelKind::lstm: j["lstm_hidden"] = s.lstm_hidden; break;
    }
    j["seed"] = s.seed;
    return j;
}

/// Reads a spec; absent fields take the defaults for the given kind.
inline ModelSpec model_spec_from_json(const nlohmann::json& j) {
    ModelSpec s;
    s.kind = parse_model_kind(j.at("kind").get<std::string>());
    s.input_size = j.value("input_size", s.kind == ModelKind::feedforward ? std::size_t{30} : std::size_t{1});
    s.activation = j.value("activation", s.activation);
    s.hidden = j.value("hidden", s.hidden);
    if (j.contains("conv")) {
        s.conv.clear();
        for (const auto& b : j.at("conv")) {
            s.conv.push_back({b.value("filters", std::size_t{32}), b.value("kernel", std::size_t{5}),
                              b.value("stride", std::size_t{1}), b.value("pool", std::size_t{2})});
        }
    }
    s.lstm_hidden = j.value("lstm_hidden", s.lstm_hidden);
    s.sequence_length = j.value("sequence_length", s.sequence_length);
    s.seed = j.value("seed", s.seed);
    return s;
}

} // namespace tempanchor::nn

#endif // TEMPANCHOR_NN_MODEL_HPP
