#ifndef TEMPANCHOR_NN_GRADCHECK_HPP
#define TEMPANCHOR_NN_GRADCHECK_HPP

// Central finite-difference verification of analytic gradients.
//
// Relative error of one coordinate: |a - n| / max(|a|, |n|, floor), where a is
// the analytic and n the numeric derivative. The floor (1e-6) keeps
// coordinates whose true derivative is ~0 from dividing rounding noise by ~0.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tempanchor/nn/model.hpp"
#include "tempanchor/rng.hpp"

namespace tempanchor::nn {

inline constexpr double kGradCheckFloor = 1e-6;

inline double relative_error(double analytic, double numeric, double floor = kGradCheckFloor) {
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

/// Central-difference derivative of f along every coordinate of x.
inline std::vector<double> numeric_gradient(const std::function<double(std::span<const double>)>& f,
                                            std::vector<double> x, double eps) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double keep = x[i];
        x[i] = keep + eps;
        const double up = f(x);
        x[i] = keep - eps;
        const double down = f(x);
        x[i] = keep;
        g[i] = (up - down) / (2.0 * eps);
    }
    return g;
}

/// Max relative error between `analytic` and the central difference of f.
inline double max_relative_error(const std::function<double(std::span<const double>)>& f,
                                 const std::vector<double>& x, std::span<const double> analytic, double eps) {
    const auto numeric = numeric_gradient(f, x, eps);
    double worst = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) worst = std::max(worst, relative_error(analytic[i], numeric[i]));
    return worst;
}

struct GradCheckOptions {
    double epsilon = 1e-5;
    std::size_t batch = 4;
    std::size_t max_steps = 10; // lstm sequence length; cnn1d uses spec.sequence_length
};

struct GradCheckReport {
    double max_relative_error = 0.0;
    std::vector<std::pair<std::string, double>> per_layer; // layers with parameters
    std::size_t parameters_checked = 0;
};

/// Random parameters and a random labelled batch drawn from `seed`; every
/// parameter is checked. Sequence items get random lengths, one of which is
/// the full length, so masking paths are exercised.
inline GradCheckReport grad_check(const ModelSpec& spec, std::uint64_t seed, const GradCheckOptions& options = {}) {
    Network net(spec);
    const auto params = net.initial_parameters(seed);
    Rng rng(derive_seed(seed, "gradcheck"));
    const auto channels = static_cast<Index>(spec.input_size);
    const Index full = spec.kind == ModelKind::lstm ? static_cast<Index>(options.max_steps)
                       : spec.kind == ModelKind::cnn1d ? static_cast<Index>(spec.sequence_length)
                                                       : 1;
    std::vector<Sample> samples(options.batch);
    for (std::size_t b = 0; b < samples.size(); ++b) {
        const Index len = (b == 0 || full == 1) ? full : 1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(full)));
        samples[b].x = MatrixXd(channels, len);
        for (Index i = 0; i < samples[b].x.size(); ++i) samples[b].x.data()[i] = rng.normal();
        samples[b].label = static_cast<int>(rng.below(2));
    }
    std::vector<const Sample*> refs;
    for (const auto& s : samples) refs.push_back(&s);

    const auto analytic = loss_and_gradients(net, params, refs).gradient;
    const auto loss = [&](std::span<const double> p) {
        std::vector<int> labels;
        for (const auto& s : samples) labels.push_back(s.label);
        return softmax_cross_entropy(net.forward(refs, p), labels).loss;
    };
    const auto numeric = numeric_gradient(loss, params, options.epsilon);

    GradCheckReport report;
    report.parameters_checked = params.size();
    for (const auto& slice : net.layout()) {
        if (slice.count == 0) continue;
        double worst = 0.0;
        for (std::size_t i = slice.offset; i < slice.offset + slice.count; ++i) {
            worst = std::max(worst, relative_error(analytic[i], numeric[i]));
        }
        report.per_layer.emplace_back(slice.name, worst);
        report.max_relative_error = std::max(report.max_relative_error, worst);
    }
    return report;
}

} // namespace tempanchor::nn

#endif // TEMPANCHOR_NN_GRADCHECK_HPP
