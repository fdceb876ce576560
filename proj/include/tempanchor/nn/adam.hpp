#ifndef TEMPANCHOR_NN_ADAM_HPP
#define TEMPANCHOR_NN_ADAM_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tempanchor/error.hpp"

namespace tempanchor::nn {

/// A gradient or loss became NaN or infinite.
class NonFiniteError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct AdamHyper {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::uint64_t t = 0;

    explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

/// One bias-corrected Adam update. Rejects non-finite gradients before
/// touching any state.
inline void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
                      const AdamHyper& hyper) {
    tempanchor::detail::require(params.size() == grads.size(), "adam: parameter/gradient size mismatch");
    if (state.m.empty() && state.t == 0) state = AdamState(params.size());
    tempanchor::detail::require(state.m.size() == params.size(), "adam: state size mismatch");
    for (std::size_t i = 0; i < grads.size(); ++i) {
        if (!std::isfinite(grads[i])) {
            throw NonFiniteError("adam: non-finite gradient at parameter " + std::to_string(i) + " (step " +
                                 std::to_string(state.t + 1) + ")");
        }
    }
    ++state.t;
    const double c1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(state.t));
    const double c2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = hyper.beta1 * state.m[i] + (1.0 - hyper.beta1) * grads[i];
        state.v[i] = hyper.beta2 * state.v[i] + (1.0 - hyper.beta2) * grads[i] * grads[i];
        const double m_hat = state.m[i] / c1;
        const double v_hat = state.v[i] / c2;
        params[i] -= hyper.lr * m_hat / (std::sqrt(v_hat) + hyper.epsilon);
    }
}

} // namespace tempanchor::nn

#endif // TEMPANCHOR_NN_ADAM_HPP
