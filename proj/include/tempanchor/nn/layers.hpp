#ifndef TEMPANCHOR_NN_LAYERS_HPP
#define TEMPANCHOR_NN_LAYERS_HPP

// Layers with explicit forward/backward passes over a packed batch.
//
// A Batch stores `items` sequences of `steps` columns with `channels` rows
// each; item b occupies columns [b * steps, (b + 1) * steps). Flat (non-
// sequence) activations have steps == 1. `lengths[b]` is the number of valid
// leading steps of item b; columns past it are zero in every sequence
// activation.
//
// Each layer owns a contiguous slice of the model's flat parameter array.
// Weight matrices are stored column-major, followed by the bias.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tempanchor/error.hpp"
#include "tempanchor/rng.hpp"

namespace tempanchor::nn {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Batch {
    Index channels = 0;
    Index steps = 1;
    std::vector<Index> lengths;
    MatrixXd data;

    Index items() const { return static_cast<Index>(lengths.size()); }
    auto item(Index b) { return data.middleCols(b * steps, steps); }
    auto item(Index b) const { return data.middleCols(b * steps, steps); }
};

struct Shape {
    Index channels = 0;
    Index steps = 1;

    bool operator==(const Shape&) const = default;
};

using ConstMap = Eigen::Map<const MatrixXd>;
using MutMap = Eigen::Map<MatrixXd>;
using StridedConstMap = Eigen::Map<const MatrixXd, 0, Eigen::OuterStride<>>;

class Layer {
public:
    virtual ~Layer() = default;
    virtual std::string name() const = 0;
    virtual std::size_t parameter_count() const { return 0; }
    virtual Shape output_shape(const Shape& in) const = 0;
    /// Floating-point operations for one item of shape `in`.
    virtual std::uint64_t flops(const Shape& in) const = 0;
    virtual void initialize(std::span<double> /*params*/, Rng& /*rng*/) const {}
    virtual Batch forward(const Batch& in, std::span<const double> params) = 0;
    /// Accumulates parameter gradients into `grads` and returns the gradient
    /// with respect to the layer input (empty when need_input_grad is false).
    virtual Batch backward(const Batch& grad_out, std::span<const double> params, std::span<double> grads,
                           bool need_input_grad) = 0;
};

namespace detail {

inline void uniform_fill(std::span<double> values, double bound, Rng& rng) {
    for (auto& v : values) v = rng.uniform(-bound, bound);
}

inline Index ceil_div(Index a, Index b) { return (a + b - 1) / b; }

} // namespace detail

// ---------------------------------------------------------------------------

/// y = W x + b on flat input. Layout: W (out x in), b (out).
class Dense final : public Layer {
public:
    Dense(Index in, Index out) : in_(in), out_(out) {}

    std::string name() const override {
        return "dense " + std::to_string(in_) + "->" + std::to_string(out_);
    }
    std::size_t parameter_count() const override { return static_cast<std::size_t>(in_ * out_ + out_); }
    Shape output_shape(const Shape& in) const override {
        if (in.channels != in_ || in.steps != 1) {
            throw PreconditionError("dense: expected flat input of width " + std::to_string(in_) + ", got " +
                                    std::to_string(in.channels) + "x" + std::to_string(in.steps));
        }
        return {out_, 1};
    }
    std::uint64_t flops(const Shape&) const override {
        return static_cast<std::uint64_t>(2 * in_ * out_ + out_);
    }
    void initialize(std::span<double> params, Rng& rng) const override {
        detail::uniform_fill(params, 1.0 / std::sqrt(static_cast<double>(in_)), rng);
    }

    Batch forward(const Batch& in, std::span<const double> params) override {
        output_shape({in.channels, in.steps});
        input_ = in.data;
        const ConstMap w(params.data(), out_, in_);
        const Eigen::Map<const VectorXd> b(params.data() + in_ * out_, out_);
        Batch out{out_, 1, in.lengths, MatrixXd(out_, in.data.cols())};
        out.data.noalias() = w * in.data;
        out.data.colwise() += b;
        return out;
    }

    Batch backward(const Batch& grad_out, std::span<const double> params, std::span<double> grads,
                   bool need_input_grad) override {
        const ConstMap w(params.data(), out_, in_);
        MutMap dw(grads.data(), out_, in_);
        Eigen::Map<VectorXd> db(grads.data() + in_ * out_, out_);
        dw.noalias() += grad_out.data * input_.transpose();
        db += grad_out.data.rowwise().sum();
        Batch gin{in_, 1, grad_out.lengths, {}};
        if (need_input_grad) gin.data.noalias() = w.transpose() * grad_out.data;
        return gin;
    }

private:
    Index in_, out_;
    MatrixXd input_;
};

/// Elementwise activation; `kind` is "relu" or "tanh".
class Activation final : public Layer {
public:
    explicit Activation(std::string kind) : kind_(std::move(kind)) {
        if (kind_ != "relu" && kind_ != "tanh") throw PreconditionError("unknown activation '" + kind_ + "'");
    }

    std::string name() const override { return kind_; }
    Shape output_shape(const Shape& in) const override { return in; }
    /// Activations are counted as zero floating-point operations.
    std::uint64_t flops(const Shape&) const override { return 0; }

    Batch forward(const Batch& in, std::span<const double>) override {
        Batch out = in;
        if (kind_ == "relu") {
            out.data = in.data.cwiseMax(0.0);
        } else {
            out.data = in.data.array().tanh().matrix();
        }
        output_ = out.data;
        return out;
    }

    Batch backward(const Batch& grad_out, std::span<const double>, std::span<double>, bool) override {
        Batch gin = grad_out;
        if (kind_ == "relu") {
            gin.data = (output_.array() > 0.0).select(grad_out.data, 0.0);
        } else {
            gin.data = grad_out.data.array() * (1.0 - output_.array().square());
        }
        return gin;
    }

private:
    std::string kind_;
    MatrixXd output_;
};

/// Valid (unpadded) 1-D convolution. Layout: W (out x (kernel * in)) with the
/// input channel varying fastest inside each kernel tap, then b (out).
/// Output position p is valid when its window starts inside the item's true
/// length; invalid positions are zeroed.
class Conv1d final : public Layer {
public:
    Conv1d(Index in, Index out, Index kernel, Index stride) : in_(in), out_(out), kernel_(kernel), stride_(stride) {
        if (in < 1 || out < 1 || kernel < 1 || stride < 1) throw PreconditionError("conv1d: sizes must be positive");
    }

    std::string name() const override {
        return "conv1d " + std::to_string(in_) + "->" + std::to_string(out_) + " k" + std::to_string(kernel_) +
               " s" + std::to_string(stride_);
    }
    std::size_t parameter_count() const override {
        return static_cast<std::size_t>(out_ * kernel_ * in_ + out_);
    }
    Shape output_shape(const Shape& in) const override {
        if (in.channels != in_) {
            throw PreconditionError("conv1d: expected " + std::to_string(in_) + " input channels, got " +
                                    std::to_string(in.channels));
        }
        if (in.steps < kernel_) {
            throw PreconditionError("conv1d: sequence length " + std::to_string(in.steps) +
                                    " is shorter than kernel " + std::to_string(kernel_));
        }
        return {out_, (in.steps - kernel_) / stride_ + 1};
    }
    std::uint64_t flops(const Shape& in) const override {
        const Index l_out = output_shape(in).steps;
        return static_cast<std::uint64_t>(2 * kernel_ * in_ * out_ * l_out + out_ * l_out);
    }
    void initialize(std::span<double> params, Rng& rng) const override {
        detail::uniform_fill(params, 1.0 / std::sqrt(static_cast<double>(kernel_ * in_)), rng);
    }

    Index valid_length(Index length, Index l_out) const {
        return std::min(l_out, detail::ceil_div(length, stride_));
    }

    Batch forward(const Batch& in, std::span<const double> params) override {
        const Shape os = output_shape({in.channels, in.steps});
        input_ = in;
        const ConstMap w(params.data(), out_, kernel_ * in_);
        const Eigen::Map<const VectorXd> b(params.data() + out_ * kernel_ * in_, out_);
        Batch out{out_, os.steps, {}, MatrixXd::Zero(out_, os.steps * in.items())};
        for (Index i = 0; i < in.items(); ++i) {
            const Index valid = valid_length(in.lengths[i], os.steps);
            out.lengths.push_back(valid);
            const StridedConstMap patches(in.data.data() + i * in.steps * in_, kernel_ * in_, valid,
                                          Eigen::OuterStride<>(stride_ * in_));
            auto y = out.data.middleCols(i * os.steps, valid);
            y.noalias() = w * patches;
            y.colwise() += b;
        }
        out_lengths_ = out.lengths;
        return out;
    }

    Batch backward(const Batch& grad_out, std::span<const double> params, std::span<double> grads,
                   bool need_input_grad) override {
        const ConstMap w(params.data(), out_, kernel_ * in_);
        MutMap dw(grads.data(), out_, kernel_ * in_);
        Eigen::Map<VectorXd> db(grads.data() + out_ * kernel_ * in_, out_);
        Batch gin{in_, input_.steps, input_.lengths, {}};
        if (need_input_grad) gin.data = MatrixXd::Zero(in_, input_.data.cols());
        MatrixXd dpatches;
        for (Index i = 0; i < input_.items(); ++i) {
            const Index valid = out_lengths_[static_cast<std::size_t>(i)];
            const StridedConstMap patches(input_.data.data() + i * input_.steps * in_, kernel_ * in_, valid,
                                          Eigen::OuterStride<>(stride_ * in_));
            const auto dy = grad_out.data.middleCols(i * grad_out.steps, valid);
            dw.noalias() += dy * patches.transpose();
            db += dy.rowwise().sum();
            if (!need_input_grad) continue;
            dpatches.noalias() = w.transpose() * dy;
            double* base = gin.data.data() + i * input_.steps * in_;
            for (Index p = 0; p < valid; ++p) {
                Eigen::Map<VectorXd>(base + p * stride_ * in_, kernel_ * in_) += dpatches.col(p);
            }
        }
        return gin;
    }

private:
    Index in_, out_, kernel_, stride_;
    Batch input_;
    std::vector<Index> out_lengths_;
};

/// Non-overlapping max pooling over `window` steps.
class MaxPool1d final : public Layer {
public:
    explicit MaxPool1d(Index window) : window_(window) {
        if (window < 1) throw PreconditionError("maxpool: window must be positive");
    }

    std::string name() const override { return "maxpool " + std::to_string(window_); }
    Shape output_shape(const Shape& in) const override {
        if (in.steps < window_) {
            throw PreconditionError("maxpool: sequence length " + std::to_string(in.steps) +
                                    " is shorter than window " + std::to_string(window_));
        }
        return {in.channels, in.steps / window_};
    }
    /// Comparisons are not counted.
    std::uint64_t flops(const Shape&) const override { return 0; }

    Batch forward(const Batch& in, std::span<const double>) override {
        const Shape os = output_shape({in.channels, in.steps});
        in_steps_ = in.steps;
        Batch out{in.channels, os.steps, {}, MatrixXd::Zero(in.channels, os.steps * in.items())};
        argmax_.assign(static_cast<std::size_t>(out.data.size()), -1);
        for (Index i = 0; i < in.items(); ++i) {
            const Index valid = std::min(os.steps, detail::ceil_div(in.lengths[i], window_));
            out.lengths.push_back(valid);
            for (Index p = 0; p < valid; ++p) {
                const Index oc = i * os.steps + p;
                for (Index c = 0; c < in.channels; ++c) {
                    Index best = i * in.steps + p * window_;
                    for (Index q = 1; q < window_; ++q) {
                        const Index col = i * in.steps + p * window_ + q;
                        if (in.data(c, col) > in.data(c, best)) best = col;
                    }
                    out.data(c, oc) = in.data(c, best);
                    argmax_[static_cast<std::size_t>(oc * in.channels + c)] = best;
                }
            }
        }
        in_lengths_ = in.lengths;
        return out;
    }

    Batch backward(const Batch& grad_out, std::span<const double>, std::span<double>, bool) override {
        Batch gin{grad_out.channels, in_steps_, in_lengths_,
                  MatrixXd::Zero(grad_out.channels, in_steps_ * grad_out.items())};
        for (Index oc = 0; oc < grad_out.data.cols(); ++oc) {
            for (Index c = 0; c < grad_out.channels; ++c) {
                const Index src = argmax_[static_cast<std::size_t>(oc * grad_out.channels + c)];
                if (src >= 0) gin.data(c, src) += grad_out.data(c, oc);
            }
        }
        return gin;
    }

private:
    Index window_;
    Index in_steps_ = 0;
    std::vector<Index> in_lengths_;
    std::vector<Index> argmax_;
};

/// Mean over each item's valid steps; output is flat.
class GlobalAveragePool final : public Layer {
public:
    std::string name() const override { return "global-average-pool"; }
    Shape output_shape(const Shape& in) const override { return {in.channels, 1}; }
    /// One add (or the final divide) per input element.
    std::uint64_t flops(const Shape& in) const override {
        return static_cast<std::uint64_t>(in.channels * in.steps);
    }

    Batch forward(const Batch& in, std::span<const double>) override {
        in_steps_ = in.steps;
        in_lengths_ = in.lengths;
        Batch out{in.channels, 1, std::vector<Index>(in.lengths.size(), 1), MatrixXd(in.channels, in.items())};
        for (Index i = 0; i < in.items(); ++i) {
            const Index valid = std::max<Index>(1, in.lengths[i]);
            out.data.col(i) = in.data.middleCols(i * in.steps, valid).rowwise().mean();
        }
        return out;
    }

    Batch backward(const Batch& grad_out, std::span<const double>, std::span<double>, bool) override {
        Batch gin{grad_out.channels, in_steps_, in_lengths_,
                  MatrixXd::Zero(grad_out.channels, in_steps_ * grad_out.items())};
        for (Index i = 0; i < grad_out.items(); ++i) {
            const Index valid = std::max<Index>(1, in_lengths_[i]);
            gin.data.middleCols(i * in_steps_, valid).colwise() =
                grad_out.data.col(i) / static_cast<double>(valid);
        }
        return gin;
    }

private:
    Index in_steps_ = 0;
    std::vector<Index> in_lengths_;
};

/// Single-layer LSTM returning the hidden state at each item's last valid
/// step. Gate order i, f, g, o. Layout: W_x (4H x I), W_h (4H x H), b (4H).
/// Past an item's length the state is carried unchanged, so padding never
/// affects the output.
class Lstm final : public Layer {
public:
    Lstm(Index input, Index hidden) : in_(input), hidden_(hidden) {
        if (input < 1 || hidden < 1) throw PreconditionError("lstm: sizes must be positive");
    }

    std::string name() const override {
        return "lstm " + std::to_string(in_) + "->" + std::to_string(hidden_);
    }
    std::size_t parameter_count() const override {
        return static_cast<std::size_t>(4 * hidden_ * (in_ + hidden_) + 4 * hidden_);
    }
    Shape output_shape(const Shape& in) const override {
        if (in.channels != in_) {
            throw PreconditionError("lstm: expected " + std::to_string(in_) + " input channels, got " +
                                    std::to_string(in.channels));
        }
        return {hidden_, 1};
    }
    /// Per step: 8H(I+H) for the gate products, 4H bias adds, 4H for the
    /// cell/hidden updates (f*c, i*g, their sum, o*tanh(c)) and 5H
    /// nonlinearities (three sigmoids, two tanh) at one operation each.
    std::uint64_t flops(const Shape& in) const override {
        output_shape(in);
        const auto h = static_cast<std::uint64_t>(hidden_);
        const auto i = static_cast<std::uint64_t>(in_);
        return static_cast<std::uint64_t>(in.steps) * (8 * h * (i + h) + 13 * h);
    }
    void initialize(std::span<double> params, Rng& rng) const override {
        detail::uniform_fill(params, 1.0 / std::sqrt(static_cast<double>(hidden_)), rng);
        // Forget-gate bias starts at 1 so early updates keep cell state.
        const auto forget = static_cast<std::size_t>(4 * hidden_ * (in_ + hidden_) + hidden_);
        std::fill_n(params.begin() + static_cast<std::ptrdiff_t>(forget), hidden_, 1.0);
    }

    Batch forward(const Batch& in, std::span<const double> params) override {
        output_shape({in.channels, in.steps});
        const Index H = hidden_, B = in.items(), T = in.steps;
        const ConstMap wx(params.data(), 4 * H, in_);
        const ConstMap wh(params.data() + 4 * H * in_, 4 * H, H);
        const Eigen::Map<const VectorXd> b(params.data() + 4 * H * (in_ + H), 4 * H);
        input_ = in;
        gates_.assign(static_cast<std::size_t>(T), MatrixXd());
        cells_.assign(static_cast<std::size_t>(T), MatrixXd());
        tanh_cells_.assign(static_cast<std::size_t>(T), MatrixXd());
        hiddens_.assign(static_cast<std::size_t>(T), MatrixXd());
        MatrixXd h = MatrixXd::Zero(H, B), c = MatrixXd::Zero(H, B);
        MatrixXd z(4 * H, B);
        for (Index t = 0; t < T; ++t) {
            const StridedConstMap x(in.data.data() + t * in_, in_, B, Eigen::OuterStride<>(T * in_));
            z.noalias() = wx * x;
            z.noalias() += wh * h;
            z.colwise() += b;
            auto zi = z.topRows(H).array();
            auto zf = z.middleRows(H, H).array();
            auto zg = z.middleRows(2 * H, H).array();
            auto zo = z.bottomRows(H).array();
            zi = 1.0 / (1.0 + (-zi).exp());
            zf = 1.0 / (1.0 + (-zf).exp());
            zg = zg.tanh();
            zo = 1.0 / (1.0 + (-zo).exp());
            MatrixXd c_new = (zf * c.array() + zi * zg).matrix();
            MatrixXd tc = c_new.array().tanh().matrix();
            MatrixXd h_new = (zo * tc.array()).matrix();
            for (Index j = 0; j < B; ++j) {
                if (t >= in.lengths[j]) {
                    c_new.col(j) = c.col(j);
                    h_new.col(j) = h.col(j);
                }
            }
            c = c_new;
            h = h_new;
            const auto ts = static_cast<std::size_t>(t);
            gates_[ts] = z;
            cells_[ts] = std::move(c_new);
            tanh_cells_[ts] = std::move(tc);
            hiddens_[ts] = std::move(h_new);
        }
        Batch out{H, 1, std::vector<Index>(static_cast<std::size_t>(B), 1), h};
        return out;
    }

    Batch backward(const Batch& grad_out, std::span<const double> params, std::span<double> grads,
                   bool need_input_grad) override {
        const Index H = hidden_, B = input_.items(), T = input_.steps;
        const ConstMap wx(params.data(), 4 * H, in_);
        const ConstMap wh(params.data() + 4 * H * in_, 4 * H, H);
        MutMap dwx(grads.data(), 4 * H, in_);
        MutMap dwh(grads.data() + 4 * H * in_, 4 * H, H);
        Eigen::Map<VectorXd> db(grads.data() + 4 * H * (in_ + H), 4 * H);

        Batch gin{in_, T, input_.lengths, {}};
        if (need_input_grad) gin.data = MatrixXd::Zero(in_, input_.data.cols());
        MatrixXd dh = grad_out.data, dc = MatrixXd::Zero(H, B);
        MatrixXd dz(4 * H, B), dh_prev(H, B);
        const MatrixXd zeros = MatrixXd::Zero(H, B);
        for (Index t = T - 1; t >= 0; --t) {
            const auto ts = static_cast<std::size_t>(t);
            const auto& z = gates_[ts];
            const MatrixXd& c_prev = t > 0 ? cells_[ts - 1] : zeros;
            const MatrixXd& h_prev = t > 0 ? hiddens_[ts - 1] : zeros;
            const auto i = z.topRows(H).array();
            const auto f = z.middleRows(H, H).array();
            const auto g = z.middleRows(2 * H, H).array();
            const auto o = z.bottomRows(H).array();
            const auto tc = tanh_cells_[ts].array();

            const MatrixXd dcn = (dc.array() + dh.array() * o * (1.0 - tc.square())).matrix();
            dz.topRows(H) = (dcn.array() * g * i * (1.0 - i)).matrix();
            dz.middleRows(H, H) = (dcn.array() * c_prev.array() * f * (1.0 - f)).matrix();
            dz.middleRows(2 * H, H) = (dcn.array() * i * (1.0 - g.square())).matrix();
            dz.bottomRows(H) = (dh.array() * tc * o * (1.0 - o)).matrix();
            MatrixXd dc_prev = (dcn.array() * f).matrix();

            bool any_inactive = false;
            for (Index j = 0; j < B; ++j) {
                if (t >= input_.lengths[j]) {
                    dz.col(j).setZero();
                    any_inactive = true;
                }
            }
            const StridedConstMap x(input_.data.data() + t * in_, in_, B, Eigen::OuterStride<>(T * in_));
            dwx.noalias() += dz * x.transpose();
            dwh.noalias() += dz * h_prev.transpose();
            db += dz.rowwise().sum();
            dh_prev.noalias() = wh.transpose() * dz;
            if (need_input_grad) {
                const MatrixXd dx = wx.transpose() * dz;
                for (Index j = 0; j < B; ++j) gin.data.col(j * T + t) = dx.col(j);
            }
            if (any_inactive) {
                for (Index j = 0; j < B; ++j) {
                    if (t >= input_.lengths[j]) {
                        dh_prev.col(j) = dh.col(j);
                        dc_prev.col(j) = dc.col(j);
                    }
                }
            }
            dh.swap(dh_prev);
            dc = std::move(dc_prev);
        }
        return gin;
    }

private:
    Index in_, hidden_;
    Batch input_;
    std::vector<MatrixXd> gates_, cells_, tanh_cells_, hiddens_;
};

} // namespace tempanchor::nn

#endif // TEMPANCHOR_NN_LAYERS_HPP
