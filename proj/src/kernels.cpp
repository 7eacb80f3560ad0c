#include "codecat/kernels.hpp"
#include "codecat/error.hpp"
#include "codecat/model.hpp"

#include <cmath>
#include <limits>

namespace codecat::kernels {

namespace {

using ConstMap = Eigen::Map<const RowMatrix>;
using Map = Eigen::Map<RowMatrix>;
using WindowMap = Eigen::Map<const RowMatrix, 0, Eigen::OuterStride<>>;

std::size_t conv_rows(const RowMatrix& inputs, std::size_t kernel, std::size_t stride) {
    const auto len = static_cast<std::size_t>(inputs.rows());
    if (len < kernel) throw Error("convolution input shorter than the kernel");
    return (len - kernel) / stride + 1;
}

// Window t is the contiguous block of rows [t*stride, t*stride + kernel).
WindowMap windows(const RowMatrix& inputs, std::size_t kernel, std::size_t stride) {
    const auto dims = inputs.cols();
    return WindowMap(inputs.data(), static_cast<Eigen::Index>(conv_rows(inputs, kernel, stride)),
                     static_cast<Eigen::Index>(kernel) * dims,
                     Eigen::OuterStride<>(static_cast<Eigen::Index>(stride) * dims));
}

}  // namespace

void conv1d_relu(const RowMatrix& inputs, std::span<const double> weights, std::span<const double> bias,
                 std::size_t kernel, std::size_t stride, RowMatrix& out) {
    const auto filters = static_cast<Eigen::Index>(bias.size());
    const auto span_dims = static_cast<Eigen::Index>(kernel) * inputs.cols();
    const ConstMap w(weights.data(), span_dims, filters);
    const Eigen::Map<const Eigen::RowVectorXd> b(bias.data(), filters);
    const auto x = windows(inputs, kernel, stride);
    out.resize(x.rows(), filters);
    out.noalias() = x * w;
    out.rowwise() += b;
    out = out.cwiseMax(0.0);
}

void conv1d_backward(const RowMatrix& inputs, const RowMatrix& grad_out, std::size_t kernel, std::size_t stride,
                     std::span<double> grad_weights, std::span<double> grad_bias) {
    const auto filters = grad_out.cols();
    const auto span_dims = static_cast<Eigen::Index>(kernel) * inputs.cols();
    Map gw(grad_weights.data(), span_dims, filters);
    Eigen::Map<Eigen::RowVectorXd> gb(grad_bias.data(), filters);
    const auto x = windows(inputs, kernel, stride);
    gw.noalias() += x.transpose() * grad_out;
    gb += grad_out.colwise().sum();
}

void maxpool(const RowMatrix& in, std::size_t pool, RowMatrix& out, std::vector<std::uint32_t>& argmax) {
    const auto rows = static_cast<std::size_t>(in.rows()) / pool;
    const auto cols = in.cols();
    out.resize(static_cast<Eigen::Index>(rows), cols);
    argmax.assign(rows * static_cast<std::size_t>(cols), 0);
    for (std::size_t r = 0; r < rows; ++r) {
        const auto first = static_cast<Eigen::Index>(r * pool);
        out.row(static_cast<Eigen::Index>(r)) = in.row(first);
        auto* winner = argmax.data() + r * static_cast<std::size_t>(cols);
        for (Eigen::Index c = 0; c < cols; ++c) winner[c] = static_cast<std::uint32_t>(first);
        for (std::size_t p = 1; p < pool; ++p) {
            const auto src = first + static_cast<Eigen::Index>(p);
            for (Eigen::Index c = 0; c < cols; ++c) {
                if (in(src, c) > out(static_cast<Eigen::Index>(r), c)) {
                    out(static_cast<Eigen::Index>(r), c) = in(src, c);
                    winner[c] = static_cast<std::uint32_t>(src);
                }
            }
        }
    }
}

namespace reference {

void conv1d_relu(const RowMatrix& inputs, std::span<const double> weights, std::span<const double> bias,
                 std::size_t kernel, std::size_t stride, RowMatrix& out) {
    const std::size_t rows = conv_rows(inputs, kernel, stride);
    const std::size_t dims = static_cast<std::size_t>(inputs.cols());
    const std::size_t filters = bias.size();
    out.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(filters));
    for (std::size_t t = 0; t < rows; ++t) {
        for (std::size_t f = 0; f < filters; ++f) {
            double acc = bias[f];
            for (std::size_t k = 0; k < kernel; ++k) {
                for (std::size_t e = 0; e < dims; ++e) {
                    acc += inputs(static_cast<Eigen::Index>(t * stride + k), static_cast<Eigen::Index>(e)) *
                           weights[(k * dims + e) * filters + f];
                }
            }
            out(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(f)) = acc > 0.0 ? acc : 0.0;
        }
    }
}

void conv1d_backward(const RowMatrix& inputs, const RowMatrix& grad_out, std::size_t kernel, std::size_t stride,
                     std::span<double> grad_weights, std::span<double> grad_bias) {
    const std::size_t rows = static_cast<std::size_t>(grad_out.rows());
    const std::size_t dims = static_cast<std::size_t>(inputs.cols());
    const std::size_t filters = static_cast<std::size_t>(grad_out.cols());
    for (std::size_t t = 0; t < rows; ++t) {
        for (std::size_t f = 0; f < filters; ++f) {
            const double g = grad_out(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(f));
            grad_bias[f] += g;
            for (std::size_t k = 0; k < kernel; ++k) {
                for (std::size_t e = 0; e < dims; ++e) {
                    grad_weights[(k * dims + e) * filters + f] +=
                        g * inputs(static_cast<Eigen::Index>(t * stride + k), static_cast<Eigen::Index>(e));
                }
            }
        }
    }
}

void maxpool(const RowMatrix& in, std::size_t pool, RowMatrix& out, std::vector<std::uint32_t>& argmax) {
    const std::size_t rows = static_cast<std::size_t>(in.rows()) / pool;
    const std::size_t cols = static_cast<std::size_t>(in.cols());
    out.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    argmax.assign(rows * cols, 0);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            std::size_t best = r * pool;
            for (std::size_t p = 1; p < pool; ++p) {
                if (in(static_cast<Eigen::Index>(r * pool + p), static_cast<Eigen::Index>(c)) >
                    in(static_cast<Eigen::Index>(best), static_cast<Eigen::Index>(c))) {
                    best = r * pool + p;
                }
            }
            out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                in(static_cast<Eigen::Index>(best), static_cast<Eigen::Index>(c));
            argmax[r * cols + c] = static_cast<std::uint32_t>(best);
        }
    }
}

std::vector<double> forward_probabilities(const ClassifierModel& model, std::span<const TokenId> ids) {
    const auto& cfg = model.config;
    const auto& p = model.params;
    if (ids.size() != cfg.seq_len) throw Error("input length does not match seq_len");
    const std::size_t dims = cfg.embed_dims;

    RowMatrix inputs(static_cast<Eigen::Index>(cfg.seq_len), static_cast<Eigen::Index>(dims));
    for (std::size_t t = 0; t < cfg.seq_len; ++t) {
        for (std::size_t e = 0; e < dims; ++e) {
            inputs(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(e)) =
                model.embedding.values(static_cast<Eigen::Index>(ids[t]), static_cast<Eigen::Index>(e));
        }
    }
    RowMatrix conv;
    conv1d_relu(inputs, p.conv_w, p.conv_b, cfg.kernel_size, cfg.strides, conv);
    RowMatrix pooled;
    std::vector<std::uint32_t> argmax;
    maxpool(conv, cfg.pool_size, pooled, argmax);

    const std::size_t units = cfg.lstm_units;
    const std::size_t width = 4 * units;
    const std::size_t features = cfg.filters;
    std::vector<double> h(units, 0.0);
    std::vector<double> c(units, 0.0);
    std::vector<double> z(width);
    const auto sigmoid = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
    for (std::size_t t = 0; t < static_cast<std::size_t>(pooled.rows()); ++t) {
        for (std::size_t j = 0; j < width; ++j) {
            double acc = p.lstm_b[j];
            for (std::size_t f = 0; f < features; ++f) {
                acc += pooled(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(f)) * p.lstm_wx[f * width + j];
            }
            for (std::size_t u = 0; u < units; ++u) acc += h[u] * p.lstm_wh[u * width + j];
            z[j] = acc;
        }
        for (std::size_t u = 0; u < units; ++u) {
            const double i = sigmoid(z[u]);
            const double f = sigmoid(z[units + u]);
            const double g = std::tanh(z[2 * units + u]);
            const double o = sigmoid(z[3 * units + u]);
            c[u] = f * c[u] + i * g;
            h[u] = o * std::tanh(c[u]);
        }
    }

    std::vector<double> dense(cfg.hide_u);
    for (std::size_t d = 0; d < cfg.hide_u; ++d) {
        double acc = p.hidden_b[d];
        for (std::size_t u = 0; u < units; ++u) acc += h[u] * p.hidden_w[u * cfg.hide_u + d];
        dense[d] = acc > 0.0 ? acc : 0.0;
    }
    std::vector<double> logits(cfg.num_categories);
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < cfg.num_categories; ++k) {
        double acc = p.out_b[k];
        for (std::size_t d = 0; d < cfg.hide_u; ++d) acc += dense[d] * p.out_w[d * cfg.num_categories + k];
        logits[k] = acc;
        top = std::max(top, acc);
    }
    double total = 0.0;
    for (auto& v : logits) {
        v = std::exp(v - top);
        total += v;
    }
    for (auto& v : logits) v /= total;
    return logits;
}

}  // namespace reference

}  // namespace codecat::kernels
