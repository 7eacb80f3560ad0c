#pragma once

#include "codecat/embedding.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace codecat {
struct ClassifierModel;
}

namespace codecat::kernels {

// Valid 1-D convolution with ReLU. `weights` is (kernel * in_dims) x filters
// row-major; output rows are window start positions.
void conv1d_relu(const RowMatrix& inputs, std::span<const double> weights, std::span<const double> bias,
                 std::size_t kernel, std::size_t stride, RowMatrix& out);

// conv weight/bias gradient from the pre-activation gradient `grad_out`.
void conv1d_backward(const RowMatrix& inputs, const RowMatrix& grad_out, std::size_t kernel, std::size_t stride,
                     std::span<double> grad_weights, std::span<double> grad_bias);

// Non-overlapping max pooling; trailing rows that do not fill a window are
// dropped. `argmax` holds the winning input row per output cell (first max).
void maxpool(const RowMatrix& in, std::size_t pool, RowMatrix& out, std::vector<std::uint32_t>& argmax);

// Straight loop versions of the kernels above and of the whole inference
// path. Slow; used by the tests and the benchmark as the ground truth.
namespace reference {

void conv1d_relu(const RowMatrix& inputs, std::span<const double> weights, std::span<const double> bias,
                 std::size_t kernel, std::size_t stride, RowMatrix& out);

void conv1d_backward(const RowMatrix& inputs, const RowMatrix& grad_out, std::size_t kernel, std::size_t stride,
                     std::span<double> grad_weights, std::span<double> grad_bias);

void maxpool(const RowMatrix& in, std::size_t pool, RowMatrix& out, std::vector<std::uint32_t>& argmax);

// Inference-mode class probabilities computed without Eigen products.
std::vector<double> forward_probabilities(const ClassifierModel& model, std::span<const TokenId> ids);

}  // namespace reference

}  // namespace codecat::kernels
