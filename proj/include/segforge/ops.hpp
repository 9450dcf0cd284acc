#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "segforge/autodiff.hpp"

namespace segforge::ad {

// Elementwise, same shape.
DiffArray add(const DiffArray& a, const DiffArray& b);
DiffArray sub(const DiffArray& a, const DiffArray& b);
DiffArray mul(const DiffArray& a, const DiffArray& b);
DiffArray scale(const DiffArray& a, double s);
DiffArray relu(const DiffArray& x);
DiffArray log(const DiffArray& x);
DiffArray clamp_max(const DiffArray& x, double hi);
DiffArray clamp_min(const DiffArray& x, double lo);
/// out[i] = cond[i] ? a[i] : b[i].
DiffArray select(std::span<const std::uint8_t> cond, const DiffArray& a, const DiffArray& b);

/// x has shape [C, ...]; adds b[c] to every element of channel c.
DiffArray add_channel_bias(const DiffArray& x, const DiffArray& b);

/// [m, k] x [k, n].
DiffArray matmul(const DiffArray& a, const DiffArray& b);

/// Dilated temporal convolution with symmetric zero padding (odd kernels
/// only), so the frame count is preserved.
/// x: [C_in, T] or [C_in, T, lanes]; w: [C_out, C_in, k]; bias: [C_out] or
/// undefined. Output keeps x's rank.
DiffArray conv1d_dilated(const DiffArray& x, const DiffArray& w, const DiffArray& bias, std::size_t dilation);

/// Graph propagation over the trailing joint axis with a masked adjacency:
/// out[..., j] = sum_i x[..., i] * adjacency[i, j] * mask[i, j].
DiffArray graph_propagate(const DiffArray& x, const DiffArray& adjacency, const DiffArray& mask);

/// Softmax over the last axis of a rank-2 array.
DiffArray softmax_rows(const DiffArray& x);

DiffArray sum(const DiffArray& x);
DiffArray mean(const DiffArray& x);
/// Mean over the last axis.
DiffArray mean_last_axis(const DiffArray& x);

DiffArray reshape(const DiffArray& x, Shape shape);
/// Rank-2 transpose.
DiffArray transpose(const DiffArray& x);
/// Rows [start, start + count) along the leading axis.
DiffArray narrow(const DiffArray& x, std::size_t start, std::size_t count);

enum class BatchNormMode { train, eval };

/// Running statistics for one batchnorm layer.
struct BatchNormState {
    std::vector<double> running_mean;
    std::vector<double> running_var;
    double momentum = 0.1;
    double eps = 1e-5;

    explicit BatchNormState(std::size_t channels = 0)
        : running_mean(channels, 0.0), running_var(channels, 1.0) {}
};

/// Per-channel normalization of x: [C, ...] over all trailing axes, then
/// gamma * xhat + beta. Train mode uses batch statistics and updates `state`
/// (running variance uses the unbiased estimate); eval mode uses the running
/// statistics.
DiffArray batchnorm(const DiffArray& x, const DiffArray& gamma, const DiffArray& beta,
                    BatchNormState& state, BatchNormMode mode);

}  // namespace segforge::ad
