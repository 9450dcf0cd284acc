#pragma once

// Dense compute kernels behind the autodiff ops.
//
// Every kernel overwrites its output. `serial` is the reference; `parallel`
// splits work across output elements with OpenMP. Both add the terms of each
// output element in the same order, so their results are bit-identical.

#include <cstddef>
#include <span>

namespace segforge::kernels {

/// Dilated 1-D convolution over the time axis with symmetric zero padding.
/// Input layout [in_channels, frames, lanes], weights [out, in, kernel],
/// output [out_channels, frames, lanes]. `lanes` is an extra independent axis
/// (joints for the graph blocks, 1 for the temporal stages).
struct ConvShape {
    std::size_t in_channels = 0;
    std::size_t out_channels = 0;
    std::size_t frames = 0;
    std::size_t lanes = 1;
    std::size_t kernel = 1;
    std::size_t dilation = 1;

    std::size_t input_size() const { return in_channels * frames * lanes; }
    std::size_t output_size() const { return out_channels * frames * lanes; }
    std::size_t weight_size() const { return out_channels * in_channels * kernel; }
    /// Frame offset of tap k relative to the output frame.
    std::ptrdiff_t tap_offset(std::size_t k) const {
        return (static_cast<std::ptrdiff_t>(k) - static_cast<std::ptrdiff_t>(kernel / 2)) *
               static_cast<std::ptrdiff_t>(dilation);
    }
};

/// rows x joints times joints x joints: y[r, j] = sum_i x[r, i] g[i, j].
struct GraphShape {
    std::size_t rows = 0;
    std::size_t joints = 0;
};

struct MatmulShape {
    std::size_t m = 0;
    std::size_t k = 0;
    std::size_t n = 0;
};

#define SEGFORGE_KERNEL_DECLS                                                                         \
    void conv1d_forward(std::span<const double> x, std::span<const double> w,                        \
                        std::span<const double> bias, std::span<double> y, const ConvShape& s);       \
    void conv1d_grad_input(std::span<const double> dy, std::span<const double> w,                    \
                           std::span<double> dx, const ConvShape& s);                                 \
    void conv1d_grad_weight(std::span<const double> dy, std::span<const double> x,                   \
                            std::span<double> dw, const ConvShape& s);                                \
    void conv1d_grad_bias(std::span<const double> dy, std::span<double> db, const ConvShape& s);      \
    void graph_forward(std::span<const double> x, std::span<const double> g, std::span<double> y,    \
                       const GraphShape& s);                                                          \
    void graph_grad_input(std::span<const double> dy, std::span<const double> g,                     \
                          std::span<double> dx, const GraphShape& s);                                 \
    void graph_grad_matrix(std::span<const double> dy, std::span<const double> x,                    \
                           std::span<double> dg, const GraphShape& s);                                \
    void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c,           \
                const MatmulShape& s);                                                                \
    void matmul_grad_a(std::span<const double> dc, std::span<const double> b, std::span<double> da,  \
                       const MatmulShape& s);                                                         \
    void matmul_grad_b(std::span<const double> dc, std::span<const double> a, std::span<double> db,  \
                       const MatmulShape& s);

namespace serial {
SEGFORGE_KERNEL_DECLS
}

namespace parallel {
SEGFORGE_KERNEL_DECLS
}

#undef SEGFORGE_KERNEL_DECLS

enum class Backend { serial, parallel };

/// Backend used by the autodiff ops. Defaults to parallel when built with
/// OpenMP.
Backend active_backend();
void set_active_backend(Backend b);

/// Dispatchers to the active backend.
void conv1d_forward(std::span<const double> x, std::span<const double> w, std::span<const double> bias,
                    std::span<double> y, const ConvShape& s);
void conv1d_grad_input(std::span<const double> dy, std::span<const double> w, std::span<double> dx,
                       const ConvShape& s);
void conv1d_grad_weight(std::span<const double> dy, std::span<const double> x, std::span<double> dw,
                        const ConvShape& s);
void conv1d_grad_bias(std::span<const double> dy, std::span<double> db, const ConvShape& s);
void graph_forward(std::span<const double> x, std::span<const double> g, std::span<double> y,
                   const GraphShape& s);
void graph_grad_input(std::span<const double> dy, std::span<const double> g, std::span<double> dx,
                      const GraphShape& s);
void graph_grad_matrix(std::span<const double> dy, std::span<const double> x, std::span<double> dg,
                       const GraphShape& s);
void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c, const MatmulShape& s);
void matmul_grad_a(std::span<const double> dc, std::span<const double> b, std::span<double> da,
                   const MatmulShape& s);
void matmul_grad_b(std::span<const double> dc, std::span<const double> a, std::span<double> db,
                   const MatmulShape& s);

}  // namespace segforge::kernels
