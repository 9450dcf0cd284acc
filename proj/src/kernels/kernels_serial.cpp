#include "segforge/kernels.hpp"

#include <atomic>

namespace segforge::kernels {

namespace serial {

void conv1d_forward(std::span<const double> x, std::span<const double> w, std::span<const double> bias,
                    std::span<double> y, const ConvShape& s) {
    const auto T = static_cast<std::ptrdiff_t>(s.frames);
    for (std::size_t co = 0; co < s.out_channels; ++co) {
        for (std::ptrdiff_t t = 0; t < T; ++t) {
            for (std::size_t l = 0; l < s.lanes; ++l) {
                double acc = bias.empty() ? 0.0 : bias[co];
                for (std::size_t ci = 0; ci < s.in_channels; ++ci) {
                    for (std::size_t k = 0; k < s.kernel; ++k) {
                        const std::ptrdiff_t tt = t + s.tap_offset(k);
                        if (tt < 0 || tt >= T) continue;
                        acc += w[(co * s.in_channels + ci) * s.kernel + k] *
                               x[(ci * s.frames + static_cast<std::size_t>(tt)) * s.lanes + l];
                    }
                }
                y[(co * s.frames + static_cast<std::size_t>(t)) * s.lanes + l] = acc;
            }
        }
    }
}

void conv1d_grad_input(std::span<const double> dy, std::span<const double> w, std::span<double> dx,
                       const ConvShape& s) {
    const auto T = static_cast<std::ptrdiff_t>(s.frames);
    for (std::size_t ci = 0; ci < s.in_channels; ++ci) {
        for (std::ptrdiff_t ti = 0; ti < T; ++ti) {
            for (std::size_t l = 0; l < s.lanes; ++l) {
                double acc = 0.0;
                for (std::size_t co = 0; co < s.out_channels; ++co) {
                    for (std::size_t k = 0; k < s.kernel; ++k) {
                        const std::ptrdiff_t t = ti - s.tap_offset(k);
                        if (t < 0 || t >= T) continue;
                        acc += w[(co * s.in_channels + ci) * s.kernel + k] *
                               dy[(co * s.frames + static_cast<std::size_t>(t)) * s.lanes + l];
                    }
                }
                dx[(ci * s.frames + static_cast<std::size_t>(ti)) * s.lanes + l] = acc;
            }
        }
    }
}

void conv1d_grad_weight(std::span<const double> dy, std::span<const double> x, std::span<double> dw,
                        const ConvShape& s) {
    const auto T = static_cast<std::ptrdiff_t>(s.frames);
    for (std::size_t co = 0; co < s.out_channels; ++co) {
        for (std::size_t ci = 0; ci < s.in_channels; ++ci) {
            for (std::size_t k = 0; k < s.kernel; ++k) {
                const std::ptrdiff_t off = s.tap_offset(k);
                double acc = 0.0;
                for (std::ptrdiff_t t = 0; t < T; ++t) {
                    const std::ptrdiff_t tt = t + off;
                    if (tt < 0 || tt >= T) continue;
                    for (std::size_t l = 0; l < s.lanes; ++l) {
                        acc += dy[(co * s.frames + static_cast<std::size_t>(t)) * s.lanes + l] *
                               x[(ci * s.frames + static_cast<std::size_t>(tt)) * s.lanes + l];
                    }
                }
                dw[(co * s.in_channels + ci) * s.kernel + k] = acc;
            }
        }
    }
}

void conv1d_grad_bias(std::span<const double> dy, std::span<double> db, const ConvShape& s) {
    const std::size_t plane = s.frames * s.lanes;
    for (std::size_t co = 0; co < s.out_channels; ++co) {
        double acc = 0.0;
        for (std::size_t i = 0; i < plane; ++i) acc += dy[co * plane + i];
        db[co] = acc;
    }
}

void graph_forward(std::span<const double> x, std::span<const double> g, std::span<double> y,
                   const GraphShape& s) {
    const std::size_t N = s.joints;
    for (std::size_t r = 0; r < s.rows; ++r) {
        for (std::size_t j = 0; j < N; ++j) {
            double acc = 0.0;
            for (std::size_t i = 0; i < N; ++i) acc += x[r * N + i] * g[i * N + j];
            y[r * N + j] = acc;
        }
    }
}

void graph_grad_input(std::span<const double> dy, std::span<const double> g, std::span<double> dx,
                      const GraphShape& s) {
    const std::size_t N = s.joints;
    for (std::size_t r = 0; r < s.rows; ++r) {
        for (std::size_t i = 0; i < N; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < N; ++j) acc += dy[r * N + j] * g[i * N + j];
            dx[r * N + i] = acc;
        }
    }
}

void graph_grad_matrix(std::span<const double> dy, std::span<const double> x, std::span<double> dg,
                       const GraphShape& s) {
    const std::size_t N = s.joints;
    for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t j = 0; j < N; ++j) {
            double acc = 0.0;
            for (std::size_t r = 0; r < s.rows; ++r) acc += x[r * N + i] * dy[r * N + j];
            dg[i * N + j] = acc;
        }
    }
}

void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c, const MatmulShape& s) {
    for (std::size_t m = 0; m < s.m; ++m) {
        for (std::size_t n = 0; n < s.n; ++n) {
            double acc = 0.0;
            for (std::size_t k = 0; k < s.k; ++k) acc += a[m * s.k + k] * b[k * s.n + n];
            c[m * s.n + n] = acc;
        }
    }
}

void matmul_grad_a(std::span<const double> dc, std::span<const double> b, std::span<double> da,
                   const MatmulShape& s) {
    for (std::size_t m = 0; m < s.m; ++m) {
        for (std::size_t k = 0; k < s.k; ++k) {
            double acc = 0.0;
            for (std::size_t n = 0; n < s.n; ++n) acc += dc[m * s.n + n] * b[k * s.n + n];
            da[m * s.k + k] = acc;
        }
    }
}

void matmul_grad_b(std::span<const double> dc, std::span<const double> a, std::span<double> db,
                   const MatmulShape& s) {
    for (std::size_t k = 0; k < s.k; ++k) {
        for (std::size_t n = 0; n < s.n; ++n) {
            double acc = 0.0;
            for (std::size_t m = 0; m < s.m; ++m) acc += a[m * s.k + k] * dc[m * s.n + n];
            db[k * s.n + n] = acc;
        }
    }
}

}  // namespace serial

namespace {
#ifdef SEGFORGE_HAVE_OPENMP
std::atomic<Backend> g_backend{Backend::parallel};
#else
std::atomic<Backend> g_backend{Backend::serial};
#endif
}  // namespace

Backend active_backend() { return g_backend.load(std::memory_order_relaxed); }
void set_active_backend(Backend b) { g_backend.store(b, std::memory_order_relaxed); }

#define SEGFORGE_DISPATCH(call) \
    (active_backend() == Backend::parallel ? parallel::call : serial::call)

void conv1d_forward(std::span<const double> x, std::span<const double> w, std::span<const double> bias,
                    std::span<double> y, const ConvShape& s) {
    SEGFORGE_DISPATCH(conv1d_forward(x, w, bias, y, s));
}
void conv1d_grad_input(std::span<const double> dy, std::span<const double> w, std::span<double> dx,
                       const ConvShape& s) {
    SEGFORGE_DISPATCH(conv1d_grad_input(dy, w, dx, s));
}
void conv1d_grad_weight(std::span<const double> dy, std::span<const double> x, std::span<double> dw,
                        const ConvShape& s) {
    SEGFORGE_DISPATCH(conv1d_grad_weight(dy, x, dw, s));
}
void conv1d_grad_bias(std::span<const double> dy, std::span<double> db, const ConvShape& s) {
    SEGFORGE_DISPATCH(conv1d_grad_bias(dy, db, s));
}
void graph_forward(std::span<const double> x, std::span<const double> g, std::span<double> y,
                   const GraphShape& s) {
    SEGFORGE_DISPATCH(graph_forward(x, g, y, s));
}
void graph_grad_input(std::span<const double> dy, std::span<const double> g, std::span<double> dx,
                      const GraphShape& s) {
    SEGFORGE_DISPATCH(graph_grad_input(dy, g, dx, s));
}
void graph_grad_matrix(std::span<const double> dy, std::span<const double> x, std::span<double> dg,
                       const GraphShape& s) {
    SEGFORGE_DISPATCH(graph_grad_matrix(dy, x, dg, s));
}
void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c, const MatmulShape& s) {
    SEGFORGE_DISPATCH(matmul(a, b, c, s));
}
void matmul_grad_a(std::span<const double> dc, std::span<const double> b, std::span<double> da,
                   const MatmulShape& s) {
    SEGFORGE_DISPATCH(matmul_grad_a(dc, b, da, s));
}
void matmul_grad_b(std::span<const double> dc, std::span<const double> a, std::span<double> db,
                   const MatmulShape& s) {
    SEGFORGE_DISPATCH(matmul_grad_b(dc, a, db, s));
}

#undef SEGFORGE_DISPATCH

}  // namespace segforge::kernels
