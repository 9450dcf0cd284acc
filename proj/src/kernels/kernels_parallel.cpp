#include <algorithm>

#include "segforge/kernels.hpp"

// Loop orders here are interchanged for contiguous inner loops, but each
// output element still receives its terms in the serial order.

namespace segforge::kernels::parallel {

namespace {

// Valid output-frame range [lo, hi) for a tap offset.
inline void tap_range(std::ptrdiff_t off, std::ptrdiff_t T, std::ptrdiff_t& lo, std::ptrdiff_t& hi) {
    lo = std::max<std::ptrdiff_t>(0, -off);
    hi = std::min<std::ptrdiff_t>(T, T - off);
}

}  // namespace

void conv1d_forward(std::span<const double> x, std::span<const double> w, std::span<const double> bias,
                    std::span<double> y, const ConvShape& s) {
    const auto T = static_cast<std::ptrdiff_t>(s.frames);
    const std::size_t L = s.lanes;
    const auto C_out = static_cast<std::ptrdiff_t>(s.out_channels);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t co = 0; co < C_out; ++co) {
        double* yrow = y.data() + static_cast<std::size_t>(co) * s.frames * L;
        std::fill(yrow, yrow + s.frames * L, bias.empty() ? 0.0 : bias[static_cast<std::size_t>(co)]);
        for (std::size_t ci = 0; ci < s.in_channels; ++ci) {
            const double* xrow = x.data() + ci * s.frames * L;
            for (std::size_t k = 0; k < s.kernel; ++k) {
                const double wv = w[(static_cast<std::size_t>(co) * s.in_channels + ci) * s.kernel + k];
                const std::ptrdiff_t off = s.tap_offset(k);
                std::ptrdiff_t lo, hi;
                tap_range(off, T, lo, hi);
                for (std::ptrdiff_t t = lo; t < hi; ++t) {
                    double* yp = yrow + static_cast<std::size_t>(t) * L;
                    const double* xp = xrow + static_cast<std::size_t>(t + off) * L;
                    for (std::size_t l = 0; l < L; ++l) yp[l] += wv * xp[l];
                }
            }
        }
    }
}

void conv1d_grad_input(std::span<const double> dy, std::span<const double> w, std::span<double> dx,
                       const ConvShape& s) {
    const auto T = static_cast<std::ptrdiff_t>(s.frames);
    const std::size_t L = s.lanes;
    const auto C_in = static_cast<std::ptrdiff_t>(s.in_channels);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ci = 0; ci < C_in; ++ci) {
        double* dxrow = dx.data() + static_cast<std::size_t>(ci) * s.frames * L;
        std::fill(dxrow, dxrow + s.frames * L, 0.0);
        for (std::size_t co = 0; co < s.out_channels; ++co) {
            const double* dyrow = dy.data() + co * s.frames * L;
            for (std::size_t k = 0; k < s.kernel; ++k) {
                const double wv = w[(co * s.in_channels + static_cast<std::size_t>(ci)) * s.kernel + k];
                const std::ptrdiff_t off = s.tap_offset(k);
                // Input frame ti receives dy at t = ti - off.
                std::ptrdiff_t lo, hi;
                tap_range(-off, T, lo, hi);
                for (std::ptrdiff_t ti = lo; ti < hi; ++ti) {
                    double* dp = dxrow + static_cast<std::size_t>(ti) * L;
                    const double* gp = dyrow + static_cast<std::size_t>(ti - off) * L;
                    for (std::size_t l = 0; l < L; ++l) dp[l] += wv * gp[l];
                }
            }
        }
    }
}

void conv1d_grad_weight(std::span<const double> dy, std::span<const double> x, std::span<double> dw,
                        const ConvShape& s) {
    const auto T = static_cast<std::ptrdiff_t>(s.frames);
    const std::size_t L = s.lanes;
    const auto C_out = static_cast<std::ptrdiff_t>(s.out_channels);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t co = 0; co < C_out; ++co) {
        const double* dyrow = dy.data() + static_cast<std::size_t>(co) * s.frames * L;
        for (std::size_t ci = 0; ci < s.in_channels; ++ci) {
            const double* xrow = x.data() + ci * s.frames * L;
            for (std::size_t k = 0; k < s.kernel; ++k) {
                const std::ptrdiff_t off = s.tap_offset(k);
                std::ptrdiff_t lo, hi;
                tap_range(off, T, lo, hi);
                double acc = 0.0;
                for (std::ptrdiff_t t = lo; t < hi; ++t) {
                    const double* gp = dyrow + static_cast<std::size_t>(t) * L;
                    const double* xp = xrow + static_cast<std::size_t>(t + off) * L;
                    for (std::size_t l = 0; l < L; ++l) acc += gp[l] * xp[l];
                }
                dw[(static_cast<std::size_t>(co) * s.in_channels + ci) * s.kernel + k] = acc;
            }
        }
    }
}

void conv1d_grad_bias(std::span<const double> dy, std::span<double> db, const ConvShape& s) {
    const std::size_t plane = s.frames * s.lanes;
    const auto C_out = static_cast<std::ptrdiff_t>(s.out_channels);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t co = 0; co < C_out; ++co) {
        double acc = 0.0;
        const double* p = dy.data() + static_cast<std::size_t>(co) * plane;
        for (std::size_t i = 0; i < plane; ++i) acc += p[i];
        db[static_cast<std::size_t>(co)] = acc;
    }
}

void graph_forward(std::span<const double> x, std::span<const double> g, std::span<double> y,
                   const GraphShape& s) {
    const std::size_t N = s.joints;
    const auto R = static_cast<std::ptrdiff_t>(s.rows);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t r = 0; r < R; ++r) {
        double* yr = y.data() + static_cast<std::size_t>(r) * N;
        const double* xr = x.data() + static_cast<std::size_t>(r) * N;
        std::fill(yr, yr + N, 0.0);
        for (std::size_t i = 0; i < N; ++i) {
            const double xv = xr[i];
            const double* gi = g.data() + i * N;
            for (std::size_t j = 0; j < N; ++j) yr[j] += xv * gi[j];
        }
    }
}

void graph_grad_input(std::span<const double> dy, std::span<const double> g, std::span<double> dx,
                      const GraphShape& s) {
    const std::size_t N = s.joints;
    const auto R = static_cast<std::ptrdiff_t>(s.rows);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t r = 0; r < R; ++r) {
        const double* dyr = dy.data() + static_cast<std::size_t>(r) * N;
        for (std::size_t i = 0; i < N; ++i) {
            const double* gi = g.data() + i * N;
            double acc = 0.0;
            for (std::size_t j = 0; j < N; ++j) acc += dyr[j] * gi[j];
            dx[static_cast<std::size_t>(r) * N + i] = acc;
        }
    }
}

void graph_grad_matrix(std::span<const double> dy, std::span<const double> x, std::span<double> dg,
                       const GraphShape& s) {
    const std::size_t N = s.joints;
    const auto NN = static_cast<std::ptrdiff_t>(N);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < NN; ++i) {
        double* dgi = dg.data() + static_cast<std::size_t>(i) * N;
        std::fill(dgi, dgi + N, 0.0);
        for (std::size_t r = 0; r < s.rows; ++r) {
            const double xv = x[r * N + static_cast<std::size_t>(i)];
            const double* dyr = dy.data() + r * N;
            for (std::size_t j = 0; j < N; ++j) dgi[j] += xv * dyr[j];
        }
    }
}

void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c, const MatmulShape& s) {
    const auto M = static_cast<std::ptrdiff_t>(s.m);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t m = 0; m < M; ++m) {
        double* cr = c.data() + static_cast<std::size_t>(m) * s.n;
        std::fill(cr, cr + s.n, 0.0);
        for (std::size_t k = 0; k < s.k; ++k) {
            const double av = a[static_cast<std::size_t>(m) * s.k + k];
            const double* br = b.data() + k * s.n;
            for (std::size_t n = 0; n < s.n; ++n) cr[n] += av * br[n];
        }
    }
}

void matmul_grad_a(std::span<const double> dc, std::span<const double> b, std::span<double> da,
                   const MatmulShape& s) {
    const auto M = static_cast<std::ptrdiff_t>(s.m);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t m = 0; m < M; ++m) {
        const double* dcr = dc.data() + static_cast<std::size_t>(m) * s.n;
        for (std::size_t k = 0; k < s.k; ++k) {
            const double* br = b.data() + k * s.n;
            double acc = 0.0;
            for (std::size_t n = 0; n < s.n; ++n) acc += dcr[n] * br[n];
            da[static_cast<std::size_t>(m) * s.k + k] = acc;
        }
    }
}

void matmul_grad_b(std::span<const double> dc, std::span<const double> a, std::span<double> db,
                   const MatmulShape& s) {
    const auto K = static_cast<std::ptrdiff_t>(s.k);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < K; ++k) {
        double* dbr = db.data() + static_cast<std::size_t>(k) * s.n;
        std::fill(dbr, dbr + s.n, 0.0);
        for (std::size_t m = 0; m < s.m; ++m) {
            const double av = a[m * s.k + static_cast<std::size_t>(k)];
            const double* dcr = dc.data() + m * s.n;
            for (std::size_t n = 0; n < s.n; ++n) dbr[n] += av * dcr[n];
        }
    }
}

}  // namespace segforge::kernels::parallel
