#include "segforge/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "segforge/errors.hpp"
#include "segforge/kernels.hpp"

namespace segforge::ad {

namespace {

bool wants_grad(const Node& self, std::size_t i) {
    return i < self.inputs.size() && self.inputs[i] && self.inputs[i]->requires_grad;
}

Node& input(const Node& self, std::size_t i) { return *self.inputs[i]; }

void require_same_shape(const DiffArray& a, const DiffArray& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw ValidationError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                              shape_string(b.shape()));
    }
}

template <typename Fwd, typename Deriv>
DiffArray unary(const char* name, const DiffArray& x, Fwd fwd, Deriv deriv) {
    std::vector<double> out(x.size());
    const auto xv = x.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(xv[i]);
    return make_op(name, x.shape(), std::move(out), {x}, [deriv](const Node& self) {
        const auto& xin = input(self, 0).value;
        std::vector<double> g(self.grad.size());
        for (std::size_t i = 0; i < g.size(); ++i) g[i] = self.grad[i] * deriv(xin[i], self.value[i]);
        input(self, 0).accumulate_grad(g);
    });
}

}  // namespace

DiffArray add(const DiffArray& a, const DiffArray& b) {
    require_same_shape(a, b, "add");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] + b.values()[i];
    return make_op("add", a.shape(), std::move(out), {a, b}, [](const Node& self) {
        if (wants_grad(self, 0)) input(self, 0).accumulate_grad(self.grad);
        if (wants_grad(self, 1)) input(self, 1).accumulate_grad(self.grad);
    });
}

DiffArray sub(const DiffArray& a, const DiffArray& b) {
    require_same_shape(a, b, "sub");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] - b.values()[i];
    return make_op("sub", a.shape(), std::move(out), {a, b}, [](const Node& self) {
        if (wants_grad(self, 0)) input(self, 0).accumulate_grad(self.grad);
        if (wants_grad(self, 1)) {
            std::vector<double> g(self.grad.size());
            for (std::size_t i = 0; i < g.size(); ++i) g[i] = -self.grad[i];
            input(self, 1).accumulate_grad(g);
        }
    });
}

DiffArray mul(const DiffArray& a, const DiffArray& b) {
    require_same_shape(a, b, "mul");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * b.values()[i];
    return make_op("mul", a.shape(), std::move(out), {a, b}, [](const Node& self) {
        for (std::size_t which = 0; which < 2; ++which) {
            if (!wants_grad(self, which)) continue;
            const auto& other = input(self, 1 - which).value;
            std::vector<double> g(self.grad.size());
            for (std::size_t i = 0; i < g.size(); ++i) g[i] = self.grad[i] * other[i];
            input(self, which).accumulate_grad(g);
        }
    });
}

DiffArray scale(const DiffArray& a, double s) {
    return unary("scale", a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}

DiffArray relu(const DiffArray& x) {
    return unary("relu", x, [](double v) { return v > 0.0 ? v : 0.0; },
                 [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

DiffArray log(const DiffArray& x) {
    return unary("log", x, [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

DiffArray clamp_max(const DiffArray& x, double hi) {
    return unary("clamp_max", x, [hi](double v) { return std::min(v, hi); },
                 [hi](double v, double) { return v < hi ? 1.0 : 0.0; });
}

DiffArray clamp_min(const DiffArray& x, double lo) {
    return unary("clamp_min", x, [lo](double v) { return std::max(v, lo); },
                 [lo](double v, double) { return v > lo ? 1.0 : 0.0; });
}

DiffArray select(std::span<const std::uint8_t> cond, const DiffArray& a, const DiffArray& b) {
    require_same_shape(a, b, "select");
    if (cond.size() != a.size()) {
        throw ValidationError("select: condition has " + std::to_string(cond.size()) + " entries for " +
                              std::to_string(a.size()) + " values");
    }
    std::vector<std::uint8_t> mask(cond.begin(), cond.end());
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = mask[i] ? a.values()[i] : b.values()[i];
    return make_op("select", a.shape(), std::move(out), {a, b}, [mask](const Node& self) {
        for (std::size_t which = 0; which < 2; ++which) {
            if (!wants_grad(self, which)) continue;
            std::vector<double> g(self.grad.size(), 0.0);
            for (std::size_t i = 0; i < g.size(); ++i) {
                if ((mask[i] != 0) == (which == 0)) g[i] = self.grad[i];
            }
            input(self, which).accumulate_grad(g);
        }
    });
}

DiffArray add_channel_bias(const DiffArray& x, const DiffArray& b) {
    if (x.rank() < 1 || b.rank() != 1 || b.dim(0) != x.dim(0)) {
        throw ValidationError("add_channel_bias: bias " + shape_string(b.shape()) + " does not match " +
                              shape_string(x.shape()));
    }
    const std::size_t C = x.dim(0);
    const std::size_t plane = x.size() / C;
    std::vector<double> out(x.values().begin(), x.values().end());
    for (std::size_t c = 0; c < C; ++c) {
        for (std::size_t i = 0; i < plane; ++i) out[c * plane + i] += b.values()[c];
    }
    return make_op("add_channel_bias", x.shape(), std::move(out), {x, b}, [C, plane](const Node& self) {
        if (wants_grad(self, 0)) input(self, 0).accumulate_grad(self.grad);
        if (wants_grad(self, 1)) {
            std::vector<double> g(C, 0.0);
            for (std::size_t c = 0; c < C; ++c) {
                for (std::size_t i = 0; i < plane; ++i) g[c] += self.grad[c * plane + i];
            }
            input(self, 1).accumulate_grad(g);
        }
    });
}

DiffArray matmul(const DiffArray& a, const DiffArray& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
        throw ValidationError("matmul: incompatible shapes " + shape_string(a.shape()) + " x " +
                              shape_string(b.shape()));
    }
    const kernels::MatmulShape s{a.dim(0), a.dim(1), b.dim(1)};
    std::vector<double> out(s.m * s.n);
    kernels::matmul(a.values(), b.values(), out, s);
    return make_op("matmul", {s.m, s.n}, std::move(out), {a, b}, [s](const Node& self) {
        if (wants_grad(self, 0)) {
            std::vector<double> g(s.m * s.k);
            kernels::matmul_grad_a(self.grad, input(self, 1).value, g, s);
            input(self, 0).accumulate_grad(g);
        }
        if (wants_grad(self, 1)) {
            std::vector<double> g(s.k * s.n);
            kernels::matmul_grad_b(self.grad, input(self, 0).value, g, s);
            input(self, 1).accumulate_grad(g);
        }
    });
}

DiffArray conv1d_dilated(const DiffArray& x, const DiffArray& w, const DiffArray& bias, std::size_t dilation) {
    if (x.rank() != 2 && x.rank() != 3) {
        throw ValidationError("conv1d: input must be [C, T] or [C, T, lanes], got " + shape_string(x.shape()));
    }
    if (w.rank() != 3 || w.dim(1) != x.dim(0)) {
        throw ValidationError("conv1d: weights " + shape_string(w.shape()) + " do not match input " +
                              shape_string(x.shape()));
    }
    if (w.dim(2) % 2 == 0) {
        throw ValidationError("conv1d: kernel size must be odd for symmetric padding");
    }
    if (dilation < 1) {
        throw ValidationError("conv1d: dilation must be >= 1");
    }
    if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != w.dim(0))) {
        throw ValidationError("conv1d: bias " + shape_string(bias.shape()) + " does not match weights");
    }
    kernels::ConvShape s;
    s.in_channels = x.dim(0);
    s.out_channels = w.dim(0);
    s.frames = x.dim(1);
    s.lanes = x.rank() == 3 ? x.dim(2) : 1;
    s.kernel = w.dim(2);
    s.dilation = dilation;

    std::vector<double> out(s.output_size());
    kernels::conv1d_forward(x.values(), w.values(),
                            bias.defined() ? bias.values() : std::span<const double>{}, out, s);
    Shape shape = x.shape();
    shape[0] = s.out_channels;
    return make_op("conv1d_dilated", std::move(shape), std::move(out), {x, w, bias}, [s](const Node& self) {
        if (wants_grad(self, 0)) {
            std::vector<double> g(s.input_size());
            kernels::conv1d_grad_input(self.grad, input(self, 1).value, g, s);
            input(self, 0).accumulate_grad(g);
        }
        if (wants_grad(self, 1)) {
            std::vector<double> g(s.weight_size());
            kernels::conv1d_grad_weight(self.grad, input(self, 0).value, g, s);
            input(self, 1).accumulate_grad(g);
        }
        if (wants_grad(self, 2)) {
            std::vector<double> g(s.out_channels);
            kernels::conv1d_grad_bias(self.grad, g, s);
            input(self, 2).accumulate_grad(g);
        }
    });
}

DiffArray graph_propagate(const DiffArray& x, const DiffArray& adjacency, const DiffArray& mask) {
    if (x.rank() < 1) {
        throw ValidationError("graph_propagate: input must have a joint axis");
    }
    const std::size_t N = x.shape().back();
    const Shape square{N, N};
    if (adjacency.shape() != square || mask.shape() != square) {
        throw ValidationError("graph_propagate: adjacency/mask must be " + shape_string(square) + ", got " +
                              shape_string(adjacency.shape()) + " and " + shape_string(mask.shape()));
    }
    const kernels::GraphShape s{x.size() / N, N};
    std::vector<double> g(N * N);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = adjacency.values()[i] * mask.values()[i];
    std::vector<double> out(x.size());
    kernels::graph_forward(x.values(), g, out, s);
    return make_op("graph_propagate", x.shape(), std::move(out), {x, adjacency, mask},
                   [s, g = std::move(g)](const Node& self) {
                       if (wants_grad(self, 0)) {
                           std::vector<double> dx(s.rows * s.joints);
                           kernels::graph_grad_input(self.grad, g, dx, s);
                           input(self, 0).accumulate_grad(dx);
                       }
                       if (wants_grad(self, 1) || wants_grad(self, 2)) {
                           std::vector<double> dg(s.joints * s.joints);
                           kernels::graph_grad_matrix(self.grad, input(self, 0).value, dg, s);
                           for (std::size_t which = 1; which <= 2; ++which) {
                               if (!wants_grad(self, which)) continue;
                               const auto& other = input(self, which == 1 ? 2 : 1).value;
                               std::vector<double> d(dg.size());
                               for (std::size_t i = 0; i < d.size(); ++i) d[i] = dg[i] * other[i];
                               input(self, which).accumulate_grad(d);
                           }
                       }
                   });
}

DiffArray softmax_rows(const DiffArray& x) {
    if (x.rank() != 2) {
        throw ValidationError("softmax_rows: expected rank 2, got " + shape_string(x.shape()));
    }
    const std::size_t R = x.dim(0), K = x.dim(1);
    std::vector<double> out(x.size());
    for (std::size_t r = 0; r < R; ++r) {
        const double* xr = x.values().data() + r * K;
        double* yr = out.data() + r * K;
        const double mx = *std::max_element(xr, xr + K);
        double z = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            yr[k] = std::exp(xr[k] - mx);
            z += yr[k];
        }
        for (std::size_t k = 0; k < K; ++k) yr[k] /= z;
    }
    return make_op("softmax_rows", x.shape(), std::move(out), {x}, [R, K](const Node& self) {
        std::vector<double> g(R * K);
        for (std::size_t r = 0; r < R; ++r) {
            double dot = 0.0;
            for (std::size_t k = 0; k < K; ++k) dot += self.grad[r * K + k] * self.value[r * K + k];
            for (std::size_t k = 0; k < K; ++k) {
                g[r * K + k] = self.value[r * K + k] * (self.grad[r * K + k] - dot);
            }
        }
        input(self, 0).accumulate_grad(g);
    });
}

DiffArray sum(const DiffArray& x) {
    double s = 0.0;
    for (double v : x.values()) s += v;
    return make_op("sum", {}, {s}, {x}, [](const Node& self) {
        auto& in = input(self, 0);
        std::vector<double> g(in.value.size(), self.grad[0]);
        in.accumulate_grad(g);
    });
}

DiffArray mean(const DiffArray& x) {
    double s = 0.0;
    for (double v : x.values()) s += v;
    const double n = static_cast<double>(x.size());
    return make_op("mean", {}, {s / n}, {x}, [n](const Node& self) {
        auto& in = input(self, 0);
        std::vector<double> g(in.value.size(), self.grad[0] / n);
        in.accumulate_grad(g);
    });
}

DiffArray mean_last_axis(const DiffArray& x) {
    if (x.rank() < 1 || x.shape().back() == 0) {
        throw ValidationError("mean_last_axis: empty last axis");
    }
    const std::size_t N = x.shape().back();
    const std::size_t R = x.size() / N;
    std::vector<double> out(R, 0.0);
    for (std::size_t r = 0; r < R; ++r) {
        double s = 0.0;
        for (std::size_t j = 0; j < N; ++j) s += x.values()[r * N + j];
        out[r] = s / static_cast<double>(N);
    }
    Shape shape(x.shape().begin(), x.shape().end() - 1);
    return make_op("mean_last_axis", std::move(shape), std::move(out), {x}, [R, N](const Node& self) {
        std::vector<double> g(R * N);
        for (std::size_t r = 0; r < R; ++r) {
            const double v = self.grad[r] / static_cast<double>(N);
            for (std::size_t j = 0; j < N; ++j) g[r * N + j] = v;
        }
        input(self, 0).accumulate_grad(g);
    });
}

DiffArray reshape(const DiffArray& x, Shape shape) {
    if (element_count(shape) != x.size()) {
        throw ValidationError("reshape: cannot view " + shape_string(x.shape()) + " as " + shape_string(shape));
    }
    std::vector<double> out(x.values().begin(), x.values().end());
    return make_op("reshape", std::move(shape), std::move(out), {x},
                   [](const Node& self) { input(self, 0).accumulate_grad(self.grad); });
}

DiffArray transpose(const DiffArray& x) {
    if (x.rank() != 2) {
        throw ValidationError("transpose: expected rank 2, got " + shape_string(x.shape()));
    }
    const std::size_t R = x.dim(0), C = x.dim(1);
    std::vector<double> out(x.size());
    for (std::size_t r = 0; r < R; ++r) {
        for (std::size_t c = 0; c < C; ++c) out[c * R + r] = x.values()[r * C + c];
    }
    return make_op("transpose", {C, R}, std::move(out), {x}, [R, C](const Node& self) {
        std::vector<double> g(R * C);
        for (std::size_t r = 0; r < R; ++r) {
            for (std::size_t c = 0; c < C; ++c) g[r * C + c] = self.grad[c * R + r];
        }
        input(self, 0).accumulate_grad(g);
    });
}

DiffArray narrow(const DiffArray& x, std::size_t start, std::size_t count) {
    if (x.rank() < 1 || start + count > x.dim(0) || count == 0) {
        throw ValidationError("narrow: rows [" + std::to_string(start) + ", " + std::to_string(start + count) +
                              ") outside " + shape_string(x.shape()));
    }
    const std::size_t plane = x.size() / x.dim(0);
    std::vector<double> out(x.values().begin() + static_cast<std::ptrdiff_t>(start * plane),
                            x.values().begin() + static_cast<std::ptrdiff_t>((start + count) * plane));
    Shape shape = x.shape();
    shape[0] = count;
    return make_op("narrow", std::move(shape), std::move(out), {x}, [start, plane](const Node& self) {
        auto& in = input(self, 0);
        auto& g = in.ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) g[start * plane + i] += self.grad[i];
    });
}

DiffArray batchnorm(const DiffArray& x, const DiffArray& gamma, const DiffArray& beta, BatchNormState& state,
                    BatchNormMode mode) {
    if (x.rank() < 2) {
        throw ValidationError("batchnorm: expected [C, ...], got " + shape_string(x.shape()));
    }
    const std::size_t C = x.dim(0);
    const std::size_t M = x.size() / C;
    if (gamma.shape() != Shape{C} || beta.shape() != Shape{C} || state.running_mean.size() != C ||
        state.running_var.size() != C) {
        throw ValidationError("batchnorm: parameter/state size does not match " + std::to_string(C) + " channels");
    }
    if (mode == BatchNormMode::train && M < 2) {
        throw ValidationError("batchnorm: training mode needs at least 2 values per channel");
    }

    std::vector<double> xhat(x.size()), inv_std(C), out(x.size());
    const auto xv = x.values();
    for (std::size_t c = 0; c < C; ++c) {
        double mu, var;
        if (mode == BatchNormMode::train) {
            double s = 0.0;
            for (std::size_t i = 0; i < M; ++i) s += xv[c * M + i];
            mu = s / static_cast<double>(M);
            double ss = 0.0;
            for (std::size_t i = 0; i < M; ++i) {
                const double d = xv[c * M + i] - mu;
                ss += d * d;
            }
            var = ss / static_cast<double>(M);
            const double unbiased = ss / static_cast<double>(M - 1);
            state.running_mean[c] = (1.0 - state.momentum) * state.running_mean[c] + state.momentum * mu;
            state.running_var[c] = (1.0 - state.momentum) * state.running_var[c] + state.momentum * unbiased;
        } else {
            mu = state.running_mean[c];
            var = state.running_var[c];
        }
        inv_std[c] = 1.0 / std::sqrt(var + state.eps);
        for (std::size_t i = 0; i < M; ++i) {
            const std::size_t k = c * M + i;
            xhat[k] = (xv[k] - mu) * inv_std[c];
            out[k] = gamma.values()[c] * xhat[k] + beta.values()[c];
        }
    }

    const bool train = mode == BatchNormMode::train;
    return make_op("batchnorm", x.shape(), std::move(out), {x, gamma, beta},
                   [C, M, train, xhat = std::move(xhat), inv_std = std::move(inv_std)](const Node& self) {
                       const auto& gam = input(self, 1).value;
                       std::vector<double> dgamma(C, 0.0), dbeta(C, 0.0);
                       for (std::size_t c = 0; c < C; ++c) {
                           for (std::size_t i = 0; i < M; ++i) {
                               dgamma[c] += self.grad[c * M + i] * xhat[c * M + i];
                               dbeta[c] += self.grad[c * M + i];
                           }
                       }
                       if (wants_grad(self, 0)) {
                           std::vector<double> dx(C * M);
                           const double m = static_cast<double>(M);
                           for (std::size_t c = 0; c < C; ++c) {
                               const double k = gam[c] * inv_std[c];
                               for (std::size_t i = 0; i < M; ++i) {
                                   const std::size_t j = c * M + i;
                                   dx[j] = train ? k * (self.grad[j] - dbeta[c] / m - xhat[j] * dgamma[c] / m)
                                                 : k * self.grad[j];
                               }
                           }
                           input(self, 0).accumulate_grad(dx);
                       }
                       if (wants_grad(self, 1)) input(self, 1).accumulate_grad(dgamma);
                       if (wants_grad(self, 2)) input(self, 2).accumulate_grad(dbeta);
                   });
}

}  // namespace segforge::ad
