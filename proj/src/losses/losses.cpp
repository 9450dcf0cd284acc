#include "segforge/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "segforge/errors.hpp"
#include "segforge/ops.hpp"

namespace segforge {

using ad::DiffArray;
using ad::Node;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    const double hi = std::max(a, b);
    return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

double floored(double p) { return std::max(p, kProbFloor); }

void require_table(const DiffArray& probs, const char* what) {
    if (!probs.defined() || probs.rank() != 2) {
        throw ValidationError(std::string(what) + ": expected a [T, L] table");
    }
    if (probs.dim(0) == 0 || probs.dim(1) == 0) {
        throw ValidationError(std::string(what) + ": empty table");
    }
}

}  // namespace

void LossConfig::validate() const {
    if (!(tau > 0.0)) throw ValidationError("loss tau must be > 0");
    if (!(lambda >= 0.0)) throw ValidationError("loss lambda must be >= 0");
    if (!(mu >= 0.0)) throw ValidationError("loss mu must be >= 0");
}

CtcTarget CtcTarget::from_sequence(std::vector<int> z, int blank) {
    if (z.empty()) throw ValidationError("ctc target is empty");
    for (std::size_t i = 0; i < z.size(); ++i) {
        if (z[i] < 0 || z[i] == blank) throw ValidationError("ctc target holds an invalid symbol");
        if (i && z[i] == z[i - 1]) throw ValidationError("ctc target has repeated adjacent labels");
    }
    CtcTarget t;
    t.blank = blank;
    t.z_prime.reserve(2 * z.size() + 1);
    t.z_prime.push_back(blank);
    for (int s : z) {
        t.z_prime.push_back(s);
        t.z_prime.push_back(blank);
    }
    t.z = std::move(z);
    return t;
}

CtcTarget CtcTarget::from_labels(std::span<const int> labels, int blank, std::optional<int> drop_class) {
    std::vector<int> z;
    for (int l : labels) {
        if (drop_class && l == *drop_class) continue;
        if (z.empty() || z.back() != l) z.push_back(l);
    }
    if (z.empty()) {
        throw ValidationError("ctc target is empty after dropping class " + std::to_string(drop_class.value_or(-1)));
    }
    return from_sequence(std::move(z), blank);
}

std::size_t CtcTarget::min_frames() const {
    std::size_t n = z.size();
    for (std::size_t i = 1; i < z.size(); ++i) n += z[i] == z[i - 1];
    return n;
}

DiffArray ce_loss(const DiffArray& probs, std::span<const int> labels) {
    require_table(probs, "ce_loss");
    const std::size_t T = probs.dim(0), L = probs.dim(1);
    if (labels.size() != T) {
        throw ValidationError("ce_loss: " + std::to_string(labels.size()) + " labels for " + std::to_string(T) +
                              " frames");
    }
    for (int l : labels) {
        if (l < 0 || static_cast<std::size_t>(l) >= L) throw ValidationError("ce_loss: label out of range");
    }
    const auto p = probs.values();
    double s = 0.0;
    for (std::size_t t = 0; t < T; ++t) s -= std::log(floored(p[t * L + labels[t]]));
    std::vector<int> lab(labels.begin(), labels.end());
    return ad::make_op("ce_loss", {}, {s / static_cast<double>(T)}, {probs}, [T, L, lab](const Node& self) {
        auto& in = *self.inputs[0];
        std::vector<double> g(T * L, 0.0);
        const double scale = self.grad[0] / static_cast<double>(T);
        for (std::size_t t = 0; t < T; ++t) {
            const double y = in.value[t * L + lab[t]];
            if (y > kProbFloor) g[t * L + lab[t]] = -scale / y;
        }
        in.accumulate_grad(g);
    });
}

DiffArray tmse_loss_pair(const DiffArray& current, const DiffArray& previous, double tau) {
    require_table(current, "tmse_loss");
    if (current.shape() != previous.shape()) throw ValidationError("tmse_loss: table shapes differ");
    if (!(tau > 0.0)) throw ValidationError("tmse_loss: tau must be > 0");
    const std::size_t T = current.dim(0), L = current.dim(1);
    if (T < 2) throw ValidationError("tmse_loss needs at least 2 frames");
    const double norm = static_cast<double>(T * L);

    // delta[(t-1)*L + l] for t = 1..T-1
    std::vector<double> delta((T - 1) * L);
    const auto cur = current.values();
    const auto prev = previous.values();
    double s = 0.0;
    for (std::size_t t = 1; t < T; ++t) {
        for (std::size_t l = 0; l < L; ++l) {
            const double d = std::log(floored(cur[t * L + l])) - std::log(floored(prev[(t - 1) * L + l]));
            delta[(t - 1) * L + l] = d;
            const double c = std::min(std::abs(d), tau);
            s += c * c;
        }
    }
    return ad::make_op(
        "tmse_loss", {}, {s / norm}, {current, previous}, [T, L, tau, norm, delta](const Node& self) {
            const double scale = 2.0 * self.grad[0] / norm;
            for (std::size_t which = 0; which < 2; ++which) {
                if (!self.inputs[which] || !self.inputs[which]->requires_grad) continue;
                auto& in = *self.inputs[which];
                std::vector<double> g(T * L, 0.0);
                for (std::size_t t = 1; t < T; ++t) {
                    for (std::size_t l = 0; l < L; ++l) {
                        const double d = delta[(t - 1) * L + l];
                        if (std::abs(d) >= tau) continue;
                        const std::size_t row = which == 0 ? t : t - 1;
                        const double y = in.value[row * L + l];
                        if (y <= kProbFloor) continue;
                        g[row * L + l] += (which == 0 ? 1.0 : -1.0) * scale * d / y;
                    }
                }
                in.accumulate_grad(g);
            }
        });
}

DiffArray tmse_loss(const DiffArray& probs, double tau, bool stop_gradient) {
    return tmse_loss_pair(probs, stop_gradient ? probs.detach() : probs, tau);
}

CtcLattice ctc_forward_backward(std::span<const double> probs, std::size_t frames, std::size_t symbols,
                                const CtcTarget& target) {
    const auto& zp = target.z_prime;
    if (target.z.empty() || zp.size() != 2 * target.z.size() + 1) {
        throw ValidationError("ctc: malformed target");
    }
    if (probs.size() != frames * symbols) throw ValidationError("ctc: table size mismatch");
    for (int s : zp) {
        if (s < 0 || static_cast<std::size_t>(s) >= symbols) throw ValidationError("ctc: symbol out of range");
    }
    if (frames < target.min_frames()) {
        throw ValidationError("ctc: " + std::to_string(frames) + " frames cannot emit a target of length " +
                              std::to_string(target.z.size()));
    }
    const std::size_t T = frames, U = zp.size();
    auto ly = [&](std::size_t t, std::size_t u) { return std::log(floored(probs[t * symbols + zp[u]])); };
    auto can_skip = [&](std::size_t u) { return u >= 2 && zp[u] != target.blank && zp[u] != zp[u - 2]; };

    CtcLattice lat;
    lat.frames = T;
    lat.states = U;
    lat.log_alpha.assign(T * U, kNegInf);
    lat.log_beta.assign(T * U, kNegInf);

    lat.log_alpha[0] = ly(0, 0);
    if (U > 1) lat.log_alpha[1] = ly(0, 1);
    for (std::size_t t = 1; t < T; ++t) {
        for (std::size_t u = 0; u < U; ++u) {
            double a = lat.la(t - 1, u);
            if (u >= 1) a = log_add(a, lat.la(t - 1, u - 1));
            if (can_skip(u)) a = log_add(a, lat.la(t - 1, u - 2));
            if (a != kNegInf) lat.log_alpha[t * U + u] = a + ly(t, u);
        }
    }

    lat.log_beta[(T - 1) * U + U - 1] = 0.0;
    lat.log_beta[(T - 1) * U + U - 2] = 0.0;
    for (std::size_t t = T - 1; t-- > 0;) {
        for (std::size_t u = 0; u < U; ++u) {
            double b = lat.lb(t + 1, u) + ly(t + 1, u);
            if (u + 1 < U) b = log_add(b, lat.lb(t + 1, u + 1) + ly(t + 1, u + 1));
            if (u + 2 < U && can_skip(u + 2)) b = log_add(b, lat.lb(t + 1, u + 2) + ly(t + 1, u + 2));
            lat.log_beta[t * U + u] = b;
        }
    }

    lat.log_p = log_add(lat.la(T - 1, U - 1), lat.la(T - 1, U - 2));
    if (lat.log_p == kNegInf) throw NumericError("ctc: target has zero probability");
    return lat;
}

DiffArray ctc_loss(const DiffArray& probs, const CtcTarget& target) {
    require_table(probs, "ctc_loss");
    const std::size_t T = probs.dim(0), K = probs.dim(1);
    if (target.blank < 0 || static_cast<std::size_t>(target.blank) != K - 1) {
        throw ValidationError("ctc_loss: blank must be the last column");
    }
    auto lat = ctc_forward_backward(probs.values(), T, K, target);
    const double loss = -lat.log_p;
    return ad::make_op("ctc_loss", {}, {loss}, {probs}, [T, K, target, lat](const Node& self) {
        auto& in = *self.inputs[0];
        std::vector<double> g(T * K, 0.0);
        const auto& zp = target.z_prime;
        for (std::size_t t = 0; t < T; ++t) {
            for (std::size_t u = 0; u < zp.size(); ++u) {
                const double la = lat.la(t, u), lb = lat.lb(t, u);
                if (la == kNegInf || lb == kNegInf) continue;
                g[t * K + zp[u]] += std::exp(la + lb - lat.log_p);
            }
        }
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double y = in.value[i];
            g[i] = (g[i] != 0.0 && y > kProbFloor) ? -self.grad[0] * g[i] / y : 0.0;
        }
        in.accumulate_grad(g);
    });
}

CombinedLoss combined_loss(std::span<const StageOutput> stages, std::span<const int> labels,
                           const LossConfig& cfg) {
    cfg.validate();
    if (stages.empty()) throw ValidationError("combined_loss: no stages");
    const int blank = static_cast<int>(stages.front().ctc_probs.dim(1)) - 1;
    const auto target = CtcTarget::from_labels(labels, blank, cfg.ctc_drop_class);

    DiffArray cls, tmse, ctc;
    auto acc = [](DiffArray& into, const DiffArray& term) { into = into.defined() ? ad::add(into, term) : term; };
    for (std::size_t s = 0; s < stages.size(); ++s) {
        acc(cls, ce_loss(stages[s].class_probs, labels));
        acc(tmse, tmse_loss(stages[s].class_probs, cfg.tau, cfg.tmse_stop_gradient));
        if (cfg.per_stage || s + 1 == stages.size()) acc(ctc, ctc_loss(stages[s].ctc_probs, target));
    }
    CombinedLoss out;
    out.loss = ad::add(ad::add(cls, ad::scale(tmse, cfg.lambda)), ad::scale(ctc, cfg.mu));
    out.breakdown = {cls.item(), tmse.item(), ctc.item(), out.loss.item()};
    return out;
}

}  // namespace segforge
