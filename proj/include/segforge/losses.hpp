#pragma once

#include <optional>
#include <span>
#include <vector>

#include "segforge/autodiff.hpp"
#include "segforge/model.hpp"

namespace segforge {

inline constexpr double kProbFloor = 1e-12;

struct LossConfig {
    double tau = 4.0;
    double lambda = 0.15;
    double mu = 0.0005;
    /// CTC on every stage; when false only the final stage gets the CTC term.
    bool per_stage = true;
    /// Remove this class from the frame labels before building the CTC target.
    std::optional<int> ctc_drop_class;
    /// Treat the t-1 term of the smoothing loss as a constant.
    bool tmse_stop_gradient = true;

    void validate() const;
};

/// z: collapsed label sequence. z': blank, z1, blank, z2, ..., blank.
struct CtcTarget {
    std::vector<int> z;
    std::vector<int> z_prime;
    int blank = 0;

    static CtcTarget from_labels(std::span<const int> labels, int blank, std::optional<int> drop_class = {});
    static CtcTarget from_sequence(std::vector<int> z, int blank);

    /// Fewest frames that can emit z.
    std::size_t min_frames() const;
};

struct LossBreakdown {
    double cls = 0.0;
    double tmse = 0.0;
    double ctc = 0.0;
    double total = 0.0;
};

/// (1/T) sum_t -log max(p[t, labels[t]], floor). probs: [T, L].
ad::DiffArray ce_loss(const ad::DiffArray& probs, std::span<const int> labels);

/// Truncated smoothing loss on log-probability differences between frames,
/// normalized by T*L. Rows t-1 are read from `previous`, rows t from
/// `current`; both are [T, L]. Passing a detached copy as `previous` gives
/// the stop-gradient form.
ad::DiffArray tmse_loss_pair(const ad::DiffArray& current, const ad::DiffArray& previous, double tau);
ad::DiffArray tmse_loss(const ad::DiffArray& probs, double tau, bool stop_gradient = true);

/// Log-space forward-backward lattice over z'. alpha(t, u) includes the
/// emission at t, beta(t, u) covers frames t+1..T-1 only, so
/// sum_u alpha(t, u) * beta(t, u) = p(z | x) for every t.
struct CtcLattice {
    std::size_t frames = 0;
    std::size_t states = 0;
    std::vector<double> log_alpha;  // [T, |z'|]
    std::vector<double> log_beta;
    double log_p = 0.0;

    double la(std::size_t t, std::size_t u) const { return log_alpha[t * states + u]; }
    double lb(std::size_t t, std::size_t u) const { return log_beta[t * states + u]; }
};

/// probs: row-major [T, K] with the blank as one of the K columns.
CtcLattice ctc_forward_backward(std::span<const double> probs, std::size_t frames, std::size_t symbols,
                                const CtcTarget& target);

/// -log p(z | x). probs: [T, L + 1].
ad::DiffArray ctc_loss(const ad::DiffArray& probs, const CtcTarget& target);

struct CombinedLoss {
    ad::DiffArray loss;
    LossBreakdown breakdown;
};

/// Per-stage cls + lambda * tmse + mu * ctc, summed over stages.
CombinedLoss combined_loss(std::span<const StageOutput> stages, std::span<const int> labels,
                           const LossConfig& cfg);

}  // namespace segforge
