#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "segforge/autodiff.hpp"

namespace segforge::ad {

struct AdamConfig {
    double lr = 0.0005;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Adam with bias correction. Moment estimates and the step count live per
/// parameter node, so the order in which parameters are passed to step() does
/// not matter.
class Adam {
public:
    explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

    /// Throws ValidationError if a parameter has no materialized gradient.
    void step(std::span<DiffArray> params);

    const AdamConfig& config() const { return cfg_; }
    std::uint64_t steps_taken(const DiffArray& p) const;

private:
    struct Moments {
        std::vector<double> m;
        std::vector<double> v;
        std::uint64_t t = 0;
    };

    AdamConfig cfg_;
    std::unordered_map<const Node*, Moments> state_;
};

}  // namespace segforge::ad
