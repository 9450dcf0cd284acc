#include "segforge/adam.hpp"

#include <cmath>

#include "segforge/errors.hpp"

namespace segforge::ad {

void Adam::step(std::span<DiffArray> params) {
    for (const auto& p : params) {
        if (!p.has_grad()) {
            throw ValidationError("adam: parameter of shape " + shape_string(p.shape()) + " has no gradient");
        }
    }
    for (auto& p : params) {
        auto& st = state_[p.node().get()];
        if (st.m.empty()) {
            st.m.assign(p.size(), 0.0);
            st.v.assign(p.size(), 0.0);
        }
        ++st.t;
        const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(st.t));
        const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(st.t));
        auto values = p.mutable_values();
        const auto grad = p.grad();
        for (std::size_t i = 0; i < values.size(); ++i) {
            st.m[i] = cfg_.beta1 * st.m[i] + (1.0 - cfg_.beta1) * grad[i];
            st.v[i] = cfg_.beta2 * st.v[i] + (1.0 - cfg_.beta2) * grad[i] * grad[i];
            const double mhat = st.m[i] / bc1;
            const double vhat = st.v[i] / bc2;
            values[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

std::uint64_t Adam::steps_taken(const DiffArray& p) const {
    auto it = state_.find(p.node().get());
    return it == state_.end() ? 0 : it->second.t;
}

}  // namespace segforge::ad
