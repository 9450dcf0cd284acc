#include "segforge/interp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "segforge/errors.hpp"

namespace segforge {

namespace {

constexpr double kSinFloor = 1e-6;

int transition_label(const SpliceConfig& cfg, int prev_class, int next_class) {
    switch (cfg.label_policy) {
        case TransitionLabelPolicy::background_class: return cfg.background_class;
        case TransitionLabelPolicy::extend_previous: return prev_class;
        case TransitionLabelPolicy::extend_next: return next_class;
    }
    return prev_class;
}

}  // namespace

Quaternion slerp(const Quaternion& q1, const Quaternion& q2, double t) {
    if (!is_unit(q1) || !is_unit(q2)) {
        throw ValidationError("slerp requires unit quaternions");
    }
    if (!(t >= 0.0 && t <= 1.0)) {
        throw ValidationError("slerp parameter t=" + std::to_string(t) + " outside [0, 1]");
    }
    Quaternion b = q2;
    double cos_theta = q1.dot(q2);
    if (cos_theta < 0.0) {
        b = -b;
        cos_theta = -cos_theta;
    }
    cos_theta = std::min(cos_theta, 1.0);
    const double theta = std::acos(cos_theta);
    const double sin_theta = std::sin(theta);
    if (sin_theta < kSinFloor) {
        return (q1 * (1.0 - t) + b * t).normalized();
    }
    const double wa = std::sin((1.0 - t) * theta) / sin_theta;
    const double wb = std::sin(t * theta) / sin_theta;
    return (q1 * wa + b * wb).normalized();
}

std::vector<MotionFrame> interpolate_frames(const MotionFrame& a, const MotionFrame& b, int k) {
    if (k < 1) {
        throw ValidationError("transition frame count must be >= 1");
    }
    if (a.joint_rotations.size() != b.joint_rotations.size()) {
        throw ValidationError("cannot interpolate frames with different joint counts");
    }
    std::vector<MotionFrame> out(static_cast<std::size_t>(k));
    for (int i = 1; i <= k; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(k + 1);
        auto& f = out[static_cast<std::size_t>(i - 1)];
        f.joint_rotations.resize(a.joint_rotations.size());
        for (std::size_t j = 0; j < a.joint_rotations.size(); ++j) {
            f.joint_rotations[j] = slerp(a.joint_rotations[j], b.joint_rotations[j], t);
        }
        for (std::size_t c = 0; c < 3; ++c) {
            f.root_position[c] = (1.0 - t) * a.root_position[c] + t * b.root_position[c];
        }
    }
    return out;
}

std::string_view to_string(TransitionLabelPolicy p) {
    switch (p) {
        case TransitionLabelPolicy::background_class: return "background_class";
        case TransitionLabelPolicy::extend_previous: return "extend_previous";
        case TransitionLabelPolicy::extend_next: return "extend_next";
    }
    return "extend_previous";
}

TransitionLabelPolicy parse_transition_policy(std::string_view name) {
    if (name == "background_class") return TransitionLabelPolicy::background_class;
    if (name == "extend_previous") return TransitionLabelPolicy::extend_previous;
    if (name == "extend_next") return TransitionLabelPolicy::extend_next;
    throw ValidationError("unknown transition label policy '" + std::string(name) + "'");
}

void SpliceConfig::validate() const {
    if (transition_frames < 1) {
        throw ValidationError("transition_frames must be >= 1");
    }
    if (label_policy == TransitionLabelPolicy::background_class && background_class < 0) {
        throw ValidationError("background class id must be non-negative");
    }
}

void append_with_transition(SplicedFragment& fragment, int previous_class,
                            const ActionPrimitive& next, const SpliceConfig& cfg) {
    if (next.frames.empty()) {
        throw ValidationError("cannot splice an empty primitive");
    }
    if (!fragment.frames.empty()) {
        if (fragment.frames.back().joint_rotations.size() != next.frames.front().joint_rotations.size()) {
            throw ValidationError("cannot splice primitives with different topologies");
        }
        auto bridge = interpolate_frames(fragment.frames.back(), next.frames.front(), cfg.transition_frames);
        const int label = transition_label(cfg, previous_class, next.class_id);
        fragment.labels.insert(fragment.labels.end(), bridge.size(), label);
        fragment.frames.insert(fragment.frames.end(), std::make_move_iterator(bridge.begin()),
                               std::make_move_iterator(bridge.end()));
    }
    fragment.frames.insert(fragment.frames.end(), next.frames.begin(), next.frames.end());
    fragment.labels.insert(fragment.labels.end(), next.frames.size(), next.class_id);
}

SplicedFragment splice(const ActionPrimitive& p1, const ActionPrimitive& p2, const SpliceConfig& cfg) {
    cfg.validate();
    if (p1.frames.empty() || p2.frames.empty()) {
        throw ValidationError("cannot splice an empty primitive");
    }
    if (p1.frames.front().joint_rotations.size() != p2.frames.front().joint_rotations.size()) {
        throw ValidationError("cannot splice primitives with different topologies");
    }
    SplicedFragment out;
    out.frames.reserve(p1.length() + p2.length() + static_cast<std::size_t>(cfg.transition_frames));
    append_with_transition(out, p1.class_id, p1, cfg);
    append_with_transition(out, p1.class_id, p2, cfg);
    return out;
}

}  // namespace segforge
