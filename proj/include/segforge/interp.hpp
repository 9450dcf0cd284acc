#pragma once

#include <string_view>
#include <vector>

#include "segforge/quaternion.hpp"
#include "segforge/sequence.hpp"

namespace segforge {

/// Spherical linear interpolation along the shorter arc.
///
/// `q2` is negated first when q1.q2 < 0. When sin(theta) < 1e-6 the result is
/// a normalized lerp. Throws ValidationError for non-unit input or t outside
/// [0, 1].
Quaternion slerp(const Quaternion& q1, const Quaternion& q2, double t);

/// K in-between frames from `a` to `b`; frame i (1-based) uses t = i/(K+1).
/// Neither endpoint is included. Root positions are lerped.
std::vector<MotionFrame> interpolate_frames(const MotionFrame& a, const MotionFrame& b, int k);

enum class TransitionLabelPolicy { background_class, extend_previous, extend_next };

std::string_view to_string(TransitionLabelPolicy p);
TransitionLabelPolicy parse_transition_policy(std::string_view name);

struct SpliceConfig {
    int transition_frames = 10;
    TransitionLabelPolicy label_policy = TransitionLabelPolicy::extend_previous;
    /// Label for transition frames under background_class.
    int background_class = 0;

    void validate() const;
};

/// Frames and labels produced by joining two primitives.
struct SplicedFragment {
    std::vector<MotionFrame> frames;
    std::vector<int> labels;
};

/// p1 ++ interpolate(last(p1), first(p2), K) ++ p2, labelled per `cfg`.
SplicedFragment splice(const ActionPrimitive& p1, const ActionPrimitive& p2, const SpliceConfig& cfg);

/// Appends `next` to `fragment`, inserting K transition frames first when
/// `fragment` is non-empty. `previous_class` is the class of the primitive
/// currently at the end of `fragment`.
void append_with_transition(SplicedFragment& fragment, int previous_class,
                            const ActionPrimitive& next, const SpliceConfig& cfg);

}  // namespace segforge
