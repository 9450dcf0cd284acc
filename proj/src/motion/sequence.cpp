#include "segforge/sequence.hpp"

#include <cmath>
#include <string>

#include "segforge/errors.hpp"

namespace segforge {

void validate_sequence(const LabeledSequence& seq, double norm_tolerance) {
    validate_edges(seq.edges, seq.joint_count);
    if (seq.frames.empty()) {
        throw ValidationError("sequence '" + seq.id + "' has no frames");
    }
    if (seq.frames.size() != seq.labels.size()) {
        throw ValidationError("sequence '" + seq.id + "': " + std::to_string(seq.frames.size()) +
                              " frames but " + std::to_string(seq.labels.size()) + " labels");
    }
    if (!(seq.fps > 0.0) || !std::isfinite(seq.fps)) {
        throw ValidationError("sequence '" + seq.id + "': fps must be positive");
    }
    const auto classes = static_cast<int>(seq.class_names.size());
    for (std::size_t t = 0; t < seq.labels.size(); ++t) {
        if (seq.labels[t] < 0 || seq.labels[t] >= classes) {
            throw ValidationError("sequence '" + seq.id + "': label " +
                                  std::to_string(seq.labels[t]) + " at frame " +
                                  std::to_string(t) + " outside [0, " + std::to_string(classes) + ")");
        }
    }
    for (std::size_t t = 0; t < seq.frames.size(); ++t) {
        const auto& f = seq.frames[t];
        if (f.joint_rotations.size() != static_cast<std::size_t>(seq.joint_count)) {
            throw ValidationError("sequence '" + seq.id + "': frame " + std::to_string(t) +
                                  " has " + std::to_string(f.joint_rotations.size()) +
                                  " joints, expected " + std::to_string(seq.joint_count));
        }
        for (const auto& q : f.joint_rotations) {
            if (!is_unit(q, norm_tolerance)) {
                throw ValidationError("sequence '" + seq.id + "': non-unit quaternion at frame " +
                                      std::to_string(t) + " (norm " + std::to_string(q.norm()) + ")");
            }
        }
        for (double v : f.root_position) {
            if (!std::isfinite(v)) {
                throw ValidationError("sequence '" + seq.id + "': non-finite root position");
            }
        }
    }
}

std::vector<ActionPrimitive> extract_primitives(const LabeledSequence& seq,
                                                std::optional<int> background) {
    std::vector<ActionPrimitive> out;
    const std::size_t T = seq.labels.size();
    std::size_t start = 0;
    for (std::size_t t = 1; t <= T; ++t) {
        if (t < T && seq.labels[t] == seq.labels[start]) continue;
        const int cls = seq.labels[start];
        if (!(background && *background == cls)) {
            ActionPrimitive p;
            p.class_id = cls;
            p.frames.assign(seq.frames.begin() + static_cast<std::ptrdiff_t>(start),
                            seq.frames.begin() + static_cast<std::ptrdiff_t>(t));
            p.source_sequence = seq.id;
            p.source_span = {start, t};
            out.push_back(std::move(p));
        }
        start = t;
    }
    return out;
}

FeatureTensor to_feature_tensor(const LabeledSequence& seq, const FeatureOptions& opts) {
    FeatureTensor f;
    f.channels = 4;
    f.frames = seq.frames.size();
    f.joints = static_cast<std::size_t>(seq.joint_count) + (opts.root_as_virtual_joint ? 1 : 0);
    f.values.assign(f.channels * f.frames * f.joints, 0.0);
    for (std::size_t t = 0; t < f.frames; ++t) {
        const auto& frame = seq.frames[t];
        for (std::size_t n = 0; n < frame.joint_rotations.size(); ++n) {
            const auto& q = frame.joint_rotations[n];
            f.at(0, t, n) = q.w;
            f.at(1, t, n) = q.x;
            f.at(2, t, n) = q.y;
            f.at(3, t, n) = q.z;
        }
        if (opts.root_as_virtual_joint) {
            const std::size_t n = f.joints - 1;
            for (std::size_t c = 0; c < 3; ++c) f.at(c, t, n) = frame.root_position[c];
        }
    }
    return f;
}

}  // namespace segforge
