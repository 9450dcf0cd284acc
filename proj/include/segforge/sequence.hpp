#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "segforge/quaternion.hpp"
#include "segforge/topology.hpp"

namespace segforge {

using Vec3 = std::array<double, 3>;

struct MotionFrame {
    std::vector<Quaternion> joint_rotations;
    Vec3 root_position{0.0, 0.0, 0.0};

    bool operator==(const MotionFrame&) const = default;
};

/// Half-open frame range [begin, end).
struct FrameSpan {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t length() const { return end - begin; }
    bool operator==(const FrameSpan&) const = default;
};

/// A recording: per-frame joint rotations and one class label per frame.
///
/// The skeleton is carried as (joint_count, edges) so files are
/// self-describing; the class vocabulary is `class_names` and every label
/// indexes into it.
struct LabeledSequence {
    std::string id;
    int joint_count = 0;
    std::vector<Edge> edges;
    double fps = 30.0;
    std::vector<std::string> class_names;
    std::vector<MotionFrame> frames;
    std::vector<int> labels;

    std::size_t length() const { return frames.size(); }
    std::size_t class_count() const { return class_names.size(); }

    /// True when both sequences describe the same skeleton graph.
    bool same_topology(const LabeledSequence& other) const {
        return joint_count == other.joint_count && edges == other.edges;
    }

    bool operator==(const LabeledSequence&) const = default;
};

/// Throws ValidationError unless `seq` satisfies every LabeledSequence
/// invariant (T >= 1, matching lengths, labels in range, unit quaternions).
void validate_sequence(const LabeledSequence& seq, double norm_tolerance = kUnitNormTolerance);

struct ActionPrimitive {
    int class_id = 0;
    std::vector<MotionFrame> frames;
    std::string source_sequence;
    FrameSpan source_span;

    std::size_t length() const { return frames.size(); }
};

/// Maximal constant-label runs in temporal order. Runs of `background` are
/// dropped when given.
std::vector<ActionPrimitive> extract_primitives(const LabeledSequence& seq,
                                                std::optional<int> background = std::nullopt);

/// C x T x N array, channel-major.
struct FeatureTensor {
    std::size_t channels = 0;
    std::size_t frames = 0;
    std::size_t joints = 0;
    std::vector<double> values;

    double& at(std::size_t c, std::size_t t, std::size_t n) {
        return values[(c * frames + t) * joints + n];
    }
    double at(std::size_t c, std::size_t t, std::size_t n) const {
        return values[(c * frames + t) * joints + n];
    }
};

struct FeatureOptions {
    /// Append the root position as an extra joint: channels (x, y, z, 0).
    bool root_as_virtual_joint = false;
};

/// Quaternion components (w, x, y, z) become the four channels.
FeatureTensor to_feature_tensor(const LabeledSequence& seq, const FeatureOptions& opts = {});

}  // namespace segforge
