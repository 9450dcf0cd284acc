#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "segforge/sequence.hpp"

namespace segforge::app {

/// Toy dataset description. Each class drives every joint with its own
/// sinusoidal rotation: angle(t) = offset + amplitude * sin(2 pi f t + phase)
/// about a fixed per-class axis, plus Gaussian angle noise.
struct ToySpec {
    int classes = 3;
    int joints = 6;
    int min_length = 20;
    int max_length = 30;
    int train_sequences = 2;
    int test_sequences = 6;
    int segments = 4;
    /// Class order shared by every training recording; random when empty.
    std::vector<int> train_class_order;
    double noise = 0.02;
    double fps = 30.0;
    std::uint64_t seed = 1;

    void validate() const;
};

struct JointMotion {
    Vec3 axis{1.0, 0.0, 0.0};
    double offset = 0.0;
    double amplitude = 0.0;
    double frequency = 1.0;  // Hz
    double phase = 0.0;

    bool operator==(const JointMotion&) const = default;
};

/// motion[c][j] for class c, joint j. Deterministic given the spec's seed.
std::vector<std::vector<JointMotion>> motion_family(const ToySpec& spec);

/// Noise-free rotation of joint motion `m` at time `seconds`.
Quaternion joint_rotation(const JointMotion& m, double seconds);

/// Smallest mean geodesic distance (radians) between two classes' noise-free
/// trajectories, averaged over joints and a two-second window.
double class_separation(const ToySpec& spec);

/// Edges of the toy skeleton: joint j > 0 hangs off joint (j - 1) / 2.
std::vector<Edge> toy_edges(int joints);

struct ToyDataset {
    std::vector<LabeledSequence> train;
    std::vector<LabeledSequence> test;
};

/// Throws ValidationError for degenerate specs, including classes whose
/// trajectories are not separated by more than the noise scale.
ToyDataset generate_toy_dataset(const ToySpec& spec);

/// Writes train/ and test/ sequence files plus train.list and test.list.
void write_toy_dataset(const ToyDataset& data, const std::filesystem::path& dir);

/// One path per line, '#' starts a comment; relative paths resolve against
/// the list file's directory.
std::vector<std::filesystem::path> read_path_list(const std::filesystem::path& list);
void write_path_list(const std::filesystem::path& list, const std::vector<std::filesystem::path>& paths);

}  // namespace segforge::app
