#pragma once

#include <cstddef>
#include <string_view>
#include <utility>
#include <vector>

namespace segforge {

/// Dense row-major matrix of doubles.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    static Matrix identity(std::size_t n);

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    bool operator==(const Matrix&) const = default;
};

using Edge = std::pair<int, int>;

enum class PartitionStrategy { uniform, distance, spatial };

std::string_view to_string(PartitionStrategy s);
PartitionStrategy parse_partition_strategy(std::string_view name);

/// Number of adjacency partitions a strategy produces.
std::size_t partition_count(PartitionStrategy s);

/// Skeleton graph with its partitioned, degree-normalized adjacency.
///
/// Entry (i, j) of a partition matrix is the weight with which joint i feeds
/// joint j when features are right-multiplied over the joint axis.
struct SkeletonTopology {
    int joint_count = 0;
    std::vector<Edge> edges;
    PartitionStrategy strategy = PartitionStrategy::spatial;
    int center = 0;
    std::vector<Matrix> partitions;

    /// Validates edges and builds `partitions`.
    static SkeletonTopology make(int joint_count, std::vector<Edge> edges,
                                 PartitionStrategy strategy = PartitionStrategy::spatial,
                                 int center = 0);

    std::size_t partition_count() const { return partitions.size(); }
};

/// Edge-list validation: indices in [0, N), no self-loops.
void validate_edges(const std::vector<Edge>& edges, int joint_count);

/// Hop distance of every joint from `center`; unreachable joints get -1.
std::vector<int> hop_distances(const std::vector<Edge>& edges, int joint_count, int center);

/// Binary partition masks before normalization. Their sum is A + I.
std::vector<Matrix> partition_masks(const std::vector<Edge>& edges, int joint_count,
                                    PartitionStrategy strategy, int center = 0);

/// Degree-normalized partition matrices: B_ij / sqrt(rowdeg_i * coldeg_j).
/// Rows or columns with zero degree stay zero.
std::vector<Matrix> build_partitions(const std::vector<Edge>& edges, int joint_count,
                                     PartitionStrategy strategy, int center = 0);

Matrix normalize_symmetric(const Matrix& mask);

// Built-in skeletons.
SkeletonTopology openpose18_topology(PartitionStrategy s = PartitionStrategy::spatial);
SkeletonTopology ntu25_topology(PartitionStrategy s = PartitionStrategy::spatial);
/// Simple kinematic tree for synthetic data: joint 0 is the root, joints form
/// a chain 0-1-2-... .
SkeletonTopology chain_topology(int joint_count, PartitionStrategy s = PartitionStrategy::spatial);

}  // namespace segforge
