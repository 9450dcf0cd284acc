#include "segforge/topology.hpp"

#include <cmath>
#include <deque>
#include <string>

#include "segforge/errors.hpp"

namespace segforge {

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        m(i, i) = 1.0;
    }
    return m;
}

std::string_view to_string(PartitionStrategy s) {
    switch (s) {
        case PartitionStrategy::uniform: return "uniform";
        case PartitionStrategy::distance: return "distance";
        case PartitionStrategy::spatial: return "spatial";
    }
    return "spatial";
}

PartitionStrategy parse_partition_strategy(std::string_view name) {
    if (name == "uniform") return PartitionStrategy::uniform;
    if (name == "distance") return PartitionStrategy::distance;
    if (name == "spatial") return PartitionStrategy::spatial;
    throw ValidationError("unknown partition strategy '" + std::string(name) + "'");
}

std::size_t partition_count(PartitionStrategy s) {
    switch (s) {
        case PartitionStrategy::uniform: return 1;
        case PartitionStrategy::distance: return 2;
        case PartitionStrategy::spatial: return 3;
    }
    return 0;
}

void validate_edges(const std::vector<Edge>& edges, int joint_count) {
    if (joint_count <= 0) {
        throw ValidationError("joint count must be positive");
    }
    for (const auto& [a, b] : edges) {
        if (a < 0 || b < 0 || a >= joint_count || b >= joint_count) {
            throw ValidationError("edge (" + std::to_string(a) + ", " + std::to_string(b) +
                                  ") out of range for " + std::to_string(joint_count) + " joints");
        }
        if (a == b) {
            throw ValidationError("self-loop on joint " + std::to_string(a));
        }
    }
}

std::vector<int> hop_distances(const std::vector<Edge>& edges, int joint_count, int center) {
    std::vector<std::vector<int>> nbrs(static_cast<std::size_t>(joint_count));
    for (const auto& [a, b] : edges) {
        nbrs[a].push_back(b);
        nbrs[b].push_back(a);
    }
    std::vector<int> hop(static_cast<std::size_t>(joint_count), -1);
    std::deque<int> queue{center};
    hop[center] = 0;
    while (!queue.empty()) {
        const int j = queue.front();
        queue.pop_front();
        for (int k : nbrs[j]) {
            if (hop[k] < 0) {
                hop[k] = hop[j] + 1;
                queue.push_back(k);
            }
        }
    }
    return hop;
}

std::vector<Matrix> partition_masks(const std::vector<Edge>& edges, int joint_count,
                                    PartitionStrategy strategy, int center) {
    validate_edges(edges, joint_count);
    const auto n = static_cast<std::size_t>(joint_count);
    Matrix adj(n, n);
    for (const auto& [a, b] : edges) {
        adj(a, b) = 1.0;
        adj(b, a) = 1.0;
    }

    switch (strategy) {
        case PartitionStrategy::uniform: {
            Matrix m = adj;
            for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
            return {m};
        }
        case PartitionStrategy::distance:
            return {Matrix::identity(n), adj};
        case PartitionStrategy::spatial: {
            if (center < 0 || center >= joint_count) {
                throw ValidationError("center joint " + std::to_string(center) + " out of range");
            }
            const auto hop = hop_distances(edges, joint_count, center);
            // Joints unreachable from the center are treated as equidistant to
            // everything they touch, so their edges land in the root partition.
            Matrix root(n, n), centripetal(n, n), centrifugal(n, n);
            for (std::size_t src = 0; src < n; ++src) {
                for (std::size_t dst = 0; dst < n; ++dst) {
                    if (src != dst && adj(src, dst) == 0.0) continue;
                    const int hs = hop[src];
                    const int hd = hop[dst];
                    if (src == dst || hs < 0 || hd < 0 || hs == hd) {
                        root(src, dst) = 1.0;
                    } else if (hs > hd) {
                        centripetal(src, dst) = 1.0;
                    } else {
                        centrifugal(src, dst) = 1.0;
                    }
                }
            }
            return {root, centripetal, centrifugal};
        }
    }
    return {};
}

Matrix normalize_symmetric(const Matrix& mask) {
    std::vector<double> row_deg(mask.rows, 0.0), col_deg(mask.cols, 0.0);
    for (std::size_t i = 0; i < mask.rows; ++i) {
        for (std::size_t j = 0; j < mask.cols; ++j) {
            row_deg[i] += mask(i, j);
            col_deg[j] += mask(i, j);
        }
    }
    Matrix out(mask.rows, mask.cols);
    for (std::size_t i = 0; i < mask.rows; ++i) {
        for (std::size_t j = 0; j < mask.cols; ++j) {
            if (mask(i, j) != 0.0 && row_deg[i] > 0.0 && col_deg[j] > 0.0) {
                out(i, j) = mask(i, j) / std::sqrt(row_deg[i] * col_deg[j]);
            }
        }
    }
    return out;
}

std::vector<Matrix> build_partitions(const std::vector<Edge>& edges, int joint_count,
                                     PartitionStrategy strategy, int center) {
    auto masks = partition_masks(edges, joint_count, strategy, center);
    for (auto& m : masks) {
        m = normalize_symmetric(m);
    }
    return masks;
}

SkeletonTopology SkeletonTopology::make(int joint_count, std::vector<Edge> edges,
                                        PartitionStrategy strategy, int center) {
    SkeletonTopology t;
    t.joint_count = joint_count;
    t.edges = std::move(edges);
    t.strategy = strategy;
    t.center = center;
    t.partitions = build_partitions(t.edges, joint_count, strategy, center);
    return t;
}

SkeletonTopology openpose18_topology(PartitionStrategy s) {
    return SkeletonTopology::make(18,
                                  {{4, 3}, {3, 2}, {7, 6}, {6, 5}, {13, 12}, {12, 11},
                                   {10, 9}, {9, 8}, {11, 5}, {8, 2}, {5, 1}, {2, 1},
                                   {0, 1}, {15, 0}, {14, 0}, {17, 15}, {16, 14}},
                                  s, 1);
}

SkeletonTopology ntu25_topology(PartitionStrategy s) {
    // NTU RGB+D joint numbering, converted to zero-based indices.
    const std::vector<Edge> one_based = {
        {1, 2},   {2, 21},  {3, 21},  {4, 3},   {5, 21},  {6, 5},   {7, 6},   {8, 7},
        {9, 21},  {10, 9},  {11, 10}, {12, 11}, {13, 1},  {14, 13}, {15, 14}, {16, 15},
        {17, 1},  {18, 17}, {19, 18}, {20, 19}, {22, 23}, {23, 8},  {24, 25}, {25, 12}};
    std::vector<Edge> edges;
    edges.reserve(one_based.size());
    for (const auto& [a, b] : one_based) edges.emplace_back(a - 1, b - 1);
    return SkeletonTopology::make(25, std::move(edges), s, 20);
}

SkeletonTopology chain_topology(int joint_count, PartitionStrategy s) {
    std::vector<Edge> edges;
    for (int j = 1; j < joint_count; ++j) edges.emplace_back(j - 1, j);
    return SkeletonTopology::make(joint_count, std::move(edges), s, 0);
}

}  // namespace segforge
