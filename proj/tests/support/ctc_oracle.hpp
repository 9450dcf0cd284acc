#pragma once

// Exhaustive CTC: sum the probability of every frame path whose collapse
// (merge repeats, then drop blanks) equals the target.

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace segforge::testing {

inline std::vector<int> collapse_path(const std::vector<int>& path, int blank) {
    std::vector<int> out;
    int prev = -1;
    for (int s : path) {
        if (s != prev && s != blank) out.push_back(s);
        prev = s;
    }
    return out;
}

/// probs: row-major [T, K]. Returns p(z | x).
inline double ctc_path_sum(std::span<const double> probs, std::size_t T, std::size_t K, const std::vector<int>& z,
                           int blank) {
    std::vector<int> path(T, 0);
    double total = 0.0;
    for (;;) {
        if (collapse_path(path, blank) == z) {
            double p = 1.0;
            for (std::size_t t = 0; t < T; ++t) p *= probs[t * K + path[t]];
            total += p;
        }
        std::size_t t = T;
        while (t > 0) {
            --t;
            if (++path[t] < static_cast<int>(K)) break;
            path[t] = 0;
            if (t == 0) return total;
        }
        if (T == 0) return total;
    }
}

}  // namespace segforge::testing
