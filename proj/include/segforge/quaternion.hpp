#pragma once

#include <array>
#include <cmath>

namespace segforge {

/// Rotation quaternion stored scalar-first as (w, x, y, z).
struct Quaternion {
    double w = 1.0;
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    static constexpr Quaternion identity() { return {1.0, 0.0, 0.0, 0.0}; }

    /// Rotation of `angle` radians about `axis` (need not be unit length).
    static Quaternion from_axis_angle(const std::array<double, 3>& axis, double angle);

    double dot(const Quaternion& o) const { return w * o.w + x * o.x + y * o.y + z * o.z; }
    double norm() const { return std::sqrt(dot(*this)); }
    Quaternion normalized() const;
    Quaternion conjugate() const { return {w, -x, -y, -z}; }

    Quaternion operator+(const Quaternion& o) const { return {w + o.w, x + o.x, y + o.y, z + o.z}; }
    Quaternion operator-(const Quaternion& o) const { return {w - o.w, x - o.x, y - o.y, z - o.z}; }
    Quaternion operator-() const { return {-w, -x, -y, -z}; }
    Quaternion operator*(double s) const { return {w * s, x * s, y * s, z * s}; }
    friend Quaternion operator*(double s, const Quaternion& q) { return q * s; }

    /// Hamilton product.
    Quaternion operator*(const Quaternion& o) const;

    bool operator==(const Quaternion&) const = default;
};

/// Tolerance used when an operation requires unit-norm input.
inline constexpr double kUnitNormTolerance = 1e-6;

inline bool is_unit(const Quaternion& q, double tol = kUnitNormTolerance) {
    return std::abs(q.norm() - 1.0) <= tol;
}

/// Rotation angle (radians, in [0, pi]) taking `a` to `b`, treating q and -q as
/// the same rotation.
double rotation_angle_between(const Quaternion& a, const Quaternion& b);

}  // namespace segforge
