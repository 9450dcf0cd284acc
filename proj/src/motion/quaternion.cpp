#include "segforge/quaternion.hpp"

#include <algorithm>

namespace segforge {

Quaternion Quaternion::from_axis_angle(const std::array<double, 3>& axis, double angle) {
    const double n = std::sqrt(axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]);
    if (n == 0.0) {
        return identity();
    }
    const double s = std::sin(0.5 * angle) / n;
    return Quaternion{std::cos(0.5 * angle), axis[0] * s, axis[1] * s, axis[2] * s}.normalized();
}

Quaternion Quaternion::normalized() const {
    const double n = norm();
    if (n == 0.0) {
        return identity();
    }
    return *this * (1.0 / n);
}

Quaternion Quaternion::operator*(const Quaternion& o) const {
    return {
        w * o.w - x * o.x - y * o.y - z * o.z,
        w * o.x + x * o.w + y * o.z - z * o.y,
        w * o.y - x * o.z + y * o.w + z * o.x,
        w * o.z + x * o.y - y * o.x + z * o.w,
    };
}

double rotation_angle_between(const Quaternion& a, const Quaternion& b) {
    // atan2 form stays accurate for tiny angles where acos(dot) does not.
    const Quaternion bb = a.dot(b) < 0.0 ? -b : b;
    const double diff = (a - bb).norm();
    const double sum = (a + bb).norm();
    return 4.0 * std::atan2(diff, sum);
}

}  // namespace segforge
