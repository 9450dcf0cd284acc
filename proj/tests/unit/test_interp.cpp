#include <doctest.h>

#include <array>
#include <cmath>

#include "segforge/errors.hpp"
#include "segforge/interp.hpp"
#include "segforge/random.hpp"

using namespace segforge;

namespace {

Quaternion random_unit(Rng& rng) {
    return Quaternion{standard_normal(rng), standard_normal(rng), standard_normal(rng), standard_normal(rng)}
        .normalized();
}

// Rotation matrix from a unit quaternion, used as an independent check of
// the rotation a quaternion represents.
std::array<double, 9> to_matrix(const Quaternion& q) {
    const double w = q.w, x = q.x, y = q.y, z = q.z;
    return {1 - 2 * (y * y + z * z), 2 * (x * y - w * z),     2 * (x * z + w * y),
            2 * (x * y + w * z),     1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
            2 * (x * z - w * y),     2 * (y * z + w * x),     1 - 2 * (x * x + y * y)};
}

// Angle of the relative rotation R_a^T R_b from its trace.
double matrix_angle(const Quaternion& a, const Quaternion& b) {
    const auto ra = to_matrix(a), rb = to_matrix(b);
    double tr = 0.0;
    for (int i = 0; i < 3; ++i) {
        for (int k = 0; k < 3; ++k) tr += ra[k * 3 + i] * rb[k * 3 + i];
    }
    return std::acos(std::clamp((tr - 1.0) / 2.0, -1.0, 1.0));
}

ActionPrimitive primitive(Rng& rng, int cls, std::size_t len, int joints = 2) {
    ActionPrimitive p;
    p.class_id = cls;
    for (std::size_t t = 0; t < len; ++t) {
        MotionFrame f;
        for (int j = 0; j < joints; ++j) f.joint_rotations.push_back(random_unit(rng));
        f.root_position = {uniform_real(rng, -1, 1), 0.0, 1.0};
        p.frames.push_back(f);
    }
    p.source_span = {0, len};
    return p;
}

}  // namespace

TEST_SUITE("interp") {

TEST_CASE("slerp endpoints and identities") {
    Rng rng(11);
    for (int i = 0; i < 200; ++i) {
        const auto a = random_unit(rng), b = random_unit(rng);
        const auto s0 = slerp(a, b, 0.0), s1 = slerp(a, b, 1.0);
        CHECK(rotation_angle_between(s0, a) < 1e-7);
        CHECK(rotation_angle_between(s1, b) < 1e-7);
        const auto same = slerp(a, a, uniform_unit(rng));
        CHECK(std::abs(same.dot(a)) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("slerp halfway between identity and 90 degrees about z") {
    const auto q = slerp(Quaternion::identity(), Quaternion::from_axis_angle({0, 0, 1}, M_PI / 2), 0.5);
    CHECK(q.w == doctest::Approx(0.9238795325112867).epsilon(1e-12));
    CHECK(q.z == doctest::Approx(0.3826834323650898).epsilon(1e-12));
    CHECK(matrix_angle(Quaternion::identity(), q) == doctest::Approx(M_PI / 4).epsilon(1e-10));
}

TEST_CASE("slerp takes the short arc and is symmetric") {
    Rng rng(12);
    for (int i = 0; i < 500; ++i) {
        const auto a = random_unit(rng), b = random_unit(rng);
        const double t = uniform_unit(rng);
        const auto p = slerp(a, b, t), q = slerp(b, a, 1.0 - t);
        const double sign = p.dot(q) < 0 ? -1.0 : 1.0;
        CHECK(std::abs(p.w - sign * q.w) < 1e-9);
        CHECK(std::abs(p.x - sign * q.x) < 1e-9);
        CHECK(std::abs(p.y - sign * q.y) < 1e-9);
        CHECK(std::abs(p.z - sign * q.z) < 1e-9);
        // the path never turns more than the direct rotation
        CHECK(matrix_angle(a, p) <= matrix_angle(a, b) + 1e-9);
    }
}

TEST_CASE("slerp nearly identical inputs falls back to lerp") {
    const auto a = Quaternion::from_axis_angle({1, 0, 0}, 0.3);
    const auto b = Quaternion::from_axis_angle({1, 0, 0}, 0.3 + 1e-9);
    const auto m = slerp(a, b, 0.5);
    CHECK(std::isfinite(m.w));
    CHECK(is_unit(m, 1e-12));
}

TEST_CASE("slerp rejects bad input") {
    CHECK_THROWS_AS(slerp(Quaternion{2, 0, 0, 0}, Quaternion::identity(), 0.5), ValidationError);
    CHECK_THROWS_AS(slerp(Quaternion::identity(), Quaternion::identity(), 1.5), ValidationError);
    CHECK_THROWS_AS(slerp(Quaternion::identity(), Quaternion::identity(), -0.1), ValidationError);
    CHECK_THROWS_AS(slerp(Quaternion::identity(), Quaternion::identity(), std::nan("")), ValidationError);
}

TEST_CASE("interpolate_frames excludes endpoints and is monotone") {
    Rng rng(13);
    const auto p = primitive(rng, 0, 2, 3);
    const auto& a = p.frames[0];
    const auto& b = p.frames[1];
    const auto mid = interpolate_frames(a, b, 1);
    REQUIRE(mid.size() == 1u);
    for (int j = 0; j < 3; ++j) {
        CHECK(mid[0].joint_rotations[j] == slerp(a.joint_rotations[j], b.joint_rotations[j], 0.5));
    }
    CHECK(mid[0].root_position[0] == doctest::Approx(0.5 * (a.root_position[0] + b.root_position[0])));

    const auto three = interpolate_frames(a, b, 3);
    REQUIRE(three.size() == 3u);
    for (int j = 0; j < 3; ++j) {
        double prev = 0.0;
        for (const auto& f : three) {
            const double ang = matrix_angle(a.joint_rotations[j], f.joint_rotations[j]);
            CHECK(ang >= prev - 1e-12);
            CHECK(ang > 1e-9);  // never the endpoint a
            prev = ang;
        }
        CHECK(matrix_angle(three.back().joint_rotations[j], b.joint_rotations[j]) > 1e-9);
    }
    const auto copies = interpolate_frames(a, a, 4);
    for (const auto& f : copies) {
        for (int j = 0; j < 3; ++j) CHECK(rotation_angle_between(f.joint_rotations[j], a.joint_rotations[j]) < 1e-7);
    }
    CHECK_THROWS_AS(interpolate_frames(a, b, 0), ValidationError);
    auto c = b;
    c.joint_rotations.pop_back();
    CHECK_THROWS_AS(interpolate_frames(a, c, 2), ValidationError);
}

TEST_CASE("splice lengths and label policies") {
    Rng rng(14);
    const auto p1 = primitive(rng, 1, 5), p2 = primitive(rng, 2, 7);
    SpliceConfig cfg;
    cfg.transition_frames = 4;

    cfg.label_policy = TransitionLabelPolicy::background_class;
    cfg.background_class = 0;
    auto f = splice(p1, p2, cfg);
    REQUIRE(f.frames.size() == 16u);
    std::vector<int> expect(5, 1);
    expect.insert(expect.end(), 4, 0);
    expect.insert(expect.end(), 7, 2);
    CHECK(f.labels == expect);
    CHECK(f.frames[0] == p1.frames[0]);
    CHECK(f.frames[9] == p2.frames[0]);

    cfg.label_policy = TransitionLabelPolicy::extend_previous;
    f = splice(p1, p2, cfg);
    expect.assign(9, 1);
    expect.insert(expect.end(), 7, 2);
    CHECK(f.labels == expect);

    cfg.label_policy = TransitionLabelPolicy::extend_next;
    f = splice(p1, p2, cfg);
    expect.assign(5, 1);
    expect.insert(expect.end(), 11, 2);
    CHECK(f.labels == expect);

    CHECK(SpliceConfig{}.transition_frames == 10);
    cfg.transition_frames = 0;
    CHECK_THROWS_AS(splice(p1, p2, cfg), ValidationError);
    CHECK_THROWS_AS(parse_transition_policy("midpoint"), ValidationError);
    CHECK(parse_transition_policy(to_string(TransitionLabelPolicy::extend_next)) ==
          TransitionLabelPolicy::extend_next);
}

}  // TEST_SUITE
