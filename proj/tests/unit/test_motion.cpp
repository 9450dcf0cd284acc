#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "segforge/errors.hpp"
#include "segforge/random.hpp"
#include "segforge/sequence.hpp"
#include "segforge/sequence_io.hpp"
#include "segforge/topology.hpp"

using namespace segforge;
namespace fs = std::filesystem;

namespace {

Quaternion random_unit(Rng& rng) {
    return Quaternion{standard_normal(rng), standard_normal(rng), standard_normal(rng), standard_normal(rng)}
        .normalized();
}

LabeledSequence random_sequence(Rng& rng, std::vector<int> labels, int joints = 3) {
    LabeledSequence s;
    s.id = "seq";
    s.joint_count = joints;
    for (int j = 1; j < joints; ++j) s.edges.emplace_back(j - 1, j);
    s.fps = 30.0;
    s.class_names = {"a", "b", "c"};
    for (std::size_t t = 0; t < labels.size(); ++t) {
        MotionFrame f;
        for (int j = 0; j < joints; ++j) f.joint_rotations.push_back(random_unit(rng));
        f.root_position = {uniform_real(rng, -1, 1), uniform_real(rng, -1, 1), uniform_real(rng, 0, 2)};
        s.frames.push_back(f);
    }
    s.labels = std::move(labels);
    return s;
}

fs::path temp_dir(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("segforge_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

Matrix adjacency_plus_identity(const std::vector<Edge>& edges, int n) {
    Matrix m = Matrix::identity(static_cast<std::size_t>(n));
    for (auto [a, b] : edges) m(a, b) = m(b, a) = 1.0;
    return m;
}

}  // namespace

TEST_SUITE("motion") {

TEST_CASE("quaternion algebra") {
    const auto q = Quaternion::from_axis_angle({0, 0, 2}, M_PI / 2);
    CHECK(q.w == doctest::Approx(std::cos(M_PI / 4)));
    CHECK(q.z == doctest::Approx(std::sin(M_PI / 4)));
    CHECK(is_unit(q));
    const auto qq = q * q;  // 180 degrees about z
    CHECK(qq.w == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(std::abs(qq.z) == doctest::Approx(1.0));
    const auto id = q * q.conjugate();
    CHECK(id.w == doctest::Approx(1.0));
    CHECK(rotation_angle_between(q, -q) == doctest::Approx(0.0));
    CHECK(rotation_angle_between(Quaternion::identity(), q) == doctest::Approx(M_PI / 2));
}

TEST_CASE("partition masks sum to A + I for every strategy") {
    const auto op = openpose18_topology();
    const auto ntu = ntu25_topology();
    for (const auto* topo : {&op, &ntu}) {
        const auto target = adjacency_plus_identity(topo->edges, topo->joint_count);
        for (auto s : {PartitionStrategy::uniform, PartitionStrategy::distance, PartitionStrategy::spatial}) {
            const auto masks = partition_masks(topo->edges, topo->joint_count, s, topo->center);
            CHECK(masks.size() == partition_count(s));
            Matrix sum(target.rows, target.cols);
            for (const auto& m : masks) {
                for (std::size_t i = 0; i < m.data.size(); ++i) {
                    CHECK(m.data[i] >= 0.0);
                    sum.data[i] += m.data[i];
                }
            }
            CHECK(sum == target);
        }
    }
}

TEST_CASE("spatial partition directions on a chain") {
    // 0 - 1 - 2 with center 0: hop = 0, 1, 2.
    const auto masks = partition_masks({{0, 1}, {1, 2}}, 3, PartitionStrategy::spatial, 0);
    REQUIRE(masks.size() == 3);
    CHECK(masks[0](1, 1) == 1.0);
    CHECK(masks[1](2, 1) == 1.0);  // 2 feeds 1: towards the center
    CHECK(masks[1](1, 2) == 0.0);
    CHECK(masks[2](1, 2) == 1.0);  // 1 feeds 2: away from the center
}

TEST_CASE("normalization divides by row and column degrees") {
    Matrix m(2, 2);
    m(0, 0) = 1;
    m(0, 1) = 1;
    m(1, 1) = 1;
    const auto n = normalize_symmetric(m);
    // row degrees 2, 1; column degrees 1, 2
    CHECK(n(0, 0) == doctest::Approx(1.0 / std::sqrt(2.0 * 1.0)));
    CHECK(n(0, 1) == doctest::Approx(1.0 / std::sqrt(2.0 * 2.0)));
    CHECK(n(1, 1) == doctest::Approx(1.0 / std::sqrt(1.0 * 2.0)));
    CHECK(n(1, 0) == 0.0);
    CHECK(normalize_symmetric(Matrix(3, 3)) == Matrix(3, 3));
}

TEST_CASE("topology validation and determinism") {
    CHECK_THROWS_AS(SkeletonTopology::make(3, {{0, 3}}), ValidationError);
    CHECK_THROWS_AS(SkeletonTopology::make(3, {{1, 1}}), ValidationError);
    CHECK_THROWS_AS(SkeletonTopology::make(0, {}), ValidationError);
    CHECK_THROWS_AS(SkeletonTopology::make(3, {{0, 1}}, PartitionStrategy::spatial, 5), ValidationError);
    CHECK(openpose18_topology().partitions == openpose18_topology().partitions);
    CHECK(ntu25_topology().joint_count == 25);
    CHECK(ntu25_topology().edges.size() == 24u);
    CHECK(openpose18_topology().edges.size() == 17u);
    CHECK(hop_distances({{0, 1}, {1, 2}}, 4, 0) == std::vector<int>{0, 1, 2, -1});
    // an isolated joint keeps only its self connection
    const auto t = SkeletonTopology::make(4, {{0, 1}, {1, 2}});
    double s = 0.0;
    for (const auto& p : t.partitions) s += p(3, 3);
    CHECK(s == doctest::Approx(1.0));
    CHECK_THROWS_AS(parse_partition_strategy("radial"), ValidationError);
}

TEST_CASE("sequence validation") {
    Rng rng(1);
    auto s = random_sequence(rng, {0, 0, 1});
    CHECK_NOTHROW(validate_sequence(s));
    auto bad = s;
    bad.labels.push_back(0);
    CHECK_THROWS_AS(validate_sequence(bad), ValidationError);
    bad = s;
    bad.labels[1] = 3;
    CHECK_THROWS_AS(validate_sequence(bad), ValidationError);
    bad = s;
    bad.frames[0].joint_rotations[0] = bad.frames[0].joint_rotations[0] * 1.01;
    CHECK_THROWS_AS(validate_sequence(bad), ValidationError);
    bad = s;
    bad.frames[2].joint_rotations.pop_back();
    CHECK_THROWS_AS(validate_sequence(bad), ValidationError);
    bad = s;
    bad.frames.clear();
    bad.labels.clear();
    CHECK_THROWS_AS(validate_sequence(bad), ValidationError);
}

TEST_CASE("primitives are maximal runs") {
    Rng rng(2);
    auto s = random_sequence(rng, {0, 0, 1, 1, 1, 0, 2});
    const auto p = extract_primitives(s);
    REQUIRE(p.size() == 4u);
    CHECK(p[0].class_id == 0);
    CHECK(p[0].source_span == FrameSpan{0, 2});
    CHECK(p[1].source_span == FrameSpan{2, 5});
    CHECK(p[1].length() == 3u);
    CHECK(p[1].frames[0] == s.frames[2]);
    CHECK(p[3].class_id == 2);
    const auto no_bg = extract_primitives(s, 0);
    REQUIRE(no_bg.size() == 2u);
    CHECK(no_bg[0].class_id == 1);
    CHECK(no_bg[1].class_id == 2);
}

TEST_CASE("feature tensor layout") {
    Rng rng(3);
    auto s = random_sequence(rng, {0, 1, 2, 1});
    const auto f = to_feature_tensor(s);
    CHECK(f.channels == 4u);
    CHECK(f.frames == 4u);
    CHECK(f.joints == 3u);
    CHECK(f.at(0, 2, 1) == s.frames[2].joint_rotations[1].w);
    CHECK(f.at(3, 3, 2) == s.frames[3].joint_rotations[2].z);
    const auto v = to_feature_tensor(s, {true});
    CHECK(v.joints == 4u);
    CHECK(v.at(0, 1, 3) == s.frames[1].root_position[0]);
    CHECK(v.at(3, 1, 3) == 0.0);
}

TEST_CASE("native and csv round trips are bit exact") {
    Rng rng(4);
    auto s = random_sequence(rng, {0, 0, 1, 2, 2, 2}, 4);
    s.frames[1].root_position[0] = 4.9406564584124654e-324;  // subnormal
    const auto dir = temp_dir("roundtrip");
    save_sequence(s, dir / "s.json");
    CHECK(load_sequence(dir / "s.json") == s);
    CHECK(format_sequence_json(load_sequence(dir / "s.json")) == format_sequence_json(s));

    save_sequence_csv(s, dir / "s.csv");
    CsvSchema schema{s.joint_count, s.edges, s.fps, s.class_names};
    auto c = load_sequence(dir / "s.csv", SequenceFormat::csv_frames, schema);
    c.id = s.id;
    CHECK(c == s);
    CHECK_THROWS_AS(load_sequence(dir / "s.csv", SequenceFormat::csv_frames), ValidationError);
}

TEST_CASE("load renormalizes near-unit quaternions and rejects the rest") {
    Rng rng(5);
    auto s = random_sequence(rng, {0, 1});
    const auto dir = temp_dir("renorm");
    auto near = s;
    near.frames[0].joint_rotations[0] = s.frames[0].joint_rotations[0] * (1.0 + 5e-4);
    write_text_file(dir / "near.json", format_sequence_json(near));
    const auto loaded = load_sequence(dir / "near.json");
    CHECK(loaded.frames[0].joint_rotations[0].norm() == doctest::Approx(1.0).epsilon(1e-15));

    auto far = s;
    far.frames[0].joint_rotations[0] = s.frames[0].joint_rotations[0] * 1.01;
    write_text_file(dir / "far.json", format_sequence_json(far));
    CHECK_THROWS_AS(load_sequence(dir / "far.json"), ValidationError);
}

TEST_CASE("malformed files") {
    const auto dir = temp_dir("malformed");
    write_text_file(dir / "a.json", "{ not json");
    CHECK_THROWS_AS(load_sequence(dir / "a.json"), ParseError);
    write_text_file(dir / "b.json", R"({"format": "other", "version": 1})");
    CHECK_THROWS_AS(load_sequence(dir / "b.json"), ParseError);
    write_text_file(dir / "c.csv", "0,1,0,0,0,0,0,x\n");
    CsvSchema schema{1, {}, 30.0, {"a"}};
    CHECK_THROWS_AS(load_sequence(dir / "c.csv", SequenceFormat::csv_frames, schema), ParseError);
    CHECK_THROWS(load_sequence(dir / "missing.json"));
}

TEST_CASE("csv header row is skipped") {
    const auto dir = temp_dir("csvheader");
    write_text_file(dir / "h.csv", "label,w,x,y,z,rx,ry,rz\n0,1,0,0,0,0,0,0\n1,0,1,0,0,0,0,1\n");
    CsvSchema schema{1, {}, 30.0, {"a", "b"}};
    const auto s = load_sequence(dir / "h.csv", SequenceFormat::csv_frames, schema);
    CHECK(s.length() == 2u);
    CHECK(s.labels == std::vector<int>{0, 1});
    CHECK(s.frames[1].root_position[2] == 1.0);
}

}  // TEST_SUITE
