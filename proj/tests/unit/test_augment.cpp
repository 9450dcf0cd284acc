#include <doctest.h>

#include <algorithm>
#include <set>

#include "segforge/augment.hpp"
#include "segforge/errors.hpp"
#include "segforge/random.hpp"

using namespace segforge;

namespace {

// One recording whose primitives follow `order`, each `len` frames long.
LabeledSequence recording(const std::string& id, const std::vector<int>& order, std::size_t len,
                          std::uint64_t seed, int classes = 10) {
    Rng rng(seed);
    LabeledSequence s;
    s.id = id;
    s.joint_count = 2;
    s.edges = {{0, 1}};
    for (int c = 0; c < classes; ++c) s.class_names.push_back("c" + std::to_string(c));
    for (int c : order) {
        for (std::size_t t = 0; t < len; ++t) {
            MotionFrame f;
            for (int j = 0; j < 2; ++j) {
                f.joint_rotations.push_back(Quaternion::from_axis_angle(
                    {standard_normal(rng), standard_normal(rng), 1.0}, uniform_real(rng, -1, 1)));
            }
            s.frames.push_back(f);
            s.labels.push_back(c);
        }
    }
    return s;
}

std::vector<int> iota_order(int n) {
    std::vector<int> v(n);
    for (int i = 0; i < n; ++i) v[i] = i;
    return v;
}

}  // namespace

TEST_SUITE("augment") {

TEST_CASE("count_combinations") {
    CHECK(count_combinations(2, 10) == 1024);
    CHECK(count_combinations(1, 7) == 1);
    CHECK(count_combinations(5, 3) == 125);
    CHECK(count_combinations(3, 2) == 9);
    CHECK(count_combinations(2, 62) == (std::int64_t{1} << 62));
    CHECK_THROWS_AS(count_combinations(2, 63), ValidationError);
    CHECK_THROWS_AS(count_combinations(0, 3), ValidationError);
    CHECK_THROWS_AS(count_combinations(3, 0), ValidationError);
}

TEST_CASE("exhaustive ordered enumeration is lexicographic") {
    const std::vector<LabeledSequence> pool{recording("s1", {0, 1}, 3, 1, 2), recording("s2", {0, 1}, 4, 2, 2)};
    AugmentOptions opt;
    opt.splice.transition_frames = 2;
    const auto plan = plan_augmentation(pool, opt);
    CHECK(plan.combinations() == 4);
    const auto out = synthesize(plan);
    REQUIRE(out.size() == 4u);
    const std::vector<std::vector<std::string>> expect{{"s1", "s1"}, {"s1", "s2"}, {"s2", "s1"}, {"s2", "s2"}};
    for (std::size_t i = 0; i < 4; ++i) {
        const auto& rec = out[i].record;
        REQUIRE(rec.slots.size() == 2u);
        CHECK(rec.slots[0].source_id == expect[i][0]);
        CHECK(rec.slots[1].source_id == expect[i][1]);
        CHECK(rec.index == i);
        const std::size_t l0 = rec.slots[0].source_id == "s1" ? 3 : 4;
        const std::size_t l1 = rec.slots[1].source_id == "s1" ? 3 : 4;
        CHECK(out[i].sequence.length() == l0 + 2 + l1);
        CHECK(rec.transitions.size() == 1u);
        CHECK_NOTHROW(validate_sequence(out[i].sequence));
    }
    // the all-s1 output re-splices the original
    CHECK(out[0].sequence.frames[0] == pool[0].frames[0]);
    CHECK(out[0].sequence.frames.back() == pool[0].frames.back());
}

TEST_CASE("2 sources x 10 classes gives 1024 distinct outputs") {
    const std::vector<LabeledSequence> pool{recording("a", iota_order(10), 2, 3),
                                            recording("b", iota_order(10), 3, 4)};
    AugmentOptions opt;
    opt.splice.transition_frames = 1;
    const auto plan = plan_augmentation(pool, opt);
    CHECK(plan.slot_count() == 10u);
    const auto out = synthesize(plan);
    REQUIRE(out.size() == 1024u);
    std::set<std::vector<std::size_t>> seen;
    for (const auto& o : out) {
        std::vector<std::size_t> key;
        for (const auto& s : o.record.slots) {
            key.push_back(s.source_index);
            CHECK(s.class_id == static_cast<int>(s.slot));
        }
        seen.insert(key);
        // primitive classes in order, labels traceable to slots or transitions
        std::size_t labelled = 0;
        for (const auto& s : o.record.slots) {
            for (std::size_t t = s.output_span.begin; t < s.output_span.end; ++t) {
                CHECK(o.sequence.labels[t] == s.class_id);
                ++labelled;
            }
        }
        for (const auto& tr : o.record.transitions) labelled += tr.length();
        CHECK(labelled == o.sequence.length());
    }
    CHECK(seen.size() == 1024u);
}

TEST_CASE("sampling is seeded, sorted and without replacement") {
    const std::vector<LabeledSequence> pool{recording("a", iota_order(6), 2, 5, 6),
                                            recording("b", iota_order(6), 2, 6, 6)};
    AugmentOptions opt;
    opt.selection = Selection::sample(20, 7);
    const auto plan = plan_augmentation(pool, opt);
    const auto idx = plan.output_indices();
    REQUIRE(idx.size() == 20u);
    CHECK(std::is_sorted(idx.begin(), idx.end()));
    CHECK(std::set<std::uint64_t>(idx.begin(), idx.end()).size() == 20u);
    CHECK(idx == plan_augmentation(pool, opt).output_indices());
    const auto a = synthesize(plan), b = synthesize(plan);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].sequence == b[i].sequence);
        CHECK(a[i].record == b[i].record);
    }
    opt.selection = Selection::sample(65, 1);
    CHECK_THROWS_AS(plan_augmentation(pool, opt), ValidationError);
    opt.selection = Selection::sample(0, 1);
    CHECK_THROWS_AS(plan_augmentation(pool, opt), ValidationError);
}

TEST_CASE("validation failures") {
    AugmentOptions opt;
    CHECK_THROWS_AS(plan_augmentation({}, opt), ValidationError);
    const auto a = recording("a", {0, 1, 2}, 2, 1);
    const auto b = recording("b", {1, 0, 2}, 2, 2);
    CHECK_THROWS_AS(plan_augmentation({a, b}, opt), ValidationError);
    auto c = a;
    c.joint_count = 3;
    for (auto& f : c.frames) f.joint_rotations.push_back(Quaternion::identity());
    CHECK_THROWS_AS(plan_augmentation({a, c}, opt), ValidationError);
    auto d = a;
    d.class_names.back() = "other";
    CHECK_THROWS_AS(plan_augmentation({a, d}, opt), ValidationError);

    opt.mode = AugmentMode::unordered;
    CHECK_NOTHROW(plan_augmentation({a, b}, opt));
    const auto e = recording("e", {0, 1, 3}, 2, 3);
    CHECK_THROWS_AS(plan_augmentation({a, e}, opt), ValidationError);
}

TEST_CASE("unordered mode permutes slots per output, deterministically") {
    const std::vector<LabeledSequence> pool{recording("a", {0, 1, 2, 3}, 2, 8, 4),
                                            recording("b", {3, 2, 1, 0}, 2, 9, 4)};
    AugmentOptions opt;
    opt.mode = AugmentMode::unordered;
    opt.permutation_seed = 42;
    opt.splice.transition_frames = 1;
    const auto plan = plan_augmentation(pool, opt);
    CHECK(plan.combinations() == 16);
    const auto out = synthesize(plan);
    std::set<std::vector<int>> orders;
    for (const auto& o : out) {
        std::vector<int> classes;
        for (const auto& s : o.record.slots) classes.push_back(s.class_id);
        std::vector<int> sorted = classes;
        std::sort(sorted.begin(), sorted.end());
        CHECK(sorted == std::vector<int>{0, 1, 2, 3});
        orders.insert(classes);
        // output spans follow the concatenation order
        for (std::size_t i = 1; i < o.record.slots.size(); ++i) {
            CHECK(o.record.slots[i].output_span.begin > o.record.slots[i - 1].output_span.begin);
        }
    }
    CHECK(orders.size() > 1u);
    const auto again = synthesize(plan_augmentation(pool, opt));
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(again[i].record == out[i].record);
}

TEST_CASE("background primitives are dropped before slotting") {
    const auto a = recording("a", {0, 1, 0, 2, 0}, 2, 1, 3);
    const auto b = recording("b", {0, 1, 0, 2}, 3, 2, 3);
    AugmentOptions opt;
    opt.background = 0;
    const auto plan = plan_augmentation({a, b}, opt);
    CHECK(plan.slots == std::vector<int>{1, 2});
}

TEST_CASE("sources are not modified and outputs are copies") {
    const std::vector<LabeledSequence> pool{recording("a", {0, 1}, 2, 1, 2), recording("b", {0, 1}, 2, 2, 2)};
    const auto before = pool;
    auto out = synthesize(plan_augmentation(pool, {}));
    out[0].sequence.frames[0].joint_rotations[0] = Quaternion{0, 1, 0, 0};
    CHECK(pool[0] == before[0]);
    CHECK(pool[1] == before[1]);
}

TEST_CASE("manifest lines round trip") {
    const std::vector<LabeledSequence> pool{recording("a", {0, 1, 2}, 2, 1, 3), recording("b", {0, 1, 2}, 2, 2, 3)};
    for (const auto& o : synthesize(plan_augmentation(pool, {}))) {
        const auto line = format_manifest_line(o.record);
        CHECK(line.find('\n') == std::string::npos);
        CHECK(parse_manifest_line(line) == o.record);
    }
    CHECK_THROWS_AS(parse_manifest_line("{oops"), ParseError);
}

}  // TEST_SUITE
