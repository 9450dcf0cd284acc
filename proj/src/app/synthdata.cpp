#include "segforge/app/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "segforge/errors.hpp"
#include "segforge/random.hpp"
#include "segforge/sequence_io.hpp"

namespace segforge::app {

namespace {

constexpr double kTwoPi = 6.283185307179586;
constexpr double kSeparationWindow = 2.0;  // seconds

std::string numbered(const char* prefix, int i) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%03d", prefix, i);
    return buf;
}

Vec3 random_axis(Rng& rng) {
    for (;;) {
        Vec3 a{standard_normal(rng), standard_normal(rng), standard_normal(rng)};
        const double n = std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]);
        if (n > 1e-3) return {a[0] / n, a[1] / n, a[2] / n};
    }
}

std::vector<int> random_order(Rng& rng, int classes, int segments) {
    std::vector<int> order;
    for (int s = 0; s < segments; ++s) {
        int c;
        do {
            c = static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(classes)));
        } while (!order.empty() && c == order.back());
        order.push_back(c);
    }
    return order;
}

LabeledSequence make_recording(const ToySpec& spec, const std::vector<std::vector<JointMotion>>& family,
                               const std::vector<int>& order, std::string id, Rng& rng) {
    LabeledSequence seq;
    seq.id = std::move(id);
    seq.joint_count = spec.joints;
    seq.edges = toy_edges(spec.joints);
    seq.fps = spec.fps;
    for (int c = 0; c < spec.classes; ++c) seq.class_names.push_back(numbered("action", c));

    for (int c : order) {
        const auto span = static_cast<std::uint64_t>(spec.max_length - spec.min_length + 1);
        const int length = spec.min_length + static_cast<int>(uniform_below(rng, span));
        const double start = uniform_real(rng, 0.0, 1.0);  // seconds into the class cycle
        for (int f = 0; f < length; ++f) {
            const double time = start + f / spec.fps;
            MotionFrame frame;
            for (int j = 0; j < spec.joints; ++j) {
                const auto& m = family[c][j];
                const double angle = m.offset + m.amplitude * std::sin(kTwoPi * m.frequency * time + m.phase) +
                                     spec.noise * standard_normal(rng);
                frame.joint_rotations.push_back(Quaternion::from_axis_angle(m.axis, angle));
            }
            frame.root_position = {spec.noise * standard_normal(rng), spec.noise * standard_normal(rng),
                                   1.0 + spec.noise * standard_normal(rng)};
            seq.frames.push_back(std::move(frame));
            seq.labels.push_back(c);
        }
    }
    validate_sequence(seq);
    return seq;
}

}  // namespace

void ToySpec::validate() const {
    if (classes < 2) throw ValidationError("toy spec needs at least 2 classes");
    if (joints < 1) throw ValidationError("toy spec needs at least 1 joint");
    if (min_length < 1 || max_length < min_length) throw ValidationError("toy spec has a bad length range");
    if (train_sequences < 0 || test_sequences < 0) throw ValidationError("toy spec sequence counts must be >= 0");
    if (segments < 1) throw ValidationError("toy spec needs at least one segment per sequence");
    if (!(noise >= 0.0)) throw ValidationError("toy spec noise must be >= 0");
    if (!(fps > 0.0)) throw ValidationError("toy spec fps must be > 0");
    for (std::size_t i = 0; i < train_class_order.size(); ++i) {
        const int c = train_class_order[i];
        if (c < 0 || c >= classes) throw ValidationError("toy spec class order names an unknown class");
        if (i && c == train_class_order[i - 1]) {
            throw ValidationError("toy spec class order repeats a class in adjacent segments");
        }
    }
}

std::vector<Edge> toy_edges(int joints) {
    std::vector<Edge> edges;
    for (int j = 1; j < joints; ++j) edges.emplace_back((j - 1) / 2, j);
    return edges;
}

std::vector<std::vector<JointMotion>> motion_family(const ToySpec& spec) {
    Rng rng = derived_rng(spec.seed, 0);
    std::vector<std::vector<JointMotion>> family(spec.classes);
    for (auto& joints : family) {
        for (int j = 0; j < spec.joints; ++j) {
            JointMotion m;
            m.axis = random_axis(rng);
            m.offset = uniform_real(rng, -0.8, 0.8);
            m.amplitude = uniform_real(rng, 0.2, 0.6);
            m.frequency = uniform_real(rng, 0.5, 1.5);
            m.phase = uniform_real(rng, 0.0, kTwoPi);
            joints.push_back(m);
        }
    }
    return family;
}

Quaternion joint_rotation(const JointMotion& m, double seconds) {
    return Quaternion::from_axis_angle(m.axis, m.offset + m.amplitude * std::sin(kTwoPi * m.frequency * seconds + m.phase));
}

double class_separation(const ToySpec& spec) {
    const auto family = motion_family(spec);
    const int samples = static_cast<int>(std::ceil(kSeparationWindow * spec.fps));
    double best = std::numeric_limits<double>::infinity();
    for (int a = 0; a < spec.classes; ++a) {
        for (int b = a + 1; b < spec.classes; ++b) {
            double total = 0.0;
            for (int j = 0; j < spec.joints; ++j) {
                for (int s = 0; s < samples; ++s) {
                    const double t = s / spec.fps;
                    total += rotation_angle_between(joint_rotation(family[a][j], t), joint_rotation(family[b][j], t));
                }
            }
            best = std::min(best, total / (spec.joints * samples));
        }
    }
    return best;
}

ToyDataset generate_toy_dataset(const ToySpec& spec) {
    spec.validate();
    const auto family = motion_family(spec);
    for (int a = 0; a < spec.classes; ++a) {
        for (int b = a + 1; b < spec.classes; ++b) {
            if (family[a] == family[b]) throw ValidationError("toy spec classes share motion parameters");
        }
    }
    const double sep = class_separation(spec);
    if (!(sep > spec.noise)) {
        throw ValidationError("toy spec classes are not separable: separation " + format_real(sep) +
                              " <= noise " + format_real(spec.noise));
    }

    ToyDataset data;
    for (int i = 0; i < spec.train_sequences; ++i) {
        Rng rng = derived_rng(spec.seed, 1000 + static_cast<std::uint64_t>(i));
        auto order = spec.train_class_order.empty() ? random_order(rng, spec.classes, spec.segments)
                                                    : spec.train_class_order;
        data.train.push_back(make_recording(spec, family, order, numbered("train", i), rng));
    }
    for (int i = 0; i < spec.test_sequences; ++i) {
        Rng rng = derived_rng(spec.seed, 2000 + static_cast<std::uint64_t>(i));
        auto order = random_order(rng, spec.classes, spec.segments);
        data.test.push_back(make_recording(spec, family, order, numbered("test", i), rng));
    }
    return data;
}

std::vector<std::filesystem::path> read_path_list(const std::filesystem::path& list) {
    if (!std::filesystem::exists(list)) throw ValidationError("list file '" + list.string() + "' does not exist");
    std::ifstream in(list);
    std::vector<std::filesystem::path> out;
    std::string line;
    while (std::getline(in, line)) {
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        line = line.substr(b, line.find_last_not_of(" \t\r") - b + 1);
        std::filesystem::path p(line);
        out.push_back(p.is_absolute() ? p : list.parent_path() / p);
    }
    return out;
}

void write_path_list(const std::filesystem::path& list, const std::vector<std::filesystem::path>& paths) {
    std::string text;
    for (const auto& p : paths) {
        text += (p.is_absolute() ? p.lexically_relative(list.parent_path()) : p).generic_string() + "\n";
    }
    write_text_file(list, text);
}

void write_toy_dataset(const ToyDataset& data, const std::filesystem::path& dir) {
    for (const auto& [name, set] : {std::pair{"train", &data.train}, std::pair{"test", &data.test}}) {
        std::vector<std::filesystem::path> paths;
        std::filesystem::create_directories(dir / name);
        for (const auto& seq : *set) {
            const auto rel = std::filesystem::path(name) / (seq.id + ".json");
            save_sequence(seq, dir / rel);
            paths.push_back(rel);
        }
        write_path_list(dir / (std::string(name) + ".list"), paths);
    }
}

}  // namespace segforge::app
