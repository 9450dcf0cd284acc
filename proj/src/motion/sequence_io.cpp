#include "segforge/sequence_io.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "segforge/errors.hpp"

namespace segforge {

namespace {

constexpr const char* kFormatTag = "segforge-sequence";
constexpr int kFormatVersion = 1;

Quaternion accept_quaternion(Quaternion q) {
    const double n = q.norm();
    if (!std::isfinite(n) || std::abs(n - 1.0) > kLoadNormTolerance) {
        throw ValidationError("quaternion norm " + std::to_string(n) + " outside load tolerance");
    }
    if (std::abs(n - 1.0) > 1e-12) {
        q = q * (1.0 / n);
    }
    return q;
}

std::string quoted(const std::string& s) { return nlohmann::json(s).dump(); }

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        // Trim surrounding whitespace and a trailing CR.
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string{} : cell.substr(b, e - b + 1));
    }
    return out;
}

double parse_double(const std::string& s, std::size_t line_no) {
    // strtod rather than stod: subnormal values must not be rejected.
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size()) {
        throw ParseError("line " + std::to_string(line_no) + ": '" + s + "' is not a number");
    }
    return v;
}

}  // namespace

SequenceFormat format_from_path(const std::filesystem::path& path) {
    return path.extension() == ".csv" ? SequenceFormat::csv_frames : SequenceFormat::native_json;
}

std::string format_real(double v) {
    // shortest text that parses back to the same double
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path.string() + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write '" + path.string() + "'");
    }
    out << text;
    if (!out) {
        throw IoError("write failed for '" + path.string() + "'");
    }
}

LabeledSequence parse_sequence_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("malformed sequence file: ") + e.what());
    }

    LabeledSequence seq;
    try {
        if (j.value("format", std::string{}) != kFormatTag) {
            throw ParseError("missing or wrong \"format\" tag");
        }
        if (j.at("version").get<int>() != kFormatVersion) {
            throw ParseError("unsupported sequence format version");
        }
        seq.id = j.value("id", std::string{});
        seq.joint_count = j.at("joint_count").get<int>();
        for (const auto& e : j.at("edges")) {
            seq.edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
        }
        seq.fps = j.at("fps").get<double>();
        seq.class_names = j.at("class_names").get<std::vector<std::string>>();
        seq.labels = j.at("labels").get<std::vector<int>>();
        for (const auto& fj : j.at("frames")) {
            MotionFrame f;
            const auto& root = fj.at("root");
            if (root.size() != 3) throw ParseError("root position must have 3 components");
            for (std::size_t c = 0; c < 3; ++c) f.root_position[c] = root.at(c).get<double>();
            for (const auto& qj : fj.at("rotations")) {
                if (qj.size() != 4) throw ParseError("quaternion must have 4 components");
                f.joint_rotations.push_back(accept_quaternion(
                    {qj[0].get<double>(), qj[1].get<double>(), qj[2].get<double>(), qj[3].get<double>()}));
            }
            seq.frames.push_back(std::move(f));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed sequence file: ") + e.what());
    }
    validate_sequence(seq);
    return seq;
}

std::string format_sequence_json(const LabeledSequence& seq) {
    std::string out;
    out += "{\n";
    out += "\"format\": \"" + std::string(kFormatTag) + "\",\n";
    out += "\"version\": " + std::to_string(kFormatVersion) + ",\n";
    out += "\"id\": " + quoted(seq.id) + ",\n";
    out += "\"joint_count\": " + std::to_string(seq.joint_count) + ",\n";
    out += "\"edges\": [";
    for (std::size_t i = 0; i < seq.edges.size(); ++i) {
        if (i) out += ", ";
        out += "[" + std::to_string(seq.edges[i].first) + ", " + std::to_string(seq.edges[i].second) + "]";
    }
    out += "],\n";
    out += "\"fps\": " + format_real(seq.fps) + ",\n";
    out += "\"class_names\": [";
    for (std::size_t i = 0; i < seq.class_names.size(); ++i) {
        if (i) out += ", ";
        out += quoted(seq.class_names[i]);
    }
    out += "],\n";
    out += "\"labels\": [";
    for (std::size_t i = 0; i < seq.labels.size(); ++i) {
        if (i) out += ", ";
        out += std::to_string(seq.labels[i]);
    }
    out += "],\n";
    out += "\"frames\": [\n";
    for (std::size_t t = 0; t < seq.frames.size(); ++t) {
        const auto& f = seq.frames[t];
        out += "{\"root\": [" + format_real(f.root_position[0]) + ", " +
               format_real(f.root_position[1]) + ", " + format_real(f.root_position[2]) +
               "], \"rotations\": [";
        for (std::size_t n = 0; n < f.joint_rotations.size(); ++n) {
            const auto& q = f.joint_rotations[n];
            if (n) out += ", ";
            out += "[" + format_real(q.w) + ", " + format_real(q.x) + ", " + format_real(q.y) +
                   ", " + format_real(q.z) + "]";
        }
        out += t + 1 < seq.frames.size() ? "]},\n" : "]}\n";
    }
    out += "]\n}\n";
    return out;
}

void save_sequence(const LabeledSequence& seq, const std::filesystem::path& path) {
    write_text_file(path, format_sequence_json(seq));
}

void save_sequence_csv(const LabeledSequence& seq, const std::filesystem::path& path) {
    std::string out;
    for (std::size_t t = 0; t < seq.frames.size(); ++t) {
        out += std::to_string(seq.labels[t]);
        for (const auto& q : seq.frames[t].joint_rotations) {
            out += "," + format_real(q.w) + "," + format_real(q.x) + "," + format_real(q.y) + "," +
                   format_real(q.z);
        }
        for (double v : seq.frames[t].root_position) out += "," + format_real(v);
        out += "\n";
    }
    write_text_file(path, out);
}

namespace {

LabeledSequence load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
    LabeledSequence seq;
    seq.id = path.stem().string();
    seq.joint_count = schema.joint_count;
    seq.edges = schema.edges;
    seq.fps = schema.fps;
    seq.class_names = schema.class_names;

    const std::size_t n = static_cast<std::size_t>(schema.joint_count);
    const std::size_t expected_cols = 1 + 4 * n + 3;
    std::istringstream in(read_text_file(path));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto cells = split_csv_line(line);
        if (line_no == 1 && !cells.empty() && !cells[0].empty() &&
            !(std::isdigit(static_cast<unsigned char>(cells[0][0])) || cells[0][0] == '-')) {
            continue;  // header row
        }
        if (cells.size() != expected_cols) {
            throw ParseError("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(expected_cols) + " columns, got " +
                             std::to_string(cells.size()));
        }
        const double label = parse_double(cells[0], line_no);
        if (label != std::floor(label)) {
            throw ParseError("line " + std::to_string(line_no) + ": label is not an integer");
        }
        seq.labels.push_back(static_cast<int>(label));
        MotionFrame f;
        for (std::size_t j = 0; j < n; ++j) {
            const std::size_t c = 1 + 4 * j;
            f.joint_rotations.push_back(accept_quaternion(
                {parse_double(cells[c], line_no), parse_double(cells[c + 1], line_no),
                 parse_double(cells[c + 2], line_no), parse_double(cells[c + 3], line_no)}));
        }
        for (std::size_t k = 0; k < 3; ++k) {
            f.root_position[k] = parse_double(cells[1 + 4 * n + k], line_no);
        }
        seq.frames.push_back(std::move(f));
    }
    validate_sequence(seq);
    return seq;
}

}  // namespace

LabeledSequence load_sequence(const std::filesystem::path& path, SequenceFormat format,
                              const std::optional<CsvSchema>& schema) {
    if (!std::filesystem::exists(path)) {
        throw IoError("no such file '" + path.string() + "'");
    }
    if (format == SequenceFormat::csv_frames) {
        if (!schema) {
            throw ValidationError("CSV input requires a skeleton/class schema");
        }
        return load_csv(path, *schema);
    }
    return parse_sequence_json(read_text_file(path));
}

}  // namespace segforge
