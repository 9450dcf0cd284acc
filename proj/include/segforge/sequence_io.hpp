#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "segforge/sequence.hpp"

namespace segforge {

enum class SequenceFormat { native_json, csv_frames };

/// `.csv` selects csv_frames, anything else native_json.
SequenceFormat format_from_path(const std::filesystem::path& path);

/// Skeleton and vocabulary for CSV files, which carry only per-frame rows.
struct CsvSchema {
    int joint_count = 0;
    std::vector<Edge> edges;
    double fps = 30.0;
    std::vector<std::string> class_names;
};

/// Quaternions within this distance of unit norm are accepted on load.
inline constexpr double kLoadNormTolerance = 1e-3;

/// Loads and validates a sequence. Quaternions whose norm is off by at most
/// kLoadNormTolerance are re-normalized (values already unit to 1e-12 are kept
/// bit-for-bit so that save/load round-trips exactly).
///
/// Throws ParseError on malformed input and ValidationError on invariant
/// violations. CSV input requires `schema`.
LabeledSequence load_sequence(const std::filesystem::path& path,
                              SequenceFormat format = SequenceFormat::native_json,
                              const std::optional<CsvSchema>& schema = std::nullopt);

LabeledSequence parse_sequence_json(const std::string& text);
std::string format_sequence_json(const LabeledSequence& seq);

/// Writes the native format; reals use the shortest round-trip form, so output is
/// deterministic and reloads exactly.
void save_sequence(const LabeledSequence& seq, const std::filesystem::path& path);

/// Rows: label, N x (w, x, y, z), root x, y, z.
void save_sequence_csv(const LabeledSequence& seq, const std::filesystem::path& path);

/// Shortest decimal form that reads back to the same double.
std::string format_real(double v);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace segforge
