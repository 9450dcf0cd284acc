#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "segforge/autodiff.hpp"

namespace segforge::ad {

struct NamedArray {
    std::string name;
    Shape shape;
    std::vector<double> values;

    bool operator==(const NamedArray&) const = default;
};

/// Flat list of named arrays plus string metadata.
///
/// Text layout:
///   segforge-checkpoint 1
///   meta <count>
///   <key> <value>            (one per line, value runs to end of line)
///   arrays <count>
///   array <name> <rank> <dims...>
///   <values, shortest round-trip form, space separated>
///   end
struct Checkpoint {
    std::vector<std::pair<std::string, std::string>> meta;
    std::vector<NamedArray> arrays;

    const NamedArray* find(const std::string& name) const;
    const std::string* meta_value(const std::string& key) const;

    bool operator==(const Checkpoint&) const = default;
};

inline constexpr int kCheckpointVersion = 1;

std::string format_checkpoint(const Checkpoint& ckpt);
/// Throws ParseError on malformed input or an unsupported version.
Checkpoint parse_checkpoint(const std::string& text);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace segforge::ad
