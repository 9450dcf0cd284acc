#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace segforge::app {

/// Flat `section.key -> value` settings read from an INI file, with
/// `--set section.key=value` overrides. Every lookup records the value it
/// resolved to (defaults included) so a run can echo its full config.
class Config {
public:
    static Config load(const std::filesystem::path& path);
    static Config parse(const std::string& text);

    void set(const std::string& key, const std::string& value);
    /// "key=value".
    void apply_override(const std::string& assignment);

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::string get_string(const std::string& key, const std::string& fallback) const;
    std::string require_string(const std::string& key) const;
    std::optional<std::string> get_optional(const std::string& key) const;
    long long get_int(const std::string& key, long long fallback) const;
    std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
    double get_double(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<std::string> get_list(const std::string& key) const;
    std::vector<double> get_double_list(const std::string& key, const std::vector<double>& fallback) const;

    /// Throws ValidationError naming any key that no lookup consumed.
    void check_all_used() const;

    /// Resolved values as INI text, sections sorted.
    std::string format_resolved() const;
    const std::map<std::string, std::string>& values() const { return values_; }

private:
    void record(const std::string& key, const std::string& value) const;

    std::map<std::string, std::string> values_;
    mutable std::map<std::string, std::string> resolved_;
    mutable std::set<std::string> used_;
};

/// Splits on commas and trims whitespace; empty items are dropped.
std::vector<std::string> split_list(const std::string& text);

}  // namespace segforge::app
