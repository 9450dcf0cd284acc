#include "segforge/app/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cerrno>
#include <cstdlib>
#include <sstream>

#include "segforge/errors.hpp"
#include "segforge/sequence_io.hpp"

namespace segforge::app {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

void flatten(const boost::property_tree::ptree& tree, const std::string& prefix,
             std::map<std::string, std::string>& out) {
    for (const auto& [name, child] : tree) {
        const std::string key = prefix.empty() ? name : prefix + "." + name;
        if (child.empty()) {
            out[key] = trim(child.data());
        } else {
            flatten(child, key, out);
        }
    }
}

}  // namespace

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

Config Config::parse(const std::string& text) {
    boost::property_tree::ptree tree;
    std::istringstream in(text);
    try {
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ParseError("config: " + std::string(e.what()));
    }
    Config c;
    flatten(tree, "", c.values_);
    return c;
}

Config Config::load(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw ValidationError("config file '" + path.string() + "' does not exist");
    }
    return parse(read_text_file(path));
}

void Config::set(const std::string& key, const std::string& value) {
    if (key.empty()) throw ValidationError("config key is empty");
    values_[key] = value;
}

void Config::apply_override(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) {
        throw ValidationError("override '" + assignment + "' is not of the form key=value");
    }
    set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void Config::record(const std::string& key, const std::string& value) const {
    used_.insert(key);
    resolved_[key] = value;
}

std::optional<std::string> Config::get_optional(const std::string& key) const {
    used_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end() || it->second.empty()) return std::nullopt;
    resolved_[key] = it->second;
    return it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    const std::string v = it == values_.end() ? fallback : it->second;
    record(key, v);
    return v;
}

std::string Config::require_string(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end() || it->second.empty()) {
        throw ValidationError("config key '" + key + "' is required");
    }
    record(key, it->second);
    return it->second;
}

long long Config::get_int(const std::string& key, long long fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) {
        record(key, std::to_string(fallback));
        return fallback;
    }
    errno = 0;
    char* end = nullptr;
    const long long v = std::strtoll(it->second.c_str(), &end, 10);
    if (it->second.empty() || *end != '\0' || errno == ERANGE) {
        throw ValidationError("config key '" + key + "' expects an integer, got '" + it->second + "'");
    }
    record(key, it->second);
    return v;
}

std::uint64_t Config::get_uint(const std::string& key, std::uint64_t fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) {
        record(key, std::to_string(fallback));
        return fallback;
    }
    errno = 0;
    char* end = nullptr;
    const auto v = std::strtoull(it->second.c_str(), &end, 10);
    if (it->second.empty() || it->second.front() == '-' || *end != '\0' || errno == ERANGE) {
        throw ValidationError("config key '" + key + "' expects a non-negative integer, got '" + it->second + "'");
    }
    record(key, it->second);
    return v;
}

double Config::get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) {
        record(key, format_real(fallback));
        return fallback;
    }
    char* end = nullptr;
    const double v = std::strtod(it->second.c_str(), &end);
    if (it->second.empty() || *end != '\0') {
        throw ValidationError("config key '" + key + "' expects a number, got '" + it->second + "'");
    }
    record(key, it->second);
    return v;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) {
        record(key, fallback ? "true" : "false");
        return fallback;
    }
    const auto& v = it->second;
    bool out;
    if (v == "true" || v == "1" || v == "yes" || v == "on") {
        out = true;
    } else if (v == "false" || v == "0" || v == "no" || v == "off") {
        out = false;
    } else {
        throw ValidationError("config key '" + key + "' expects true/false, got '" + v + "'");
    }
    record(key, out ? "true" : "false");
    return out;
}

std::vector<std::string> Config::get_list(const std::string& key) const {
    auto it = values_.find(key);
    const std::string v = it == values_.end() ? "" : it->second;
    record(key, v);
    return split_list(v);
}

std::vector<double> Config::get_double_list(const std::string& key, const std::vector<double>& fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) {
        std::string text;
        for (double d : fallback) text += (text.empty() ? "" : ",") + format_real(d);
        record(key, text);
        return fallback;
    }
    std::vector<double> out;
    for (const auto& item : split_list(it->second)) {
        char* end = nullptr;
        const double d = std::strtod(item.c_str(), &end);
        if (*end != '\0') throw ValidationError("config key '" + key + "' has a non-numeric item '" + item + "'");
        out.push_back(d);
    }
    record(key, it->second);
    return out;
}

void Config::check_all_used() const {
    for (const auto& [k, v] : values_) {
        if (!used_.count(k)) throw ValidationError("unknown config key '" + k + "'");
    }
}

std::string Config::format_resolved() const {
    std::map<std::string, std::vector<std::pair<std::string, std::string>>> sections;
    for (const auto& [k, v] : resolved_) {
        const auto dot = k.find('.');
        if (dot == std::string::npos) {
            sections[""].emplace_back(k, v);
        } else {
            sections[k.substr(0, dot)].emplace_back(k.substr(dot + 1), v);
        }
    }
    std::string out;
    for (const auto& [name, entries] : sections) {
        if (!name.empty()) out += (out.empty() ? "[" : "\n[") + name + "]\n";
        for (const auto& [k, v] : entries) out += k + " = " + v + "\n";
    }
    return out;
}

}  // namespace segforge::app
