#include "segforge/checkpoint.hpp"

#include <cstdlib>
#include <sstream>

#include "segforge/errors.hpp"
#include "segforge/sequence_io.hpp"

namespace segforge::ad {

namespace {
constexpr const char* kMagic = "segforge-checkpoint";
}

const NamedArray* Checkpoint::find(const std::string& name) const {
    for (const auto& a : arrays) {
        if (a.name == name) return &a;
    }
    return nullptr;
}

const std::string* Checkpoint::meta_value(const std::string& key) const {
    for (const auto& [k, v] : meta) {
        if (k == key) return &v;
    }
    return nullptr;
}

std::string format_checkpoint(const Checkpoint& ckpt) {
    std::string out = std::string(kMagic) + " " + std::to_string(kCheckpointVersion) + "\n";
    out += "meta " + std::to_string(ckpt.meta.size()) + "\n";
    for (const auto& [k, v] : ckpt.meta) {
        if (k.empty() || k.find_first_of(" \t\n") != std::string::npos || v.find('\n') != std::string::npos) {
            throw ValidationError("checkpoint metadata key/value not representable: '" + k + "'");
        }
        out += k + " " + v + "\n";
    }
    out += "arrays " + std::to_string(ckpt.arrays.size()) + "\n";
    for (const auto& a : ckpt.arrays) {
        if (element_count(a.shape) != a.values.size()) {
            throw ValidationError("checkpoint array '" + a.name + "' has inconsistent shape");
        }
        out += "array " + a.name + " " + std::to_string(a.shape.size());
        for (auto d : a.shape) out += " " + std::to_string(d);
        out += "\n";
        for (std::size_t i = 0; i < a.values.size(); ++i) {
            if (i) out += " ";
            out += format_real(a.values[i]);
        }
        out += "\n";
    }
    out += "end\n";
    return out;
}

Checkpoint parse_checkpoint(const std::string& text) {
    std::istringstream in(text);
    auto fail = [](const std::string& what) { return ParseError("checkpoint: " + what); };

    std::string magic;
    int version = 0;
    if (!(in >> magic >> version) || magic != kMagic) throw fail("bad header");
    if (version != kCheckpointVersion) throw fail("unsupported version " + std::to_string(version));

    Checkpoint ckpt;
    std::string word;
    std::size_t count = 0;
    if (!(in >> word >> count) || word != "meta") throw fail("expected meta section");
    for (std::size_t i = 0; i < count; ++i) {
        std::string key, value;
        if (!(in >> key)) throw fail("truncated metadata");
        std::getline(in, value);
        if (!value.empty() && value.front() == ' ') value.erase(0, 1);
        ckpt.meta.emplace_back(std::move(key), std::move(value));
    }
    if (!(in >> word >> count) || word != "arrays") throw fail("expected arrays section");
    for (std::size_t i = 0; i < count; ++i) {
        NamedArray a;
        std::size_t rank = 0;
        if (!(in >> word >> a.name >> rank) || word != "array") throw fail("bad array header");
        a.shape.resize(rank);
        for (auto& d : a.shape) {
            if (!(in >> d)) throw fail("bad shape for '" + a.name + "'");
        }
        a.values.resize(element_count(a.shape));
        for (auto& v : a.values) {
            std::string tok;
            if (!(in >> tok)) throw fail("truncated values for '" + a.name + "'");
            char* end = nullptr;
            v = std::strtod(tok.c_str(), &end);
            if (end != tok.c_str() + tok.size()) throw fail("bad value '" + tok + "' in '" + a.name + "'");
        }
        ckpt.arrays.push_back(std::move(a));
    }
    if (!(in >> word) || word != "end") throw fail("missing end marker");
    return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    write_text_file(path, format_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw IoError("no such checkpoint '" + path.string() + "'");
    }
    return parse_checkpoint(read_text_file(path));
}

}  // namespace segforge::ad
