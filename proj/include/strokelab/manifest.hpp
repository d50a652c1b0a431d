#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "strokelab/error.hpp"
#include "strokelab/rng.hpp"
#include "strokelab/version.hpp"

namespace strokelab {

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << content;
    if (!out) throw Error("write failed for '" + path.string() + "'");
}

/// Non-cryptographic content fingerprint (FNV-1a 64) as "fnv1a64:<hex>".
inline std::string content_hash(std::string_view bytes) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "fnv1a64:%016llx",
                  static_cast<unsigned long long>(rng::fnv1a64(bytes)));
    return buf;
}

/// One manifest per artifact-producing run: the command, its config echo,
/// input and output hashes, and wall time (the only field allowed to vary
/// between identical runs).
struct RunManifest {
    std::string command;
    nlohmann::json config = nlohmann::json::object();
    std::map<std::string, std::string> inputs;   // path -> hash
    std::map<std::string, std::string> outputs;  // path -> hash
    double wall_time_s = 0.0;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["command"] = command;
        j["config"] = config;
        j["inputs"] = inputs;
        j["outputs"] = outputs;
        j["wall_time_s"] = wall_time_s;
        j["tool_version"] = version();
        return j;
    }
};

inline void write_manifest(const std::filesystem::path& path, const RunManifest& m) {
    write_text_file(path, m.to_json().dump(2) + "\n");
}

/// Wall-clock scope for manifest timing.
class WallTimer {
public:
    WallTimer() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

} // namespace strokelab
