#pragma once

// Run manifests: what a command read, what it wrote, and how to repeat it.

#include <algorithm>
#include <string>
#include <vector>

#include <json.hpp>

#include "uf/grid_io.hpp"
#include "uf/io.hpp"

namespace uf {

inline constexpr const char* kManifestName = "manifest.json";
inline constexpr const char* kLibraryVersion = "1.0.0";

inline nlohmann::json module_versions()
{
    return {{"library", kLibraryVersion}, {"grid_format", kGridVersion}, {"manifest", 1}};
}

/// A file, or a directory hashed over its sorted (relative path, content)
/// pairs with any manifest left out.
inline std::string hash_path(const fs::path& p)
{
    if (fs::is_regular_file(p)) return hash_file(p);
    if (!fs::is_directory(p)) throw ConfigError("no such file or directory: " + p.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(p))
        if (e.is_regular_file() && e.path().filename() != kManifestName) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::uint64_t h = fnv1a("dir");
    for (const fs::path& f : files) {
        h = fnv1a(fs::relative(f, p).generic_string(), h);
        h = fnv1a(read_file(f), h);
    }
    return hex64(h);
}

struct FileRecord {
    std::string path;  // relative to the manifest's directory
    std::string hash;
};

struct RunManifest {
    std::string command;
    nlohmann::json config = nlohmann::json::object();
    std::uint64_t seed = 0;
    std::vector<FileRecord> inputs;
    std::vector<FileRecord> outputs;
    nlohmann::json metrics = nlohmann::json::object();
    nlohmann::json timings = nlohmann::json::object();  // wall clock, never compared

    [[nodiscard]] std::string config_hash() const { return hex64(fnv1a(config.dump())); }
};

inline nlohmann::json to_json(const RunManifest& m)
{
    auto files = [](const std::vector<FileRecord>& v) {
        nlohmann::json a = nlohmann::json::array();
        for (const auto& r : v) a.push_back({{"path", r.path}, {"hash", r.hash}});
        return a;
    };
    return {{"command", m.command},       {"config", m.config},   {"config_hash", m.config_hash()},
            {"seed", m.seed},             {"versions", module_versions()}, {"inputs", files(m.inputs)},
            {"outputs", files(m.outputs)}, {"metrics", m.metrics}, {"timings", m.timings}};
}

inline RunManifest manifest_from_json(const nlohmann::json& j)
{
    RunManifest m;
    try {
        m.command = j.at("command").get<std::string>();
        m.config = j.at("config");
        m.seed = j.at("seed").get<std::uint64_t>();
        for (const auto& r : j.at("inputs")) m.inputs.push_back({r.at("path").get<std::string>(), r.at("hash").get<std::string>()});
        for (const auto& r : j.at("outputs")) m.outputs.push_back({r.at("path").get<std::string>(), r.at("hash").get<std::string>()});
        m.metrics = j.value("metrics", nlohmann::json::object());
        m.timings = j.value("timings", nlohmann::json::object());
        if (j.at("config_hash").get<std::string>() != m.config_hash()) throw ConfigError("manifest: config hash does not match config");
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("manifest: ") + e.what());
    }
    return m;
}

/// Records `p` relative to `dir`, hashing its current content.
inline FileRecord record(const fs::path& dir, const fs::path& p)
{
    return {fs::relative(fs::absolute(p), fs::absolute(dir)).lexically_normal().generic_string(), hash_path(p)};
}

inline void write_manifest(const fs::path& dir, const RunManifest& m)
{
    fs::create_directories(dir);
    write_file(dir / kManifestName, to_json(m).dump(2) + "\n");
}

inline RunManifest load_manifest(const fs::path& path)
{
    const fs::path file = fs::is_directory(path) ? path / kManifestName : path;
    try {
        return manifest_from_json(nlohmann::json::parse(read_file(file)));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("manifest: ") + e.what());
    }
}

struct VerifyIssue {
    std::string path;
    std::string problem;
};

/// Re-hashes every recorded input and output.
inline std::vector<VerifyIssue> verify_manifest(const fs::path& path)
{
    const fs::path dir = fs::is_directory(path) ? path : path.parent_path();
    const RunManifest m = load_manifest(path);
    std::vector<VerifyIssue> issues;
    auto check = [&](const std::vector<FileRecord>& v) {
        for (const auto& r : v) {
            const fs::path p = dir / r.path;
            if (!fs::exists(p)) {
                issues.push_back({r.path, "missing"});
                continue;
            }
            if (hash_path(p) != r.hash) issues.push_back({r.path, "hash mismatch"});
        }
    };
    check(m.inputs);
    check(m.outputs);
    return issues;
}

} // namespace uf
