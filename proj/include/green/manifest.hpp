#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace green {

inline constexpr const char* kToolVersion = "0.1.0";

/// Provenance record written next to every output as `<output>.manifest.json`.
/// Holds no paths or timestamps, so identical runs produce identical manifests.
struct RunManifest {
    std::string command;
    std::uint64_t seed = 0;
    std::map<std::string, std::string> input_digests; // role -> "sha256:<hex>"
    std::map<std::string, std::string> parameters;
    std::string tool_version = kToolVersion;

    std::string to_json() const;
};

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

std::filesystem::path manifest_path(const std::filesystem::path& output);

void write_manifest(const std::filesystem::path& output, const RunManifest& manifest);

} // namespace green
