#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace evidfuse {

// FNV-1a 64-bit content hash (not cryptographic; used to detect accidental
// tampering of inputs between runs).
std::uint64_t fnv1a64(std::string_view bytes);
std::string fnv1a64_hex(std::string_view bytes);
std::string hash_file(const std::filesystem::path& path);

// One manifest per output directory. Contains no timestamps so repeated runs
// stay byte-identical.
struct RunManifest {
    std::string command;
    std::string tool_version;
    std::uint64_t seed = 0;
    std::string config_hash; // hex hash of the resolved configuration
    std::vector<std::pair<std::string, std::string>> inputs; // (path, content hash)
    std::vector<std::string> artifacts; // paths relative to the output directory

    nlohmann::ordered_json to_json() const;
    static RunManifest from_json(const nlohmann::json& j);
};

void save_manifest(const std::filesystem::path& path, const RunManifest& manifest);
RunManifest load_manifest(const std::filesystem::path& path);

// Rehashes the recorded inputs; false if any file changed or disappeared.
bool verify_inputs(const RunManifest& manifest);

} // namespace evidfuse
