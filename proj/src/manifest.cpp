#include "evidfuse/manifest.hpp"

#include <cstdio>

#include "evidfuse/csv.hpp"
#include "evidfuse/errors.hpp"
#include "evidfuse/log.hpp"

namespace evidfuse {

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char b : bytes) {
        hash ^= b;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

std::string fnv1a64_hex(std::string_view bytes) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(bytes)));
    return std::string(buf);
}

std::string hash_file(const std::filesystem::path& path) {
    return fnv1a64_hex(read_text_file(path));
}

nlohmann::ordered_json RunManifest::to_json() const {
    nlohmann::ordered_json inputs_json = nlohmann::ordered_json::array();
    for (const auto& [path, hash] : inputs) {
        inputs_json.push_back({{"path", path}, {"hash", hash}});
    }
    return nlohmann::ordered_json{{"command", command},
                                  {"tool_version", tool_version},
                                  {"seed", seed},
                                  {"config_hash", config_hash},
                                  {"inputs", std::move(inputs_json)},
                                  {"artifacts", artifacts}};
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
    RunManifest m;
    try {
        m.command = j.at("command").get<std::string>();
        m.tool_version = j.at("tool_version").get<std::string>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.config_hash = j.at("config_hash").get<std::string>();
        for (const auto& in : j.at("inputs")) {
            m.inputs.emplace_back(in.at("path").get<std::string>(),
                                  in.at("hash").get<std::string>());
        }
        m.artifacts = j.at("artifacts").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(std::string("bad manifest JSON: ") + e.what());
    }
    return m;
}

void save_manifest(const std::filesystem::path& path, const RunManifest& manifest) {
    write_text_file(path, manifest.to_json().dump(2) + "\n");
}

RunManifest load_manifest(const std::filesystem::path& path) {
    try {
        return RunManifest::from_json(nlohmann::json::parse(read_text_file(path)));
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(path.string() + ": " + e.what());
    }
}

bool verify_inputs(const RunManifest& manifest) {
    for (const auto& [path, hash] : manifest.inputs) {
        if (!std::filesystem::exists(path)) {
            log_warn("manifest input missing: " + path);
            return false;
        }
        if (hash_file(path) != hash) {
            log_warn("manifest input changed: " + path);
            return false;
        }
    }
    return true;
}

} // namespace evidfuse
