// Sidecar records describing how an output file was produced.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace wlhmm::cli {

/// Hex SHA-256 of a file's contents.
std::string sha256_file(const std::filesystem::path& path);

class Manifest {
public:
    explicit Manifest(std::string command) : command_(std::move(command)) {}

    void input(const std::filesystem::path& path);
    void output(const std::filesystem::path& path) { outputs_.push_back(path.string()); }
    void seed(std::uint64_t s) { seed_ = s; }
    nlohmann::json& parameters() { return params_; }

    nlohmann::json to_json() const;
    /// Writes `<primary>.manifest.json` next to the primary output.
    void write(const std::filesystem::path& primary) const;

private:
    std::string command_;
    nlohmann::json inputs_ = nlohmann::json::array();
    std::vector<std::string> outputs_;
    std::optional<std::uint64_t> seed_;
    nlohmann::json params_ = nlohmann::json::object();
};

}  // namespace wlhmm::cli
