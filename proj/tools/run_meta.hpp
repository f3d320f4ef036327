#pragma once

#include "commands.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <filesystem>
#include <string>

namespace caa::cli {

// Wall-clock timer for run metadata. Timing never enters primary outputs.
class Stopwatch {
public:
    [[nodiscard]] auto seconds() const -> double
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// <primary>.meta.json with command, version, seed, workers, resolved config,
// wall time and any command-specific fields.
void write_meta(std::filesystem::path const& path, std::string const& command, Common const& common, double wall_seconds,
    nlohmann::json extra = nlohmann::json::object());

[[nodiscard]] auto meta_path_for(std::filesystem::path const& primary) -> std::filesystem::path;

} // namespace caa::cli
