#include "run_meta.hpp"

#include "caa/model_io.hpp"
#include "caa/policy.hpp"
#include "caa/version.hpp"

namespace caa::cli {

void write_meta(std::filesystem::path const& path, std::string const& command, Common const& common, double wall_seconds,
    nlohmann::json extra)
{
    nlohmann::json j;
    j["command"] = command;
    j["version"] = std::string(version());
    j["seed"] = common.seed;
    j["workers"] = common.workers == 0 ? default_workers() : common.workers;
    j["config"] = common.resolved_config;
    j["wall_seconds"] = wall_seconds;
    for (auto it = extra.begin(); it != extra.end(); ++it) {
        j[it.key()] = it.value();
    }
    write_text_atomic(path, j.dump(2) + "\n");
}

auto meta_path_for(std::filesystem::path const& primary) -> std::filesystem::path
{
    auto p = primary;
    p += ".meta.json";
    return p;
}

} // namespace caa::cli
