#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "engine.hpp"

namespace packsim {

// One swept parameter: a dot path into the normalized config plus the grid
// of values it takes. Paths address object members only ("pack.composition
// .power_fraction", "chemistries.energy.diffusivity", "protocol.level").
struct SweepParameter {
    std::string path;
    std::vector<nlohmann::json> values;
};

struct SweepSpec {
    std::vector<SweepParameter> parameters;
};

struct LoadedConfig {
    PackConfig pack;
    nlohmann::json normalized;  // every field materialized, defaults filled in
    std::string hash;           // FNV-1a 64 of the normalized dump, hex
    std::optional<SweepSpec> sweep;
};

// Parse + validate. Errors are ConfigError with the offending field path
// in the message. The normalized form is what the hash and manifests see,
// so two files that differ only in key order or omitted defaults agree.
LoadedConfig parse_config(const nlohmann::json& j);
LoadedConfig load_config(const std::string& path);

nlohmann::json to_json(const PackConfig& config);
std::string config_hash(const nlohmann::json& normalized);

// Set the value at a dot path in-place; throws ConfigError when the path
// does not already exist (sweeps may only touch known parameters).
void set_at_path(nlohmann::json& root, const std::string& path, const nlohmann::json& value);

}  // namespace packsim
