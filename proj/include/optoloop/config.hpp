#ifndef OPTOLOOP_CONFIG_HPP
#define OPTOLOOP_CONFIG_HPP

#include <string>

#include <json.hpp>

#include "optoloop/classical.hpp"
#include "optoloop/floquet.hpp"
#include "optoloop/params.hpp"

namespace optoloop {

// Fully resolved run configuration. Parsed from a JSON config file whose
// physical quantities carry unit-suffixed keys (*_hz values are ordinary
// frequencies and are multiplied by 2 pi internally). Unknown keys are
// rejected.
struct RunConfig {
    SystemParams params;
    ClassicalSolveOptions classical;
    FloquetOptions floquet;
    int workers = 0;  // 0 = hardware concurrency
};

// Parse a params block on top of a base parameter set.
SystemParams parse_params(const nlohmann::json& block, SystemParams base);

RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config_file(const std::string& path);

// Canonical JSON echo of a parameter set (round-trips bit-exactly through
// parse_params).
nlohmann::json params_to_json(const SystemParams& p);
nlohmann::json config_to_json(const RunConfig& c);

int resolve_workers(int requested);  // flag > env OPTOLOOP_WORKERS > cores

}  // namespace optoloop

#endif
