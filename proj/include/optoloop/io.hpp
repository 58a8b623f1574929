#ifndef OPTOLOOP_IO_HPP
#define OPTOLOOP_IO_HPP

#include <string>

#include <json.hpp>

#include "optoloop/config.hpp"
#include "optoloop/floquet.hpp"
#include "optoloop/observables.hpp"
#include "optoloop/spectral.hpp"
#include "optoloop/steadystate.hpp"

namespace optoloop {

// CSV: header row with units, 17 significant digits, '.' separator,
// LF line endings. Throws Error (I/O category) on write failure.
void write_sweep_csv(const std::string& path, const SweepResult& r);

std::string format_g17(double v);

nlohmann::json ep_to_json(const EpPoint& ep);
nlohmann::json stationary_to_json(const StationaryCovariance& sc);
nlohmann::json floquet_to_json(const FloquetCovariance& fc);

struct Manifest {
    std::string command;
    nlohmann::json config;
    int workers = 1;
    double wall_time_s = 0.0;
    std::vector<std::string> outputs;
    nlohmann::json failures = nlohmann::json::array();
    std::string fingerprint;
};

void write_manifest(const std::string& path, const Manifest& m);
void write_json(const std::string& path, const nlohmann::json& j);

}  // namespace optoloop

#endif
