#include "optoloop/config.hpp"

#include <cstdlib>
#include <fstream>
#include <numbers>
#include <thread>

#include "optoloop/errors.hpp"

namespace optoloop {

namespace {

using nlohmann::json;
using std::numbers::pi;

double need_number(const json& j, const std::string& key) {
    if (!j.is_number()) throw ConfigError("config: key '" + key + "' must be a number");
    return j.get<double>();
}

}  // namespace

SystemParams parse_params(const json& block, SystemParams base) {
    if (!block.is_object()) throw ConfigError("config: 'params' must be an object");
    SystemParams p = base;
    // Derived-convenience keys are resolved after the base keys.
    double mu_over_gamma = std::numeric_limits<double>::quiet_NaN();
    double phi_loop_rad = std::numeric_limits<double>::quiet_NaN();
    double delta_over_omega_m = std::numeric_limits<double>::quiet_NaN();

    for (const auto& [key, val] : block.items()) {
        const double v = need_number(val, key);
        // *_hz keys are ordinary frequencies (x 2 pi internally); *_rads keys
        // are angular rates taken verbatim, emitted by manifests for
        // bit-exact round trips. Alphabetical key order makes _rads win when
        // both are present.
        if (key == "omega_m_hz") p.omega_m = 2.0 * pi * v;
        else if (key == "kappa_hz") p.kappa = 2.0 * pi * v;
        else if (key == "gamma1_hz") p.gamma1 = 2.0 * pi * v;
        else if (key == "gamma2_hz") p.gamma2 = 2.0 * pi * v;
        else if (key == "g1_hz") p.g1_mag = 2.0 * pi * v;
        else if (key == "g2_hz") p.g2_mag = 2.0 * pi * v;
        else if (key == "mu_hz") p.mu_mag = 2.0 * pi * v;
        else if (key == "delta_hz") p.delta = 2.0 * pi * v;
        else if (key == "omega_mod_hz") p.omega_mod = 2.0 * pi * v;
        else if (key == "omega_m_rads") p.omega_m = v;
        else if (key == "kappa_rads") p.kappa = v;
        else if (key == "gamma1_rads") p.gamma1 = v;
        else if (key == "gamma2_rads") p.gamma2 = v;
        else if (key == "g1_rads") p.g1_mag = v;
        else if (key == "g2_rads") p.g2_mag = v;
        else if (key == "mu_rads") p.mu_mag = v;
        else if (key == "delta_rads") p.delta = v;
        else if (key == "omega_mod_rads") p.omega_mod = v;
        else if (key == "phi1_rad") p.phi1 = v;
        else if (key == "phi2_rad") p.phi2 = v;
        else if (key == "phi_mu_rad") p.phi_mu = v;
        else if (key == "eta") p.eta = v;
        else if (key == "power_w") p.power = v;
        else if (key == "lambda_m") p.lambda_laser = v;
        else if (key == "depth_plus") p.depth_plus = v;
        else if (key == "depth_minus") p.depth_minus = v;
        else if (key == "t_cavity_k") p.t_cavity = v;
        else if (key == "t_mech_k") p.t_mech = v;
        else if (key == "mu_over_gamma_sum") mu_over_gamma = v;
        else if (key == "phi_loop_rad") phi_loop_rad = v;
        else if (key == "delta_over_omega_m") delta_over_omega_m = v;
        else throw ConfigError("config: unknown params key '" + key + "'");
    }
    if (!std::isnan(mu_over_gamma)) p.mu_mag = mu_over_gamma * (p.gamma1 + p.gamma2);
    if (!std::isnan(delta_over_omega_m)) p.delta = delta_over_omega_m * p.omega_m;
    if (!std::isnan(phi_loop_rad)) p = with_loop_phase(p, phi_loop_rad);
    validate(p);
    return p;
}

RunConfig parse_config(const json& j) {
    if (!j.is_object()) throw ConfigError("config: top level must be an object");
    RunConfig c;
    c.params = default_preset();
    for (const auto& [key, val] : j.items()) {
        if (key == "preset") {
            if (!val.is_string() || val != "default")
                throw ConfigError("config: unknown preset " + val.dump());
        } else if (key == "params") {
            // handled below so 'preset' order does not matter
        } else if (key == "workers") {
            c.workers = val.get<int>();
        } else if (key == "classical") {
            for (const auto& [k2, v2] : val.items()) {
                if (k2 == "tol") c.classical.tol = need_number(v2, k2);
                else if (k2 == "max_iter") c.classical.max_iter = v2.get<int>();
                else if (k2 == "relaxation") c.classical.relaxation = need_number(v2, k2);
                else throw ConfigError("config: unknown classical key '" + k2 + "'");
            }
        } else if (key == "floquet") {
            for (const auto& [k2, v2] : val.items()) {
                if (k2 == "n_zones") c.floquet.n_zones = v2.get<int>();
                else if (k2 == "rel_tol") c.floquet.rel_tol = need_number(v2, k2);
                else if (k2 == "gl_points") c.floquet.gl_points = v2.get<int>();
                else if (k2 == "ell_max") c.floquet.ell_max = v2.get<int>();
                else throw ConfigError("config: unknown floquet key '" + k2 + "'");
            }
        } else {
            throw ConfigError("config: unknown top-level key '" + key + "'");
        }
    }
    if (j.contains("params")) c.params = parse_params(j.at("params"), c.params);
    validate(c.params);
    return c;
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: JSON parse error: ") + e.what());
    }
    return parse_config(j);
}

json params_to_json(const SystemParams& p) {
    // Angular-rate keys, verbatim doubles: parse(params_to_json(p)) == p.
    json j;
    j["omega_m_rads"] = p.omega_m;
    j["kappa_rads"] = p.kappa;
    j["gamma1_rads"] = p.gamma1;
    j["gamma2_rads"] = p.gamma2;
    j["g1_rads"] = p.g1_mag;
    j["g2_rads"] = p.g2_mag;
    j["phi1_rad"] = p.phi1;
    j["phi2_rad"] = p.phi2;
    j["mu_rads"] = p.mu_mag;
    j["phi_mu_rad"] = p.phi_mu;
    j["delta_rads"] = p.delta;
    j["eta"] = p.eta;
    j["power_w"] = p.power;
    j["lambda_m"] = p.lambda_laser;
    j["omega_mod_rads"] = p.omega_mod;
    j["depth_plus"] = p.depth_plus;
    j["depth_minus"] = p.depth_minus;
    j["t_cavity_k"] = p.t_cavity;
    j["t_mech_k"] = p.t_mech;
    return j;
}

json config_to_json(const RunConfig& c) {
    json j;
    j["params"] = params_to_json(c.params);
    j["workers"] = c.workers;
    j["classical"] = {{"tol", c.classical.tol},
                      {"max_iter", c.classical.max_iter},
                      {"relaxation", c.classical.relaxation}};
    j["floquet"] = {{"n_zones", c.floquet.n_zones},
                    {"rel_tol", c.floquet.rel_tol},
                    {"gl_points", c.floquet.gl_points},
                    {"ell_max", c.floquet.ell_max}};
    return j;
}

int resolve_workers(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("OPTOLOOP_WORKERS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

}  // namespace optoloop
