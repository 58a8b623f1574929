#include "optoloop/params.hpp"

#include <cmath>
#include <numbers>

#include "optoloop/errors.hpp"

namespace optoloop {

using std::numbers::pi;

double thermal_occupancy(double omega, double temperature) {
    if (omega <= 0.0) throw ConfigError("thermal_occupancy: omega must be positive");
    if (temperature < 0.0) throw ConfigError("thermal_occupancy: negative temperature");
    if (temperature == 0.0) return 0.0;
    const double x = constants::hbar * omega / (constants::k_boltzmann * temperature);
    return 1.0 / std::expm1(x);
}

double wrap_angle(double phi) {
    double r = std::fmod(phi, 2.0 * pi);
    if (r < 0.0) r += 2.0 * pi;
    // fmod can land exactly on 2pi after the correction for tiny negatives
    if (r >= 2.0 * pi) r = 0.0;
    return r;
}

void validate(const SystemParams& p) {
    auto require = [](bool ok, const char* msg) {
        if (!ok) throw ConfigError(msg);
    };
    require(p.omega_m > 0.0, "omega_m must be > 0");
    require(p.kappa > 0.0, "kappa must be > 0");
    require(p.gamma1 > 0.0, "gamma1 must be > 0");
    require(p.gamma2 > 0.0, "gamma2 must be > 0");
    require(p.g1_mag >= 0.0, "g1 magnitude must be >= 0");
    require(p.g2_mag >= 0.0, "g2 magnitude must be >= 0");
    require(p.mu_mag >= 0.0, "mu magnitude must be >= 0");
    require(p.eta >= 0.0 && p.eta <= 1.0, "eta must lie in [0, 1]");
    require(p.power >= 0.0, "power must be >= 0");
    require(p.lambda_laser > 0.0, "lambda_laser must be > 0");
    require(p.omega_mod > 0.0, "omega_mod must be > 0");
    require(std::abs(p.depth_plus) < 1.0, "|depth_plus| must be < 1");
    require(std::abs(p.depth_minus) < 1.0, "|depth_minus| must be < 1");
    require(p.t_cavity >= 0.0, "t_cavity must be >= 0");
    require(p.t_mech >= 0.0, "t_mech must be >= 0");
    require(std::isfinite(p.delta), "delta must be finite");
}

double loop_phase(const SystemParams& p) {
    return wrap_angle(-p.phi1 + p.phi2 + p.phi_mu);
}

SystemParams with_loop_phase(const SystemParams& p, double phi) {
    SystemParams q = p;
    q.phi_mu = wrap_angle(phi + p.phi1 - p.phi2);
    return q;
}

DerivedParams derive(const SystemParams& p) {
    validate(p);
    DerivedParams d;
    d.omega_laser = 2.0 * pi * constants::c_light / p.lambda_laser;
    // Drive amplitude eps0 = sqrt(2P / (hbar nu_L)) with the optical
    // frequency in cycles, nu_L = c/lambda. This normalization is what the
    // preset's reference operating points (EP locations, cooling optimum)
    // are calibrated against.
    const double nu_laser = constants::c_light / p.lambda_laser;
    d.eps0 = std::sqrt(2.0 * p.power / (constants::hbar * nu_laser));
    d.eps_plus = p.depth_plus * d.eps0;
    d.eps_minus = p.depth_minus * d.eps0;
    // The cavity bath is evaluated at the laser frequency; Delta << omega_L
    // makes the distinction from omega_cav irrelevant at double precision.
    d.n_cavity = thermal_occupancy(d.omega_laser, p.t_cavity);
    d.n_mech = thermal_occupancy(p.omega_m, p.t_mech);
    d.loop_phase = loop_phase(p);
    return d;
}

SystemParams default_preset() {
    SystemParams p;
    const double two_pi = 2.0 * pi;
    p.omega_m = two_pi * 3.75e9;
    p.kappa = two_pi * 900.0e6;
    p.gamma1 = 5.0e-4 * p.omega_m;
    p.gamma2 = 5.0e-4 * p.omega_m;
    p.g1_mag = two_pi * 800.0e3;
    p.g2_mag = two_pi * 800.0e3;
    p.phi1 = 0.0;
    p.phi2 = 0.0;
    p.mu_mag = 52.5 * (p.gamma1 + p.gamma2);
    p.phi_mu = pi / 2.0;
    p.delta = p.omega_m;
    p.eta = 0.5;
    p.power = 0.25e-3;
    p.lambda_laser = 1550.0e-9;
    p.omega_mod = 2.0 * p.omega_m;
    p.depth_plus = 0.0;
    p.depth_minus = 0.0;
    p.t_cavity = 18.1;
    p.t_mech = 18.1;
    return p;
}

}  // namespace optoloop
