#ifndef OPTOLOOP_PARAMS_HPP
#define OPTOLOOP_PARAMS_HPP

#include <complex>

#include "optoloop/types.hpp"

namespace optoloop {

// All physical inputs of the three-mode loop. Angular rates in rad/s,
// phases in rad, temperatures in K, power in W, wavelength in m.
// Coupling coefficients are kept in polar form; the physics is driven by
// the loop phase -phi1 + phi2 + phi_mu.
struct SystemParams {
    double omega_m = 0.0;      // mechanical angular frequency
    double kappa = 0.0;        // cavity energy decay rate
    double gamma1 = 0.0;       // mechanical damping, resonator 1
    double gamma2 = 0.0;       // mechanical damping, resonator 2
    double g1_mag = 0.0;       // |g1| optomechanical coupling
    double g2_mag = 0.0;       // |g2|
    double phi1 = 0.0;         // arg g1
    double phi2 = 0.0;         // arg g2
    double mu_mag = 0.0;       // |mu| intermechanical coupling
    double phi_mu = 0.0;       // arg mu
    double delta = 0.0;        // laser detuning omega_cav - omega_L
    double eta = 0.5;          // cavity escape efficiency, 0..1
    double power = 0.0;        // pump power
    double lambda_laser = 0.0; // pump wavelength
    double omega_mod = 0.0;    // modulation angular frequency Omega
    double depth_plus = 0.0;   // d_{+1} = eps_{+1}/eps_0
    double depth_minus = 0.0;  // d_{-1}
    double t_cavity = 0.0;     // optical bath temperature
    double t_mech = 0.0;       // mechanical bath temperature

    std::complex<double> g1() const { return std::polar(g1_mag, phi1); }
    std::complex<double> g2() const { return std::polar(g2_mag, phi2); }
    std::complex<double> mu() const { return std::polar(mu_mag, phi_mu); }

    bool resolved_sideband() const { return kappa < omega_m; }
};

// Quantities derived once from SystemParams.
struct DerivedParams {
    double omega_laser = 0.0;  // 2 pi c / lambda
    double eps0 = 0.0;         // drive amplitude sqrt(2P / (hbar c/lambda))
    double eps_plus = 0.0;     // d_{+1} * eps0
    double eps_minus = 0.0;    // d_{-1} * eps0
    double n_cavity = 0.0;     // optical bath occupancy at omega_laser
    double n_mech = 0.0;       // mechanical bath occupancy at omega_m
    double loop_phase = 0.0;   // -phi1 + phi2 + phi_mu, reduced to [0, 2pi)
};

// Bose-Einstein occupancy 1/(exp(hbar w / kB T) - 1); exactly 0 at T = 0.
double thermal_occupancy(double omega, double temperature);

// Reduce an angle to [0, 2pi).
double wrap_angle(double phi);

// Throws ConfigError on any violated invariant.
void validate(const SystemParams& p);

DerivedParams derive(const SystemParams& p);

double loop_phase(const SystemParams& p);

// Copy of p with phi_mu adjusted so that the loop phase equals phi.
SystemParams with_loop_phase(const SystemParams& p, double phi);

// The reference parameter set: g/2pi = 800 kHz, omega_m/2pi = 3.75 GHz,
// kappa/2pi = 900 MHz, gamma = 5e-4 omega_m, eta = 0.5, P = 0.25 mW,
// lambda = 1550 nm, Delta = omega_m, Omega = 2 omega_m, T = 18.1 K,
// |mu| = 52.5 (gamma1+gamma2), loop phase pi/2, no modulation.
SystemParams default_preset();

}  // namespace optoloop

#endif
