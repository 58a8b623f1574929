#ifndef OPTOLOOP_CLASSICAL_HPP
#define OPTOLOOP_CLASSICAL_HPP

#include <array>
#include <complex>

#include "optoloop/params.hpp"

namespace optoloop {

// Self-consistent mean-field amplitudes, harmonics 0 and +-1 only.
// The modulated effective detuning Delta_a(t) = delta_a0
//   + delta_a1 exp(-i Omega t) + conj(delta_a1) exp(+i Omega t).
struct ClassicalSteadyState {
    std::complex<double> a0, a_p1, a_m1;        // cavity
    std::complex<double> b1_0, b1_p1, b1_m1;    // resonator 1
    std::complex<double> b2_0, b2_p1, b2_m1;    // resonator 2
    double delta_a0 = 0.0;                       // real by construction
    std::complex<double> delta_a_p1;
    int iterations = 0;
    double residual = 0.0;

    // <a>(t) reconstructed from the harmonics.
    std::complex<double> cavity_mean(double t, double omega_mod) const;
    std::complex<double> b1_mean(double t, double omega_mod) const;
    std::complex<double> b2_mean(double t, double omega_mod) const;
};

struct ClassicalSolveOptions {
    double tol = 1.0e-12;     // max relative defect over the nine relations
    int max_iter = 10000;
    double relaxation = 0.5;  // Picard damping beta
    int stagnation_window = 200;
};

// Max over the nine harmonic relations of |lhs - rhs| / (1 + |lhs|).
double classical_residual(const SystemParams& p, const DerivedParams& d,
                          const ClassicalSteadyState& s);

// Damped Picard iteration from the decoupled-cavity start, with a damped
// Newton (finite-difference Jacobian) fallback when the residual stagnates.
// Throws NonConvergence after max_iter.
ClassicalSteadyState solve_classical(const SystemParams& p, const DerivedParams& d,
                                     const ClassicalSolveOptions& opts = {});

}  // namespace optoloop

#endif
