#ifndef OPTOLOOP_TEST_UTILS_HPP
#define OPTOLOOP_TEST_UTILS_HPP

#include <cmath>
#include <random>

#include "optoloop/classical.hpp"
#include "optoloop/drift.hpp"
#include "optoloop/params.hpp"
#include "optoloop/steadystate.hpp"

namespace optoloop::test {

inline double rel_diff(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1.0e-300});
}

template <typename MatA, typename MatB>
double rel_mat_diff(const MatA& a, const MatB& b) {
    const double scale = std::max({a.norm(), b.norm(), 1.0e-300});
    return (a - b).norm() / scale;
}

struct Chain {
    SystemParams p;
    DerivedParams d;
    ClassicalSteadyState s;
    DriftHarmonics h;
    NoiseMatrices n;
};

inline Chain make_chain(const SystemParams& p) {
    Chain c;
    c.p = p;
    c.d = derive(p);
    c.s = solve_classical(p, c.d);
    c.h = build_drift(p, c.d, c.s);
    c.n = build_noise(p, c.d);
    return c;
}

// Randomized parameter points: couplings, phases and temperatures varied
// around the preset (O(+-50%)); frequencies and losses stay at preset.
// Only stable, comfortably non-defective points are returned.
inline SystemParams random_stable_point(std::mt19937& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int attempt = 0; attempt < 200; ++attempt) {
        SystemParams p = default_preset();
        const double gs = p.gamma1 + p.gamma2;
        p.g1_mag *= 0.5 + u(rng);
        p.g2_mag *= 0.5 + u(rng);
        p.mu_mag = 52.5 * gs * (0.5 + u(rng));
        p.phi1 = (u(rng) - 0.5) * 1.5707963267948966;
        p.phi2 = (u(rng) - 0.5) * 1.5707963267948966;
        p = with_loop_phase(p, (0.25 + 0.5 * u(rng)) * 3.141592653589793);
        p.t_cavity = p.t_mech = 18.1 * (0.5 + u(rng));
        try {
            const Chain c = make_chain(p);
            if (!stability(c.h.m0).stable) continue;
            if (eigenvector_condition(c.h.m0) > 1.0e8) continue;
            return p;
        } catch (...) {
            continue;
        }
    }
    throw std::runtime_error("random_stable_point: no stable sample found");
}

}  // namespace optoloop::test

#endif
