#ifndef OPTOLOOP_FLOQUET_HPP
#define OPTOLOOP_FLOQUET_HPP

#include <vector>

#include "optoloop/drift.hpp"
#include "optoloop/types.hpp"

namespace optoloop {

// Frequency quadrature for the sideband-zone system: Gauss-Legendre panels
// over [0, W] (mirrored analytically onto negative frequencies), refined
// geometrically around every resonance of the zone blocks, extended by
// geometrically growing far-field panels, with the remaining tail handled
// by the leading asymptotic terms of the integrand.
struct FloquetOperator {
    int n_zones = 2;      // N (zones run -N..N)
    int block_dim = 0;    // 6(2N+1)
    std::vector<double> omega_nodes;    // positive half; each node pairs with -node
    std::vector<double> omega_weights;
    double omega_max = 0.0;             // far-field cutoff W for the tail terms
};

struct FloquetOptions {
    int n_zones = 2;
    double rel_tol = 1.0e-6;   // panel-halving tolerance on V^(0) diagonals
    int gl_points = 12;
    int ell_max = 2;           // harmonics of V computed (v2 kept as diagnostic)
    int workers = 1;
    double cond_limit = 1.0e12;
};

struct FloquetCovariance {
    Vec6 v0 = Vec6::Zero();     // stationary harmonic of the diagonal variances
    CVec6 v1 = CVec6::Zero();   // first harmonic (multiplies exp(-i Omega t))
    CVec6 v2 = CVec6::Zero();   // second harmonic, truncation diagnostic
    Vec6 v_min = Vec6::Zero();  // V^(0) - 2|V^(1)|
    Vec6 squeezing_db = Vec6::Zero();  // -10 log10(v_min / 0.5)
    double convergence = 0.0;   // relative change under panel halving
    int nodes = 0;              // positive-frequency node count (fine grid)

    // V_ii(t) reconstructed from the stored harmonics.
    double value_at(int i, double t, double omega_mod, int ell_max = 1) const;
};

// The block-tridiagonal zone matrix P(omega) of dimension 6(2N+1):
// diagonal blocks i(omega + n Omega) I + M^(0), sub/super blocks M^(+-1).
CMatX assemble_p(const DriftHarmonics& h, double omega, double omega_mod, int n_zones);

// Builds the quadrature grid for the given drift (refine = 1 is the base
// resolution; refine = 2 halves every panel).
FloquetOperator build_floquet_grid(const DriftHarmonics& h, double omega_mod,
                                   const FloquetOptions& opts, int refine = 1);

// Steady-state covariance harmonics of the modulated system. Throws
// Unstable when M^(0) is not Hurwitz and QuadratureNotConverged when the
// panel-halving check fails.
FloquetCovariance floquet_covariance(const DriftHarmonics& h, const NoiseMatrices& noise,
                                     double omega_mod, const FloquetOptions& opts = {});

}  // namespace optoloop

#endif
