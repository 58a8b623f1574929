#ifndef OPTOLOOP_SPECTRAL_HPP
#define OPTOLOOP_SPECTRAL_HPP

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "optoloop/params.hpp"
#include "optoloop/types.hpp"

namespace optoloop {

// Upper-half-plane eigenvalue loci of M^(0) over a loop-phase grid,
// continuity-tracked so branches can be followed.
struct EigenLoci {
    std::vector<double> phi_samples;
    std::vector<std::array<cplx, 3>> eigvals_per_phi;
};

EigenLoci eigen_loci(const SystemParams& p, const std::vector<double>& phi_grid);

// min over upper-half-plane eigenvalue pairs of
//   |l_i - l_j| / omega_scale + (1 - |<v_i, v_j>|),
// zero iff two eigenvalues and their eigenvectors coalesce.
double coalescence_measure(const Mat6& m0, double omega_scale);

struct CoalescenceInfo {
    double measure = 0.0;
    cplx lambda_a, lambda_b;  // the closest pair
    double overlap = 0.0;     // |<v_a, v_b>|
};

CoalescenceInfo coalescence_info(const Mat6& m0, double omega_scale);

enum class Chirality { clockwise, counterclockwise };
enum class Branch { upper, lower };

std::string to_string(Chirality c);
std::string to_string(Branch b);

struct EpPoint {
    double mu_mag = 0.0;             // rad/s
    double mu_over_gamma_sum = 0.0;  // |mu| / (gamma1 + gamma2)
    double phi = 0.0;                // loop phase at coalescence
    Chirality chirality = Chirality::clockwise;
    Branch branch = Branch::upper;
    double residual = 0.0;           // final coalescence measure
    double omega_ep_over_omega_m = 0.0;
    double eigvec_overlap = 0.0;
};

struct SearchBox {
    double mu_lo = 0.0, mu_hi = 0.0;   // rad/s
    double phi_lo = 0.0, phi_hi = 0.0; // rad
};

struct FindEpOptions {
    int scan_n = 64;             // coarse grid per box edge
    int simplex_iters = 400;
    double success_target = 1.0e-8;
    double notfound_tol = 1.0e-4;
};

// Locates the coalescence point inside the box by coarse scan, Nelder-Mead
// refinement on the coalescence measure and a Gauss-Newton polish on the
// analytic pair function (l_i - l_j)^2. The classical steady state is
// re-solved at every candidate. Throws NotFound when the refined minimum
// exceeds notfound_tol.
EpPoint find_ep(const SystemParams& p, const SearchBox& box,
                const FindEpOptions& opts = {});

// Nominal search boxes for the two EP branches, in units of gamma1+gamma2.
SearchBox ep1_box(const SystemParams& p);
SearchBox ep2_box(const SystemParams& p);

enum class SurfaceAxis { kappa, power, gamma, g1, g2, delta };

std::string to_string(SurfaceAxis a);
SurfaceAxis surface_axis_from_string(const std::string& s);

// Multiplier applied to the preset value of the axis quantity
// (gamma scales both resonators; delta multiplies the preset detuning).
SystemParams apply_axis(const SystemParams& p, SurfaceAxis axis, double multiplier);

struct EpSurface {
    SurfaceAxis axis1, axis2;
    std::vector<double> grid1, grid2;  // multipliers
    // Row-major over (grid1 x grid2); nullopt marks a NotFound gap.
    std::vector<std::optional<EpPoint>> branch1, branch2;
};

// Continuation-traced exceptional surface over two parameter axes. Per-node
// NotFound is recorded, never fatal. Rows (fixed axis1 value) are processed
// in parallel after a sequential seed pass down the column nearest to
// multiplier 1.
EpSurface trace_surface(const SystemParams& p, SurfaceAxis axis1,
                        const std::vector<double>& grid1, SurfaceAxis axis2,
                        const std::vector<double>& grid2,
                        const FindEpOptions& opts = {}, int workers = 1);

}  // namespace optoloop

#endif
