#ifndef OPTOLOOP_ORACLE_HPP
#define OPTOLOOP_ORACLE_HPP

#include <array>
#include <complex>
#include <vector>

#include "optoloop/classical.hpp"
#include "optoloop/drift.hpp"
#include "optoloop/params.hpp"
#include "optoloop/types.hpp"

namespace optoloop {

// Right-hand side of the nonlinear mean-field equations at time t,
// d/dt (a, b1, b2). Exposed so tests can difference it.
std::array<cplx, 3> mean_field_rhs(const SystemParams& p, const DerivedParams& d,
                                   const std::array<cplx, 3>& state, double t);

// Fixed-step fourth-order propagation of V' = M(t) V + V M(t)^T + D.
struct CovarianceTrajectory {
    std::vector<double> times;      // sparse overview samples
    std::vector<Mat6> covariances;  // V^s at those samples
    Mat6 v_final = Mat6::Zero();
    // Diagonal statistics over the final modulation period (dense sampling).
    Vec6 v_diag_min = Vec6::Zero();
    Vec6 v_diag_max = Vec6::Zero();
    Vec6 v_diag_mean = Vec6::Zero();
    // || V(t_end) - V(t_end - T_mod) ||_F / || V(t_end) ||_F
    double periodicity_residual = 0.0;
};

// Throws BlowUp when any variance exceeds 1e12. dt default (when <= 0) is
// 2 pi / (200 Omega).
CovarianceTrajectory propagate_covariance(const DriftHarmonics& harmonics,
                                          const Mat6& d_mat, const Mat6& v0,
                                          double omega_mod, double t_end,
                                          double dt = 0.0, int overview_samples = 256);

struct ClassicalTrajectory {
    std::vector<double> times;
    std::vector<std::array<cplx, 3>> means;   // (a, b1, b2) overview samples
    std::array<cplx, 3> final_state{};
    // Harmonics 0, +1, -1 Fourier-projected over the final period.
    ClassicalSteadyState projected;
};

ClassicalTrajectory propagate_classical(const SystemParams& p, const DerivedParams& d,
                                        double t_end, double dt = 0.0,
                                        int overview_samples = 256);

}  // namespace optoloop

#endif
