#ifndef OPTOLOOP_STEADYSTATE_HPP
#define OPTOLOOP_STEADYSTATE_HPP

#include <array>

#include "optoloop/drift.hpp"
#include "optoloop/types.hpp"

namespace optoloop {

struct StabilityResult {
    bool stable = false;
    std::array<cplx, 6> eigvals{};  // sorted by imaginary part
};

// Stable iff every eigenvalue of m0 has negative real part.
StabilityResult stability(const Mat6& m0);

// Steady-state covariance <R_i R_j> by residue calculus over the resolvent
// of m0 in its eigenbasis. Throws DefectiveMatrix when the eigenvector
// matrix condition number exceeds cond_limit, and Unstable on a marginally
// stable eigenvalue (sgn(0) has no meaning in the formula).
CMat6 covariance_residue(const Mat6& m0, const CMat6& c_mat,
                         double cond_limit = 1.0e12);

// Symmetrized steady-state covariance solving m0 V + V m0^T + D = 0.
// Eigenbasis route with an automatic vectorized direct solve when m0 is
// too close to defective. Throws Unstable when no steady state exists.
Mat6 covariance_lyapunov(const Mat6& m0, const Mat6& d_mat,
                         double cond_limit = 1.0e12);

// The two individual routes, exposed for basis-independence checks.
Mat6 covariance_lyapunov_eig(const Mat6& m0, const Mat6& d_mat,
                             double cond_limit = 1.0e12);
Mat6 covariance_lyapunov_direct(const Mat6& m0, const Mat6& d_mat);

// Mean phonon number of resonator j in {1, 2} from symmetrized variances,
// nbar = (<X^2>_s + <Y^2>_s - 1)/2.
double mean_phonon(const Mat6& v_sym, int resonator_index);

struct StationaryCovariance {
    CMat6 v = CMat6::Zero();    // <R_i R_j>
    Mat6 v_sym = Mat6::Zero();  // symmetrically ordered
    bool stable = false;
    std::array<cplx, 6> eigvals{};
    double cond_u = 0.0;          // condition number of the eigenvector matrix
    double lyap_residual = 0.0;   // ||m0 V + V m0^T + D||_F / ||D||_F
};

// Runs stability + both covariance routes; v from the residue formula when
// the eigenbasis is usable, v_sym always from the Lyapunov solve.
StationaryCovariance solve_stationary(const Mat6& m0, const NoiseMatrices& noise);

// Condition number of the eigenvector matrix of m0 (2-norm).
double eigenvector_condition(const Mat6& m0);

}  // namespace optoloop

#endif
