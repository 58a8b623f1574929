#include "optoloop/steadystate.hpp"

#include <algorithm>
#include <cmath>

#include "optoloop/errors.hpp"

namespace optoloop {

namespace {

struct EigenSystem {
    CVec6 lambda;
    CMat6 u;
    CMat6 u_inv;
    double cond_u;
};

EigenSystem eigensystem(const Mat6& m0) {
    Eigen::EigenSolver<Mat6> es(m0, true);
    EigenSystem sys;
    sys.lambda = es.eigenvalues();
    sys.u = es.eigenvectors();
    Eigen::JacobiSVD<CMat6> svd(sys.u);
    const double smin = svd.singularValues().minCoeff();
    sys.cond_u = smin > 0.0 ? svd.singularValues().maxCoeff() / smin
                            : std::numeric_limits<double>::infinity();
    sys.u_inv = sys.u.partialPivLu().solve(CMat6::Identity());
    return sys;
}

int sign_of_real(const cplx& z) {
    if (z.real() > 0.0) return 1;
    if (z.real() < 0.0) return -1;
    throw Unstable("covariance_residue: marginally stable eigenvalue (Re lambda = 0)");
}

}  // namespace

StabilityResult stability(const Mat6& m0) {
    Eigen::EigenSolver<Mat6> es(m0, false);
    StabilityResult r;
    for (int i = 0; i < 6; ++i) r.eigvals[i] = es.eigenvalues()(i);
    std::sort(r.eigvals.begin(), r.eigvals.end(),
              [](const cplx& a, const cplx& b) { return a.imag() < b.imag(); });
    double max_re = -std::numeric_limits<double>::infinity();
    for (const auto& z : r.eigvals) max_re = std::max(max_re, z.real());
    r.stable = max_re < 0.0;
    return r;
}

double eigenvector_condition(const Mat6& m0) {
    return eigensystem(m0).cond_u;
}

CMat6 covariance_residue(const Mat6& m0, const CMat6& c_mat, double cond_limit) {
    const EigenSystem sys = eigensystem(m0);
    if (sys.cond_u > cond_limit)
        throw DefectiveMatrix("covariance_residue: eigenvector matrix condition "
                              "number exceeds threshold (near an EP)");
    // V = U F U^T with F_kk' = [U^-1 C U^-T]_kk' (sgn_k + sgn_k')/(2(l_k + l_k')).
    const CMat6 w = sys.u_inv * c_mat * sys.u_inv.transpose();
    CMat6 f;
    for (int k = 0; k < 6; ++k) {
        const int sk = sign_of_real(sys.lambda(k));
        for (int q = 0; q < 6; ++q) {
            const int sq = sign_of_real(sys.lambda(q));
            f(k, q) = w(k, q) * static_cast<double>(sk + sq) /
                      (2.0 * (sys.lambda(k) + sys.lambda(q)));
        }
    }
    return sys.u * f * sys.u.transpose();
}

Mat6 covariance_lyapunov_eig(const Mat6& m0, const Mat6& d_mat, double cond_limit) {
    const EigenSystem sys = eigensystem(m0);
    if (sys.cond_u > cond_limit)
        throw DefectiveMatrix("covariance_lyapunov: eigenvector matrix condition "
                              "number exceeds threshold (near an EP)");
    const CMat6 dp = sys.u_inv * d_mat.cast<cplx>() * sys.u_inv.transpose();
    CMat6 f;
    for (int k = 0; k < 6; ++k)
        for (int q = 0; q < 6; ++q)
            f(k, q) = -dp(k, q) / (sys.lambda(k) + sys.lambda(q));
    const CMat6 v = sys.u * f * sys.u.transpose();
    const Mat6 vr = v.real();
    return (vr + vr.transpose()) / 2.0;
}

Mat6 covariance_lyapunov_direct(const Mat6& m0, const Mat6& d_mat) {
    // (I (x) M + M (x) I) vec(V) = -vec(D), column-major vec.
    Eigen::Matrix<double, 36, 36> a = Eigen::Matrix<double, 36, 36>::Zero();
    for (int j = 0; j < 6; ++j)
        a.block<6, 6>(6 * j, 6 * j) += m0;
    for (int j = 0; j < 6; ++j)
        for (int k = 0; k < 6; ++k)
            for (int r = 0; r < 6; ++r)
                a(6 * j + r, 6 * k + r) += m0(j, k);
    Eigen::Matrix<double, 36, 1> rhs;
    for (int j = 0; j < 6; ++j) rhs.segment<6>(6 * j) = -d_mat.col(j);
    const Eigen::Matrix<double, 36, 1> x = a.partialPivLu().solve(rhs);
    Mat6 v;
    for (int j = 0; j < 6; ++j) v.col(j) = x.segment<6>(6 * j);
    return (v + Mat6(v.transpose())) / 2.0;
}

Mat6 covariance_lyapunov(const Mat6& m0, const Mat6& d_mat, double cond_limit) {
    if (!stability(m0).stable)
        throw Unstable("covariance_lyapunov: drift matrix is not Hurwitz, "
                       "no steady state exists");
    const double cond = eigenvector_condition(m0);
    if (cond > cond_limit) return covariance_lyapunov_direct(m0, d_mat);
    return covariance_lyapunov_eig(m0, d_mat, cond_limit);
}

double mean_phonon(const Mat6& v_sym, int resonator_index) {
    if (resonator_index != 1 && resonator_index != 2)
        throw ConfigError("mean_phonon: resonator index must be 1 or 2");
    const int i = 2 * resonator_index;
    return (v_sym(i, i) + v_sym(i + 1, i + 1) - 1.0) / 2.0;
}

StationaryCovariance solve_stationary(const Mat6& m0, const NoiseMatrices& noise) {
    StationaryCovariance out;
    const StabilityResult st = stability(m0);
    out.stable = st.stable;
    out.eigvals = st.eigvals;
    out.cond_u = eigenvector_condition(m0);
    if (!st.stable)
        throw Unstable("solve_stationary: drift matrix is not Hurwitz");
    out.v_sym = covariance_lyapunov(m0, noise.d);
    if (out.cond_u <= 1.0e12) {
        out.v = covariance_residue(m0, noise.c);
    } else {
        out.v = out.v_sym.cast<cplx>();  // antisymmetric part unavailable here
    }
    const Mat6 res = m0 * out.v_sym + out.v_sym * m0.transpose() + noise.d;
    out.lyap_residual = res.norm() / noise.d.norm();
    return out;
}

}  // namespace optoloop
