#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numbers>

#include "optoloop/drift.hpp"
#include "optoloop/oracle.hpp"
#include "optoloop/steadystate.hpp"
#include "support/test_utils.hpp"

using namespace optoloop;
using std::numbers::pi;

namespace {

using Vec6d = Eigen::Matrix<double, 6, 1>;

Vec6d to_real6(const std::array<cplx, 3>& z) {
    Vec6d u;
    for (int k = 0; k < 3; ++k) {
        u(2 * k) = z[k].real();
        u(2 * k + 1) = z[k].imag();
    }
    return u;
}

std::array<cplx, 3> to_cplx3(const Vec6d& u) {
    return {cplx(u(0), u(1)), cplx(u(2), u(3)), cplx(u(4), u(5))};
}

// Jacobian of the mean-field flow at the orbit point, by central
// differences. The flow is quadratic in the state, so the differences are
// exact up to roundoff.
Mat6 fd_jacobian(const SystemParams& p, const DerivedParams& d,
                 const std::array<cplx, 3>& z, double t) {
    const Vec6d u0 = to_real6(z);
    Mat6 jac;
    for (int j = 0; j < 6; ++j) {
        const double h = 1.0e-3 * (1.0 + std::abs(u0(j)));
        Vec6d up = u0, um = u0;
        up(j) += h;
        um(j) -= h;
        const Vec6d fp = to_real6(mean_field_rhs(p, d, to_cplx3(up), t));
        const Vec6d fm = to_real6(mean_field_rhs(p, d, to_cplx3(um), t));
        jac.col(j) = (fp - fm) / (2.0 * h);
    }
    return jac;
}

Mat6 exchange_permutation() {
    Mat6 perm = Mat6::Zero();
    perm(0, 0) = perm(1, 1) = 1.0;
    perm(2, 4) = perm(3, 5) = 1.0;
    perm(4, 2) = perm(5, 3) = 1.0;
    return perm;
}

}  // namespace

TEST_CASE("decoupled drift is block diagonal rotating decay") {
    SystemParams p = default_preset();
    p.g1_mag = p.g2_mag = 0.0;
    p.mu_mag = 0.0;
    const auto c = test::make_chain(p);
    Mat6 expected = Mat6::Zero();
    expected(0, 0) = expected(1, 1) = -p.kappa / 2.0;
    expected(0, 1) = p.delta;
    expected(1, 0) = -p.delta;
    expected(2, 2) = expected(3, 3) = -p.gamma1 / 2.0;
    expected(2, 3) = p.omega_m;
    expected(3, 2) = -p.omega_m;
    expected(4, 4) = expected(5, 5) = -p.gamma2 / 2.0;
    expected(4, 5) = p.omega_m;
    expected(5, 4) = -p.omega_m;
    CHECK(test::rel_mat_diff(c.h.m0, expected) < 1.0e-14);
    CHECK(c.h.m1.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("trace identities") {
    const auto c = test::make_chain(default_preset());
    CHECK(test::rel_diff(c.h.m0.trace(), -(c.p.kappa + c.p.gamma1 + c.p.gamma2)) < 1.0e-14);
    CHECK(c.h.m1.cwiseAbs().maxCoeff() == 0.0);  // unmodulated

    SystemParams pm = default_preset();
    pm.depth_plus = 0.5;
    const auto cm = test::make_chain(pm);
    CHECK(test::rel_diff(cm.h.m0.trace(), -(pm.kappa + pm.gamma1 + pm.gamma2)) < 1.0e-14);
    CHECK(std::abs(cm.h.m1.trace()) == 0.0);
    CHECK(cm.h.m1.cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("reconstructed M(t) is real and periodic") {
    SystemParams p = with_loop_phase(default_preset(), 0.6 * pi);
    p.depth_plus = 0.5;
    const auto c = test::make_chain(p);
    for (double frac : {0.0, 0.13, 0.37, 0.5, 0.77}) {
        const double t = frac * 2.0 * pi / p.omega_mod;
        const cplx e = std::exp(-I * p.omega_mod * t);
        const CMat6 mc = c.h.m0.cast<cplx>() + c.h.m_plus1() * e +
                         c.h.m_minus1() * std::conj(e);
        CHECK(mc.imag().cwiseAbs().maxCoeff() <
              1.0e-12 * mc.real().cwiseAbs().maxCoeff());
        CHECK(test::rel_mat_diff(Mat6(mc.real()), c.h.at(t, p.omega_mod)) < 1.0e-14);
    }
}

TEST_CASE("drift matches the finite-difference linearization of the flow") {
    for (double depth : {0.0, 0.5}) {
        SystemParams p = with_loop_phase(default_preset(), pi / 2.0);
        p.depth_plus = depth;
        p.phi1 = 0.2;  // exercise complex couplings through the transcription
        p.phi2 = -0.1;
        p = with_loop_phase(p, pi / 2.0);
        const auto c = test::make_chain(p);

        const int n_phases = 16;
        Mat6 m0_fd = Mat6::Zero();
        CMat6 m1_fd = CMat6::Zero();
        for (int s = 0; s < n_phases; ++s) {
            const double t = s * 2.0 * pi / (p.omega_mod * n_phases);
            const std::array<cplx, 3> orbit = {c.s.cavity_mean(t, p.omega_mod),
                                               c.s.b1_mean(t, p.omega_mod),
                                               c.s.b2_mean(t, p.omega_mod)};
            const Mat6 jac = fd_jacobian(p, c.d, orbit, t);
            m0_fd += jac / n_phases;
            m1_fd += jac.cast<cplx>() * std::exp(I * p.omega_mod * t) / double(n_phases);
        }
        CHECK(test::rel_mat_diff(m0_fd, c.h.m0) < 1.0e-8);
        if (depth > 0.0) {
            CHECK(test::rel_mat_diff(m1_fd, c.h.m1) < 1.0e-8);
        } else {
            CHECK(m1_fd.cwiseAbs().maxCoeff() < 1.0e-8 * c.h.m0.norm());
        }
    }
}

TEST_CASE("modulated harmonics touch only cavity rows/columns") {
    SystemParams p = with_loop_phase(default_preset(), pi / 2.0);
    p.depth_plus = 0.5;
    const auto c = test::make_chain(p);
    // mechanical-mechanical block stays constant in time
    for (int i = 2; i < 6; ++i)
        for (int j = 2; j < 6; ++j) CHECK(std::abs(c.h.m1(i, j)) == 0.0);
    CHECK(c.h.m1.cwiseAbs().block<2, 6>(0, 0).maxCoeff() > 0.0);
}

TEST_CASE("loop phase reversal permutes the resonators") {
    for (double phi : {0.4, 1.1, 2.3}) {
        SystemParams p = with_loop_phase(default_preset(), phi);
        SystemParams q = with_loop_phase(default_preset(), 2.0 * pi - phi);
        p.depth_plus = q.depth_plus = 0.3;
        const auto cp = test::make_chain(p);
        const auto cq = test::make_chain(q);
        const Mat6 perm = exchange_permutation();
        CHECK(test::rel_mat_diff(Mat6(perm * cp.h.m0 * perm.transpose()), cq.h.m0) < 1.0e-10);
        CHECK(test::rel_mat_diff(CMat6(perm.cast<cplx>() * cp.h.m1 * perm.transpose().cast<cplx>()),
                                 cq.h.m1) < 1.0e-10);
    }
}

TEST_CASE("m0 spectrum: conjugate pairs, all damped at the preset") {
    const auto c = test::make_chain(with_loop_phase(default_preset(), pi / 2.0));
    const StabilityResult st = stability(c.h.m0);
    CHECK(st.stable);
    for (int k = 0; k < 3; ++k) {
        const cplx a = st.eigvals[k];
        const cplx b = st.eigvals[5 - k];
        CHECK(test::rel_diff(a.real(), b.real()) < 1.0e-9);
        CHECK(test::rel_diff(a.imag(), -b.imag()) < 1.0e-9);
        CHECK(a.real() < 0.0);
    }
}

TEST_CASE("noise matrices follow the bath correlators") {
    SystemParams p = default_preset();
    DerivedParams d = derive(p);

    SUBCASE("vacuum baths") {
        d.n_cavity = 0.0;
        d.n_mech = 0.0;
        const NoiseMatrices n = build_noise(p, d);
        const double diag[6] = {p.kappa / 2.0, p.kappa / 2.0, p.gamma1 / 2.0,
                                p.gamma1 / 2.0, p.gamma2 / 2.0, p.gamma2 / 2.0};
        for (int i = 0; i < 6; ++i) {
            CHECK(n.c(i, i).real() == doctest::Approx(diag[i]));
            CHECK(n.c(i, i).imag() == 0.0);
            CHECK(n.d(i, i) == doctest::Approx(diag[i]));
        }
    }
    SUBCASE("hot mechanical baths") {
        d.n_cavity = 0.0;
        d.n_mech = 100.0;
        const NoiseMatrices n = build_noise(p, d);
        CHECK(n.d(2, 2) == doctest::Approx(p.gamma1 * 201.0 / 2.0));
        CHECK(n.d(5, 5) == doctest::Approx(p.gamma2 * 201.0 / 2.0));
    }
    SUBCASE("structure") {
        const NoiseMatrices n = build_noise(p, d);
        // two-time correlator is Hermitian with +i rate/2 upper off-diagonals
        CHECK((n.c - n.c.adjoint()).cwiseAbs().maxCoeff() == 0.0);
        CHECK(n.c(0, 1) == cplx(0.0, p.kappa / 2.0));
        CHECK(n.c(1, 0) == cplx(0.0, -p.kappa / 2.0));
        CHECK(n.c(2, 3) == cplx(0.0, p.gamma1 / 2.0));
        // diffusion matrix = symmetric part = the diagonal rates
        const CMat6 sym = (n.c + n.c.transpose()) / 2.0;
        CHECK((sym.real() - n.d).cwiseAbs().maxCoeff() == 0.0);
        CHECK(sym.imag().cwiseAbs().maxCoeff() == 0.0);
        Mat6 off = n.d;
        off.diagonal().setZero();
        CHECK(off.cwiseAbs().maxCoeff() == 0.0);
    }
}
