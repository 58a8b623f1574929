#include "optoloop/drift.hpp"

#include <cmath>

#include "optoloop/errors.hpp"

namespace optoloop {

namespace {

// Rows/columns touching one mechanical resonator, given the complex scalars
// that multiply the quadratures for this harmonic. re_a/im_a are the harmonic
// components of Re<a>(t) and Im<a>(t); they are complex for the +-1 harmonic.
//
// Cavity row X_a:  -2 Re(g) Im<a> X_b - 2 Im(g) Im<a> Y_b
// Cavity row Y_a:  +2 Re(g) Re<a> X_b + 2 Im(g) Re<a> Y_b
// Mech row X_b:    -2 Im(g) Re<a> X_a - 2 Im(g) Im<a> Y_a
// Mech row Y_b:    +2 Re(g) Re<a> X_a + 2 Re(g) Im<a> Y_a
template <typename Mat, typename Scalar>
void fill_coupling(Mat& m, int col0, const cplx& g, Scalar re_a, Scalar im_a) {
    const double gr = g.real(), gi = g.imag();
    m(0, col0) = -2.0 * gr * im_a;
    m(0, col0 + 1) = -2.0 * gi * im_a;
    m(1, col0) = 2.0 * gr * re_a;
    m(1, col0 + 1) = 2.0 * gi * re_a;
    m(col0, 0) = -2.0 * gi * re_a;
    m(col0, 1) = -2.0 * gi * im_a;
    m(col0 + 1, 0) = 2.0 * gr * re_a;
    m(col0 + 1, 1) = 2.0 * gr * im_a;
}

}  // namespace

Mat6 DriftHarmonics::at(double t, double omega_mod) const {
    const cplx e = std::exp(-I * omega_mod * t);
    return m0 + 2.0 * (m1 * e).real();
}

DriftHarmonics build_drift(const SystemParams& p, const DerivedParams& d,
                           const ClassicalSteadyState& s) {
    (void)d;
    const cplx g1 = p.g1(), g2 = p.g2(), mu = p.mu();

    DriftHarmonics h;

    // Stationary harmonic: decoupled rotating-decaying blocks first.
    Mat6& m0 = h.m0;
    m0(0, 0) = -p.kappa / 2.0;
    m0(0, 1) = s.delta_a0;
    m0(1, 0) = -s.delta_a0;
    m0(1, 1) = -p.kappa / 2.0;
    m0(2, 2) = -p.gamma1 / 2.0;
    m0(2, 3) = p.omega_m;
    m0(3, 2) = -p.omega_m;
    m0(3, 3) = -p.gamma1 / 2.0;
    m0(4, 4) = -p.gamma2 / 2.0;
    m0(4, 5) = p.omega_m;
    m0(5, 4) = -p.omega_m;
    m0(5, 5) = -p.gamma2 / 2.0;

    // Beam-splitter intermechanical block from i mu b2 (and i mu* b1).
    m0(2, 4) = -mu.imag();
    m0(2, 5) = -mu.real();
    m0(3, 4) = mu.real();
    m0(3, 5) = -mu.imag();
    m0(4, 2) = mu.imag();
    m0(4, 3) = -mu.real();
    m0(5, 2) = mu.real();
    m0(5, 3) = mu.imag();

    fill_coupling(m0, 2, g1, s.a0.real(), s.a0.imag());
    fill_coupling(m0, 4, g2, s.a0.real(), s.a0.imag());

    // +1 harmonic of Re<a>, Im<a> and Delta_a.
    const cplx re_a1 = (s.a_p1 + std::conj(s.a_m1)) / 2.0;
    const cplx im_a1 = (s.a_p1 - std::conj(s.a_m1)) / (2.0 * I);
    const cplx d1 = s.delta_a_p1;

    CMat6& m1 = h.m1;
    m1(0, 1) = d1;
    m1(1, 0) = -d1;
    fill_coupling(m1, 2, g1, re_a1, im_a1);
    fill_coupling(m1, 4, g2, re_a1, im_a1);

    return h;
}

NoiseMatrices build_noise(const SystemParams& p, const DerivedParams& d) {
    NoiseMatrices n;
    const double na = d.n_cavity, nm = d.n_mech;
    const double rates[3] = {p.kappa, p.gamma1, p.gamma2};
    const double occ[3] = {na, nm, nm};
    for (int k = 0; k < 3; ++k) {
        const int i = 2 * k;
        const double r = rates[k];
        n.c(i, i) = r * (2.0 * occ[k] + 1.0) / 2.0;
        n.c(i + 1, i + 1) = n.c(i, i);
        n.c(i, i + 1) = -r / (2.0 * I);  // = +i r/2
        n.c(i + 1, i) = r / (2.0 * I);   // = -i r/2
    }
    // Symmetric part (C + C^T)/2: the off-diagonals cancel, leaving the
    // diagonal diffusion matrix of the Lyapunov equation.
    const CMat6 sym = (n.c + n.c.transpose()) / 2.0;
    n.d = sym.real();
    return n;
}

}  // namespace optoloop
