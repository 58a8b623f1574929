#ifndef OPTOLOOP_DRIFT_HPP
#define OPTOLOOP_DRIFT_HPP

#include "optoloop/classical.hpp"
#include "optoloop/params.hpp"
#include "optoloop/types.hpp"

namespace optoloop {

// Harmonics of the 6x6 drift matrix,
//   M(t) = m1 exp(-i Omega t) + m0 + conj(m1) exp(+i Omega t),
// in the quadrature basis [X_a, Y_a, X_b1, Y_b1, X_b2, Y_b2] with
// X = (d + d^dag)/sqrt(2), Y = (d - d^dag)/(i sqrt(2)).
// m1 multiplies exp(-i Omega t); realness of M(t) forces the -1 harmonic
// to be the elementwise conjugate of m1, so only m0 and m1 are stored.
struct DriftHarmonics {
    Mat6 m0 = Mat6::Zero();
    CMat6 m1 = CMat6::Zero();

    CMat6 m_plus1() const { return m1; }
    CMat6 m_minus1() const { return m1.conjugate(); }
    bool modulated() const { return m1.cwiseAbs().maxCoeff() > 0.0; }

    // M(t); imaginary parts cancel identically.
    Mat6 at(double t, double omega_mod) const;
};

// Input-noise correlation matrices:
//   c: two-time correlator <N(t) N(t')> = C delta(t - t'), complex 6x6
//   d: symmetrized diffusion matrix, real diagonal 6x6
struct NoiseMatrices {
    CMat6 c = CMat6::Zero();
    Mat6 d = Mat6::Zero();
};

DriftHarmonics build_drift(const SystemParams& p, const DerivedParams& d,
                           const ClassicalSteadyState& s);

NoiseMatrices build_noise(const SystemParams& p, const DerivedParams& d);

}  // namespace optoloop

#endif
