#include "optoloop/classical.hpp"

#include <cmath>
#include <Eigen/Dense>

#include "optoloop/errors.hpp"

namespace optoloop {

namespace {

using Amps = std::array<cplx, 9>;  // a0, a+1, a-1, b1_0, b1_+1, b1_-1, b2_0, b2_+1, b2_-1

Amps to_array(const ClassicalSteadyState& s) {
    return {s.a0, s.a_p1, s.a_m1, s.b1_0, s.b1_p1, s.b1_m1, s.b2_0, s.b2_p1, s.b2_m1};
}

void from_array(const Amps& x, ClassicalSteadyState& s) {
    s.a0 = x[0]; s.a_p1 = x[1]; s.a_m1 = x[2];
    s.b1_0 = x[3]; s.b1_p1 = x[4]; s.b1_m1 = x[5];
    s.b2_0 = x[6]; s.b2_p1 = x[7]; s.b2_m1 = x[8];
}

struct DetuningHarmonics {
    cplx d0;  // real up to roundoff
    cplx d1;
};

DetuningHarmonics detuning_harmonics(const SystemParams& p, const Amps& x) {
    const cplx g1 = p.g1(), g2 = p.g2();
    DetuningHarmonics h;
    h.d0 = p.delta - 2.0 * std::real(g1 * std::conj(x[3]) + g2 * std::conj(x[6]));
    h.d1 = -(std::conj(g1) * x[4] + g1 * std::conj(x[5]) +
             std::conj(g2) * x[7] + g2 * std::conj(x[8]));
    return h;
}

// One application of the fixed-point map: each amplitude recomputed from the
// harmonic relations with the detuning harmonics evaluated at x.
Amps fixed_point_map(const SystemParams& p, const DerivedParams& d, const Amps& x) {
    const cplx g1 = p.g1(), g2 = p.g2(), mu = p.mu();
    const double Om = p.omega_mod;
    const double root_ek = std::sqrt(p.eta * p.kappa);
    const auto [d0, d1] = detuning_harmonics(p, x);
    const cplx dm1 = std::conj(d1);

    const double s0 = std::norm(x[0]) + std::norm(x[1]) + std::norm(x[2]);
    const cplx s_p1 = x[0] * std::conj(x[2]) + std::conj(x[0]) * x[1];
    const cplx s_m1 = x[0] * std::conj(x[1]) + std::conj(x[0]) * x[2];

    Amps f;
    f[0] = (root_ek * d.eps0 - I * (d1 * x[2] + dm1 * x[1])) / (I * d0 + p.kappa / 2.0);
    f[1] = (root_ek * d.eps_plus - I * d1 * x[0]) / (I * d0 + p.kappa / 2.0 - I * Om);
    f[2] = (root_ek * d.eps_minus - I * dm1 * x[0]) / (I * d0 + p.kappa / 2.0 + I * Om);
    f[3] = (I * mu * x[6] + I * g1 * s0) / (I * p.omega_m + p.gamma1 / 2.0);
    f[4] = (I * mu * x[7] + I * g1 * s_p1) / (I * (p.omega_m - Om) + p.gamma1 / 2.0);
    f[5] = (I * mu * x[8] + I * g1 * s_m1) / (I * (p.omega_m + Om) + p.gamma1 / 2.0);
    f[6] = (I * std::conj(mu) * x[3] + I * g2 * s0) / (I * p.omega_m + p.gamma2 / 2.0);
    f[7] = (I * std::conj(mu) * x[4] + I * g2 * s_p1) / (I * (p.omega_m - Om) + p.gamma2 / 2.0);
    f[8] = (I * std::conj(mu) * x[5] + I * g2 * s_m1) / (I * (p.omega_m + Om) + p.gamma2 / 2.0);
    return f;
}

double residual_of(const SystemParams& p, const DerivedParams& d, const Amps& x) {
    const Amps f = fixed_point_map(p, d, x);
    double r = 0.0;
    for (int i = 0; i < 9; ++i)
        r = std::max(r, std::abs(x[i] - f[i]) / (1.0 + std::abs(x[i])));
    return r;
}

Amps decoupled_start(const SystemParams& p, const DerivedParams& d) {
    const double root_ek = std::sqrt(p.eta * p.kappa);
    Amps x{};
    x[0] = root_ek * d.eps0 / (I * p.delta + p.kappa / 2.0);
    x[1] = root_ek * d.eps_plus / (I * p.delta + p.kappa / 2.0 - I * p.omega_mod);
    x[2] = root_ek * d.eps_minus / (I * p.delta + p.kappa / 2.0 + I * p.omega_mod);
    return x;
}

Eigen::VectorXd to_real(const Amps& x) {
    Eigen::VectorXd u(18);
    for (int i = 0; i < 9; ++i) {
        u(2 * i) = x[i].real();
        u(2 * i + 1) = x[i].imag();
    }
    return u;
}

Amps to_complex(const Eigen::VectorXd& u) {
    Amps x;
    for (int i = 0; i < 9; ++i) x[i] = cplx(u(2 * i), u(2 * i + 1));
    return x;
}

// Damped Newton on G(u) = u - F(u) over R^18.
bool newton_polish(const SystemParams& p, const DerivedParams& d, Amps& x,
                   double tol, int max_steps) {
    Eigen::VectorXd u = to_real(x);
    auto gfun = [&](const Eigen::VectorXd& v) {
        const Amps a = to_complex(v);
        return (v - to_real(fixed_point_map(p, d, a))).eval();
    };
    double res = residual_of(p, d, to_complex(u));
    for (int step = 0; step < max_steps; ++step) {
        if (res < tol) break;
        const Eigen::VectorXd g0 = gfun(u);
        Eigen::MatrixXd jac(18, 18);
        for (int j = 0; j < 18; ++j) {
            const double h = 1.0e-6 * (1.0 + std::abs(u(j)));
            Eigen::VectorXd up = u, um = u;
            up(j) += h;
            um(j) -= h;
            jac.col(j) = (gfun(up) - gfun(um)) / (2.0 * h);
        }
        const Eigen::VectorXd du = jac.partialPivLu().solve(-g0);
        if (!du.allFinite()) return false;
        double alpha = 1.0;
        bool improved = false;
        for (int k = 0; k < 8; ++k, alpha *= 0.5) {
            const double r = residual_of(p, d, to_complex((u + alpha * du).eval()));
            if (r < res) {
                u += alpha * du;
                res = r;
                improved = true;
                break;
            }
        }
        if (!improved) return false;
    }
    x = to_complex(u);
    return residual_of(p, d, x) < tol;
}

}  // namespace

std::complex<double> ClassicalSteadyState::cavity_mean(double t, double omega_mod) const {
    const cplx e = std::exp(-I * omega_mod * t);
    return a0 + a_p1 * e + a_m1 * std::conj(e);
}

std::complex<double> ClassicalSteadyState::b1_mean(double t, double omega_mod) const {
    const cplx e = std::exp(-I * omega_mod * t);
    return b1_0 + b1_p1 * e + b1_m1 * std::conj(e);
}

std::complex<double> ClassicalSteadyState::b2_mean(double t, double omega_mod) const {
    const cplx e = std::exp(-I * omega_mod * t);
    return b2_0 + b2_p1 * e + b2_m1 * std::conj(e);
}

double classical_residual(const SystemParams& p, const DerivedParams& d,
                          const ClassicalSteadyState& s) {
    return residual_of(p, d, to_array(s));
}

ClassicalSteadyState solve_classical(const SystemParams& p, const DerivedParams& d,
                                     const ClassicalSolveOptions& opts) {
    Amps x = decoupled_start(p, d);
    double res = residual_of(p, d, x);
    double best = res;
    int since_improvement = 0;
    int iter = 0;
    bool newton_done = false;

    while (res >= opts.tol && iter < opts.max_iter) {
        const Amps f = fixed_point_map(p, d, x);
        for (int i = 0; i < 9; ++i)
            x[i] = (1.0 - opts.relaxation) * x[i] + opts.relaxation * f[i];
        res = residual_of(p, d, x);
        ++iter;
        if (res < 0.9 * best) {
            best = res;
            since_improvement = 0;
        } else {
            ++since_improvement;
        }
        if (since_improvement >= opts.stagnation_window && !newton_done) {
            newton_done = true;
            if (newton_polish(p, d, x, opts.tol, 50)) {
                res = residual_of(p, d, x);
                break;
            }
            res = residual_of(p, d, x);
            since_improvement = 0;
        }
    }

    // Last resort before reporting failure: the Picard path may simply be
    // non-contracting here while the root is still well-defined.
    if (res >= opts.tol && !newton_done) {
        if (newton_polish(p, d, x, opts.tol, 50)) res = residual_of(p, d, x);
    }

    if (res >= opts.tol)
        throw NonConvergence("solve_classical: no fixed point after max_iter", std::min(res, best));

    ClassicalSteadyState s;
    from_array(x, s);
    const auto h = detuning_harmonics(p, x);
    if (std::abs(h.d0.imag()) > 1.0e-12 * (1.0 + std::abs(h.d0)))
        throw Error("solve_classical: Delta_a0 acquired an imaginary part");
    s.delta_a0 = h.d0.real();
    s.delta_a_p1 = h.d1;
    s.iterations = iter;
    s.residual = res;
    return s;
}

}  // namespace optoloop
