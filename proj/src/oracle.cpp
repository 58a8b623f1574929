#include "optoloop/oracle.hpp"

#include <cmath>
#include <numbers>

#include "optoloop/errors.hpp"

namespace optoloop {

namespace {

using std::numbers::pi;

double default_dt(double omega_mod) { return 2.0 * pi / (200.0 * omega_mod); }

cplx drive(const DerivedParams& d, double omega_mod, double t) {
    const cplx e = std::exp(-I * omega_mod * t);
    return d.eps0 + d.eps_plus * e + d.eps_minus * std::conj(e);
}

}  // namespace

std::array<cplx, 3> mean_field_rhs(const SystemParams& p, const DerivedParams& d,
                                   const std::array<cplx, 3>& s, double t) {
    const cplx g1 = p.g1(), g2 = p.g2(), mu = p.mu();
    const auto& [a, b1, b2] = s;
    const cplx coupling = g1 * std::conj(b1) + std::conj(g1) * b1 +
                          g2 * std::conj(b2) + std::conj(g2) * b2;
    const double photon = std::norm(a);
    std::array<cplx, 3> f;
    f[0] = -I * p.delta * a + I * a * coupling +
           std::sqrt(p.eta * p.kappa) * drive(d, p.omega_mod, t) - p.kappa / 2.0 * a;
    f[1] = -I * p.omega_m * b1 + I * mu * b2 + I * g1 * photon - p.gamma1 / 2.0 * b1;
    f[2] = -I * p.omega_m * b2 + I * std::conj(mu) * b1 + I * g2 * photon - p.gamma2 / 2.0 * b2;
    return f;
}

CovarianceTrajectory propagate_covariance(const DriftHarmonics& harmonics,
                                          const Mat6& d_mat, const Mat6& v0,
                                          double omega_mod, double t_end,
                                          double dt, int overview_samples) {
    if (dt <= 0.0) dt = default_dt(omega_mod);
    const long n_steps = std::lround(std::ceil(t_end / dt));
    const long steps_per_period = std::max<long>(1, std::lround(2.0 * pi / (omega_mod * dt)));
    if (n_steps < steps_per_period + 1)
        throw ConfigError("propagate_covariance: t_end must cover at least one modulation period");
    const long stride = std::max<long>(1, n_steps / std::max(1, overview_samples));

    const bool modulated = harmonics.modulated();
    const Mat6 m_const = harmonics.m0;

    auto m_at = [&](double t) -> Mat6 {
        if (!modulated) return m_const;
        return harmonics.at(t, omega_mod);
    };
    auto rhs = [&](const Mat6& m, const Mat6& v) -> Mat6 {
        const Mat6 mv = m * v;
        return mv + mv.transpose() + d_mat;
    };

    CovarianceTrajectory out;
    out.times.reserve(overview_samples + 2);
    out.covariances.reserve(overview_samples + 2);

    Mat6 v = v0;
    Mat6 v_prev_period = v0;
    // dense diagonal samples over the final period, one per step
    std::vector<Vec6> tail(steps_per_period);
    const long tail_start = n_steps - steps_per_period;

    for (long k = 0; k < n_steps; ++k) {
        const double t = k * dt;
        if (k % stride == 0) {
            out.times.push_back(t);
            out.covariances.push_back(v);
        }
        if (k == tail_start) v_prev_period = v;
        if (k >= tail_start) tail[k - tail_start] = v.diagonal();

        const Mat6 m1 = m_at(t);
        const Mat6 mh = modulated ? m_at(t + dt / 2.0) : m_const;
        const Mat6 m2 = modulated ? m_at(t + dt) : m_const;
        const Mat6 k1 = rhs(m1, v);
        const Mat6 k2 = rhs(mh, v + dt / 2.0 * k1);
        const Mat6 k3 = rhs(mh, v + dt / 2.0 * k2);
        const Mat6 k4 = rhs(m2, v + dt * k3);
        v += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        v = ((v + Mat6(v.transpose())) / 2.0).eval();

        const double peak = v.diagonal().cwiseAbs().maxCoeff();
        if (!std::isfinite(peak) || peak > 1.0e12)
            throw BlowUp("propagate_covariance: variance exceeded 1e12", t);
    }

    out.v_final = v;
    out.times.push_back(n_steps * dt);
    out.covariances.push_back(v);

    // Period statistics: uniform mean over exactly one period; extrema by
    // parabolic refinement through the sampled extremum and its neighbors.
    const long sp = steps_per_period;
    for (int i = 0; i < 6; ++i) {
        double sum = 0.0;
        long arg_lo = 0, arg_hi = 0;
        for (long k = 0; k < sp; ++k) {
            const double x = tail[k](i);
            sum += x;
            if (x < tail[arg_lo](i)) arg_lo = k;
            if (x > tail[arg_hi](i)) arg_hi = k;
        }
        out.v_diag_mean(i) = sum / static_cast<double>(sp);
        auto refine = [&](long j) {
            const double ym = tail[(j - 1 + sp) % sp](i);
            const double y0 = tail[j](i);
            const double yp = tail[(j + 1) % sp](i);
            const double denom = ym - 2.0 * y0 + yp;
            if (denom == 0.0) return y0;
            const double s = 0.5 * (ym - yp) / denom;
            return y0 - 0.25 * (ym - yp) * s;
        };
        out.v_diag_min(i) = refine(arg_lo);
        out.v_diag_max(i) = refine(arg_hi);
    }
    out.periodicity_residual = (v - v_prev_period).norm() / std::max(v.norm(), 1.0e-300);
    return out;
}

ClassicalTrajectory propagate_classical(const SystemParams& p, const DerivedParams& d,
                                        double t_end, double dt, int overview_samples) {
    if (dt <= 0.0) dt = default_dt(p.omega_mod);
    const long n_steps = std::lround(std::ceil(t_end / dt));
    const long steps_per_period = std::max<long>(2, std::lround(2.0 * pi / (p.omega_mod * dt)));
    if (n_steps < steps_per_period + 1)
        throw ConfigError("propagate_classical: t_end must cover at least one modulation period");
    const long stride = std::max<long>(1, n_steps / std::max(1, overview_samples));

    ClassicalTrajectory out;
    std::array<cplx, 3> z{cplx{0.0, 0.0}, cplx{0.0, 0.0}, cplx{0.0, 0.0}};

    // Dense ring buffer over the final period for the harmonic projection.
    std::vector<std::array<cplx, 3>> tail(steps_per_period + 1);
    std::vector<double> tail_t(steps_per_period + 1);

    auto step = [&](std::array<cplx, 3>& s, double t) {
        const auto k1 = mean_field_rhs(p, d, s, t);
        std::array<cplx, 3> s2, s3, s4;
        for (int i = 0; i < 3; ++i) s2[i] = s[i] + dt / 2.0 * k1[i];
        const auto k2 = mean_field_rhs(p, d, s2, t + dt / 2.0);
        for (int i = 0; i < 3; ++i) s3[i] = s[i] + dt / 2.0 * k2[i];
        const auto k3 = mean_field_rhs(p, d, s3, t + dt / 2.0);
        for (int i = 0; i < 3; ++i) s4[i] = s[i] + dt * k3[i];
        const auto k4 = mean_field_rhs(p, d, s4, t + dt);
        for (int i = 0; i < 3; ++i)
            s[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    };

    const long tail_start = n_steps - steps_per_period;
    for (long k = 0; k < n_steps; ++k) {
        const double t = k * dt;
        if (k % stride == 0) {
            out.times.push_back(t);
            out.means.push_back(z);
        }
        if (k >= tail_start) {
            tail[k - tail_start] = z;
            tail_t[k - tail_start] = t;
        }
        step(z, t);
        const double mag = std::abs(z[0]) + std::abs(z[1]) + std::abs(z[2]);
        if (!std::isfinite(mag) || mag > 1.0e9)
            throw BlowUp("propagate_classical: amplitude exceeded 1e9", t);
    }

    tail[steps_per_period] = z;
    tail_t[steps_per_period] = n_steps * dt;
    out.final_state = z;
    out.times.push_back(n_steps * dt);
    out.means.push_back(z);

    // Trapezoid projection of harmonics n in {0, +1, -1} over the last period.
    auto project = [&](int component, int n) -> cplx {
        cplx acc{0.0, 0.0};
        for (long j = 0; j <= steps_per_period; ++j) {
            const double w = (j == 0 || j == steps_per_period) ? 0.5 : 1.0;
            acc += w * tail[j][component] *
                   std::exp(I * static_cast<double>(n) * p.omega_mod * tail_t[j]);
        }
        return acc * dt / (2.0 * pi / p.omega_mod);
    };

    ClassicalSteadyState& s = out.projected;
    s.a0 = project(0, 0);
    s.a_p1 = project(0, 1);
    s.a_m1 = project(0, -1);
    s.b1_0 = project(1, 0);
    s.b1_p1 = project(1, 1);
    s.b1_m1 = project(1, -1);
    s.b2_0 = project(2, 0);
    s.b2_p1 = project(2, 1);
    s.b2_m1 = project(2, -1);
    const cplx g1 = p.g1(), g2 = p.g2();
    s.delta_a0 = p.delta - 2.0 * std::real(g1 * std::conj(s.b1_0) + g2 * std::conj(s.b2_0));
    s.delta_a_p1 = -(std::conj(g1) * s.b1_p1 + g1 * std::conj(s.b1_m1) +
                     std::conj(g2) * s.b2_p1 + g2 * std::conj(s.b2_m1));
    s.iterations = static_cast<int>(n_steps);
    return out;
}

}  // namespace optoloop
