#include "optoloop/spectral.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <thread>

#include "optoloop/classical.hpp"
#include "optoloop/drift.hpp"
#include "optoloop/errors.hpp"
#include "optoloop/steadystate.hpp"

namespace optoloop {

namespace {

using std::numbers::pi;

struct UpperModes {
    std::array<cplx, 3> lambda;
    std::array<CVec6, 3> vec;
};

// The three oscillating modes: eigenvalues sorted by descending imaginary
// part, top three taken (conjugate partners carry no extra information).
UpperModes upper_modes(const Mat6& m0) {
    Eigen::EigenSolver<Mat6> es(m0, true);
    std::array<int, 6> order{0, 1, 2, 3, 4, 5};
    const auto& ev = es.eigenvalues();
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return ev(a).imag() > ev(b).imag(); });
    UpperModes um;
    for (int k = 0; k < 3; ++k) {
        um.lambda[k] = ev(order[k]);
        um.vec[k] = es.eigenvectors().col(order[k]);
        um.vec[k] /= um.vec[k].norm();
    }
    return um;
}

Mat6 drift_m0_at(const SystemParams& p, double mu_mag, double phi) {
    SystemParams q = with_loop_phase(p, phi);
    q.mu_mag = mu_mag;
    const DerivedParams d = derive(q);
    const ClassicalSteadyState s = solve_classical(q, d);
    return build_drift(q, d, s).m0;
}

struct PairInfo {
    double measure;
    int a, b;
    cplx la, lb;
    double overlap;
};

PairInfo best_pair(const UpperModes& um, double omega_scale) {
    PairInfo best{std::numeric_limits<double>::infinity(), 0, 1, 0.0, 0.0, 0.0};
    for (int i = 0; i < 3; ++i) {
        for (int j = i + 1; j < 3; ++j) {
            const double overlap = std::abs(um.vec[i].dot(um.vec[j]));
            const double m = std::abs(um.lambda[i] - um.lambda[j]) / omega_scale +
                             (1.0 - overlap);
            if (m < best.measure)
                best = {m, i, j, um.lambda[i], um.lambda[j], overlap};
        }
    }
    return best;
}

// Nelder-Mead in box-normalized coordinates.
struct Simplex2 {
    using Point = std::array<double, 2>;
    Point x[3];
    double f[3];
};

template <typename F>
std::pair<std::array<double, 2>, double> nelder_mead_2d(F&& fn,
                                                        std::array<double, 2> start,
                                                        double scale, int max_iter) {
    Simplex2 s;
    s.x[0] = start;
    s.x[1] = {start[0] + scale, start[1]};
    s.x[2] = {start[0], start[1] + scale};
    for (int i = 0; i < 3; ++i) s.f[i] = fn(s.x[i]);

    auto order = [&] {
        for (int i = 0; i < 3; ++i)
            for (int j = i + 1; j < 3; ++j)
                if (s.f[j] < s.f[i]) {
                    std::swap(s.f[i], s.f[j]);
                    std::swap(s.x[i], s.x[j]);
                }
    };
    for (int it = 0; it < max_iter; ++it) {
        order();
        const double diam = std::max(
            std::hypot(s.x[1][0] - s.x[0][0], s.x[1][1] - s.x[0][1]),
            std::hypot(s.x[2][0] - s.x[0][0], s.x[2][1] - s.x[0][1]));
        if (diam < 1.0e-13 || s.f[0] < 1.0e-11) break;
        const std::array<double, 2> c{(s.x[0][0] + s.x[1][0]) / 2.0,
                                      (s.x[0][1] + s.x[1][1]) / 2.0};
        const std::array<double, 2> xr{2.0 * c[0] - s.x[2][0], 2.0 * c[1] - s.x[2][1]};
        const double fr = fn(xr);
        if (fr < s.f[0]) {
            const std::array<double, 2> xe{3.0 * c[0] - 2.0 * s.x[2][0],
                                           3.0 * c[1] - 2.0 * s.x[2][1]};
            const double fe = fn(xe);
            if (fe < fr) {
                s.x[2] = xe;
                s.f[2] = fe;
            } else {
                s.x[2] = xr;
                s.f[2] = fr;
            }
        } else if (fr < s.f[1]) {
            s.x[2] = xr;
            s.f[2] = fr;
        } else {
            const std::array<double, 2> xc{c[0] + 0.5 * (s.x[2][0] - c[0]),
                                           c[1] + 0.5 * (s.x[2][1] - c[1])};
            const double fc = fn(xc);
            if (fc < s.f[2]) {
                s.x[2] = xc;
                s.f[2] = fc;
            } else {
                for (int i = 1; i < 3; ++i) {
                    s.x[i] = {s.x[0][0] + 0.5 * (s.x[i][0] - s.x[0][0]),
                              s.x[0][1] + 0.5 * (s.x[i][1] - s.x[0][1])};
                    s.f[i] = fn(s.x[i]);
                }
            }
        }
    }
    order();
    return {s.x[0], s.f[0]};
}

}  // namespace

std::string to_string(Chirality c) {
    return c == Chirality::clockwise ? "clockwise" : "counterclockwise";
}
std::string to_string(Branch b) { return b == Branch::upper ? "upper" : "lower"; }

EigenLoci eigen_loci(const SystemParams& p, const std::vector<double>& phi_grid) {
    EigenLoci loci;
    loci.phi_samples = phi_grid;
    loci.eigvals_per_phi.reserve(phi_grid.size());
    std::array<cplx, 3> prev{};
    bool have_prev = false;
    for (double phi : phi_grid) {
        // Loci for phi > pi retrace the [0, pi] branch backwards.
        const double phi_eff = phi <= pi ? phi : 2.0 * pi - phi;
        const Mat6 m0 = drift_m0_at(p, p.mu_mag, phi_eff);
        const UpperModes um = upper_modes(m0);
        std::array<cplx, 3> cur = um.lambda;
        if (have_prev) {
            // Minimal-distance assignment over the six permutations of three.
            static const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                            {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
            double best = std::numeric_limits<double>::infinity();
            int best_p = 0;
            for (int q = 0; q < 6; ++q) {
                double dist = 0.0;
                for (int k = 0; k < 3; ++k)
                    dist += std::abs(cur[perms[q][k]] - prev[k]);
                if (dist < best) {
                    best = dist;
                    best_p = q;
                }
            }
            std::array<cplx, 3> tracked;
            for (int k = 0; k < 3; ++k) tracked[k] = cur[perms[best_p][k]];
            cur = tracked;
        }
        loci.eigvals_per_phi.push_back(cur);
        prev = cur;
        have_prev = true;
    }
    return loci;
}

double coalescence_measure(const Mat6& m0, double omega_scale) {
    return best_pair(upper_modes(m0), omega_scale).measure;
}

CoalescenceInfo coalescence_info(const Mat6& m0, double omega_scale) {
    const PairInfo pair = best_pair(upper_modes(m0), omega_scale);
    return {pair.measure, pair.la, pair.lb, pair.overlap};
}

EpPoint find_ep(const SystemParams& p, const SearchBox& box, const FindEpOptions& opts) {
    const double mu_span = box.mu_hi - box.mu_lo;
    const double phi_span = box.phi_hi - box.phi_lo;
    if (mu_span <= 0.0 || phi_span <= 0.0)
        throw ConfigError("find_ep: empty search box");

    auto eval = [&](double u, double v) -> double {
        const double mu = box.mu_lo + std::clamp(u, 0.0, 1.0) * mu_span;
        const double phi = box.phi_lo + std::clamp(v, 0.0, 1.0) * phi_span;
        double penalty = 0.0;
        if (u < 0.0 || u > 1.0 || v < 0.0 || v > 1.0)
            penalty = 10.0 * (std::max({0.0, -u, u - 1.0}) + std::max({0.0, -v, v - 1.0}));
        try {
            const Mat6 m0 = drift_m0_at(p, mu, phi);
            // coalescence points are only meaningful on the stable side
            if (!stability(m0).stable) return 1.0e3 + penalty;
            return coalescence_measure(m0, p.omega_m) + penalty;
        } catch (const Error&) {
            return 1.0e6;  // non-converged classical point: steer away
        }
    };

    // Coarse scan.
    double best_f = std::numeric_limits<double>::infinity();
    std::array<double, 2> best_u{0.5, 0.5};
    for (int i = 0; i < opts.scan_n; ++i) {
        for (int j = 0; j < opts.scan_n; ++j) {
            const double u = (i + 0.5) / opts.scan_n;
            const double v = (j + 0.5) / opts.scan_n;
            const double f = eval(u, v);
            if (f < best_f) {
                best_f = f;
                best_u = {u, v};
            }
        }
    }

    // Simplex refinement on the conical measure.
    auto [u_min, f_min] = nelder_mead_2d(
        [&](const std::array<double, 2>& u) { return eval(u[0], u[1]); }, best_u,
        1.0 / opts.scan_n, opts.simplex_iters);

    double mu_best = box.mu_lo + std::clamp(u_min[0], 0.0, 1.0) * mu_span;
    double phi_best = box.phi_lo + std::clamp(u_min[1], 0.0, 1.0) * phi_span;

    // Gauss-Newton polish on h = (l_a - l_b)^2, which is smooth through the
    // EP while the measure itself has square-root topology.
    auto pair_h = [&](double mu, double phi) -> cplx {
        const CoalescenceInfo info =
            coalescence_info(drift_m0_at(p, mu, phi), p.omega_m);
        const cplx d = (info.lambda_a - info.lambda_b) / p.omega_m;
        return d * d;
    };
    {
        double mu = mu_best, phi = phi_best;
        double best_meas = f_min;
        for (int it = 0; it < 12; ++it) {
            const double hmu = 1.0e-7 * mu_span, hphi = 1.0e-7 * phi_span;
            cplx h0, dh_mu, dh_phi;
            try {
                h0 = pair_h(mu, phi);
                dh_mu = (pair_h(mu + hmu, phi) - pair_h(mu - hmu, phi)) / (2.0 * hmu);
                dh_phi = (pair_h(mu, phi + hphi) - pair_h(mu, phi - hphi)) / (2.0 * hphi);
            } catch (const Error&) {
                break;
            }
            Eigen::Matrix2d jac;
            jac << dh_mu.real(), dh_phi.real(), dh_mu.imag(), dh_phi.imag();
            const Eigen::Vector2d rhs(-h0.real(), -h0.imag());
            const Eigen::Vector2d step = jac.fullPivLu().solve(rhs);
            if (!step.allFinite()) break;
            const double mu_n = std::clamp(mu + step(0), box.mu_lo, box.mu_hi);
            const double phi_n = std::clamp(phi + step(1), box.phi_lo, box.phi_hi);
            double meas;
            try {
                meas = coalescence_measure(drift_m0_at(p, mu_n, phi_n), p.omega_m);
            } catch (const Error&) {
                break;
            }
            if (meas < best_meas) {
                best_meas = meas;
                mu = mu_n;
                phi = phi_n;
                mu_best = mu_n;
                phi_best = phi_n;
            } else {
                break;
            }
            if (best_meas < opts.success_target) break;
        }
        f_min = std::min(f_min, best_meas);
    }

    if (f_min > opts.notfound_tol)
        throw NotFound("find_ep: no coalescence point in the search box", f_min);

    const Mat6 m0_best = drift_m0_at(p, mu_best, phi_best);
    if (!stability(m0_best).stable)
        throw NotFound("find_ep: coalescence point lies in the unstable region", f_min);
    const CoalescenceInfo info = coalescence_info(m0_best, p.omega_m);
    EpPoint ep;
    ep.mu_mag = mu_best;
    ep.mu_over_gamma_sum = mu_best / (p.gamma1 + p.gamma2);
    ep.phi = phi_best;
    ep.chirality = phi_best < pi ? Chirality::clockwise : Chirality::counterclockwise;
    const double omega_pair = (info.lambda_a + info.lambda_b).imag() / 2.0;
    ep.branch = omega_pair > p.omega_m ? Branch::upper : Branch::lower;
    ep.residual = info.measure;
    ep.omega_ep_over_omega_m = omega_pair / p.omega_m;
    ep.eigvec_overlap = info.overlap;
    return ep;
}

SearchBox ep1_box(const SystemParams& p) {
    const double gs = p.gamma1 + p.gamma2;
    return {40.0 * gs, 65.0 * gs, 0.05, pi - 0.05};
}

SearchBox ep2_box(const SystemParams& p) {
    const double gs = p.gamma1 + p.gamma2;
    return {70.0 * gs, 90.0 * gs, 0.05, pi - 0.05};
}

std::string to_string(SurfaceAxis a) {
    switch (a) {
        case SurfaceAxis::kappa: return "kappa";
        case SurfaceAxis::power: return "power";
        case SurfaceAxis::gamma: return "gamma";
        case SurfaceAxis::g1: return "g1";
        case SurfaceAxis::g2: return "g2";
        case SurfaceAxis::delta: return "delta";
    }
    return "?";
}

SurfaceAxis surface_axis_from_string(const std::string& s) {
    if (s == "kappa") return SurfaceAxis::kappa;
    if (s == "power") return SurfaceAxis::power;
    if (s == "gamma") return SurfaceAxis::gamma;
    if (s == "g1") return SurfaceAxis::g1;
    if (s == "g2") return SurfaceAxis::g2;
    if (s == "delta") return SurfaceAxis::delta;
    throw ConfigError("unknown surface axis: " + s);
}

SystemParams apply_axis(const SystemParams& p, SurfaceAxis axis, double multiplier) {
    SystemParams q = p;
    switch (axis) {
        case SurfaceAxis::kappa: q.kappa *= multiplier; break;
        case SurfaceAxis::power: q.power *= multiplier; break;
        case SurfaceAxis::gamma:
            q.gamma1 *= multiplier;
            q.gamma2 *= multiplier;
            break;
        case SurfaceAxis::g1: q.g1_mag *= multiplier; break;
        case SurfaceAxis::g2: q.g2_mag *= multiplier; break;
        case SurfaceAxis::delta: q.delta *= multiplier; break;
    }
    return q;
}

namespace {

std::optional<EpPoint> find_ep_continued(const SystemParams& q, const EpPoint* seed,
                                         const SearchBox& nominal,
                                         const FindEpOptions& opts) {
    const double phi_min = 0.02, phi_max = 2.0 * pi - 0.02;
    FindEpOptions warm = opts;
    warm.scan_n = 12;
    if (seed) {
        SearchBox narrow{seed->mu_mag * 0.80, seed->mu_mag * 1.25,
                         std::max(phi_min, seed->phi - 0.35),
                         std::min(phi_max, seed->phi + 0.35)};
        try {
            return find_ep(q, narrow, warm);
        } catch (const Error&) {
            SearchBox wide{seed->mu_mag * 0.5, seed->mu_mag * 2.0,
                           std::max(phi_min, seed->phi - 0.9),
                           std::min(phi_max, seed->phi + 0.9)};
            FindEpOptions mid = opts;
            mid.scan_n = 24;
            try {
                return find_ep(q, wide, mid);
            } catch (const Error&) {
            }
        }
    }
    FindEpOptions full = opts;
    full.scan_n = 48;
    try {
        return find_ep(q, nominal, full);
    } catch (const Error&) {
        return std::nullopt;
    }
}

}  // namespace

EpSurface trace_surface(const SystemParams& p, SurfaceAxis axis1,
                        const std::vector<double>& grid1, SurfaceAxis axis2,
                        const std::vector<double>& grid2,
                        const FindEpOptions& opts, int workers) {
    EpSurface surf;
    surf.axis1 = axis1;
    surf.axis2 = axis2;
    surf.grid1 = grid1;
    surf.grid2 = grid2;
    const size_t n1 = grid1.size(), n2 = grid2.size();
    surf.branch1.assign(n1 * n2, std::nullopt);
    surf.branch2.assign(n1 * n2, std::nullopt);

    // Base-point EPs seed the whole continuation.
    std::optional<EpPoint> base1, base2;
    try {
        base1 = find_ep(p, ep1_box(p), opts);
    } catch (const Error&) {
    }
    try {
        base2 = find_ep(p, ep2_box(p), opts);
    } catch (const Error&) {
    }

    // Seed column: the axis2 value closest to the preset (multiplier 1).
    size_t c_star = 0;
    for (size_t c = 1; c < n2; ++c)
        if (std::abs(grid2[c] - 1.0) < std::abs(grid2[c_star] - 1.0)) c_star = c;
    size_t r_star = 0;
    for (size_t r = 1; r < n1; ++r)
        if (std::abs(grid1[r] - 1.0) < std::abs(grid1[r_star] - 1.0)) r_star = r;

    auto node_params = [&](size_t r, size_t c) {
        return apply_axis(apply_axis(p, axis1, grid1[r]), axis2, grid2[c]);
    };
    auto trace_node = [&](size_t r, size_t c, const std::optional<EpPoint>& seed1,
                          const std::optional<EpPoint>& seed2) {
        const SystemParams q = node_params(r, c);
        const size_t idx = r * n2 + c;
        surf.branch1[idx] =
            find_ep_continued(q, seed1 ? &*seed1 : nullptr, ep1_box(q), opts);
        surf.branch2[idx] =
            find_ep_continued(q, seed2 ? &*seed2 : nullptr, ep2_box(q), opts);
    };

    // Phase 1: seed column, walked outward from the row nearest the preset.
    trace_node(r_star, c_star, base1, base2);
    for (size_t r = r_star + 1; r < n1; ++r)
        trace_node(r, c_star, surf.branch1[(r - 1) * n2 + c_star],
                   surf.branch2[(r - 1) * n2 + c_star]);
    for (size_t r = r_star; r-- > 0;)
        trace_node(r, c_star, surf.branch1[(r + 1) * n2 + c_star],
                   surf.branch2[(r + 1) * n2 + c_star]);

    // Phase 2: rows in parallel, columns walked outward from the seed column.
    auto do_row = [&](size_t r) {
        for (size_t c = c_star + 1; c < n2; ++c)
            trace_node(r, c, surf.branch1[r * n2 + c - 1], surf.branch2[r * n2 + c - 1]);
        for (size_t c = c_star; c-- > 0;)
            trace_node(r, c, surf.branch1[r * n2 + c + 1], surf.branch2[r * n2 + c + 1]);
    };
    if (workers <= 1) {
        for (size_t r = 0; r < n1; ++r) do_row(r);
    } else {
        std::vector<std::thread> pool;
        std::atomic<size_t> next{0};
        for (int t = 0; t < workers; ++t)
            pool.emplace_back([&] {
                size_t r;
                while ((r = next.fetch_add(1)) < n1) do_row(r);
            });
        for (auto& th : pool) th.join();
    }
    return surf;
}

}  // namespace optoloop
