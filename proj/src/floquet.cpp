#include "optoloop/floquet.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <thread>

#include "optoloop/errors.hpp"
#include "optoloop/steadystate.hpp"

namespace optoloop {

namespace {

using std::numbers::pi;

// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration on P_n.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    const int m = (n + 1) / 2;
    for (int i = 1; i <= m; ++i) {
        double z = std::cos(pi * (i - 0.25) / (n + 0.5));
        double z1, pp;
        do {
            double p1 = 1.0, p2 = 0.0;
            for (int j = 1; j <= n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
            }
            pp = n * (z * p1 - p2) / (z * z - 1.0);
            z1 = z;
            z = z1 - p1 / pp;
        } while (std::abs(z - z1) > 1.0e-15);
        double p1 = 1.0, p2 = 0.0;
        for (int j = 1; j <= n; ++j) {
            const double p3 = p2;
            p2 = p1;
            p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
        }
        pp = n * (z * p1 - p2) / (z * z - 1.0);
        x[i - 1] = -z;
        x[n - i] = z;
        w[i - 1] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - i] = w[i - 1];
    }
}

// The constant part of P(omega) = i omega I + A.
CMatX zone_matrix(const DriftHarmonics& h, double omega_mod, int n_zones) {
    const int dim = 6 * (2 * n_zones + 1);
    CMatX a = CMatX::Zero(dim, dim);
    const CMat6 m_p1 = h.m_plus1();
    const CMat6 m_m1 = h.m_minus1();
    for (int n = -n_zones; n <= n_zones; ++n) {
        const int r = 6 * (n + n_zones);
        a.block<6, 6>(r, r) = h.m0.cast<cplx>();
        a.block<6, 6>(r, r).diagonal().array() += I * (n * omega_mod);
        if (n - 1 >= -n_zones) a.block<6, 6>(r, 6 * (n - 1 + n_zones)) = m_p1;
        if (n + 1 <= n_zones) a.block<6, 6>(r, 6 * (n + 1 + n_zones)) = m_m1;
    }
    return a;
}

struct PanelSet {
    std::vector<double> edges;  // ascending, first 0
    double w_max = 0.0;
};

PanelSet build_panels(const DriftHarmonics& h, double omega_mod, int n_zones, int refine) {
    Eigen::EigenSolver<Mat6> es(h.m0, false);
    const CVec6 lam = es.eigenvalues();

    const double width_max = lam.real().cwiseAbs().maxCoeff();  // ~ kappa/2
    const double kappa_est = 2.0 * width_max;
    const double w_core = (n_zones + 1) * omega_mod + 20.0 * kappa_est;
    const double base_width = std::max(width_max / 2.0, w_core * 1.0e-6) / refine;

    std::vector<double> edges;
    const long n_base = std::lround(std::ceil(w_core / base_width));
    edges.reserve(n_base + 256);
    for (long k = 0; k <= n_base; ++k)
        edges.push_back(std::min(w_core, k * base_width));

    // Geometric refinement around every resonance of the zone blocks.
    static const double offsets[] = {0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0};
    for (int k = 0; k < 6; ++k) {
        const double width = std::max(std::abs(lam(k).real()), 1.0e-12 * w_core);
        if (width >= base_width * refine) continue;  // base grid already resolves it
        for (int n = -n_zones; n <= n_zones; ++n) {
            const double center = std::abs(-lam(k).imag() - n * omega_mod);
            if (center > w_core) continue;
            for (const double f : offsets) {
                for (const double s : {-1.0, 1.0}) {
                    const double e = center + s * f * width / refine;
                    if (e > 0.0 && e < w_core) edges.push_back(e);
                }
            }
        }
    }

    std::sort(edges.begin(), edges.end());
    const double merge_tol = std::max(1.0e-9 * w_core, 1.0e-3);
    std::vector<double> merged;
    merged.reserve(edges.size());
    for (const double e : edges)
        if (merged.empty() || e - merged.back() > merge_tol) merged.push_back(e);
    if (merged.front() != 0.0) merged.insert(merged.begin(), 0.0);
    merged.back() = w_core;

    // Far field: geometrically growing panels; the integrand is pole-free and
    // smooth out here, the remainder is handled analytically.
    double w = w_core;
    for (int k = 0; k < 14 * refine; ++k) {
        w *= std::pow(2.0, 1.0 / refine);
        merged.push_back(w);
    }

    PanelSet ps;
    ps.edges = std::move(merged);
    ps.w_max = ps.edges.back();
    return ps;
}

struct Accumulator {
    // per ell in 0..ell_max, per diagonal index i
    std::vector<CVec6> sums;
    Accumulator(int ell_max) : sums(ell_max + 1, CVec6::Zero()) {}
    Accumulator& operator+=(const Accumulator& o) {
        for (size_t l = 0; l < sums.size(); ++l) sums[l] += o.sums[l];
        return *this;
    }
};

}  // namespace

double FloquetCovariance::value_at(int i, double t, double omega_mod, int ell_max) const {
    double v = v0(i);
    const cplx e = std::exp(-I * omega_mod * t);
    if (ell_max >= 1) v += 2.0 * std::real(v1(i) * e);
    if (ell_max >= 2) v += 2.0 * std::real(v2(i) * e * e);
    return v;
}

CMatX assemble_p(const DriftHarmonics& h, double omega, double omega_mod, int n_zones) {
    CMatX p = zone_matrix(h, omega_mod, n_zones);
    p.diagonal().array() += I * omega;
    return p;
}

FloquetOperator build_floquet_grid(const DriftHarmonics& h, double omega_mod,
                                   const FloquetOptions& opts, int refine) {
    const PanelSet ps = build_panels(h, omega_mod, opts.n_zones, refine);
    std::vector<double> gx, gw;
    gauss_legendre(opts.gl_points, gx, gw);

    FloquetOperator op;
    op.n_zones = opts.n_zones;
    op.block_dim = 6 * (2 * opts.n_zones + 1);
    op.omega_max = ps.w_max;
    const size_t n_panels = ps.edges.size() - 1;
    op.omega_nodes.reserve(n_panels * gx.size());
    op.omega_weights.reserve(n_panels * gx.size());
    for (size_t p = 0; p < n_panels; ++p) {
        const double a = ps.edges[p], b = ps.edges[p + 1];
        const double half = (b - a) / 2.0, mid = (a + b) / 2.0;
        for (size_t q = 0; q < gx.size(); ++q) {
            op.omega_nodes.push_back(mid + half * gx[q]);
            op.omega_weights.push_back(half * gw[q]);
        }
    }
    return op;
}

namespace {

// One full pass over a grid; returns V^(l) diagonals including tail terms.
std::vector<CVec6> integrate_grid(const DriftHarmonics& h, const NoiseMatrices& noise,
                                  double omega_mod, const FloquetOptions& opts,
                                  const FloquetOperator& grid) {
    const int nz = opts.n_zones;
    const int dim = 6 * (2 * nz + 1);
    const int c0 = 6 * nz;
    const int lmax = std::max(1, opts.ell_max);
    const CMatX a_const = zone_matrix(h, omega_mod, nz);
    const CMat6 c = noise.c;

    CMatX rhs = CMatX::Zero(dim, 6);
    rhs.block<6, 6>(c0, 0) = CMat6::Identity();

    const size_t n_nodes = grid.omega_nodes.size();
    std::vector<Accumulator> node_acc(n_nodes, Accumulator(lmax));

    auto work = [&](size_t begin, size_t end) {
        CMatX p(dim, dim);
        for (size_t q = begin; q < end; ++q) {
            const double omega = grid.omega_nodes[q];
            p = a_const;
            p.diagonal().array() += I * omega;
            const CMatX x_pos = p.partialPivLu().solve(rhs);
            p = a_const;
            p.diagonal().array() -= I * omega;
            const CMatX x_neg = p.partialPivLu().solve(rhs);

            Accumulator& acc = node_acc[q];
            const double w = grid.omega_weights[q];
            for (int l = 0; l <= lmax; ++l) {
                for (int m = std::max(-nz, l - nz); m <= std::min(nz, l + nz); ++m) {
                    const int rm = 6 * (m + nz);
                    const int rl = 6 * (l - m + nz);
                    for (int i = 0; i < 6; ++i) {
                        // f(+omega) and f(-omega) in one pairing; plain
                        // bilinear contraction, no conjugation
                        const cplx fp = (x_pos.row(rm + i) * c * x_neg.row(rl + i).transpose())(0, 0);
                        const cplx fn = (x_neg.row(rm + i) * c * x_pos.row(rl + i).transpose())(0, 0);
                        acc.sums[l](i) += w * (fp + fn);
                    }
                }
            }
        }
    };

    const int workers = std::max(1, opts.workers);
    if (workers == 1 || n_nodes < 64) {
        work(0, n_nodes);
    } else {
        std::vector<std::thread> pool;
        const size_t chunk = (n_nodes + workers - 1) / workers;
        for (int t = 0; t < workers; ++t) {
            const size_t b = t * chunk;
            const size_t e = std::min(n_nodes, b + chunk);
            if (b < e) pool.emplace_back(work, b, e);
        }
        for (auto& th : pool) th.join();
    }

    Accumulator total(lmax);
    for (const auto& acc : node_acc) total += acc;  // fixed node order

    // Analytic tail beyond w_max: integrand ~ C/w^2 - Q/w^4 with
    // Q = A^2 C - A C A^T + C (A^T)^2 embedded in the zone structure.
    const double w_max = grid.omega_max;
    CMatX c_full = CMatX::Zero(dim, dim);
    c_full.block<6, 6>(c0, c0) = c;
    const CMatX q_full = a_const * a_const * c_full -
                         a_const * c_full * a_const.transpose() +
                         c_full * (a_const * a_const).transpose();

    std::vector<CVec6> v(lmax + 1, CVec6::Zero());
    for (int l = 0; l <= lmax; ++l) {
        for (int i = 0; i < 6; ++i) {
            cplx val = total.sums[l](i) / (2.0 * pi);
            if (l == 0) val += c(i, i) / (pi * w_max);
            cplx qsum = 0.0;
            for (int m = std::max(-nz, l - nz); m <= std::min(nz, l + nz); ++m)
                qsum += q_full(6 * (m + nz) + i, 6 * (l - m + nz) + i);
            val -= qsum / (3.0 * pi * w_max * w_max * w_max);
            v[l](i) = val;
        }
    }
    return v;
}

}  // namespace

FloquetCovariance floquet_covariance(const DriftHarmonics& h, const NoiseMatrices& noise,
                                     double omega_mod, const FloquetOptions& opts) {
    if (!stability(h.m0).stable)
        throw Unstable("floquet_covariance: M^(0) is not Hurwitz");
    if (h.modulated() && opts.n_zones < 1)
        throw ConfigError("floquet_covariance: N >= 1 required under modulation");

    const FloquetOperator coarse = build_floquet_grid(h, omega_mod, opts, 1);
    const FloquetOperator fine = build_floquet_grid(h, omega_mod, opts, 2);
    const auto v_coarse = integrate_grid(h, noise, omega_mod, opts, coarse);
    const auto v_fine = integrate_grid(h, noise, omega_mod, opts, fine);

    double change = 0.0;
    for (int i = 0; i < 6; ++i) {
        const double scale = std::max(std::abs(v_fine[0](i).real()), 1.0e-12);
        change = std::max(change, std::abs(v_fine[0](i) - v_coarse[0](i)) / scale);
    }
    if (change > opts.rel_tol)
        throw QuadratureNotConverged(
            "floquet_covariance: V^(0) moved under panel halving", change);

    FloquetCovariance out;
    out.convergence = change;
    out.nodes = static_cast<int>(fine.omega_nodes.size());
    for (int i = 0; i < 6; ++i) {
        out.v0(i) = v_fine[0](i).real();
        out.v1(i) = v_fine[1](i);
        if (opts.ell_max >= 2) out.v2(i) = v_fine[2](i);
        out.v_min(i) = out.v0(i) - 2.0 * std::abs(out.v1(i));
        out.squeezing_db(i) = -10.0 * std::log10(out.v_min(i) / 0.5);
    }
    return out;
}

}  // namespace optoloop
