#include "optoloop/observables.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <thread>

#include "optoloop/classical.hpp"
#include "optoloop/drift.hpp"
#include "optoloop/errors.hpp"
#include "optoloop/oracle.hpp"
#include "optoloop/spectral.hpp"
#include "optoloop/steadystate.hpp"

namespace optoloop {

namespace {

using std::numbers::pi;

constexpr double nan_v = std::numeric_limits<double>::quiet_NaN();

// Deterministic node-parallel sweep: each node writes its own slot.
void for_each_node(size_t n, int workers,
                   const std::function<void(size_t)>& body) {
    if (workers <= 1 || n < 4) {
        for (size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    const int count = std::min<size_t>(workers, n);
    for (int t = 0; t < count; ++t)
        pool.emplace_back([&] {
            size_t i;
            while ((i = next.fetch_add(1)) < n) body(i);
        });
    for (auto& th : pool) th.join();
}

struct NodeFn {
    // coords: one value per axis; out must be filled with columns.size() values
    std::function<void(const std::vector<double>&, std::vector<double>&)> fn;
};

SweepResult run_sweep(const std::string& recipe, const SystemParams& base,
                      std::vector<SweepAxis> axes, std::vector<std::string> columns,
                      const NodeFn& node, int workers) {
    SweepResult r;
    r.recipe = recipe;
    r.axes = std::move(axes);
    r.columns = std::move(columns);
    r.preset_fingerprint = params_fingerprint(base);

    size_t n = 1;
    for (const auto& a : r.axes) n *= a.grid.size();
    r.rows.assign(n, {});
    r.node_errors.assign(n, "");

    const size_t n_axes = r.axes.size();
    for_each_node(n, workers, [&](size_t idx) {
        std::vector<double> coords(n_axes);
        size_t rem = idx;
        for (size_t a = n_axes; a-- > 0;) {
            const size_t sz = r.axes[a].grid.size();
            coords[a] = r.axes[a].grid[rem % sz];
            rem /= sz;
        }
        std::vector<double> values(r.columns.size(), nan_v);
        try {
            node.fn(coords, values);
        } catch (const std::exception& e) {
            r.node_errors[idx] = e.what();
        }
        std::vector<double> row = coords;
        row.insert(row.end(), values.begin(), values.end());
        r.rows[idx] = std::move(row);
    });
    return r;
}

SystemParams at_point(const SystemParams& base, double mu_mag, double phi) {
    SystemParams q = with_loop_phase(base, phi);
    q.mu_mag = mu_mag;
    return q;
}

double found_mu_ep1(const SystemParams& base, const FindEpOptions& opts = {}) {
    return find_ep(base, ep1_box(base), opts).mu_mag;
}
double found_mu_ep2(const SystemParams& base, const FindEpOptions& opts = {}) {
    return find_ep(base, ep2_box(base), opts).mu_mag;
}

std::vector<SweepResult> fig3(const SystemParams& base, const RecipeOverrides& o) {
    const int n = o.n1 > 0 ? o.n1 : 201;
    const double mu1 = found_mu_ep1(base);
    const double mu2 = found_mu_ep2(base);
    NodeFn node{[&, mu1, mu2](const std::vector<double>& c, std::vector<double>& out) {
        const double phi = c[0];
        const StationaryPoint p1 = stationary_point(at_point(base, mu1, phi));
        const StationaryPoint p2 = stationary_point(at_point(base, mu2, phi));
        out = {p1.nbar1, p1.nbar2, p2.nbar1, p2.nbar2,
               p1.stable && p2.stable ? 1.0 : 0.0};
    }};
    auto r = run_sweep("fig3_phase_sweep", base,
                       {{"phi_loop", "rad", linspace(0.0, 2.0 * pi, n)}},
                       {"nbar1_mu_ep1", "nbar2_mu_ep1", "nbar1_mu_ep2",
                        "nbar2_mu_ep2", "stable"},
                       node, o.workers);
    return {std::move(r)};
}

std::vector<SweepResult> fig4(const SystemParams& base, const RecipeOverrides& o) {
    const int n1 = o.n1 > 0 ? o.n1 : 101;
    const int n2 = o.n2 > 0 ? o.n2 : 101;
    const double gs = base.gamma1 + base.gamma2;
    const double lo1 = std::isnan(o.lo1) ? 40.0 : o.lo1;
    const double hi1 = std::isnan(o.hi1) ? 90.0 : o.hi1;
    const double lo2 = std::isnan(o.lo2) ? 0.0 : o.lo2;
    const double hi2 = std::isnan(o.hi2) ? 1.0 : o.hi2;
    NodeFn node{[&, gs](const std::vector<double>& c, std::vector<double>& out) {
        const StationaryPoint sp = stationary_point(at_point(base, c[0] * gs, c[1] * pi));
        out = {sp.nbar1, sp.nbar2, sp.stable ? 1.0 : 0.0};
    }};
    auto r = run_sweep("fig4_mu_phase_map", base,
                       {{"mu_over_gamma_sum", "1", linspace(lo1, hi1, n1)},
                        {"phi_over_pi", "1", linspace(lo2, hi2, n2)}},
                       {"nbar1", "nbar2", "stable"}, node, o.workers);
    return {std::move(r)};
}

std::vector<SweepResult> fig5(const SystemParams& base, const RecipeOverrides& o) {
    const int n = o.n1 > 0 ? o.n1 : 101;
    const double mu1 = found_mu_ep1(base);
    const double mu2 = found_mu_ep2(base);
    const double gs = base.gamma1 + base.gamma2;
    const std::vector<double> mus = {0.95 * mu1 / gs, mu1 / gs, 1.05 * mu1 / gs,
                                     0.95 * mu2 / gs, mu2 / gs, 1.05 * mu2 / gs};
    // Loci are computed per mu with continuity tracking along phi, then
    // flattened into the row-major node order (mu outer, phi inner).
    const std::vector<double> phis = linspace(0.0, pi, n);
    std::vector<EigenLoci> loci(mus.size());
    for_each_node(mus.size(), o.workers, [&](size_t k) {
        SystemParams q = base;
        q.mu_mag = mus[k] * gs;
        loci[k] = eigen_loci(q, phis);
    });
    SweepResult r;
    r.recipe = "fig5_loci";
    r.axes = {{"mu_over_gamma_sum", "1", mus}, {"phi_loop", "rad", phis}};
    r.columns = {"alpha1_over_omega_m", "omega1_over_omega_m",
                 "alpha2_over_omega_m", "omega2_over_omega_m",
                 "alpha3_over_omega_m", "omega3_over_omega_m"};
    r.preset_fingerprint = params_fingerprint(base);
    for (size_t k = 0; k < mus.size(); ++k) {
        for (int j = 0; j < n; ++j) {
            std::vector<double> row{mus[k], phis[j]};
            for (int b = 0; b < 3; ++b) {
                const cplx z = loci[k].eigvals_per_phi[j][b];
                row.push_back(z.real() / base.omega_m);
                row.push_back(z.imag() / base.omega_m);
            }
            r.rows.push_back(std::move(row));
            r.node_errors.push_back("");
        }
    }
    return {std::move(r)};
}

std::vector<SweepResult> fig6(const SystemParams& base, const RecipeOverrides& o) {
    const int n = o.n1 > 0 ? o.n1 : 201;
    const double mu1 = found_mu_ep1(base);
    const std::vector<double> phis = {pi / 4.0, pi / 2.0, 3.0 * pi / 4.0};
    // log-spaced temperatures, cryogenic to room
    const double lo = std::isnan(o.lo1) ? 1.0 : o.lo1;
    const double hi = std::isnan(o.hi1) ? 300.0 : o.hi1;
    std::vector<double> temps(n);
    for (int i = 0; i < n; ++i)
        temps[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
    NodeFn node{[&, mu1](const std::vector<double>& c, std::vector<double>& out) {
        SystemParams q = at_point(base, mu1, c[1]);
        q.t_cavity = q.t_mech = c[0];
        const StationaryPoint sp = stationary_point(q);
        out = {sp.nbar1, sp.nbar2, sp.stable ? 1.0 : 0.0};
    }};
    auto r = run_sweep("fig6_temperature", base,
                       {{"temperature", "K", temps}, {"phi_loop", "rad", phis}},
                       {"nbar1", "nbar2", "stable"}, node, o.workers);
    return {std::move(r)};
}

SweepResult surface_to_sweep(std::string name, const SystemParams& base,
                             const EpSurface& s) {
    SweepResult r;
    r.recipe = std::move(name);
    r.axes = {{to_string(s.axis1) + "_over_preset", "1", s.grid1},
              {to_string(s.axis2) + "_over_preset", "1", s.grid2}};
    r.columns = {"ep1_found", "mu_ep1_over_gamma_sum", "phi_ep1", "omega_ep1_over_omega_m",
                 "residual1", "ep2_found", "mu_ep2_over_gamma_sum", "phi_ep2",
                 "omega_ep2_over_omega_m", "residual2"};
    r.preset_fingerprint = params_fingerprint(base);
    const size_t n2 = s.grid2.size();
    for (size_t i = 0; i < s.grid1.size(); ++i) {
        for (size_t j = 0; j < n2; ++j) {
            const size_t idx = i * n2 + j;
            std::vector<double> row{s.grid1[i], s.grid2[j]};
            for (const auto* br : {&s.branch1[idx], &s.branch2[idx]}) {
                if (br->has_value()) {
                    const EpPoint& ep = **br;
                    row.insert(row.end(), {1.0, ep.mu_over_gamma_sum, ep.phi,
                                           ep.omega_ep_over_omega_m, ep.residual});
                } else {
                    row.insert(row.end(), {0.0, nan_v, nan_v, nan_v, nan_v});
                }
            }
            r.rows.push_back(std::move(row));
            r.node_errors.push_back("");
        }
    }
    return r;
}

std::vector<SweepResult> fig7(const SystemParams& base, const RecipeOverrides& o) {
    const int n1 = o.n1 > 0 ? o.n1 : 21;
    const int n2 = o.n2 > 0 ? o.n2 : 21;
    const auto mult = linspace(std::isnan(o.lo1) ? 0.5 : o.lo1,
                               std::isnan(o.hi1) ? 1.5 : o.hi1, n1);
    const auto mult2 = linspace(std::isnan(o.lo2) ? 0.5 : o.lo2,
                                std::isnan(o.hi2) ? 1.5 : o.hi2, n2);
    // the EP pair annihilates for strongly unequal couplings (ratio beyond
    // ~2), so the coupling surface is traced over a narrower band
    const auto g_mult = linspace(0.8, 1.2, n1);
    const auto g_mult2 = linspace(0.8, 1.2, n2);
    const auto delta_grid = linspace(0.8, 1.2, n1);
    std::vector<SweepResult> out;
    out.push_back(surface_to_sweep(
        "fig7a_kappa_power", base,
        trace_surface(base, SurfaceAxis::kappa, mult, SurfaceAxis::power, mult2, {},
                      o.workers)));
    out.push_back(surface_to_sweep(
        "fig7b_kappa_gamma", base,
        trace_surface(base, SurfaceAxis::kappa, mult, SurfaceAxis::gamma, mult2, {},
                      o.workers)));
    out.push_back(surface_to_sweep(
        "fig7c_g1_g2", base,
        trace_surface(base, SurfaceAxis::g1, g_mult, SurfaceAxis::g2, g_mult2, {},
                      o.workers)));
    out.push_back(surface_to_sweep(
        "fig7d_delta_power", base,
        trace_surface(base, SurfaceAxis::delta, delta_grid, SurfaceAxis::power, mult2,
                      {}, o.workers)));
    return out;
}

std::vector<SweepResult> fig8(const SystemParams& base, const RecipeOverrides& o) {
    const int n_phi = o.n1 > 0 ? o.n1 : 41;
    const int n_mu = o.n2 > 0 ? o.n2 : 41;
    const double gs = base.gamma1 + base.gamma2;
    const double mu_a = 50.83 * gs;
    const double mu_ep1 = found_mu_ep1(base);
    const std::vector<double> depths = {0.0, 0.3, 0.5, 0.7};

    auto sq_point = [&](double mu, double phi, double d) -> std::array<double, 3> {
        SystemParams q = at_point(base, mu, phi);
        q.t_cavity = q.t_mech = 1.9;
        q.depth_plus = d;
        const FloquetCovariance fc = floquet_point(q, o.floquet);
        const double sdb = std::max(fc.squeezing_db(4), fc.squeezing_db(5));
        const double nbar_dc = (fc.v0(4) + fc.v0(5) - 1.0) / 2.0;
        return {sdb, std::min(fc.v_min(4), fc.v_min(5)), nbar_dc};
    };

    NodeFn node_a{[&](const std::vector<double>& c, std::vector<double>& out) {
        const auto r = sq_point(mu_a, c[0], c[1]);
        out = {r[0], r[1], r[2]};
    }};
    auto ra = run_sweep("fig8a_phase", base,
                        {{"phi_loop", "rad", linspace(0.05 * pi, 0.95 * pi, n_phi)},
                         {"depth", "1", depths}},
                        {"sqz_db_r2", "v_min_r2", "nbar2_dc"}, node_a, o.workers);

    NodeFn node_b{[&](const std::vector<double>& c, std::vector<double>& out) {
        const auto r = sq_point(c[0] * mu_ep1, pi / 2.0, c[1]);
        out = {r[0], r[1], r[2]};
    }};
    auto rb = run_sweep("fig8b_coupling", base,
                        {{"mu_over_mu_ep1", "1", linspace(0.05, 2.0, n_mu)},
                         {"depth", "1", depths}},
                        {"sqz_db_r2", "v_min_r2", "nbar2_dc"}, node_b, o.workers);
    return {std::move(ra), std::move(rb)};
}

std::vector<SweepResult> fig9(const SystemParams& base, const RecipeOverrides& o) {
    const int n_a = o.n1 > 0 ? o.n1 : 201;
    const int n_b = o.n2 > 0 ? o.n2 : 41;
    const double gs = base.gamma1 + base.gamma2;

    NodeFn node_a{[&](const std::vector<double>& c, std::vector<double>& out) {
        SystemParams q = at_point(base, c[1] * gs, pi / 2.0);
        q.delta = c[0] * base.omega_m;
        const StationaryPoint sp = stationary_point(q);
        out = {sp.nbar1, sp.nbar2, sp.stable ? 1.0 : 0.0};
    }};
    auto ra = run_sweep("fig9a_cooling", base,
                        {{"delta_over_omega_m", "1",
                          linspace(std::isnan(o.lo1) ? 0.7 : o.lo1,
                                   std::isnan(o.hi1) ? 1.3 : o.hi1, n_a)},
                         {"mu_over_gamma_sum", "1", {0.0, 52.5, 80.45}}},
                        {"nbar1", "nbar2", "stable"}, node_a, o.workers);

    NodeFn node_b{[&](const std::vector<double>& c, std::vector<double>& out) {
        SystemParams q = at_point(base, c[1] * gs, pi / 2.0);
        q.delta = c[0] * base.omega_m;
        q.t_cavity = q.t_mech = 1.9;
        q.depth_plus = 0.4;
        const FloquetCovariance fc = floquet_point(q, o.floquet);
        out = {std::max(fc.squeezing_db(4), fc.squeezing_db(5)),
               std::min(fc.v_min(4), fc.v_min(5))};
    }};
    auto rb = run_sweep("fig9b_squeezing", base,
                        {{"delta_over_omega_m", "1",
                          linspace(std::isnan(o.lo2) ? 0.8 : o.lo2,
                                   std::isnan(o.hi2) ? 1.4 : o.hi2, n_b)},
                         {"mu_over_gamma_sum", "1", {0.0, 51.36}}},
                        {"sqz_db_r2", "v_min_r2"}, node_b, o.workers);
    return {std::move(ra), std::move(rb)};
}

}  // namespace

double squeezing_db(double v_min) {
    if (!(v_min > 0.0))
        throw ConfigError("squeezing_db: variance must be positive");
    return -10.0 * std::log10(v_min / 0.5);
}

size_t SweepResult::node_count() const { return rows.size(); }

size_t SweepResult::failed_nodes() const {
    size_t n = 0;
    for (const auto& e : node_errors)
        if (!e.empty()) ++n;
    return n;
}

double SweepResult::value(size_t node, const std::string& column) const {
    for (size_t c = 0; c < columns.size(); ++c)
        if (columns[c] == column) return rows[node][axes.size() + c];
    throw ConfigError("SweepResult: no column named " + column);
}

std::string params_fingerprint(const SystemParams& p) {
    char buf[64];
    std::string canon;
    const double fields[] = {p.omega_m, p.kappa, p.gamma1, p.gamma2, p.g1_mag,
                             p.g2_mag, p.phi1, p.phi2, p.mu_mag, p.phi_mu,
                             p.delta, p.eta, p.power, p.lambda_laser, p.omega_mod,
                             p.depth_plus, p.depth_minus, p.t_cavity, p.t_mech};
    for (double f : fields) {
        std::snprintf(buf, sizeof buf, "%.17g;", f);
        canon += buf;
    }
    unsigned long long h = 1469598103934665603ull;
    for (unsigned char ch : canon) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    std::snprintf(buf, sizeof buf, "%016llx", h);
    return buf;
}

StationaryPoint stationary_point(const SystemParams& p) {
    const DerivedParams d = derive(p);
    const ClassicalSteadyState s = solve_classical(p, d);
    const DriftHarmonics h = build_drift(p, d, s);
    const NoiseMatrices noise = build_noise(p, d);
    StationaryPoint out;
    out.stable = stability(h.m0).stable;
    if (!out.stable) throw Unstable("stationary_point: drift matrix not Hurwitz");
    const Mat6 v = covariance_lyapunov(h.m0, noise.d);
    out.nbar1 = mean_phonon(v, 1);
    out.nbar2 = mean_phonon(v, 2);
    return out;
}

FloquetCovariance floquet_point(const SystemParams& p, const FloquetOptions& opts) {
    const DerivedParams d = derive(p);
    const ClassicalSteadyState s = solve_classical(p, d);
    const DriftHarmonics h = build_drift(p, d, s);
    const NoiseMatrices noise = build_noise(p, d);
    return floquet_covariance(h, noise, p.omega_mod, opts);
}

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> v(n);
    if (n == 1) {
        v[0] = lo;
        return v;
    }
    for (int i = 0; i < n; ++i)
        v[i] = lo + (hi - lo) * static_cast<double>(i) / (n - 1);
    return v;
}

const std::vector<std::string>& recipe_names() {
    static const std::vector<std::string> names = {
        "fig3_phase_sweep", "fig4_mu_phase_map", "fig5_loci", "fig6_temperature",
        "fig7_surfaces",    "fig8_squeezing",    "fig9_detuning"};
    return names;
}

std::vector<SweepResult> figure_recipe(const std::string& name, const SystemParams& base,
                                       const RecipeOverrides& o) {
    if (name == "fig3_phase_sweep") return fig3(base, o);
    if (name == "fig4_mu_phase_map") return fig4(base, o);
    if (name == "fig5_loci") return fig5(base, o);
    if (name == "fig6_temperature") return fig6(base, o);
    if (name == "fig7_surfaces") return fig7(base, o);
    if (name == "fig8_squeezing") return fig8(base, o);
    if (name == "fig9_detuning") return fig9(base, o);
    throw ConfigError("unknown figure recipe: " + name);
}

}  // namespace optoloop
