#include <chrono>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <optional>

#include <CLI11.hpp>

#include "optoloop/classical.hpp"
#include "optoloop/config.hpp"
#include "optoloop/drift.hpp"
#include "optoloop/errors.hpp"
#include "optoloop/io.hpp"
#include "optoloop/observables.hpp"
#include "optoloop/oracle.hpp"
#include "optoloop/spectral.hpp"
#include "optoloop/steadystate.hpp"
#include "optoloop/version.hpp"

namespace {

using namespace optoloop;
using std::numbers::pi;

struct GlobalOpts {
    std::string config_path;
    std::string preset = "default";
    std::string out_dir = "out";
    int workers = 0;
    // point overrides shared by single-point subcommands
    std::optional<double> mu_over_gamma;
    std::optional<double> phi_over_pi;
    std::optional<double> delta_over_omega_m;
    std::optional<double> depth;
    std::optional<double> temperature;
};

RunConfig resolve(const GlobalOpts& g) {
    RunConfig c;
    if (!g.config_path.empty()) {
        c = load_config_file(g.config_path);
    } else {
        if (g.preset != "default")
            throw ConfigError("unknown preset '" + g.preset + "'");
        c.params = default_preset();
    }
    if (g.workers > 0) c.workers = g.workers;
    c.workers = resolve_workers(c.workers);
    SystemParams& p = c.params;
    if (g.mu_over_gamma) p.mu_mag = *g.mu_over_gamma * (p.gamma1 + p.gamma2);
    if (g.phi_over_pi) p = with_loop_phase(p, *g.phi_over_pi * pi);
    if (g.delta_over_omega_m) p.delta = *g.delta_over_omega_m * p.omega_m;
    if (g.depth) p.depth_plus = *g.depth;
    if (g.temperature) p.t_cavity = p.t_mech = *g.temperature;
    validate(p);
    return c;
}

Manifest start_manifest(const std::string& command, const RunConfig& c) {
    Manifest m;
    m.command = command;
    m.config = config_to_json(c);
    m.workers = c.workers;
    m.fingerprint = params_fingerprint(c.params);
    return m;
}

std::string out_path(const GlobalOpts& g, const std::string& name) {
    std::filesystem::create_directories(g.out_dir);
    return (std::filesystem::path(g.out_dir) / name).string();
}

std::pair<double, double> parse_range(const std::string& s, const char* what) {
    const auto colon = s.find(':');
    if (colon == std::string::npos)
        throw ConfigError(std::string(what) + ": expected lo:hi, got '" + s + "'");
    try {
        return {std::stod(s.substr(0, colon)), std::stod(s.substr(colon + 1))};
    } catch (const std::exception&) {
        throw ConfigError(std::string(what) + ": bad range '" + s + "'");
    }
}

int run_validate(const GlobalOpts& g) {
    const RunConfig c = resolve(g);
    const auto t0 = std::chrono::steady_clock::now();
    const DerivedParams d = derive(c.params);
    const ClassicalSteadyState s = solve_classical(c.params, d, c.classical);
    const DriftHarmonics h = build_drift(c.params, d, s);
    const StabilityResult st = stability(h.m0);

    nlohmann::json j;
    j["params"] = params_to_json(c.params);
    j["eps0"] = d.eps0;
    j["omega_laser_rads"] = d.omega_laser;
    j["n_cavity"] = d.n_cavity;
    j["n_mech"] = d.n_mech;
    j["loop_phase_rad"] = d.loop_phase;
    j["resolved_sideband"] = c.params.resolved_sideband();
    j["classical_residual"] = s.residual;
    j["classical_iterations"] = s.iterations;
    j["stable"] = st.stable;
    auto eig = nlohmann::json::array();
    for (const auto& z : st.eigvals) eig.push_back({z.real(), z.imag()});
    j["m0_eigvals_re_im"] = eig;

    const std::string path = out_path(g, "validate.json");
    write_json(path, j);
    Manifest m = start_manifest("validate", c);
    m.outputs.push_back(path);
    m.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(out_path(g, "validate_manifest.json"), m);
    std::cout << "eps0 = " << d.eps0 << " s^-1/2, n_mech = " << d.n_mech
              << ", loop phase = " << d.loop_phase << " rad, stable = "
              << (st.stable ? "yes" : "no") << "\n";
    return 0;
}

int run_steady(const GlobalOpts& g) {
    const RunConfig c = resolve(g);
    const auto t0 = std::chrono::steady_clock::now();
    const DerivedParams d = derive(c.params);
    const ClassicalSteadyState s = solve_classical(c.params, d, c.classical);
    const DriftHarmonics h = build_drift(c.params, d, s);
    const NoiseMatrices noise = build_noise(c.params, d);
    const StationaryCovariance sc = solve_stationary(h.m0, noise);

    const std::string path = out_path(g, "steady.json");
    write_json(path, stationary_to_json(sc));
    Manifest m = start_manifest("steady", c);
    m.outputs.push_back(path);
    m.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(out_path(g, "steady_manifest.json"), m);
    std::cout << "nbar1 = " << mean_phonon(sc.v_sym, 1)
              << ", nbar2 = " << mean_phonon(sc.v_sym, 2) << "\n";
    return 0;
}

int run_floquet(const GlobalOpts& g) {
    RunConfig c = resolve(g);
    const auto t0 = std::chrono::steady_clock::now();
    c.floquet.workers = c.workers;
    const FloquetCovariance fc = floquet_point(c.params, c.floquet);
    const std::string path = out_path(g, "floquet.json");
    write_json(path, floquet_to_json(fc));
    Manifest m = start_manifest("floquet", c);
    m.outputs.push_back(path);
    m.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(out_path(g, "floquet_manifest.json"), m);
    std::cout << "squeezing_db(R2) = "
              << std::max(fc.squeezing_db(4), fc.squeezing_db(5)) << " dB\n";
    return 0;
}

int run_loci(const GlobalOpts& g, const std::vector<double>& mu_list, int n_phi) {
    const RunConfig c = resolve(g);
    const auto t0 = std::chrono::steady_clock::now();
    const double gs = c.params.gamma1 + c.params.gamma2;
    std::vector<double> mus = mu_list;
    if (mus.empty()) mus = {c.params.mu_mag / gs};

    SweepResult r;
    r.recipe = "loci";
    r.axes = {{"mu_over_gamma_sum", "1", mus},
              {"phi_loop", "rad", linspace(0.0, pi, n_phi)}};
    r.columns = {"alpha1_over_omega_m", "omega1_over_omega_m",
                 "alpha2_over_omega_m", "omega2_over_omega_m",
                 "alpha3_over_omega_m", "omega3_over_omega_m"};
    r.preset_fingerprint = params_fingerprint(c.params);
    for (double mu : mus) {
        SystemParams q = c.params;
        q.mu_mag = mu * gs;
        const EigenLoci loci = eigen_loci(q, r.axes[1].grid);
        for (size_t j = 0; j < loci.phi_samples.size(); ++j) {
            std::vector<double> row{mu, loci.phi_samples[j]};
            for (int b = 0; b < 3; ++b) {
                row.push_back(loci.eigvals_per_phi[j][b].real() / c.params.omega_m);
                row.push_back(loci.eigvals_per_phi[j][b].imag() / c.params.omega_m);
            }
            r.rows.push_back(std::move(row));
            r.node_errors.push_back("");
        }
    }
    const std::string path = out_path(g, "loci.csv");
    write_sweep_csv(path, r);
    Manifest m = start_manifest("loci", c);
    m.outputs.push_back(path);
    m.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(out_path(g, "loci_manifest.json"), m);
    std::cout << "wrote " << path << "\n";
    return 0;
}

int run_ep_find(const GlobalOpts& g, const std::string& box_mu,
                const std::string& box_phi, const std::string& branch) {
    const RunConfig c = resolve(g);
    const auto t0 = std::chrono::steady_clock::now();
    const double gs = c.params.gamma1 + c.params.gamma2;

    SearchBox box;
    if (!box_mu.empty()) {
        const auto [lo, hi] = parse_range(box_mu, "--box-mu");
        box.mu_lo = lo * gs;
        box.mu_hi = hi * gs;
        box.phi_lo = 0.05;
        box.phi_hi = pi - 0.05;
    } else if (branch == "lower") {
        box = ep2_box(c.params);
    } else {
        box = ep1_box(c.params);
    }
    if (!box_phi.empty()) {
        const auto [lo, hi] = parse_range(box_phi, "--box-phi");
        box.phi_lo = lo;
        box.phi_hi = hi;
    }

    const EpPoint ep = find_ep(c.params, box);
    const std::string path = out_path(g, "ep.json");
    write_json(path, ep_to_json(ep));
    Manifest m = start_manifest("ep-find", c);
    m.outputs.push_back(path);
    m.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(out_path(g, "ep_find_manifest.json"), m);
    std::cout << "|mu_EP|/(gamma1+gamma2) = " << ep.mu_over_gamma_sum
              << ", phi = " << ep.phi << " rad, branch = " << to_string(ep.branch)
              << ", residual = " << ep.residual << "\n";
    return 0;
}

int run_ep_surface(const GlobalOpts& g, const std::string& axis1,
                   const std::string& axis2, const std::string& range1,
                   const std::string& range2, int n1, int n2) {
    const RunConfig c = resolve(g);
    const auto t0 = std::chrono::steady_clock::now();
    const SurfaceAxis a1 = surface_axis_from_string(axis1);
    const SurfaceAxis a2 = surface_axis_from_string(axis2);
    auto [lo1, hi1] = range1.empty() ? std::pair{0.5, 1.5} : parse_range(range1, "--range1");
    auto [lo2, hi2] = range2.empty() ? std::pair{0.5, 1.5} : parse_range(range2, "--range2");
    const EpSurface s = trace_surface(c.params, a1, linspace(lo1, hi1, n1), a2,
                                      linspace(lo2, hi2, n2), {}, c.workers);
    SweepResult r;
    r.recipe = "ep_surface_" + axis1 + "_" + axis2;
    r.axes = {{axis1 + "_over_preset", "1", s.grid1}, {axis2 + "_over_preset", "1", s.grid2}};
    r.columns = {"ep1_found", "mu_ep1_over_gamma_sum", "phi_ep1", "omega_ep1_over_omega_m",
                 "residual1", "ep2_found", "mu_ep2_over_gamma_sum", "phi_ep2",
                 "omega_ep2_over_omega_m", "residual2"};
    r.preset_fingerprint = params_fingerprint(c.params);
    const double nanv = std::numeric_limits<double>::quiet_NaN();
    for (size_t i = 0; i < s.grid1.size(); ++i)
        for (size_t j = 0; j < s.grid2.size(); ++j) {
            const size_t idx = i * s.grid2.size() + j;
            std::vector<double> row{s.grid1[i], s.grid2[j]};
            for (const auto* br : {&s.branch1[idx], &s.branch2[idx]}) {
                if (br->has_value())
                    row.insert(row.end(), {1.0, (**br).mu_over_gamma_sum, (**br).phi,
                                           (**br).omega_ep_over_omega_m, (**br).residual});
                else
                    row.insert(row.end(), {0.0, nanv, nanv, nanv, nanv});
            }
            r.rows.push_back(std::move(row));
            r.node_errors.push_back("");
        }
    const std::string path = out_path(g, "ep_surface.csv");
    write_sweep_csv(path, r);
    Manifest m = start_manifest("ep-surface", c);
    m.outputs.push_back(path);
    m.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(out_path(g, "ep_surface_manifest.json"), m);
    std::cout << "wrote " << path << "\n";
    return 0;
}

int run_figure(const GlobalOpts& g, const std::string& name, int n1, int n2) {
    const RunConfig c = resolve(g);
    const auto t0 = std::chrono::steady_clock::now();
    RecipeOverrides o;
    o.n1 = n1;
    o.n2 = n2;
    o.workers = c.workers;
    o.floquet = c.floquet;
    const auto results = figure_recipe(name, c.params, o);
    Manifest m = start_manifest("figure " + name, c);
    for (const auto& r : results) {
        const std::string path = out_path(g, r.recipe + ".csv");
        write_sweep_csv(path, r);
        m.outputs.push_back(path);
        for (size_t i = 0; i < r.node_errors.size(); ++i)
            if (!r.node_errors[i].empty())
                m.failures.push_back({{"dataset", r.recipe},
                                      {"node", i},
                                      {"error", r.node_errors[i]}});
        std::cout << "wrote " << path << " (" << r.node_count() << " nodes, "
                  << r.failed_nodes() << " failed)\n";
    }
    m.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(out_path(g, name + "_manifest.json"), m);
    return 0;
}

int run_oracle_check(const GlobalOpts& g) {
    const RunConfig c = resolve(g);
    const auto t0 = std::chrono::steady_clock::now();
    const SystemParams& p = c.params;
    const DerivedParams d = derive(p);
    const ClassicalSteadyState s = solve_classical(p, d, c.classical);
    const DriftHarmonics h = build_drift(p, d, s);
    const NoiseMatrices noise = build_noise(p, d);
    const StationaryCovariance sc = solve_stationary(h.m0, noise);

    // Time-domain reference, unmodulated drift, thermal start.
    DriftHarmonics h0 = h;
    h0.m1.setZero();
    Mat6 v0 = Mat6::Identity() * 0.5;
    for (int i = 2; i < 6; ++i) v0(i, i) = d.n_mech + 0.5;
    const double t_end = 30.0 / std::min(p.gamma1, p.gamma2);
    const CovarianceTrajectory traj =
        propagate_covariance(h0, noise.d, v0, p.omega_mod, t_end);

    const Mat6 v_res_sym = ((sc.v + sc.v.transpose()) / 2.0).real();
    const double res_vs_lyap =
        (v_res_sym - sc.v_sym).norm() / sc.v_sym.norm();
    const double ode_vs_lyap =
        (traj.v_final - sc.v_sym).norm() / sc.v_sym.norm();

    nlohmann::json j;
    j["residue_vs_lyapunov_rel"] = res_vs_lyap;
    j["ode_vs_lyapunov_rel"] = ode_vs_lyap;
    j["lyapunov_residual"] = sc.lyap_residual;
    j["stable"] = sc.stable;
    const std::string path = out_path(g, "oracle_check.json");
    write_json(path, j);
    Manifest m = start_manifest("oracle-check", c);
    m.outputs.push_back(path);
    m.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(out_path(g, "oracle_check_manifest.json"), m);
    std::cout << "residue vs lyapunov: " << res_vs_lyap
              << ", ode vs lyapunov: " << ode_vs_lyap << "\n";
    const bool ok = res_vs_lyap < 1.0e-8 && ode_vs_lyap < 1.0e-6;
    if (!ok) throw Error("oracle-check: cross-method disagreement above tolerance");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"three-mode optomechanical loop simulator"};
    app.set_version_flag("--version", optoloop::version);
    app.fallthrough();

    GlobalOpts g;
    app.add_option("--config", g.config_path, "JSON config file");
    app.add_option("--preset", g.preset, "named parameter preset (default)");
    app.add_option("-o,--output", g.out_dir, "output directory")->capture_default_str();
    app.add_option("--workers", g.workers, "worker threads (0 = cores, env OPTOLOOP_WORKERS)");

    auto add_point_opts = [&](CLI::App* sub) {
        sub->add_option_function<double>(
            "--mu-over-gamma", [&g](const double& v) { g.mu_over_gamma = v; },
            "|mu| / (gamma1+gamma2)");
        sub->add_option_function<double>(
            "--phi-over-pi", [&g](const double& v) { g.phi_over_pi = v; },
            "loop phase / pi");
        sub->add_option_function<double>(
            "--delta-over-omega-m", [&g](const double& v) { g.delta_over_omega_m = v; },
            "detuning / omega_m");
        sub->add_option_function<double>(
            "--depth", [&g](const double& v) { g.depth = v; },
            "upper-sideband modulation depth d");
        sub->add_option_function<double>(
            "--temperature", [&g](const double& v) { g.temperature = v; },
            "bath temperature (K)");
    };

    auto* validate_cmd = app.add_subcommand("validate", "echo derived quantities and stability");
    add_point_opts(validate_cmd);

    auto* steady_cmd = app.add_subcommand("steady", "stationary covariance at one point");
    add_point_opts(steady_cmd);

    auto* floquet_cmd = app.add_subcommand("floquet", "modulated covariance harmonics at one point");
    add_point_opts(floquet_cmd);

    auto* loci_cmd = app.add_subcommand("loci", "eigenvalue loci over the loop phase");
    std::vector<double> mu_list;
    int n_phi = 101;
    loci_cmd->add_option("--mu-over-gamma", mu_list, "|mu| values in (gamma1+gamma2) units");
    loci_cmd->add_option("--n", n_phi, "phi samples on [0, pi]")->capture_default_str();

    auto* ep_cmd = app.add_subcommand("ep-find", "locate an exceptional point");
    std::string box_mu, box_phi, branch = "upper";
    ep_cmd->add_option("--box-mu", box_mu, "search box lo:hi in (gamma1+gamma2) units");
    ep_cmd->add_option("--box-phi", box_phi, "search box lo:hi in rad");
    ep_cmd->add_option("--branch", branch, "upper|lower (nominal box when --box-mu absent)");
    add_point_opts(ep_cmd);

    auto* surf_cmd = app.add_subcommand("ep-surface", "trace EPs over two parameter axes");
    std::string axis1 = "kappa", axis2 = "power", range1, range2;
    int n1 = 21, n2 = 21;
    surf_cmd->add_option("--axis1", axis1, "kappa|power|gamma|g1|g2|delta")->capture_default_str();
    surf_cmd->add_option("--axis2", axis2, "second axis")->capture_default_str();
    surf_cmd->add_option("--range1", range1, "lo:hi multipliers (default 0.5:1.5)");
    surf_cmd->add_option("--range2", range2, "lo:hi multipliers (default 0.5:1.5)");
    surf_cmd->add_option("--n1", n1, "grid points on axis 1")->capture_default_str();
    surf_cmd->add_option("--n2", n2, "grid points on axis 2")->capture_default_str();

    auto* fig_cmd = app.add_subcommand("figure", "run a named sweep recipe");
    std::string fig_name;
    int fig_n1 = 0, fig_n2 = 0;
    fig_cmd->add_option("name", fig_name, "recipe name")->required();
    fig_cmd->add_option("--n1", fig_n1, "grid points, axis 1 (0 = recipe default)");
    fig_cmd->add_option("--n2", fig_n2, "grid points, axis 2 (0 = recipe default)");

    auto* oracle_cmd = app.add_subcommand("oracle-check",
                                          "time-domain cross-check of the stationary solvers");
    add_point_opts(oracle_cmd);

    app.require_subcommand(1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (validate_cmd->parsed()) return run_validate(g);
        if (steady_cmd->parsed()) return run_steady(g);
        if (floquet_cmd->parsed()) return run_floquet(g);
        if (loci_cmd->parsed()) return run_loci(g, mu_list, n_phi);
        if (ep_cmd->parsed()) return run_ep_find(g, box_mu, box_phi, branch);
        if (surf_cmd->parsed()) return run_ep_surface(g, axis1, axis2, range1, range2, n1, n2);
        if (fig_cmd->parsed()) return run_figure(g, fig_name, fig_n1, fig_n2);
        if (oracle_cmd->parsed()) return run_oracle_check(g);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 4;
    } catch (const Error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
