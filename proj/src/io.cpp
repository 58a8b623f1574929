#include "optoloop/io.hpp"

#include <cstdio>
#include <fstream>

#include "optoloop/errors.hpp"
#include "optoloop/version.hpp"

namespace optoloop {

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);  // LF endings everywhere
    if (!out) throw IoError("cannot open output file '" + path + "'");
    return out;
}

}  // namespace

std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_sweep_csv(const std::string& path, const SweepResult& r) {
    std::ofstream out = open_out(path);
    bool first = true;
    for (const auto& a : r.axes) {
        out << (first ? "" : ",") << a.name << "[" << a.unit << "]";
        first = false;
    }
    for (const auto& c : r.columns) out << "," << c;
    out << "\n";
    for (const auto& row : r.rows) {
        first = true;
        for (double v : row) {
            out << (first ? "" : ",") << format_g17(v);
            first = false;
        }
        out << "\n";
    }
    if (!out) throw IoError("write failed for '" + path + "'");
}

nlohmann::json ep_to_json(const EpPoint& ep) {
    return {{"mu_rads", ep.mu_mag},
            {"mu_over_gamma_sum", ep.mu_over_gamma_sum},
            {"phi_loop_rad", ep.phi},
            {"chirality", to_string(ep.chirality)},
            {"branch", to_string(ep.branch)},
            {"residual", ep.residual},
            {"omega_ep_over_omega_m", ep.omega_ep_over_omega_m},
            {"eigvec_overlap", ep.eigvec_overlap}};
}

nlohmann::json stationary_to_json(const StationaryCovariance& sc) {
    nlohmann::json j;
    j["stable"] = sc.stable;
    j["cond_u"] = sc.cond_u;
    j["lyapunov_residual"] = sc.lyap_residual;
    auto eig = nlohmann::json::array();
    for (const auto& z : sc.eigvals) eig.push_back({z.real(), z.imag()});
    j["eigvals_re_im"] = eig;
    auto v = nlohmann::json::array();
    for (int i = 0; i < 6; ++i) {
        auto row = nlohmann::json::array();
        for (int k = 0; k < 6; ++k) row.push_back(sc.v_sym(i, k));
        v.push_back(row);
    }
    j["v_sym"] = v;
    j["nbar1"] = mean_phonon(sc.v_sym, 1);
    j["nbar2"] = mean_phonon(sc.v_sym, 2);
    return j;
}

nlohmann::json floquet_to_json(const FloquetCovariance& fc) {
    nlohmann::json j;
    auto arr = [](const auto& v, bool imag_part) {
        auto a = nlohmann::json::array();
        for (int i = 0; i < 6; ++i) {
            if constexpr (std::is_same_v<std::decay_t<decltype(v(0))>, cplx>) {
                a.push_back(imag_part ? v(i).imag() : v(i).real());
            } else {
                (void)imag_part;
                a.push_back(v(i));
            }
        }
        return a;
    };
    j["v0"] = arr(fc.v0, false);
    j["v1_re"] = arr(fc.v1, false);
    j["v1_im"] = arr(fc.v1, true);
    j["v2_re"] = arr(fc.v2, false);
    j["v2_im"] = arr(fc.v2, true);
    j["v_min"] = arr(fc.v_min, false);
    j["squeezing_db"] = arr(fc.squeezing_db, false);
    j["convergence"] = fc.convergence;
    j["nodes"] = fc.nodes;
    return j;
}

void write_manifest(const std::string& path, const Manifest& m) {
    nlohmann::json j;
    j["command"] = m.command;
    j["version"] = version;
    j["versions"] = {{"optoloop", version},
                     {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                   std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                   std::to_string(EIGEN_MINOR_VERSION)}};
    j["workers"] = m.workers;
    j["wall_time_s"] = m.wall_time_s;
    j["config"] = m.config;
    j["outputs"] = m.outputs;
    j["failures"] = m.failures;
    j["fingerprint"] = m.fingerprint;
    write_json(path, j);
}

void write_json(const std::string& path, const nlohmann::json& j) {
    std::ofstream out = open_out(path);
    out << j.dump(2) << "\n";
    if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace optoloop
