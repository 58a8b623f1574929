#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "optoloop/config.hpp"
#include "optoloop/errors.hpp"
#include "optoloop/io.hpp"
#include "optoloop/observables.hpp"

using namespace optoloop;
using nlohmann::json;

namespace {

std::string cli_path() {
    if (const char* p = std::getenv("OPTOLOOP_CLI")) return p;
    for (const char* candidate : {"../tools/optoloop", "build/tools/optoloop",
                                  "./tools/optoloop"}) {
        if (std::ifstream(candidate).good()) return candidate;
    }
    REQUIRE_MESSAGE(false, "optoloop binary not found; set OPTOLOOP_CLI");
    return "";
}

int run_cli(const std::string& args) {
    const std::string cmd = cli_path() + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("config parsing round trip and unknown key rejection") {
    const RunConfig base{default_preset(), {}, {}, 2};
    const json echo = config_to_json(base);
    const RunConfig back = parse_config(echo);
    CHECK(params_fingerprint(back.params) == params_fingerprint(base.params));

    json bad = echo;
    bad["params"]["omega_q_hz"] = 1.0;
    CHECK_THROWS_AS(parse_config(bad), ConfigError);
    json bad2 = echo;
    bad2["frobnicate"] = true;
    CHECK_THROWS_AS(parse_config(bad2), ConfigError);

    json hz;
    hz["params"] = {{"omega_m_hz", 3.75e9}, {"mu_over_gamma_sum", 52.5},
                    {"phi_loop_rad", 1.5707963267948966}};
    const RunConfig c = parse_config(hz);
    CHECK(c.params.omega_m == doctest::Approx(2.0 * 3.141592653589793 * 3.75e9));
    CHECK(c.params.mu_mag ==
          doctest::Approx(52.5 * (c.params.gamma1 + c.params.gamma2)));
}

TEST_CASE("validate subcommand emits the derived report") {
    const int rc = run_cli("validate --preset default -o /tmp/ol_test_validate");
    CHECK(rc == 0);
    const json j = json::parse(slurp("/tmp/ol_test_validate/validate.json"));
    CHECK(j.at("stable").get<bool>());
    CHECK(j.at("resolved_sideband").get<bool>());
    CHECK(j.at("eps0").get<double>() == doctest::Approx(1.5656778926450830e8));
    const json m = json::parse(slurp("/tmp/ol_test_validate/validate_manifest.json"));
    CHECK(m.at("command") == "validate");
    CHECK(m.contains("wall_time_s"));
    CHECK(m.contains("fingerprint"));
}

TEST_CASE("bad config exits with code 2") {
    std::ofstream("/tmp/ol_bad_config.json") << "{\"params\": {\"nope\": 1.0}}";
    CHECK(run_cli("validate --config /tmp/ol_bad_config.json") == 2);
    std::ofstream("/tmp/ol_bad_config2.json") << "{\"params\": {\"eta\": 2.5}}";
    CHECK(run_cli("validate --config /tmp/ol_bad_config2.json") == 2);
}

TEST_CASE("steady subcommand reproduces the cooling optimum") {
    const int rc = run_cli(
        "steady --mu-over-gamma 58.8 --phi-over-pi 0.49 -o /tmp/ol_test_steady");
    CHECK(rc == 0);
    const json j = json::parse(slurp("/tmp/ol_test_steady/steady.json"));
    CHECK(j.at("nbar2").get<double>() == doctest::Approx(0.591).epsilon(0.01));
}

TEST_CASE("figure CSV format: header with units, 17 digits, LF only") {
    const int rc = run_cli("figure fig3_phase_sweep --n1 5 -o /tmp/ol_test_fig3");
    CHECK(rc == 0);
    const std::string csv = slurp("/tmp/ol_test_fig3/fig3_phase_sweep.csv");
    CHECK(csv.find('\r') == std::string::npos);
    CHECK(csv.find("phi_loop[rad]") == 0);
    CHECK(csv.find("nbar2_mu_ep1") != std::string::npos);
    // 17 significant digits on a non-trivial value
    std::istringstream lines(csv);
    std::string header, row0, row1;
    std::getline(lines, header);
    std::getline(lines, row0);
    std::getline(lines, row1);
    const size_t comma = row1.find(',');
    CHECK(row1.substr(0, comma).size() >= 17);  // phi = pi/2 in full precision
}

TEST_CASE("manifest round trip reproduces byte-identical CSV") {
    REQUIRE(run_cli("figure fig3_phase_sweep --n1 5 -o /tmp/ol_rt_a") == 0);
    const json manifest = json::parse(slurp("/tmp/ol_rt_a/fig3_phase_sweep_manifest.json"));
    std::ofstream("/tmp/ol_rt_config.json") << manifest.at("config").dump();
    REQUIRE(run_cli("figure fig3_phase_sweep --n1 5 --config /tmp/ol_rt_config.json "
                    "-o /tmp/ol_rt_b") == 0);
    CHECK(slurp("/tmp/ol_rt_a/fig3_phase_sweep.csv") ==
          slurp("/tmp/ol_rt_b/fig3_phase_sweep.csv"));
}

TEST_CASE("ep-find emits the reference EP as JSON") {
    const int rc = run_cli("ep-find --box-mu 40:65 --branch upper -o /tmp/ol_test_ep");
    CHECK(rc == 0);
    const json j = json::parse(slurp("/tmp/ol_test_ep/ep.json"));
    CHECK(j.at("mu_over_gamma_sum").get<double>() == doctest::Approx(52.5).epsilon(0.02));
    CHECK(j.at("branch") == "upper");
    CHECK(j.at("residual").get<double>() < 1.0e-6);
}

TEST_CASE("numerical failures exit with code 3") {
    // detuning far off resonance: no EP in the nominal box
    CHECK(run_cli("ep-find --delta-over-omega-m 1.3 -o /tmp/ol_test_ep_fail") == 3);
}

TEST_CASE("loci subcommand writes the tracked branches") {
    const int rc = run_cli("loci --mu-over-gamma 52.5 --n 17 -o /tmp/ol_test_loci");
    CHECK(rc == 0);
    const std::string csv = slurp("/tmp/ol_test_loci/loci.csv");
    CHECK(csv.find("alpha1_over_omega_m") != std::string::npos);
    // header + 17 rows
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 18);
}

TEST_CASE("floquet subcommand emits covariance harmonics") {
    const int rc = run_cli(
        "floquet --depth 0.5 --temperature 1.9 --mu-over-gamma 50.83 "
        "--phi-over-pi 0.5 -o /tmp/ol_test_floquet");
    CHECK(rc == 0);
    const json j = json::parse(slurp("/tmp/ol_test_floquet/floquet.json"));
    CHECK(j.at("v0").size() == 6);
    CHECK(j.at("convergence").get<double>() < 1.0e-6);
    // resonator 2 squeezed at this operating point
    const double sdb = std::max(j.at("squeezing_db")[4].get<double>(),
                                j.at("squeezing_db")[5].get<double>());
    CHECK(sdb > 0.0);
}

TEST_CASE("oracle-check subcommand cross-validates the solvers") {
    CHECK(run_cli("oracle-check -o /tmp/ol_test_oracle") == 0);
    const json j = json::parse(slurp("/tmp/ol_test_oracle/oracle_check.json"));
    CHECK(j.at("residue_vs_lyapunov_rel").get<double>() < 1.0e-8);
    CHECK(j.at("ode_vs_lyapunov_rel").get<double>() < 1.0e-6);
}

TEST_CASE("ep-surface subcommand traces a small patch") {
    const int rc = run_cli(
        "ep-surface --axis1 kappa --axis2 power --range1 0.95:1.05 "
        "--range2 0.95:1.05 --n1 3 --n2 3 -o /tmp/ol_test_surf");
    CHECK(rc == 0);
    const std::string csv = slurp("/tmp/ol_test_surf/ep_surface.csv");
    CHECK(csv.find("mu_ep1_over_gamma_sum") != std::string::npos);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 10);
    // every node on this small patch carries both branches
    CHECK(csv.find(",0,") == std::string::npos);
}
