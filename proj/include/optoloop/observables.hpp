#ifndef OPTOLOOP_OBSERVABLES_HPP
#define OPTOLOOP_OBSERVABLES_HPP

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "optoloop/floquet.hpp"
#include "optoloop/params.hpp"

namespace optoloop {

// -10 log10(v / 0.5); positive means variance below vacuum.
double squeezing_db(double v_min);

struct SweepAxis {
    std::string name;
    std::string unit;
    std::vector<double> grid;
};

// Generic dataset emitted by the figure recipes: row-major nodes over the
// axes, each row = axis coordinates followed by the value columns. Failed
// nodes carry NaN values and a non-empty error string.
struct SweepResult {
    std::string recipe;
    std::vector<SweepAxis> axes;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::vector<std::string> node_errors;
    std::string preset_fingerprint;

    size_t node_count() const;
    size_t failed_nodes() const;
    // Value lookup by column name for node index.
    double value(size_t node, const std::string& column) const;
};

// FNV-1a hash over the canonical serialization of the parameter set.
std::string params_fingerprint(const SystemParams& p);

struct RecipeOverrides {
    int n1 = 0;  // grid points on axis 1 (0 = recipe default)
    int n2 = 0;
    double lo1 = std::numeric_limits<double>::quiet_NaN();
    double hi1 = std::numeric_limits<double>::quiet_NaN();
    double lo2 = std::numeric_limits<double>::quiet_NaN();
    double hi2 = std::numeric_limits<double>::quiet_NaN();
    int workers = 1;
    FloquetOptions floquet;
};

const std::vector<std::string>& recipe_names();

// Runs the named sweep (fig3_phase_sweep, fig4_mu_phase_map, fig5_loci,
// fig6_temperature, fig7_surfaces, fig8_squeezing, fig9_detuning) on the
// given base parameters. Recipes producing several datasets (fig7 surfaces,
// fig8 a/b, fig9 a/b) return one SweepResult per dataset. Per-node failures
// are recorded in the result, never thrown.
std::vector<SweepResult> figure_recipe(const std::string& name, const SystemParams& base,
                                       const RecipeOverrides& overrides = {});

// Single-point helpers shared by recipes, CLI and tests.
struct StationaryPoint {
    double nbar1 = 0.0, nbar2 = 0.0;
    bool stable = false;
};

// Stationary mean phonon numbers at the given loop phase / coupling
// (classical solve + drift + Lyapunov). Throws on solver failure.
StationaryPoint stationary_point(const SystemParams& p);

// Modulated covariance harmonics at the given parameters.
FloquetCovariance floquet_point(const SystemParams& p, const FloquetOptions& opts = {});

std::vector<double> linspace(double lo, double hi, int n);

}  // namespace optoloop

#endif
