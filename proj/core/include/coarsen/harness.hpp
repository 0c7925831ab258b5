#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "coarsen/bd.hpp"
#include "coarsen/initial_data.hpp"
#include "coarsen/lsw_classical.hpp"
#include "coarsen/lsw_diffusive.hpp"
#include "coarsen/sde.hpp"

namespace coarsen {

inline constexpr int kConfigSchemaVersion = 1;

enum class ExperimentKind { Bd, Classical, Diffusive, Sweep, McCheck, Duality };

/// "bd", "classical", "diffusive", "sweep", "mc-check", "duality".
ExperimentKind parse_experiment_kind(std::string_view name);
const char* experiment_name(ExperimentKind kind);

enum class BdInitialKind { Equilibrium, Band, Table };

struct BdExperiment {
    RateModel model{1.0, 1.0, 1.0};
    ClosureKind closure = ClosureKind::Dirichlet;
    double rho = 0.0;  // full closure; 0 means "take it from the initial data"
    BdInitialKind initial = BdInitialKind::Band;
    double c1 = 0.9;              // equilibrium data; monomers of band data under the full closure
    std::size_t band_lo = 2;      // band data
    std::size_t band_hi = 20;
    std::vector<double> table;    // gamma_l at index l-1
    std::size_t ell_max = 2000;
    double t_end = 50.0;
    double dt_init = 1e-3;
    BdScheme scheme = BdScheme::SemiImplicit;
    double output_stride = 0.5;
    std::size_t snapshot_every = 20;
    double rtol = 1e-7;
    double mass_tolerance = 1e-8;
};

struct ClassicalExperiment {
    double t_end = 2.0;
    ClassicalOptions options = [] {
        ClassicalOptions o;
        o.dt = 0.01;
        o.panels = 16;
        return o;
    }();
    int snapshot_every = 50;
    double rate_time = 1.0;
};

/// Grid for a diffusive run; by default the fine-cell width delta follows eps.
struct GridConfig {
    GridSpec spec;
    bool delta_from_eps = true;

    GridSpec resolve(double eps) const;
};

struct DiffusiveExperiment {
    double eps = 0.1;
    double t_end = 5.0;
    double output_dt = 0.01;
    GridConfig grid;
    DiffusiveOptions options;
    int snapshot_every = 100;
};

struct SweepExperiment {
    std::vector<double> eps{0.2, 0.1, 0.05, 0.025};
    double T = 1.0;
    double rate_margin = 0.05;  // runs extend to T + margin for centered differences
    double output_dt = 0.01;
    GridConfig grid;
    double classical_dt = 0.01;
    int probes = 16;
};

struct McExperiment {
    double eps = 0.25;
    double L = 1.0;  // constant L on [0, T]
    double T = 0.25;
    std::int64_t n_paths = 200000;
    double dt = 1e-3;
    BoundaryScheme boundary = BoundaryScheme::Bridge;
    Payoff payoff;
    std::vector<double> probes{0.1, 0.25, 0.5, 1.0, 2.0};
    GridConfig grid{{2048, 20.0, 0.05, 1.0, 4.0}, true};
    double adjoint_dt = 1e-4;
    int min_agreeing = 4;
};

struct DualityExperiment {
    double eps = 0.25;
    double T = 0.5;
    GridConfig grid{{2048, 40.0, 0.05, 1.0, 4.0}, true};
    double output_dt = 0.05;
    std::vector<Payoff> payoffs{{PayoffKind::One, 0.0}, {PayoffKind::CubeRoot, 0.0}, {PayoffKind::Indicator, 1.0}};
    double adjoint_dt = 1e-3;
    double residual_limit = 1e-4;
    double halving_tolerance = 0.3;
};

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::Classical;
    std::uint64_t seed = 1;
    int workers = 1;
    InitialDataSpec initial;
    BdExperiment bd;
    ClassicalExperiment classical;
    DiffusiveExperiment diffusive;
    SweepExperiment sweep;
    McExperiment mc;
    DualityExperiment duality;
    std::string canonical_json;  // normalized echo, the basis of the hash
    std::uint64_t hash = 0;
};

/// Parses and validates a JSON config for the given experiment. Missing fields
/// take defaults. Throws ConfigError naming the offending field.
ExperimentConfig parse_experiment_config(ExperimentKind kind, std::string_view json_text,
                                         std::optional<std::uint64_t> seed_override = std::nullopt);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);

struct Check {
    std::string name;
    bool passed = false;
    double value = 0.0;
    double limit = 0.0;
};

struct ExperimentOutcome {
    int exit_code = 0;  // 0 pass, 1 check failure, 2 config error, 3 solver failure
    std::string message;
    std::vector<Check> checks;
};

struct RunOptions {
    std::filesystem::path out_dir;
    std::optional<std::uint64_t> seed;
    bool refine = false;
};

/// Parses the config, runs the experiment and writes config.json, series.csv,
/// snapshots/*.csv and summary.json into out_dir. Never throws for config or
/// solver errors; they are reported through the exit code.
ExperimentOutcome run_experiment(ExperimentKind kind, std::string_view json_text, const RunOptions& options);

/// 16 (by default) probes at quantiles k/(n+1) of the initial tail.
std::vector<double> quantile_probes(const InitialProfile& initial, int n = 16);

struct TailComparison {
    std::vector<double> x;
    std::vector<double> diffusive;
    std::vector<double> classical;
    double distance = 0.0;  // max |diffusive - classical|
};

/// Compares int_x^inf c_eps(., t) with w0(F(x, t)). Throws InvalidArgument if
/// the two times differ.
TailComparison tail_distance(const Grid& grid, const std::vector<double>& c, double t_diffusive,
                             const ClassicalSolver& classical, double t_classical, const std::vector<double>& probes);

}  // namespace coarsen
