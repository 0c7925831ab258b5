#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "coarsen/csv.hpp"
#include "coarsen/errors.hpp"
#include "coarsen/harness.hpp"
#include "doctest.h"

using namespace coarsen;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string config_error(ExperimentKind kind, const std::string& text)
{
    try {
        parse_experiment_config(kind, text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

fs::path scratch_dir(const std::string& name)
{
    auto p = fs::temp_directory_path() / ("coarsen_unit_" + name);
    fs::remove_all(p);
    return p;
}

const char* kSmallClassical = R"({
  "schema_version": 1,
  "classical": {"t_end": 0.3, "dt": 0.02, "panels": 16, "rate_time": 0.2, "snapshot_every": 5}
})";

}  // namespace

TEST_CASE("experiment names")
{
    for (auto k : {ExperimentKind::Bd, ExperimentKind::Classical, ExperimentKind::Diffusive, ExperimentKind::Sweep,
                   ExperimentKind::McCheck, ExperimentKind::Duality}) {
        CHECK(parse_experiment_kind(experiment_name(k)) == k);
    }
    CHECK_THROWS_AS(parse_experiment_kind("mc"), InvalidArgument);
}

TEST_CASE("FNV-1a")
{
    CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("config errors name the field")
{
    CHECK(config_error(ExperimentKind::Sweep, R"({"schema_version": 1, "sweep": {"eps": [0.2, 0, 0.05]}})")
              .find("sweep.eps[1]") != std::string::npos);
    CHECK(config_error(ExperimentKind::Sweep, R"({"schema_version": 1, "sweep": {"eps": [0.1, 0.2]}})")
              .find("sweep.eps[1]") != std::string::npos);
    CHECK(config_error(ExperimentKind::Sweep, R"({"schema_version": 1, "sweep": {"eps": [1.5, 0.2]}})")
              .find("sweep.eps[0]") != std::string::npos);
    CHECK(config_error(ExperimentKind::Classical, R"({"classical": {}})").find("schema_version") != std::string::npos);
    CHECK(config_error(ExperimentKind::Classical, R"({"schema_version": 2})").find("schema_version") !=
          std::string::npos);
    CHECK(config_error(ExperimentKind::Diffusive, R"({"schema_version": 1, "diffusive": {"eps": "big"}})")
              .find("diffusive.eps") != std::string::npos);
    CHECK(config_error(ExperimentKind::Diffusive, R"({"schema_version": 1, "diffusive": {"grid": {"cels": 10}}})")
              .find("diffusive.grid.cels") != std::string::npos);
    CHECK(config_error(ExperimentKind::Classical,
                       R"({"schema_version": 1, "initial": {"kind": "compact-bump", "a": 2, "b": 1}})")
              .find("initial") != std::string::npos);
    CHECK(config_error(ExperimentKind::Bd, R"({"schema_version": 1, "bd": {"closure": "dirichlet", "initial": "equilibrium"}})")
              .find("bd.initial") != std::string::npos);
    CHECK(config_error(ExperimentKind::Bd, R"({"schema_version": 1, "experiment": "sweep"})").find("experiment") !=
          std::string::npos);
    CHECK(config_error(ExperimentKind::Bd, "{not json").find("JSON") != std::string::npos);
}

TEST_CASE("canonical config and hash")
{
    const auto a = parse_experiment_config(ExperimentKind::Classical, kSmallClassical);
    const auto b = parse_experiment_config(ExperimentKind::Classical,
                                           R"({"classical": {"panels": 16, "rate_time": 0.2, "dt": 0.02,
                                               "snapshot_every": 5, "t_end": 0.3}, "schema_version": 1})");
    CHECK(a.canonical_json == b.canonical_json);
    CHECK(a.hash == b.hash);
    CHECK(a.hash == fnv1a(a.canonical_json));
    const auto c = parse_experiment_config(ExperimentKind::Classical, kSmallClassical, 99);
    CHECK(c.seed == 99);
    CHECK(c.hash != a.hash);
    CHECK(a.classical.options.dt == 0.02);
    CHECK(a.classical.t_end == 0.3);
}

TEST_CASE("quantile probes and tail distance")
{
    const auto profile = InitialProfile::from_spec({});
    const auto probes = quantile_probes(profile, 16);
    REQUIRE(probes.size() == 16);
    for (std::size_t k = 0; k < probes.size(); ++k) {
        CHECK(profile.tail(probes[k]) == doctest::Approx(profile.number() * (16.0 - k) / 17.0).epsilon(1e-9));
        if (k > 0) CHECK(probes[k] > probes[k - 1]);
    }

    ClassicalSolver classical(profile);
    GridSpec spec;
    spec.cells = 4096;
    spec.x_max = 60.0;
    const auto grid = Grid::graded(spec);
    const auto state = discretize(grid, profile, 0.05);
    const std::vector<double> edges(grid.edges().begin() + 1, grid.edges().begin() + 200);
    // discretize() rescales to the profile mass, which moves the tail by ~1e-7
    CHECK(tail_distance(grid, state.cbar, 0.0, classical, 0.0, edges).distance < 1e-6);
    const auto far = tail_distance(grid, state.cbar, 0.0, classical, 0.0, {50.0});
    CHECK(far.diffusive[0] < 1e-10);
    CHECK(far.classical[0] < 1e-10);
    CHECK_THROWS_AS(tail_distance(grid, state.cbar, 0.5, classical, 0.0, probes), InvalidArgument);
}

TEST_CASE("number formatting")
{
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(-2.5e-12) == "-2.5e-12");
    CHECK(format_number(3.0) == "3");
    CHECK(format_number(std::nan("")) == "nan");
    CHECK(std::stod(format_number(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("run_experiment writes the artifact set and is reproducible")
{
    const auto d1 = scratch_dir("classical_a");
    const auto d2 = scratch_dir("classical_b");
    const auto o1 = run_experiment(ExperimentKind::Classical, kSmallClassical, {d1, std::nullopt, false});
    const auto o2 = run_experiment(ExperimentKind::Classical, kSmallClassical, {d2, std::nullopt, false});
    CHECK(o1.exit_code == 0);
    CHECK(o1.message == "");
    for (const char* f : {"config.json", "series.csv", "summary.json", "snapshots/index.csv", "snapshots/tail_0000.csv"}) {
        REQUIRE(fs::exists(d1 / f));
        CHECK(slurp(d1 / f) == slurp(d2 / f));
    }
    const auto csv = slurp(d1 / "series.csv");
    CHECK(csv.find('\r') == std::string::npos);
    CHECK(csv.rfind("t,L,Lambda", 0) == 0);
    CHECK(o2.checks.size() == o1.checks.size());

    const auto bad = run_experiment(ExperimentKind::Sweep, R"({"schema_version": 1, "sweep": {"eps": [0.2, 0]}})",
                                    {scratch_dir("bad"), std::nullopt, false});
    CHECK(bad.exit_code == 2);
    CHECK(bad.message.find("sweep.eps[1]") != std::string::npos);
}

TEST_CASE("solver failures map to exit code 3")
{
    // a truncation far too short for the run saturates the top bin
    const auto o = run_experiment(
        ExperimentKind::Bd,
        R"({"schema_version": 1, "bd": {"ell_max": 25, "band_lo": 2, "band_hi": 20, "t_end": 50}})",
        {scratch_dir("bd_fail"), std::nullopt, false});
    CHECK(o.exit_code == 3);
    CHECK(o.message.find("ell_max") != std::string::npos);
}
