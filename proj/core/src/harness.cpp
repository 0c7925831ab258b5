#include "coarsen/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <set>
#include <sstream>

#include "json.hpp"

#include "coarsen/csv.hpp"
#include "coarsen/diagnostics.hpp"
#include "coarsen/errors.hpp"

namespace coarsen {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& what)
{
    throw ConfigError("config field '" + field + "': " + what);
}

// Typed access to one JSON object; every key read is recorded so that
// unknown keys can be reported by finish().
class Fields {
public:
    Fields(const json* j, std::string path) : j_(j), path_(std::move(path))
    {
        if (j_ && !j_->is_object()) fail(path_.empty() ? "<root>" : path_, "expected an object");
    }

    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const json* find(const std::string& key)
    {
        used_.insert(key);
        if (!j_) return nullptr;
        auto it = j_->find(key);
        return it == j_->end() ? nullptr : &*it;
    }

    double real(const std::string& key, double def)
    {
        const json* v = find(key);
        if (!v) return def;
        if (!v->is_number()) fail(field(key), "expected a number");
        return v->get<double>();
    }

    std::int64_t integer(const std::string& key, std::int64_t def)
    {
        const json* v = find(key);
        if (!v) return def;
        if (!v->is_number_integer()) fail(field(key), "expected an integer");
        return v->get<std::int64_t>();
    }

    bool boolean(const std::string& key, bool def)
    {
        const json* v = find(key);
        if (!v) return def;
        if (!v->is_boolean()) fail(field(key), "expected true or false");
        return v->get<bool>();
    }

    std::string text(const std::string& key, const std::string& def)
    {
        const json* v = find(key);
        if (!v) return def;
        if (!v->is_string()) fail(field(key), "expected a string");
        return v->get<std::string>();
    }

    std::vector<double> reals(const std::string& key, const std::vector<double>& def)
    {
        const json* v = find(key);
        if (!v) return def;
        if (!v->is_array()) fail(field(key), "expected an array of numbers");
        std::vector<double> out;
        for (std::size_t i = 0; i < v->size(); ++i) {
            if (!(*v)[i].is_number()) fail(field(key) + "[" + std::to_string(i) + "]", "expected a number");
            out.push_back((*v)[i].get<double>());
        }
        return out;
    }

    void finish() const
    {
        if (!j_) return;
        for (auto it = j_->begin(); it != j_->end(); ++it) {
            if (!used_.count(it.key())) fail(field(it.key()), "unknown field");
        }
    }

private:
    const json* j_;
    std::string path_;
    std::set<std::string> used_;
};

void require_positive(const std::string& field, double v)
{
    if (!(v > 0.0) || !std::isfinite(v)) fail(field, "must be positive and finite");
}

void require_eps(const std::string& field, double v)
{
    if (!(v > 0.0 && v <= 1.0)) fail(field, "must be in (0, 1]");
}

int positive_int(Fields& f, const std::string& key, int def)
{
    const auto v = f.integer(key, def);
    if (v < 1 || v > 1'000'000'000) fail(f.field(key), "must be a positive integer");
    return static_cast<int>(v);
}

// ---- sub-config parsers ------------------------------------------------

const char* initial_kind_name(InitialKind k)
{
    switch (k) {
    case InitialKind::ExponentialMoment: return "exponential-moment";
    case InitialKind::CompactBump: return "compact-bump";
    case InitialKind::Table: return "table";
    }
    return "?";
}

InitialDataSpec parse_initial(const json* j)
{
    Fields f(j, "initial");
    InitialDataSpec s;
    const auto kind = f.text("kind", "exponential-moment");
    if (kind == "exponential-moment") {
        s.kind = InitialKind::ExponentialMoment;
    } else if (kind == "compact-bump") {
        s.kind = InitialKind::CompactBump;
    } else if (kind == "table") {
        s.kind = InitialKind::Table;
    } else {
        fail(f.field("kind"), "expected \"exponential-moment\", \"compact-bump\" or \"table\"");
    }
    s.a = f.real("a", s.a);
    s.b = f.real("b", s.b);
    s.xs = f.reals("x", {});
    s.cs = f.reals("c", {});
    f.finish();
    try {
        validate(s);
        if (s.kind == InitialKind::Table) InitialProfile::from_spec(s);
    } catch (const InvalidArgument& e) {
        fail("initial", e.what());
    }
    return s;
}

GridConfig parse_grid(const json* j, const std::string& path, GridConfig g)
{
    Fields f(j, path);
    g.spec.cells = positive_int(f, "cells", g.spec.cells);
    g.spec.x_max = f.real("x_max", g.spec.x_max);
    require_positive(f.field("x_max"), g.spec.x_max);
    g.delta_from_eps = f.boolean("delta_from_eps", g.delta_from_eps);
    g.spec.delta = f.real("delta", g.spec.delta);
    require_positive(f.field("delta"), g.spec.delta);
    g.spec.stretch = f.real("stretch", g.spec.stretch);
    require_positive(f.field("stretch"), g.spec.stretch);
    g.spec.refinement = f.real("refinement", g.spec.refinement);
    if (!(g.spec.refinement >= 0.0)) fail(f.field("refinement"), "must be nonnegative");
    if (g.spec.cells < 16) fail(f.field("cells"), "must be at least 16");
    f.finish();
    return g;
}

DiffusiveOptions parse_diffusive_options(Fields& f, DiffusiveOptions o)
{
    const auto mode = f.text("mode", o.mode == LMode::Moment ? "moment" : "conserve");
    if (mode == "conserve") {
        o.mode = LMode::Conserve;
    } else if (mode == "moment") {
        o.mode = LMode::Moment;
    } else {
        fail(f.field("mode"), "expected \"conserve\" or \"moment\"");
    }
    o.cfl = f.real("cfl", o.cfl);
    if (!(o.cfl > 0.0 && o.cfl <= 1.0)) fail(f.field("cfl"), "must be in (0, 1]");
    o.dt_max = f.real("dt_max", o.dt_max);
    require_positive(f.field("dt_max"), o.dt_max);
    o.negativity_tol = f.real("negativity_tol", o.negativity_tol);
    if (!(o.negativity_tol >= 0.0)) fail(f.field("negativity_tol"), "must be nonnegative");
    o.max_rejections = positive_int(f, "max_rejections", o.max_rejections);
    return o;
}

ClassicalOptions parse_classical_options(Fields& f, ClassicalOptions o)
{
    o.dt = f.real("dt", o.dt);
    require_positive(f.field("dt"), o.dt);
    o.panels = positive_int(f, "panels", o.panels);
    o.tail_tol = f.real("tail_tol", o.tail_tol);
    if (!(o.tail_tol > 0.0 && o.tail_tol < 1e-3)) fail(f.field("tail_tol"), "must be in (0, 1e-3)");
    o.fixed_point_tol = f.real("fixed_point_tol", o.fixed_point_tol);
    require_positive(f.field("fixed_point_tol"), o.fixed_point_tol);
    o.max_iterations = positive_int(f, "max_iterations", o.max_iterations);
    return o;
}

BdExperiment parse_bd(const json* j)
{
    Fields f(j, "bd");
    BdExperiment b;
    const double a1 = f.real("a1", b.model.a1());
    const double z_s = f.real("z_s", b.model.z_s());
    const double q = f.real("q", b.model.q());
    require_positive(f.field("a1"), a1);
    require_positive(f.field("z_s"), z_s);
    if (!(q >= 0.0)) fail(f.field("q"), "must be nonnegative");
    b.model = RateModel(a1, z_s, q);

    const auto closure = f.text("closure", "dirichlet");
    if (closure == "dirichlet") {
        b.closure = ClosureKind::Dirichlet;
    } else if (closure == "full") {
        b.closure = ClosureKind::Full;
    } else {
        fail(f.field("closure"), "expected \"full\" or \"dirichlet\"");
    }
    b.rho = f.real("rho", b.rho);
    if (!(b.rho >= 0.0)) fail(f.field("rho"), "must be nonnegative");

    const auto initial = f.text("initial", "band");
    if (initial == "band") {
        b.initial = BdInitialKind::Band;
    } else if (initial == "equilibrium") {
        b.initial = BdInitialKind::Equilibrium;
    } else if (initial == "table") {
        b.initial = BdInitialKind::Table;
    } else {
        fail(f.field("initial"), "expected \"band\", \"equilibrium\" or \"table\"");
    }
    b.c1 = f.real("c1", b.c1);
    require_positive(f.field("c1"), b.c1);
    b.band_lo = static_cast<std::size_t>(positive_int(f, "band_lo", static_cast<int>(b.band_lo)));
    b.band_hi = static_cast<std::size_t>(positive_int(f, "band_hi", static_cast<int>(b.band_hi)));
    b.table = f.reals("table", {});
    b.ell_max = static_cast<std::size_t>(positive_int(f, "ell_max", static_cast<int>(b.ell_max)));
    if (b.ell_max < 3) fail(f.field("ell_max"), "must be at least 3");
    b.t_end = f.real("t_end", b.t_end);
    require_positive(f.field("t_end"), b.t_end);
    b.dt_init = f.real("dt_init", b.dt_init);
    require_positive(f.field("dt_init"), b.dt_init);
    const auto scheme = f.text("scheme", "semi-implicit");
    if (scheme == "semi-implicit") {
        b.scheme = BdScheme::SemiImplicit;
    } else if (scheme == "explicit-adaptive") {
        b.scheme = BdScheme::ExplicitAdaptive;
    } else {
        fail(f.field("scheme"), "expected \"semi-implicit\" or \"explicit-adaptive\"");
    }
    b.output_stride = f.real("output_stride", b.output_stride);
    require_positive(f.field("output_stride"), b.output_stride);
    const auto every = f.integer("snapshot_every", static_cast<std::int64_t>(b.snapshot_every));
    if (every < 0) fail(f.field("snapshot_every"), "must be nonnegative");
    b.snapshot_every = static_cast<std::size_t>(every);
    b.rtol = f.real("rtol", b.rtol);
    require_positive(f.field("rtol"), b.rtol);
    b.mass_tolerance = f.real("mass_tolerance", b.mass_tolerance);
    require_positive(f.field("mass_tolerance"), b.mass_tolerance);
    f.finish();

    if (b.initial == BdInitialKind::Band && (b.band_lo < 2 || b.band_hi < b.band_lo || b.band_hi > b.ell_max)) {
        fail("bd.band_lo", "need 2 <= band_lo <= band_hi <= ell_max");
    }
    if (b.initial == BdInitialKind::Equilibrium && b.closure != ClosureKind::Full) {
        fail("bd.initial", "equilibrium data requires closure \"full\"");
    }
    if (b.initial == BdInitialKind::Table) {
        if (b.table.size() < 3) fail("bd.table", "needs at least 3 entries");
        for (std::size_t i = 0; i < b.table.size(); ++i) {
            if (!(b.table[i] >= 0.0)) fail("bd.table[" + std::to_string(i) + "]", "must be nonnegative");
        }
        b.ell_max = b.table.size();
    }
    return b;
}

ClassicalExperiment parse_classical(const json* j)
{
    Fields f(j, "classical");
    ClassicalExperiment c;
    c.t_end = f.real("t_end", c.t_end);
    require_positive(f.field("t_end"), c.t_end);
    c.options = parse_classical_options(f, c.options);
    c.snapshot_every = positive_int(f, "snapshot_every", c.snapshot_every);
    c.rate_time = f.real("rate_time", c.rate_time);
    require_positive(f.field("rate_time"), c.rate_time);
    f.finish();
    if (c.rate_time + 2.0 * c.options.dt > c.t_end + 1e-12) {
        fail("classical.rate_time", "needs two steps of room before t_end");
    }
    return c;
}

DiffusiveExperiment parse_diffusive(const json* j)
{
    Fields f(j, "diffusive");
    DiffusiveExperiment d;
    d.eps = f.real("eps", d.eps);
    require_eps(f.field("eps"), d.eps);
    d.t_end = f.real("t_end", d.t_end);
    require_positive(f.field("t_end"), d.t_end);
    d.output_dt = f.real("output_dt", d.output_dt);
    require_positive(f.field("output_dt"), d.output_dt);
    d.grid = parse_grid(f.find("grid"), f.field("grid"), d.grid);
    d.options = parse_diffusive_options(f, d.options);
    d.snapshot_every = positive_int(f, "snapshot_every", d.snapshot_every);
    f.finish();
    return d;
}

SweepExperiment parse_sweep(const json* j)
{
    Fields f(j, "sweep");
    SweepExperiment s;
    s.eps = f.reals("eps", s.eps);
    if (s.eps.size() < 2) fail(f.field("eps"), "needs at least two values");
    for (std::size_t i = 0; i < s.eps.size(); ++i) {
        const auto name = f.field("eps") + "[" + std::to_string(i) + "]";
        require_eps(name, s.eps[i]);
        if (i > 0 && !(s.eps[i] < s.eps[i - 1])) fail(name, "ladder must be strictly decreasing");
    }
    s.T = f.real("T", s.T);
    require_positive(f.field("T"), s.T);
    s.rate_margin = f.real("rate_margin", s.rate_margin);
    require_positive(f.field("rate_margin"), s.rate_margin);
    s.output_dt = f.real("output_dt", s.output_dt);
    require_positive(f.field("output_dt"), s.output_dt);
    s.grid = parse_grid(f.find("grid"), f.field("grid"), s.grid);
    s.classical_dt = f.real("classical_dt", s.classical_dt);
    require_positive(f.field("classical_dt"), s.classical_dt);
    s.probes = positive_int(f, "probes", s.probes);
    f.finish();
    if (s.rate_margin < 2.0 * std::max(s.output_dt, s.classical_dt) - 1e-12) {
        fail("sweep.rate_margin", "must cover two output steps past T");
    }
    const double ratio = s.T / s.output_dt;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio) fail("sweep.output_dt", "must divide T");
    return s;
}

const char* payoff_kind_name(PayoffKind k)
{
    switch (k) {
    case PayoffKind::One: return "one";
    case PayoffKind::CubeRoot: return "cuberoot";
    case PayoffKind::Indicator: return "indicator";
    }
    return "?";
}

Payoff parse_payoff(const json* j, const std::string& path, Payoff def)
{
    Fields f(j, path);
    Payoff p = def;
    try {
        p.kind = parse_payoff_kind(f.text("kind", payoff_kind_name(p.kind)));
    } catch (const InvalidArgument&) {
        fail(f.field("kind"), "expected \"one\", \"cuberoot\" or \"indicator\"");
    }
    p.x0 = f.real("x0", p.x0);
    if (!(p.x0 >= 0.0)) fail(f.field("x0"), "must be nonnegative");
    f.finish();
    return p;
}

McExperiment parse_mc(const json* j)
{
    Fields f(j, "mc");
    McExperiment m;
    m.eps = f.real("eps", m.eps);
    require_eps(f.field("eps"), m.eps);
    m.L = f.real("L", m.L);
    require_positive(f.field("L"), m.L);
    m.T = f.real("T", m.T);
    require_positive(f.field("T"), m.T);
    m.n_paths = f.integer("n_paths", m.n_paths);
    if (m.n_paths < 2) fail(f.field("n_paths"), "must be at least 2");
    m.dt = f.real("dt", m.dt);
    require_positive(f.field("dt"), m.dt);
    const auto boundary = f.text("boundary", m.boundary == BoundaryScheme::Bridge ? "bridge" : "naive");
    if (boundary == "bridge") {
        m.boundary = BoundaryScheme::Bridge;
    } else if (boundary == "naive") {
        m.boundary = BoundaryScheme::Naive;
    } else {
        fail(f.field("boundary"), "expected \"bridge\" or \"naive\"");
    }
    m.payoff = parse_payoff(f.find("payoff"), f.field("payoff"), m.payoff);
    m.probes = f.reals("probes", m.probes);
    if (m.probes.empty()) fail(f.field("probes"), "needs at least one point");
    for (std::size_t i = 0; i < m.probes.size(); ++i) {
        require_positive(f.field("probes") + "[" + std::to_string(i) + "]", m.probes[i]);
    }
    m.grid = parse_grid(f.find("grid"), f.field("grid"), m.grid);
    m.adjoint_dt = f.real("adjoint_dt", m.adjoint_dt);
    require_positive(f.field("adjoint_dt"), m.adjoint_dt);
    m.min_agreeing = static_cast<int>(f.integer("min_agreeing", m.min_agreeing));
    if (m.min_agreeing < 0 || m.min_agreeing > static_cast<int>(m.probes.size())) {
        fail(f.field("min_agreeing"), "must be between 0 and the number of probes");
    }
    f.finish();
    for (std::size_t i = 0; i < m.probes.size(); ++i) {
        if (m.probes[i] >= m.grid.spec.x_max) {
            fail("mc.probes[" + std::to_string(i) + "]", "must lie inside the grid");
        }
    }
    return m;
}

DualityExperiment parse_duality(const json* j)
{
    Fields f(j, "duality");
    DualityExperiment d;
    d.eps = f.real("eps", d.eps);
    require_eps(f.field("eps"), d.eps);
    d.T = f.real("T", d.T);
    require_positive(f.field("T"), d.T);
    d.grid = parse_grid(f.find("grid"), f.field("grid"), d.grid);
    d.output_dt = f.real("output_dt", d.output_dt);
    require_positive(f.field("output_dt"), d.output_dt);
    if (const json* p = f.find("payoffs")) {
        if (!p->is_array() || p->empty()) fail(f.field("payoffs"), "expected a nonempty array");
        d.payoffs.clear();
        for (std::size_t i = 0; i < p->size(); ++i) {
            d.payoffs.push_back(parse_payoff(&(*p)[i], f.field("payoffs") + "[" + std::to_string(i) + "]", {}));
        }
    }
    d.adjoint_dt = f.real("adjoint_dt", d.adjoint_dt);
    require_positive(f.field("adjoint_dt"), d.adjoint_dt);
    d.residual_limit = f.real("residual_limit", d.residual_limit);
    require_positive(f.field("residual_limit"), d.residual_limit);
    d.halving_tolerance = f.real("halving_tolerance", d.halving_tolerance);
    if (!(d.halving_tolerance > 0.0 && d.halving_tolerance < 1.0)) {
        fail(f.field("halving_tolerance"), "must be in (0, 1)");
    }
    f.finish();
    return d;
}

// ---- canonical echo ------------------------------------------------------

json to_json(const InitialDataSpec& s)
{
    json j{{"kind", initial_kind_name(s.kind)}};
    if (s.kind == InitialKind::CompactBump) {
        j["a"] = s.a;
        j["b"] = s.b;
    }
    if (s.kind == InitialKind::Table) {
        j["x"] = s.xs;
        j["c"] = s.cs;
    }
    return j;
}

json to_json(const GridConfig& g)
{
    return {{"cells", g.spec.cells},         {"x_max", g.spec.x_max},
            {"delta", g.spec.delta},         {"delta_from_eps", g.delta_from_eps},
            {"stretch", g.spec.stretch},     {"refinement", g.spec.refinement}};
}

json to_json(const Payoff& p)
{
    json j{{"kind", payoff_kind_name(p.kind)}};
    if (p.kind == PayoffKind::Indicator) j["x0"] = p.x0;
    return j;
}

void put_classical_options(json& j, const ClassicalOptions& o)
{
    j["dt"] = o.dt;
    j["panels"] = o.panels;
    j["tail_tol"] = o.tail_tol;
    j["fixed_point_tol"] = o.fixed_point_tol;
    j["max_iterations"] = o.max_iterations;
}

void put_diffusive_options(json& j, const DiffusiveOptions& o)
{
    j["mode"] = o.mode == LMode::Moment ? "moment" : "conserve";
    j["cfl"] = o.cfl;
    j["dt_max"] = o.dt_max;
    j["negativity_tol"] = o.negativity_tol;
    j["max_rejections"] = o.max_rejections;
}

json to_json(const BdExperiment& b)
{
    json j{{"a1", b.model.a1()},
           {"z_s", b.model.z_s()},
           {"q", b.model.q()},
           {"closure", b.closure == ClosureKind::Full ? "full" : "dirichlet"},
           {"ell_max", b.ell_max},
           {"t_end", b.t_end},
           {"dt_init", b.dt_init},
           {"scheme", b.scheme == BdScheme::SemiImplicit ? "semi-implicit" : "explicit-adaptive"},
           {"output_stride", b.output_stride},
           {"snapshot_every", b.snapshot_every},
           {"rtol", b.rtol},
           {"mass_tolerance", b.mass_tolerance}};
    if (b.closure == ClosureKind::Full) j["rho"] = b.rho;
    switch (b.initial) {
    case BdInitialKind::Band:
        j["initial"] = "band";
        if (b.closure == ClosureKind::Full) j["c1"] = b.c1;
        j["band_lo"] = b.band_lo;
        j["band_hi"] = b.band_hi;
        break;
    case BdInitialKind::Equilibrium:
        j["initial"] = "equilibrium";
        j["c1"] = b.c1;
        break;
    case BdInitialKind::Table:
        j["initial"] = "table";
        j["table"] = b.table;
        break;
    }
    return j;
}

json to_json(const ClassicalExperiment& c)
{
    json j{{"t_end", c.t_end}, {"snapshot_every", c.snapshot_every}, {"rate_time", c.rate_time}};
    put_classical_options(j, c.options);
    return j;
}

json to_json(const DiffusiveExperiment& d)
{
    json j{{"eps", d.eps},
           {"t_end", d.t_end},
           {"output_dt", d.output_dt},
           {"grid", to_json(d.grid)},
           {"snapshot_every", d.snapshot_every}};
    put_diffusive_options(j, d.options);
    return j;
}

json to_json(const SweepExperiment& s)
{
    return {{"eps", s.eps},
            {"T", s.T},
            {"rate_margin", s.rate_margin},
            {"output_dt", s.output_dt},
            {"grid", to_json(s.grid)},
            {"classical_dt", s.classical_dt},
            {"probes", s.probes}};
}

json to_json(const McExperiment& m)
{
    return {{"eps", m.eps},
            {"L", m.L},
            {"T", m.T},
            {"n_paths", m.n_paths},
            {"dt", m.dt},
            {"boundary", m.boundary == BoundaryScheme::Bridge ? "bridge" : "naive"},
            {"payoff", to_json(m.payoff)},
            {"probes", m.probes},
            {"grid", to_json(m.grid)},
            {"adjoint_dt", m.adjoint_dt},
            {"min_agreeing", m.min_agreeing}};
}

json to_json(const DualityExperiment& d)
{
    json payoffs = json::array();
    for (const auto& p : d.payoffs) payoffs.push_back(to_json(p));
    return {{"eps", d.eps},
            {"T", d.T},
            {"grid", to_json(d.grid)},
            {"output_dt", d.output_dt},
            {"payoffs", payoffs},
            {"adjoint_dt", d.adjoint_dt},
            {"residual_limit", d.residual_limit},
            {"halving_tolerance", d.halving_tolerance}};
}

bool uses_initial(ExperimentKind k) { return k != ExperimentKind::Bd && k != ExperimentKind::McCheck; }

}  // namespace

GridSpec GridConfig::resolve(double eps) const
{
    GridSpec g = spec;
    if (delta_from_eps) g.delta = eps;
    return g;
}

ExperimentKind parse_experiment_kind(std::string_view name)
{
    if (name == "bd") return ExperimentKind::Bd;
    if (name == "classical") return ExperimentKind::Classical;
    if (name == "diffusive") return ExperimentKind::Diffusive;
    if (name == "sweep") return ExperimentKind::Sweep;
    if (name == "mc-check") return ExperimentKind::McCheck;
    if (name == "duality") return ExperimentKind::Duality;
    throw InvalidArgument("unknown experiment '" + std::string(name) + "'");
}

const char* experiment_name(ExperimentKind kind)
{
    switch (kind) {
    case ExperimentKind::Bd: return "bd";
    case ExperimentKind::Classical: return "classical";
    case ExperimentKind::Diffusive: return "diffusive";
    case ExperimentKind::Sweep: return "sweep";
    case ExperimentKind::McCheck: return "mc-check";
    case ExperimentKind::Duality: return "duality";
    }
    return "?";
}

std::uint64_t fnv1a(std::string_view bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

ExperimentConfig parse_experiment_config(ExperimentKind kind, std::string_view json_text,
                                         std::optional<std::uint64_t> seed_override)
{
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    Fields f(&root, "");
    const json* version = f.find("schema_version");
    if (!version) fail("schema_version", "missing");
    if (!version->is_number_integer() || version->get<std::int64_t>() != kConfigSchemaVersion) {
        fail("schema_version", "must be " + std::to_string(kConfigSchemaVersion));
    }
    const auto named = f.text("experiment", experiment_name(kind));
    if (named != experiment_name(kind)) {
        fail("experiment", "config is for '" + named + "', not '" + experiment_name(kind) + "'");
    }

    ExperimentConfig cfg;
    cfg.kind = kind;
    const auto seed = f.integer("seed", 1);
    if (seed < 0) fail("seed", "must be nonnegative");
    cfg.seed = seed_override ? *seed_override : static_cast<std::uint64_t>(seed);
    cfg.workers = positive_int(f, "workers", 1);
    if (cfg.workers > 256) fail("workers", "must be at most 256");

    // Only the section for this experiment is interpreted; the others are
    // still checked so a shared config file cannot carry typos.
    const json* initial = f.find("initial");
    cfg.initial = parse_initial(initial);
    cfg.bd = parse_bd(f.find("bd"));
    cfg.classical = parse_classical(f.find("classical"));
    cfg.diffusive = parse_diffusive(f.find("diffusive"));
    cfg.sweep = parse_sweep(f.find("sweep"));
    cfg.mc = parse_mc(f.find("mc"));
    cfg.duality = parse_duality(f.find("duality"));
    f.finish();

    json canon{{"schema_version", kConfigSchemaVersion},
               {"experiment", experiment_name(kind)},
               {"seed", cfg.seed},
               {"workers", cfg.workers}};
    if (uses_initial(kind)) canon["initial"] = to_json(cfg.initial);
    switch (kind) {
    case ExperimentKind::Bd: canon["bd"] = to_json(cfg.bd); break;
    case ExperimentKind::Classical: canon["classical"] = to_json(cfg.classical); break;
    case ExperimentKind::Diffusive: canon["diffusive"] = to_json(cfg.diffusive); break;
    case ExperimentKind::Sweep: canon["sweep"] = to_json(cfg.sweep); break;
    case ExperimentKind::McCheck: canon["mc"] = to_json(cfg.mc); break;
    case ExperimentKind::Duality: canon["duality"] = to_json(cfg.duality); break;
    }
    cfg.canonical_json = canon.dump(2) + "\n";
    cfg.hash = fnv1a(cfg.canonical_json);
    return cfg;
}

std::vector<double> quantile_probes(const InitialProfile& initial, int n)
{
    if (n < 1) throw InvalidArgument("quantile_probes: n must be positive");
    std::vector<double> x(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) x[static_cast<std::size_t>(k)] = initial.quantile((n - k) / (n + 1.0));
    return x;
}

TailComparison tail_distance(const Grid& grid, const std::vector<double>& c, double t_diffusive,
                             const ClassicalSolver& classical, double t_classical, const std::vector<double>& probes)
{
    if (std::abs(t_diffusive - t_classical) > 1e-9 * std::max(1.0, std::abs(t_classical))) {
        throw InvalidArgument("tail_distance: time mismatch (" + std::to_string(t_diffusive) + " vs " +
                              std::to_string(t_classical) + ")");
    }
    if (c.size() != grid.size()) throw InvalidArgument("tail_distance: state does not match the grid");
    TailComparison out;
    for (double x : probes) {
        const double a = discrete_tail(grid, c, x);
        const double b = classical.tail(x, t_classical);
        out.x.push_back(x);
        out.diffusive.push_back(a);
        out.classical.push_back(b);
        out.distance = std::max(out.distance, std::abs(a - b));
    }
    return out;
}

// ---- experiment runners ----------------------------------------------------

namespace {

struct Artifacts {
    std::filesystem::path dir;
    std::vector<Check> checks;
    json report = json::object();

    void check(std::string name, bool passed, double value, double limit)
    {
        checks.push_back({std::move(name), passed, value, limit});
    }

    std::filesystem::path snapshot(const std::string& name) const { return dir / "snapshots" / (name + ".csv"); }
};

std::string snapshot_name(const char* prefix, std::size_t i)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s_%04zu", prefix, i);
    return buf;
}

// Samples the callback over the series; returns the worst violation (<= 0 when
// the property holds).
template <class F>
double worst(const TrajectorySeries& s, F violation)
{
    double w = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < s.size(); ++i) w = std::max(w, violation(i));
    return w;
}

void monotone_checks(Artifacts& a, const TrajectorySeries& s, const std::string& prefix)
{
    // relative rounding slack on both comparisons
    const double rise = worst(s, [&](std::size_t i) {
        if (i == 0) return 0.0;
        return (s[i - 1].lambda - s[i].lambda) / s[i - 1].lambda;
    });
    a.check(prefix + "lambda_nondecreasing", rise <= 1e-12, rise, 1e-12);
    const double gap = worst(s, [&](std::size_t i) {
        return std::isnan(s[i].L) ? -1.0 : (s[i].L - s[i].lambda) / s[i].lambda;
    });
    a.check(prefix + "L_le_lambda", gap <= 1e-12, gap, 1e-12);
}

json ko_json(const KohnOttoReport& r)
{
    json ladder = json::array();
    for (const auto& e : r.ladder) ladder.push_back({{"T", e.T}, {"R", e.R}});
    return {{"energy_nonincreasing", r.energy_nonincreasing},
            {"max_energy_increase", r.max_energy_increase},
            {"min_EM", r.min_EM},
            {"schwarz_ok", r.schwarz_ok},
            {"max_ratio", r.max_ratio},
            {"ratio_growth", r.ratio_growth},
            {"ratio_bounded", r.ratio_bounded},
            {"T0", r.T0},
            {"T0_found", r.T0_found},
            {"ladder", ladder},
            {"ladder_bounded", r.ladder_bounded}};
}

void ko_checks(Artifacts& a, const KohnOttoReport& r, bool with_ladder)
{
    const KohnOttoOptions o;
    a.check("energy_nonincreasing", r.energy_nonincreasing, r.max_energy_increase, o.energy_slack);
    a.check("schwarz_EM_ge_1", r.schwarz_ok, r.min_EM, 1.0 - o.schwarz_slack);
    a.check("dissipation_ratio_bounded", r.ratio_bounded, r.ratio_growth, o.growth_limit);
    if (with_ladder) {
        double excess = 0.0;  // max R(T) / R(T0) - 1
        for (const auto& e : r.ladder) excess = std::max(excess, e.R / r.ladder.front().R - 1.0);
        a.check("coarsening_ladder_bounded", r.ladder_bounded, excess, o.ladder_slack);
    }
    a.report["kohn_otto"] = ko_json(r);
}

const std::vector<SeriesColumn> kContinuousColumns{SeriesColumn::T, SeriesColumn::L,    SeriesColumn::Lambda,
                                                   SeriesColumn::E, SeriesColumn::M,    SeriesColumn::N,
                                                   SeriesColumn::Mass, SeriesColumn::MassResidual};

void write_grid_snapshots(const Artifacts& a, const Grid& grid, const std::vector<Snapshot>& snaps)
{
    CsvWriter index(a.snapshot("index"), {"file", "t"});
    for (std::size_t i = 0; i < snaps.size(); ++i) {
        index.row({static_cast<double>(i), snaps[i].t});
        CsvWriter w(a.snapshot(snapshot_name("state", i)), {"x_lo", "x_hi", "c"});
        for (std::size_t k = 0; k < grid.size(); ++k) w.row({grid.edges()[k], grid.edges()[k + 1], snaps[i].c[k]});
    }
}

std::vector<double> bd_initial_data(const BdExperiment& b, double& rho)
{
    std::vector<double> g;
    switch (b.initial) {
    case BdInitialKind::Equilibrium:
        g = equilibrium_initial(b.model, b.ell_max, b.c1);
        break;
    case BdInitialKind::Band:
        if (b.closure == ClosureKind::Full) {
            // monomers c1 plus clusters carrying the rest of rho
            if (!(b.rho > b.c1)) fail("bd.rho", "band data under the full closure needs rho > c1");
            g = band_initial(b.ell_max, b.band_lo, b.band_hi, b.rho - b.c1);
            g[0] = b.c1;
        } else {
            g = band_initial(b.ell_max, b.band_lo, b.band_hi, 1.0);
        }
        break;
    case BdInitialKind::Table:
        g = b.table;
        break;
    }
    if (b.closure == ClosureKind::Full) {
        double total = 0.0;
        for (std::size_t l = 1; l <= g.size(); ++l) total += static_cast<double>(l) * g[l - 1];
        if (b.rho > 0.0 && b.initial == BdInitialKind::Table &&
            std::abs(total - b.rho) > 1e-10 * std::max(1.0, b.rho)) {
            fail("bd.rho", "does not match sum l * table[l-1]");
        }
        rho = total;
    } else {
        g[0] = 0.0;
        double tail = 0.0;
        for (std::size_t l = 2; l <= g.size(); ++l) tail += static_cast<double>(l) * g[l - 1];
        if (!(tail > 0.0)) fail("bd.table", "has no mass at l >= 2");
        for (auto& v : g) v /= tail;
        rho = 1.0;
    }
    return g;
}

BdRunResult run_bd_experiment(const BdExperiment& b, double rtol, std::vector<double>& initial, double& rho)
{
    initial = bd_initial_data(b, rho);
    BdRunConfig rc;
    rc.model = b.model;
    rc.closure = b.closure == ClosureKind::Full ? Closure::full(rho) : Closure::dirichlet();
    rc.initial = initial;
    rc.t_end = b.t_end;
    rc.dt_init = b.dt_init;
    rc.scheme = b.scheme;
    rc.output_stride = b.output_stride;
    rc.snapshot_every = b.snapshot_every;
    rc.rtol = rtol;
    rc.mass_tolerance = b.mass_tolerance;
    return run_bd(rc);
}

void experiment_bd(const ExperimentConfig& cfg, const RunOptions& opt, Artifacts& a)
{
    const auto& b = cfg.bd;
    std::vector<double> initial;
    double rho = 0.0;
    const auto run = run_bd_experiment(b, b.rtol, initial, rho);
    write_series_csv(a.dir / "series.csv", run.series,
                     {SeriesColumn::T, SeriesColumn::Lambda, SeriesColumn::L, SeriesColumn::E, SeriesColumn::M,
                      SeriesColumn::N, SeriesColumn::Mass, SeriesColumn::C1, SeriesColumn::G});
    {
        CsvWriter index(a.snapshot("index"), {"file", "t"});
        for (std::size_t i = 0; i < run.snapshots.size(); ++i) {
            index.row({static_cast<double>(i), run.snapshots[i].t});
            CsvWriter w(a.snapshot(snapshot_name("state", i)), {"l", "c"});
            const auto& c = run.snapshots[i].c;
            for (std::size_t l = 1; l <= c.size(); ++l) w.row({static_cast<double>(l), c[l - 1]});
        }
    }

    const Closure closure = b.closure == ClosureKind::Full ? Closure::full(rho) : Closure::dirichlet();
    a.check("mass_drift", run.max_mass_drift <= b.mass_tolerance, run.max_mass_drift, b.mass_tolerance);
    double min_c = 0.0;
    for (const auto& s : run.snapshots) {
        for (double v : s.c) min_c = std::min(min_c, v);
    }
    a.check("nonnegative", min_c >= 0.0, min_c, 0.0);

    const auto& s = run.series;
    if (b.closure == ClosureKind::Dirichlet) {
        const double z_s = b.model.z_s();
        const double margin = worst(s, [&](std::size_t i) { return z_s - s[i].c1; });
        a.check("c1_above_z_s", margin < 0.0, -margin, 0.0);
        const double g_rise = worst(s, [&](std::size_t i) { return i == 0 ? -1.0 : s[i].g - s[i - 1].g; });
        a.check("g_strictly_decreasing", g_rise < 0.0, g_rise, 0.0);
        monotone_checks(a, s, "");
    }
    if (b.initial == BdInitialKind::Equilibrium) {
        DiscreteState init{initial, 0.0};
        init.c[0] = closure_monomer(init, b.model, closure);
        double dev = 0.0;
        for (const auto& snap : run.snapshots) {
            for (std::size_t i = 0; i < snap.c.size(); ++i) dev = std::max(dev, std::abs(snap.c[i] - init.c[i]));
        }
        a.check("equilibrium_stationary", dev <= 1e-8, dev, 1e-8);
    }
    a.report["rho"] = rho;
    a.report["accepted_steps"] = run.accepted_steps;
    a.report["rejected_steps"] = run.rejected_steps;
    a.report["clipped_values"] = run.clipped_values;
    a.report["final_lambda"] = s.back().lambda;
    a.report["final_c1"] = s.back().c1;

    if (opt.refine) {
        std::vector<double> init2;
        double rho2 = 0.0;
        const auto fine = run_bd_experiment(b, b.rtol / 10.0, init2, rho2);
        const double d = std::abs(fine.series.back().lambda - s.back().lambda) / s.back().lambda;
        a.check("refined_lambda_agrees", d <= 1e-5, d, 1e-5);
    }
}

ClassicalRunConfig classical_config(const InitialDataSpec& initial, const ClassicalOptions& o, double t_end,
                                    int snapshot_every)
{
    ClassicalRunConfig c;
    c.initial = initial;
    c.t_end = t_end;
    c.options = o;
    c.snapshot_every = snapshot_every;
    return c;
}

double classical_mass_residual(const TrajectorySeries& s)
{
    double r = 0.0;
    for (const auto& rec : s.records()) r = std::max(r, std::abs(rec.mass_residual));
    return r;
}

void experiment_classical(const ExperimentConfig& cfg, const RunOptions& opt, Artifacts& a)
{
    const auto& c = cfg.classical;
    auto o = c.options;
    if (opt.refine) o.dt /= 2.0;
    const auto run = run_classical(classical_config(cfg.initial, o, c.t_end, c.snapshot_every));
    {
        std::vector<SeriesColumn> cols = kContinuousColumns;
        CsvWriter w(a.dir / "series.csv", [&] {
            std::vector<std::string> h;
            for (auto col : cols) h.emplace_back(column_name(col));
            h.emplace_back("rate_semi_analytic");
            return h;
        }());
        for (std::size_t i = 0; i < run.series.size(); ++i) {
            std::vector<double> row;
            for (auto col : cols) row.push_back(column_value(run.series[i], col));
            row.push_back(run.semi_analytic_rate[i]);
            w.row(row);
        }
    }
    {
        CsvWriter index(a.snapshot("index"), {"file", "t"});
        for (std::size_t i = 0; i < run.snapshots.size(); ++i) {
            index.row({static_cast<double>(i), run.snapshots[i].t});
            CsvWriter w(a.snapshot(snapshot_name("tail", i)), {"x", "w"});
            for (std::size_t k = 0; k < run.snapshots[i].x.size(); ++k) {
                w.row({run.snapshots[i].x[k], run.snapshots[i].w[k]});
            }
        }
    }

    const double residual = classical_mass_residual(run.series);
    a.check("mass_residual", residual <= 1e-6, residual, 1e-6);
    monotone_checks(a, run.series, "");
    ko_checks(a, kohn_otto_report(run.series), false);

    const auto rate = coarsening_rate(run, c.rate_time);
    const double rel = std::abs(rate.rate - rate.semi_analytic) / std::abs(rate.semi_analytic);
    a.check("rate_fd_vs_semi_analytic", rel <= 0.01, rel, 0.01);
    a.report["rate"] = {{"t", c.rate_time},
                        {"finite_difference", rate.rate},
                        {"stride1", rate.stride1},
                        {"stride2", rate.stride2},
                        {"smooth", rate.smooth},
                        {"semi_analytic", rate.semi_analytic}};
    a.report["max_iterations_used"] = run.max_iterations_used;
    a.report["final_L"] = run.series.back().L;
    a.report["final_lambda"] = run.series.back().lambda;

    if (opt.refine) {
        // compare against the unrefined step on the shared sample times
        const auto coarse = run_classical(classical_config(cfg.initial, c.options, c.t_end, c.snapshot_every));
        double d = 0.0;
        for (const auto& rec : coarse.series.records()) d = std::max(d, std::abs(rec.L - run.solver.history().at(rec.t)));
        a.check("refined_L_agrees", d <= 1e-4, d, 1e-4);
    }
}

DiffusiveRunConfig diffusive_config(const InitialDataSpec& initial, double eps, double t_end, double output_dt,
                                    int snapshot_every, const DiffusiveOptions& o)
{
    DiffusiveRunConfig c;
    c.initial = initial;
    c.eps = eps;
    c.grid_delta_from_eps = false;
    c.t_end = t_end;
    c.output_dt = output_dt;
    c.snapshot_every = snapshot_every;
    c.options = o;
    return c;
}

void experiment_diffusive(const ExperimentConfig& cfg, const RunOptions& opt, Artifacts& a)
{
    const auto& d = cfg.diffusive;
    const auto rc = diffusive_config(cfg.initial, d.eps, d.t_end, d.output_dt, d.snapshot_every, d.options);
    const Grid grid = Grid::graded(d.grid.resolve(d.eps));
    const auto run = run_diffusive(rc, grid);
    write_series_csv(a.dir / "series.csv", run.series, kContinuousColumns);
    write_grid_snapshots(a, grid, run.snapshots);

    if (d.options.mode == LMode::Conserve) {
        double drift = 0.0;
        for (const auto& rec : run.series.records()) drift = std::max(drift, std::abs(rec.mass_residual));
        a.check("mass_drift", drift <= 1e-8, drift, 1e-8);
    }
    monotone_checks(a, run.series, "");
    ko_checks(a, kohn_otto_report(run.series), true);
    const auto es = energy_and_scale(grid, run.final_state);
    a.check("scale_moment_resolved", !es.M_unresolved, es.M, 0.0);
    a.report["steps"] = run.steps;
    a.report["min_cell_width"] = grid.min_width();
    a.report["max_step_mass_drift"] = run.max_step_mass_drift;
    a.report["final_L"] = run.series.back().L;
    a.report["final_lambda"] = run.series.back().lambda;

    if (opt.refine) {
        const Grid fine = grid.refined();
        const auto r2 = run_diffusive(rc, fine);
        double dL = 0.0;
        for (std::size_t i = 0; i < run.series.size() && i < r2.series.size(); ++i) {
            dL = std::max(dL, std::abs(run.series[i].L - r2.series[i].L));
        }
        a.check("refined_L_agrees", dL <= 1e-3, dL, 1e-3);
    }
}

const SeriesRecord* record_at(const TrajectorySeries& s, double t)
{
    for (const auto& r : s.records()) {
        if (std::abs(r.t - t) <= 1e-9 * std::max(1.0, t)) return &r;
    }
    return nullptr;
}

struct SweepRun {
    DiffusiveRunResult run;
    TailComparison tails;
    double max_dL = 0.0;
    RateEstimate rate;
};

void experiment_sweep(const ExperimentConfig& cfg, const RunOptions& opt, Artifacts& a)
{
    const auto& sw = cfg.sweep;
    const double t_end = sw.T + sw.rate_margin;
    const auto classical = run_classical(classical_config(cfg.initial, [&] {
        ClassicalOptions o;
        o.dt = sw.classical_dt;
        o.panels = 16;
        return o;
    }(), t_end, 1000000));
    const auto cl_rate = coarsening_rate(classical, sw.T);
    const auto probes = quantile_probes(InitialProfile::from_spec(cfg.initial), sw.probes);
    const int snap_every = static_cast<int>(std::lround(sw.T / sw.output_dt));

    auto one = [&](double eps) {
        GridSpec gs = sw.grid.resolve(eps);
        if (opt.refine) gs.cells *= 2;
        const Grid grid = Grid::graded(gs);
        SweepRun out{run_diffusive(diffusive_config(cfg.initial, eps, t_end, sw.output_dt, snap_every, {}), grid),
                     {}, 0.0, {}};
        const Snapshot* at_T = nullptr;
        for (const auto& s : out.run.snapshots) {
            if (std::abs(s.t - sw.T) <= 1e-9 * sw.T) at_T = &s;
        }
        if (!at_T) throw SolverFailure("sweep: no snapshot at T");
        out.tails = tail_distance(grid, at_T->c, at_T->t, classical.solver, sw.T, probes);
        for (const auto& r : out.run.series.records()) {
            if (r.t <= sw.T * (1.0 + 1e-12)) {
                out.max_dL = std::max(out.max_dL, std::abs(r.L - classical.solver.history().at(r.t)));
            }
        }
        out.rate = coarsening_rate(out.run.series, sw.T);
        return out;
    };

    // runs are spread over the workers; results are collected by ladder index
    std::vector<std::optional<SweepRun>> slots(sw.eps.size());
    const std::size_t workers = static_cast<std::size_t>(cfg.workers);
    for (std::size_t start = 0; start < sw.eps.size(); start += workers) {
        std::vector<std::future<SweepRun>> batch;
        for (std::size_t i = start; i < std::min(start + workers, sw.eps.size()); ++i) {
            batch.push_back(std::async(workers > 1 ? std::launch::async : std::launch::deferred, one, sw.eps[i]));
        }
        for (std::size_t k = 0; k < batch.size(); ++k) slots[start + k].emplace(batch[k].get());
    }
    std::vector<SweepRun> runs;
    for (auto& s : slots) runs.push_back(std::move(*s));

    {
        std::vector<std::string> header{"eps"};
        for (auto col : kContinuousColumns) header.emplace_back(column_name(col));
        CsvWriter w(a.dir / "series.csv", header);
        auto put = [&](double eps, const TrajectorySeries& s) {
            for (const auto& r : s.records()) {
                std::vector<double> row{eps};
                for (auto col : kContinuousColumns) row.push_back(column_value(r, col));
                w.row(row);
            }
        };
        put(0.0, classical.series);
        for (std::size_t i = 0; i < runs.size(); ++i) put(sw.eps[i], runs[i].run.series);
    }
    {
        std::vector<std::string> header{"x", "classical"};
        for (std::size_t i = 0; i < runs.size(); ++i) header.push_back("eps_" + std::to_string(i));
        CsvWriter w(a.snapshot("tails_T"), header);
        for (std::size_t p = 0; p < probes.size(); ++p) {
            std::vector<double> row{probes[p], runs[0].tails.classical[p]};
            for (const auto& r : runs) row.push_back(r.tails.diffusive[p]);
            w.row(row);
        }
    }

    json table = json::array();
    for (std::size_t i = 0; i < runs.size(); ++i) {
        json probes_json = json::array();
        for (std::size_t p = 0; p < probes.size(); ++p) {
            probes_json.push_back({{"x", probes[p]},
                                   {"diffusive", runs[i].tails.diffusive[p]},
                                   {"classical", runs[i].tails.classical[p]}});
        }
        table.push_back({{"eps", sw.eps[i]},
                         {"tail_distance", runs[i].tails.distance},
                         {"max_L_difference", runs[i].max_dL},
                         {"rate", runs[i].rate.rate},
                         {"rate_smooth", runs[i].rate.smooth},
                         {"rate_difference", std::abs(runs[i].rate.rate - cl_rate.rate)},
                         {"L_at_T", record_at(runs[i].run.series, sw.T)->L},
                         {"probes", probes_json}});
    }
    a.report["ladder"] = table;
    a.report["classical"] = {{"L_at_T", classical.solver.history().at(sw.T)},
                             {"rate", cl_rate.rate},
                             {"rate_semi_analytic", cl_rate.semi_analytic}};

    auto decreasing = [&](const char* name, auto value) {
        double worst_ratio = 0.0;
        bool ok = true;
        for (std::size_t i = 1; i < runs.size(); ++i) {
            const double r = value(runs[i]) / value(runs[i - 1]);
            worst_ratio = std::max(worst_ratio, r);
            ok = ok && value(runs[i]) < value(runs[i - 1]);
        }
        a.check(name, ok, worst_ratio, 1.0);
    };
    decreasing("tail_distance_decreasing", [](const SweepRun& r) { return r.tails.distance; });
    decreasing("max_L_difference_decreasing", [](const SweepRun& r) { return r.max_dL; });
    decreasing("rate_difference_decreasing",
               [&](const SweepRun& r) { return std::abs(r.rate.rate - cl_rate.rate); });
    const double rel = std::abs(cl_rate.rate - cl_rate.semi_analytic) / std::abs(cl_rate.semi_analytic);
    a.check("classical_rate_fd_vs_semi_analytic", rel <= 0.01, rel, 0.01);
}

void experiment_mc(const ExperimentConfig& cfg, const RunOptions& opt, Artifacts& a)
{
    const auto& m = cfg.mc;
    const auto L = LHistory::constant(m.L, 0.0, m.T);
    const Grid grid = Grid::graded(m.grid.resolve(m.eps));
    const Grid fine = grid.refined();
    const AdjointOptions ao{m.adjoint_dt};
    const auto w = adjoint_solve(grid, payoff_on_grid(grid, m.payoff), m.T, L, m.eps, ao);
    const auto w2 = adjoint_solve(fine, payoff_on_grid(fine, m.payoff), m.T, L, m.eps, ao);

    McConfig mc;
    mc.eps = m.eps;
    mc.L = &L;
    mc.T = m.T;
    mc.n_paths = m.n_paths;
    mc.dt = opt.refine ? m.dt / 2.0 : m.dt;
    mc.seed = cfg.seed;
    mc.boundary = m.boundary;
    mc.workers = cfg.workers;

    CsvWriter series(a.dir / "series.csv", {"x", "mc_mean", "mc_std_error", "adjoint", "adjoint_grid_error", "z"});
    json probes = json::array();
    int agreeing = 0;
    for (double x : m.probes) {
        const auto e = estimate_survival_payoff(mc, m.payoff, x);
        const double pde = interpolate_centers(fine, w2, x);
        const double grid_err = std::abs(pde - interpolate_centers(grid, w, x));
        const double bar = std::sqrt(e.std_error * e.std_error + grid_err * grid_err);
        const double z = bar > 0.0 ? (e.mean - pde) / bar : (e.mean == pde ? 0.0 : INFINITY);
        const bool ok = std::abs(z) <= 3.0;
        agreeing += ok;
        series.row({x, e.mean, e.std_error, pde, grid_err, z});
        probes.push_back({{"x", x},
                          {"mc_mean", e.mean},
                          {"mc_std_error", e.std_error},
                          {"n_paths", e.n_paths},
                          {"n_absorbed", e.n_absorbed},
                          {"adjoint", pde},
                          {"adjoint_grid_error", grid_err},
                          {"z", z},
                          {"agrees", ok}});
    }
    {
        CsvWriter snap(a.snapshot("adjoint"), {"x", "w"});
        for (std::size_t i = 0; i < fine.size(); ++i) snap.row({fine.centers()[i], w2[i]});
    }
    a.report["probes"] = probes;
    a.report["dt"] = mc.dt;
    a.check("mc_vs_adjoint_agreement", agreeing >= m.min_agreeing, agreeing, m.min_agreeing);
}

struct DualityLevel {
    int cells = 0;
    std::vector<double> residual;  // one per payoff
    std::vector<std::vector<double>> w0;
    DiffusiveRunResult run;
};

DualityLevel duality_level(const ExperimentConfig& cfg, int cells)
{
    const auto& d = cfg.duality;
    GridSpec gs = d.grid.resolve(d.eps);
    gs.cells = cells;
    const Grid grid = Grid::graded(gs);
    DualityLevel out{cells, {}, {}, run_diffusive(diffusive_config(cfg.initial, d.eps, d.T, d.output_dt, 1, {}), grid)};
    const AdjointOptions ao{d.adjoint_dt};
    for (const auto& p : d.payoffs) {
        const auto wT = payoff_on_grid(grid, p);
        auto w0 = adjoint_solve(grid, wT, d.T, out.run.history, d.eps, ao);
        out.residual.push_back(pairing(grid, wT, out.run.final_state.cbar) - pairing(grid, w0, out.run.initial.cbar));
        out.w0.push_back(std::move(w0));
    }
    return out;
}

void experiment_duality(const ExperimentConfig& cfg, const RunOptions& opt, Artifacts& a)
{
    const auto& d = cfg.duality;
    const int cells = opt.refine ? 2 * d.grid.spec.cells : d.grid.spec.cells;
    const auto base = duality_level(cfg, cells);
    const auto fine = duality_level(cfg, 2 * cells);
    write_series_csv(a.dir / "series.csv", base.run.series, kContinuousColumns);
    {
        std::vector<std::string> header{"x_lo", "x_hi", "c0", "cT"};
        for (const auto& p : d.payoffs) header.push_back("w0_" + std::string(payoff_kind_name(p.kind)));
        CsvWriter w(a.snapshot("adjoint"), header);
        const auto& g = base.run.grid;
        for (std::size_t i = 0; i < g.size(); ++i) {
            std::vector<double> row{g.edges()[i], g.edges()[i + 1], base.run.initial.cbar[i],
                                    base.run.final_state.cbar[i]};
            for (const auto& w0 : base.w0) row.push_back(w0[i]);
            w.row(row);
        }
    }
    json table = json::array();
    for (std::size_t k = 0; k < d.payoffs.size(); ++k) {
        const auto name = d.payoffs[k].name();
        const double r1 = std::abs(base.residual[k]);
        const double r2 = std::abs(fine.residual[k]);
        const double ratio = r1 > 0.0 ? r2 / r1 : 0.0;
        table.push_back({{"payoff", name},
                         {"cells", cells},
                         {"residual", base.residual[k]},
                         {"residual_refined", fine.residual[k]},
                         {"ratio", ratio}});
        a.check("residual_" + name, r1 <= d.residual_limit, r1, d.residual_limit);
        a.check("halving_" + name, std::abs(ratio - 0.5) <= 0.5 * d.halving_tolerance, ratio,
                0.5 * d.halving_tolerance);
    }
    a.report["payoffs"] = table;
}

void write_text(const std::filesystem::path& p, const std::string& text)
{
    std::ofstream out(p, std::ios::binary);
    out << text;
    if (!out) throw Error("cannot write " + p.string());
}

std::string hex(std::uint64_t v)
{
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace

ExperimentOutcome run_experiment(ExperimentKind kind, std::string_view json_text, const RunOptions& options)
{
    ExperimentOutcome outcome;
    ExperimentConfig cfg;
    try {
        cfg = parse_experiment_config(kind, json_text, options.seed);
    } catch (const InvalidArgument& e) {
        outcome.exit_code = 2;
        outcome.message = e.what();
        return outcome;
    }

    Artifacts a;
    a.dir = options.out_dir;
    try {
        std::filesystem::create_directories(a.dir / "snapshots");
        write_text(a.dir / "config.json", cfg.canonical_json);
        switch (kind) {
        case ExperimentKind::Bd: experiment_bd(cfg, options, a); break;
        case ExperimentKind::Classical: experiment_classical(cfg, options, a); break;
        case ExperimentKind::Diffusive: experiment_diffusive(cfg, options, a); break;
        case ExperimentKind::Sweep: experiment_sweep(cfg, options, a); break;
        case ExperimentKind::McCheck: experiment_mc(cfg, options, a); break;
        case ExperimentKind::Duality: experiment_duality(cfg, options, a); break;
        }
    } catch (const ConfigError& e) {
        outcome.exit_code = 2;
        outcome.message = e.what();
        return outcome;
    } catch (const std::exception& e) {
        outcome.exit_code = 3;
        outcome.message = e.what();
        return outcome;
    }

    const bool passed = std::all_of(a.checks.begin(), a.checks.end(), [](const Check& c) { return c.passed; });
    outcome.exit_code = passed ? 0 : 1;
    outcome.checks = a.checks;

    json checks = json::array();
    for (const auto& c : a.checks) {
        checks.push_back({{"name", c.name}, {"passed", c.passed}, {"value", c.value}, {"limit", c.limit}});
    }
    json summary{{"experiment", experiment_name(kind)},
                 {"schema_version", kConfigSchemaVersion},
                 {"config_hash", hex(cfg.hash)},
                 {"seed", cfg.seed},
                 {"refine", options.refine},
                 {"passed", passed},
                 {"checks", checks},
                 {"report", a.report}};
    try {
        write_text(a.dir / "summary.json", summary.dump(2) + "\n");
    } catch (const std::exception& e) {
        outcome.exit_code = 3;
        outcome.message = e.what();
        return outcome;
    }
    if (!passed) {
        std::ostringstream msg;
        msg << "failed checks:";
        for (const auto& c : a.checks) {
            if (!c.passed) msg << ' ' << c.name;
        }
        outcome.message = msg.str();
    }
    return outcome;
}

}  // namespace coarsen
