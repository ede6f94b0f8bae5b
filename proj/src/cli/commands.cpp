#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <ostream>

#include <CLI11.hpp>

#include "conet/cli.hpp"

namespace conet::cli {

namespace {

namespace fs = std::filesystem;

struct Options {
    std::string config;
    std::string out = "conet-out";
    std::optional<std::uint64_t> seed;
    std::optional<double> dt;
    std::optional<std::size_t> eta_stride;
    std::size_t jobs = 1;
};

Overrides overrides_of(const Options& o)
{
    return {o.seed, o.dt, o.eta_stride};
}

Json opt(const std::optional<double>& v)
{
    return v ? Json(*v) : Json(nullptr);
}

// JSON has no NaN or infinity; non-finite values are written as null.
Json num(double v)
{
    return std::isfinite(v) ? Json(v) : Json(nullptr);
}

Json numbers(const std::vector<double>& values)
{
    Json a = Json::array();
    for (double v : values) a.push_back(num(v));
    return a;
}

Json vector_json(const Eigen::VectorXd& v)
{
    Json a = Json::array();
    for (Index i = 0; i < v.size(); ++i) a.push_back(num(v(i)));
    return a;
}

Json estimate_json(const ConstantEstimate& e)
{
    return {{"declared", opt(e.declared)},
            {"empirical", num(e.empirical)},
            {"closed_form", opt(e.closed_form)},
            {"working", num(e.working())},
            {"inconsistent", e.inconsistent()}};
}

Json header(const RunConfig& run, const std::string& command)
{
    return {{"version", kVersion}, {"command", command}, {"config", run.resolved}};
}

void prepare_dir(const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error("cannot create output directory " + dir.string() + ": " + ec.message());
}

// Mass, TV and eta-sup envelopes against the a-priori bounds of the regime:
// tv stays at most M and eta stays in the convex hull of eta0 and omega.
Json audit_json(const RunConfig& run, const Trajectory& traj)
{
    const auto& a = traj.audit;
    const double m0 = a.total_mass.empty() ? 0.0 : a.total_mass.front();
    double drift = 0.0;
    for (double m : a.total_mass) drift = std::max(drift, std::abs(m - m0));
    const double tv_max = a.tv_norm.empty() ? 0.0 : *std::max_element(a.tv_norm.begin(), a.tv_norm.end());
    const double eta_max = a.eta_sup.empty() ? 0.0 : *std::max_element(a.eta_sup.begin(), a.eta_sup.end());

    const ProbeConfig probe{run.probes, run.spec.mass_bound, run.spec.horizon, run.seed};
    const double C_omega = estimate_constants(run.spec.omega, run.spec.graph, probe).C_omega.working();
    const double eta0_sup = sup_norm(run.eta0);
    double eta_bound = std::max(eta0_sup, C_omega);
    if (run.spec.regime == Regime::StaticGraph) eta_bound = eta0_sup;
    if (run.spec.regime == Regime::QuasiStatic) eta_bound = C_omega;

    Json doc = header(run, "simulate");
    doc["truncated"] = traj.truncated;
    doc["samples"] = traj.samples();
    doc["mass"] = {{"initial", num(m0)},
                   {"final", num(a.total_mass.empty() ? 0.0 : a.total_mass.back())},
                   {"max_drift", num(drift)}};
    doc["tv_norm"] = {{"max", num(tv_max)}, {"bound", run.spec.mass_bound},
                      {"within_bound", tv_max <= run.spec.mass_bound * (1.0 + 1e-9)}};
    doc["eta_sup"] = {{"max", num(eta_max)}, {"bound", num(eta_bound)},
                      {"within_bound", eta_max <= eta_bound * (1.0 + 1e-9) + 1e-12}};
    doc["envelopes"] = {{"t", numbers(traj.times)},
                        {"total_mass", numbers(a.total_mass)},
                        {"tv_norm", numbers(a.tv_norm)},
                        {"eta_sup", numbers(a.eta_sup)}};
    doc["warnings"] = a.warnings;
    return doc;
}

Json summary_json(const RunConfig& run, const Trajectory& traj, const IterationLog* log)
{
    Json doc = header(run, "simulate");
    doc["solver"] = run.use_picard ? "picard" : "integrate";
    doc["regime"] = std::string(to_string(run.spec.regime));
    doc["vertices"] = run.spec.graph.size();
    doc["samples"] = traj.samples();
    doc["truncated"] = traj.truncated;
    if (traj.samples() > 0) {
        const MassVector& rho = traj.rho.back();
        const WeightMatrix& eta = traj.eta.back();
        doc["final"] = {{"t", num(traj.times.back())},
                        {"total_mass", num(rho.sum())},
                        {"tv_norm", num(tv_norm(rho))},
                        {"rho", vector_json(rho)},
                        {"rho_min", num(rho.minCoeff())},
                        {"eta_min", num(eta.minCoeff())},
                        {"eta_max", num(eta.maxCoeff())},
                        {"eta_mean", num(eta.mean())}};
    }
    doc["warnings"] = traj.audit.warnings;
    if (log) {
        Json p;
        p["iterations"] = log->gaps.size();
        p["gaps"] = numbers(log->gaps);
        p["ratios"] = numbers(log->ratios);
        p["t_star"] = opt(log->t_star);
        p["warnings"] = log->warnings;
        doc["picard"] = p;
    }
    return doc;
}

int cmd_simulate(const Options& o, std::ostream& out, std::ostream& err)
{
    const RunConfig run = parse_config(read_config_file(o.config), overrides_of(o));
    const fs::path dir = o.out;
    prepare_dir(dir);

    Trajectory traj;
    std::optional<IterationLog> log;
    int status = 0;
    try {
        if (run.use_picard) {
            auto result = picard_solve(run.spec, run.rho0, run.eta0, run.picard);
            traj = std::move(result.trajectory);
            log = std::move(result.log);
        } else {
            traj = integrate(run.spec, run.rho0, run.eta0, run.integrator);
        }
    } catch (const DivergenceError& e) {
        traj = e.partial();
        traj.truncated = true;
        err << "error: " << e.what() << "; partial outputs written to " << dir.string() << '\n';
        status = 1;
    }

    if (run.output.trajectory) write_trajectory_csv(dir / "trajectory.csv", traj, run.output.eta_stride);
    if (run.output.audit) write_json(dir / "audit.json", audit_json(run, traj));
    if (run.output.summary) write_json(dir / "summary.json", summary_json(run, traj, log ? &*log : nullptr));
    for (const auto& w : traj.audit.warnings) err << "warning: " << w << '\n';
    if (log)
        for (const auto& w : log->warnings) err << "warning: " << w << '\n';
    if (status == 0)
        out << "simulate: " << traj.samples() << " samples to t = " << format_double(traj.horizon()) << " in "
            << dir.string() << '\n';
    return status;
}

Json report_json(const ContractionReport& r)
{
    const auto& c = r.constants;
    return {{"constants",
             {{"L_phi", c.L_phi},
              {"C_V", c.C_V},
              {"L_V", c.L_V},
              {"M", c.M},
              {"C_omega", c.C_omega},
              {"L_omega", c.L_omega},
              {"eta0_sup", c.eta0_sup}}},
            {"horizon", r.horizon},
            {"alpha", num(r.alpha)},
            {"beta", num(r.beta)},
            {"kappa", num(r.kappa)},
            {"factor", num(r.factor)},
            {"sigma", num(r.sigma)},
            {"gamma", num(r.gamma)},
            {"chi", num(r.chi)},
            {"T_star", num(r.t_star)},
            {"contractive", r.contractive},
            {"verdict", r.verdict}};
}

int cmd_constants(const Options& o, std::ostream& out)
{
    const RunConfig run = parse_config(read_config_file(o.config), overrides_of(o));
    Json doc = header(run, "constants");
    ContractionReport report;
    if (run.contraction) {
        report = contraction_report(*run.contraction, run.spec.horizon);
        doc["source"] = "contraction_constants";
    } else {
        const auto sc = system_constants(run.spec, run.probes, run.seed);
        report = contraction_report(contraction_constants(run.spec, sc, sup_norm(run.eta0)), run.spec.horizon);
        doc["source"] = "estimated";
        doc["estimates"] = {{"C_V", estimate_json(sc.velocity.C_V)},
                            {"L_V", estimate_json(sc.velocity.L_V)},
                            {"C_omega", estimate_json(sc.omega.C_omega)},
                            {"L_omega", estimate_json(sc.omega.L_omega)},
                            {"Ct_omega", estimate_json(sc.omega.Ct_omega)}};
    }
    doc["contraction"] = report_json(report);
    doc["T_star"] = num(report.t_star);
    doc["horizon"] = run.spec.horizon;
    doc["verdict"] = report.verdict;

    const fs::path dir = o.out;
    prepare_dir(dir);
    write_json(dir / "constants.json", doc);
    out << "T_star = " << format_double(report.t_star) << ", T = " << format_double(run.spec.horizon) << ": "
        << report.verdict << '\n';
    return 0;
}

struct Gate {
    std::string name;
    Json value;
    Json threshold;
    bool pass;
};

std::vector<Gate> evaluate_gates(const StudyGates& g, const ConvergenceStudy& s)
{
    std::vector<Gate> gates;
    if (g.slope) {
        const bool pass = s.fit && s.fit->slope >= g.slope->first && s.fit->slope <= g.slope->second;
        gates.push_back({"slope", s.fit ? num(s.fit->slope) : Json(nullptr), {g.slope->first, g.slope->second}, pass});
    }
    if (g.within_bounds) gates.push_back({"within_bounds", s.within_bounds, true, s.within_bounds});
    if (g.monotone) gates.push_back({"monotone", s.monotone, true, s.monotone});
    if (g.mass_observable) {
        double worst = 0.0;
        for (const auto& r : s.rungs) worst = std::max(worst, r.mass_observable_error.value_or(0.0));
        gates.push_back({"mass_observable", num(worst), *g.mass_observable, worst <= *g.mass_observable});
    }
    return gates;
}

std::string rung_file(std::size_t i)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "rung_%02zu.csv", i);
    return buf;
}

int cmd_study(const std::string& kind, const Options& o, std::ostream& out, std::ostream& err)
{
    const RunConfig run = parse_config(read_config_file(o.config), overrides_of(o), kind);
    const StudyConfig& cfg = *run.study;
    StudyOptions opts;
    opts.integrator = run.integrator;
    opts.jobs = std::max<std::size_t>(1, o.jobs);
    opts.probes = run.probes;
    opts.seed = run.seed;

    ConvergenceStudy study;
    if (kind == "slow")
        study = slow_limit_study(run.spec, run.rho0, run.eta0, cfg.epsilons, opts);
    else if (kind == "fast")
        study = fast_limit_study(run.spec, run.rho0, run.eta0, cfg.epsilons, opts, cfg.well_prepared);
    else
        study = graph_limit_study(cfg.recipe, cfg.counts, opts);

    const fs::path dir = o.out;
    prepare_dir(dir);

    Json rungs = Json::array();
    Json bounds = Json::array();
    for (std::size_t i = 0; i < study.rungs.size(); ++i) {
        const auto& r = study.rungs[i];
        const std::string file = rung_file(i);
        write_trajectory_csv(dir / file, r.trajectory, run.output.eta_stride);
        rungs.push_back({{"parameter", r.parameter},
                         {"dt", r.dt},
                         {"error", num(r.error)},
                         {"error_rho", num(r.error_rho)},
                         {"error_eta", num(r.error_eta)},
                         {"bound", opt(r.bound)},
                         {"bound_rho", opt(r.bound_rho)},
                         {"bound_eta", opt(r.bound_eta)},
                         {"mass_observable_error", opt(r.mass_observable_error)},
                         {"within_bound", r.within_bound()},
                         {"trajectory", file}});
        bounds.push_back(opt(r.bound));
    }
    write_trajectory_csv(dir / "reference.csv", study.reference, run.output.eta_stride);

    const auto gates = evaluate_gates(cfg.gates, study);
    bool passed = true;
    Json gate_doc = Json::object();
    for (const auto& g : gates) {
        gate_doc[g.name] = {{"value", g.value}, {"threshold", g.threshold}, {"pass", g.pass}};
        passed = passed && g.pass;
    }

    Json doc = header(run, "study " + kind);
    doc["kind"] = study.kind;
    doc["ladder"] = numbers(study.ladder());
    doc["errors"] = numbers(study.errors());
    doc["bounds"] = bounds;
    doc["bound_label"] = study.bound_label;
    if (study.fit) {
        doc["slope"] = num(study.fit->slope);
        doc["fit"] = {{"slope", num(study.fit->slope)},
                      {"intercept", num(study.fit->intercept)},
                      {"residual", num(study.fit->residual)},
                      {"excluded", study.fit->excluded},
                      {"note", study.fit->note}};
    } else {
        doc["slope"] = nullptr;
        doc["fit"] = nullptr;
    }
    doc["monotone"] = study.monotone;
    doc["within_bounds"] = study.within_bounds;
    doc["notes"] = study.notes;
    doc["rungs"] = rungs;
    doc["reference"] = "reference.csv";
    doc["gates"] = gate_doc;
    doc["gates_required"] = cfg.gates.required;
    doc["passed"] = passed;
    write_json(dir / "study.json", doc);

    out << "study " << kind << ": " << study.rungs.size() << " rungs";
    if (study.fit) out << ", slope " << format_double(study.fit->slope);
    out << ", gates " << (passed ? "passed" : "failed") << '\n';
    for (const auto& g : gates)
        if (!g.pass) err << "gate " << g.name << " failed: value " << g.value.dump() << ", threshold " << g.threshold.dump()
                         << '\n';
    return cfg.gates.required && !passed ? 1 : 0;
}

int cmd_presets(std::ostream& out)
{
    std::size_t width = 0;
    for (const auto& p : presets()) width = std::max(width, p.name.size());
    for (const auto& p : presets()) out << std::left << std::setw(static_cast<int>(width) + 2) << p.name << p.description << '\n';
    return 0;
}

void add_common(CLI::App* cmd, Options& o)
{
    cmd->add_option("--config", o.config, "JSON config file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", o.out, "output directory")->capture_default_str();
    cmd->add_option("--seed", o.seed, "seed override");
    cmd->add_option("--dt", o.dt, "integrator step override")->check(CLI::PositiveNumber);
    cmd->add_option("--eta-stride", o.eta_stride, "eta snapshot stride override");
    cmd->add_option("--jobs", o.jobs, "concurrent study rungs")->check(CLI::PositiveNumber);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Co-evolving mass and weight dynamics on graphs", "conet"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    Options o;
    auto* simulate = app.add_subcommand("simulate", "integrate one configured system");
    add_common(simulate, o);
    auto* constants = app.add_subcommand("constants", "structural constants, T* and the contraction verdict");
    add_common(constants, o);
    auto* study = app.add_subcommand("study", "convergence study: slow, fast or graph-limit");
    std::string kind;
    study->add_option("kind", kind, "study kind")->required()->check(CLI::IsMember({"slow", "fast", "graph-limit"}));
    add_common(study, o);
    auto* presets_cmd = app.add_subcommand("presets", "named scenario presets");
    std::string action;
    presets_cmd->add_option("action", action, "list")->required()->check(CLI::IsMember({"list"}));

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*simulate) return cmd_simulate(o, out, err);
        if (*constants) return cmd_constants(o, out);
        if (*study) return cmd_study(kind, o, out, err);
        return cmd_presets(out);
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const DimensionError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace conet::cli
