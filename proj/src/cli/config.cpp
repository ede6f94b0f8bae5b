#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "conet/cli.hpp"

namespace conet::cli {

namespace {

std::string join(const std::string& path, const std::string& key)
{
    return path + "/" + key;
}

std::string type_name(const Json& j)
{
    return j.type_name();
}

// Reads one JSON object, records every value it hands out (defaults included)
// into `resolved`, and rejects keys nobody asked for.
class Reader {
public:
    Reader(const Json& node, Json& resolved, std::string path)
        : node_(node), resolved_(resolved), path_(std::move(path))
    {
        if (!node_.is_object())
            throw ConfigError("config " + where() + ": expected an object, got " + type_name(node_));
        if (!resolved_.is_object()) resolved_ = Json::object();
    }

    // Children are only ever returned as prvalues; a moved-from reader would
    // report every key as unknown.
    Reader(const Reader&) = delete;
    Reader(Reader&&) = delete;

    ~Reader() noexcept(false)
    {
        if (std::uncaught_exceptions() == 0) done();
    }

    bool has(const std::string& key) const { return node_.contains(key); }

    template <class T>
    T get(const std::string& key, T fallback)
    {
        seen_.insert(key);
        if (!node_.contains(key)) {
            resolved_[key] = fallback;
            return fallback;
        }
        T value = convert<T>(node_.at(key), join(path_, key));
        resolved_[key] = value;
        return value;
    }

    template <class T>
    std::optional<T> optional(const std::string& key)
    {
        seen_.insert(key);
        if (!node_.contains(key) || node_.at(key).is_null()) return std::nullopt;
        T value = convert<T>(node_.at(key), join(path_, key));
        resolved_[key] = value;
        return value;
    }

    template <class T>
    T require(const std::string& key, const std::string& why = "")
    {
        seen_.insert(key);
        if (!node_.contains(key))
            throw ConfigError("config: missing required field '" + key + "' at " + where() +
                              (why.empty() ? "" : " (" + why + ")"));
        T value = convert<T>(node_.at(key), join(path_, key));
        resolved_[key] = value;
        return value;
    }

    /// Child object; absent children read as empty objects so defaults apply.
    Reader child(const std::string& key)
    {
        seen_.insert(key);
        static const Json empty = Json::object();
        const Json& sub = node_.contains(key) ? node_.at(key) : empty;
        return Reader(sub, resolved_[key], join(path_, key));
    }

    /// Raw value, copied verbatim into the resolved config.
    const Json& raw(const std::string& key)
    {
        seen_.insert(key);
        if (!node_.contains(key)) throw ConfigError("config: missing required field '" + key + "' at " + where());
        resolved_[key] = node_.at(key);
        return node_.at(key);
    }

    void skip(const std::string& key) { seen_.insert(key); }

    void done()
    {
        if (checked_) return;
        checked_ = true;
        for (const auto& item : node_.items())
            if (!seen_.count(item.key()))
                throw ConfigError("config: unknown key '" + item.key() + "' at " + where());
    }

    std::string where() const { return path_.empty() ? "/" : path_; }
    const std::string& path() const { return path_; }

private:
    template <class T>
    static T convert(const Json& value, const std::string& at)
    {
        try {
            if constexpr (std::is_same_v<T, double>) {
                if (!value.is_number()) throw ConfigError("");
            } else if constexpr (std::is_same_v<T, bool>) {
                if (!value.is_boolean()) throw ConfigError("");
            } else if constexpr (std::is_same_v<T, std::string>) {
                if (!value.is_string()) throw ConfigError("");
            } else if constexpr (std::is_integral_v<T>) {
                if (!value.is_number_integer() || (std::is_unsigned_v<T> && value.get<long long>() < 0))
                    throw ConfigError("");
            }
            return value.get<T>();
        } catch (const std::exception&) {
            throw ConfigError("config: field " + at + " has the wrong type (" + type_name(value) + ")");
        }
    }

    const Json& node_;
    Json& resolved_;
    std::string path_;
    std::set<std::string> seen_;
    bool checked_ = false;
};

double positive(double v, const std::string& what)
{
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("config: " + what + " must be positive");
    return v;
}

TimeProfile read_modulation(Reader& owner, const std::string& key)
{
    Reader r = owner.child(key);
    TimeProfile p;
    p.offset = r.get("offset", 1.0);
    p.amplitude = r.get("amplitude", 0.0);
    p.frequency = r.get("frequency", 0.0);
    return p;
}

PairKernel read_kernel(Reader& r)
{
    const auto name = r.require<std::string>("kernel");
    const double strength = r.get("strength", 1.0);
    try {
        return PairKernel::parse(name, strength);
    } catch (const ValidationError& e) {
        throw ConfigError("config " + r.path() + "/kernel: " + e.what());
    }
}

VelocityField read_velocity(Reader r)
{
    const auto kind = r.get<std::string>("kind", "zero");
    VelocityField field = VelocityField::zero();
    if (kind == "zero") {
        field = VelocityField::zero();
    } else if (kind == "interaction") {
        const PairKernel k = read_kernel(r);
        field = VelocityField::interaction(k, read_modulation(r, "modulation"));
    } else {
        throw ConfigError("config " + r.path() + "/kind: unknown velocity kind '" + kind +
                          "' (expected zero or interaction)");
    }
    Reader declared = r.child("declared");
    if (auto v = declared.optional<double>("C_V")) field.declared_CV = *v;
    if (auto v = declared.optional<double>("L_V")) field.declared_LV = *v;
    return field;
}

OmegaFunctional read_omega(Reader r)
{
    const auto kind = r.get<std::string>("kind", "constant");
    OmegaFunctional omega = OmegaFunctional::constant(0.0);
    if (kind == "constant") {
        omega = OmegaFunctional::constant(r.get("value", 0.0));
    } else if (kind == "convolution") {
        const PairKernel k = read_kernel(r);
        omega = OmegaFunctional::convolution(k, read_modulation(r, "modulation"));
    } else {
        throw ConfigError("config " + r.path() + "/kind: unknown omega kind '" + kind +
                          "' (expected constant or convolution)");
    }
    Reader declared = r.child("declared");
    if (auto v = declared.optional<double>("C_omega")) omega.declared_C = *v;
    if (auto v = declared.optional<double>("L_omega")) omega.declared_L = *v;
    if (auto v = declared.optional<double>("Ct_omega")) omega.declared_Ct = *v;
    return omega;
}

std::vector<double> number_list(const Json& j, const std::string& at)
{
    if (!j.is_array()) throw ConfigError("config: field " + at + " must be an array of numbers");
    std::vector<double> out;
    for (const auto& v : j) {
        if (!v.is_number()) throw ConfigError("config: field " + at + " must contain only numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

using SpatialFunction = std::function<double(const Eigen::VectorXd&)>;
using PairFunction = std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>;

// Density profiles shared by initial data and the graph-limit recipe.
SpatialFunction read_profile(Reader& r, const std::string& kind)
{
    if (kind == "uniform") return [](const Eigen::VectorXd&) { return 1.0; };
    if (kind == "gaussian-bump") {
        const double centre = r.get("center", 0.5);
        const double width = positive(r.get("width", 0.15), r.path() + "/width");
        const double floor = r.get("floor", 0.0);
        return [=](const Eigen::VectorXd& x) {
            const double d2 = (x.array() - centre).square().sum();
            return floor + std::exp(-d2 / (width * width));
        };
    }
    if (kind == "cosine") {
        const double offset = r.get("offset", 1.0);
        const double amplitude = r.get("amplitude", 0.5);
        const double frequency = r.get("frequency", 1.0);
        return [=](const Eigen::VectorXd& x) {
            return offset + amplitude * std::cos(2.0 * std::numbers::pi * frequency * x(0));
        };
    }
    throw ConfigError("config " + r.path() + "/profile: unknown profile '" + kind +
                      "' (expected uniform, gaussian-bump, cosine, values or random)");
}

PairFunction read_pair(Reader& r)
{
    const double offset = r.get("offset", 0.0);
    if (!r.has("kernel")) {
        r.skip("strength");
        return [offset](const Eigen::VectorXd&, const Eigen::VectorXd&) { return offset; };
    }
    const PairKernel k = read_kernel(r);
    return [offset, k](const Eigen::VectorXd& x, const Eigen::VectorXd& y) { return offset + k(x, y); };
}

VertexSet read_graph(Reader r, std::uint64_t seed)
{
    const auto recipe = r.get<std::string>("recipe", "uniform-grid");
    VertexSet graph;
    if (recipe == "explicit") {
        const Json& pts = r.raw("points");
        const auto masses = number_list(r.raw("masses"), r.path() + "/masses");
        if (!pts.is_array() || pts.empty()) throw ConfigError("config " + r.path() + "/points: expected a list of points");
        const auto n = static_cast<Index>(pts.size());
        const auto d = static_cast<Index>(pts[0].is_array() ? pts[0].size() : 1);
        Eigen::MatrixXd p(n, d);
        for (Index i = 0; i < n; ++i) {
            const auto row = pts[static_cast<std::size_t>(i)].is_array()
                                 ? number_list(pts[static_cast<std::size_t>(i)], r.path() + "/points")
                                 : std::vector<double>{pts[static_cast<std::size_t>(i)].get<double>()};
            if (static_cast<Index>(row.size()) != d) throw ConfigError("config " + r.path() + "/points: ragged point list");
            for (Index a = 0; a < d; ++a) p(i, a) = row[static_cast<std::size_t>(a)];
        }
        graph = VertexSet(p, Eigen::Map<const Eigen::VectorXd>(masses.data(), static_cast<Index>(masses.size())));
        r.skip("ghost_vertices");
        return graph;
    }
    const auto n = r.require<std::size_t>("n");
    const auto dim = r.get<std::size_t>("dim", 1);
    if (n < 1) throw ConfigError("config " + r.path() + "/n: must be >= 1");
    if (dim < 1) throw ConfigError("config " + r.path() + "/dim: must be >= 1");
    if (recipe == "uniform-grid" || recipe == "low-discrepancy") {
        GraphLimitRecipe g;
        g.dim = static_cast<Index>(dim);
        g.vertices = recipe == "uniform-grid" ? VertexRecipe::UniformGrid : VertexRecipe::LowDiscrepancy;
        graph = make_vertices(g, n);
    } else if (recipe == "random") {
        const auto graph_seed = r.get<std::uint64_t>("seed", seed);
        std::mt19937_64 rng(graph_seed);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::vector<Eigen::VectorXd> pts(n, Eigen::VectorXd(static_cast<Index>(dim)));
        for (auto& p : pts)
            for (Index a = 0; a < static_cast<Index>(dim); ++a) p(a) = unit(rng);
        std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a(0) < b(0); });
        Eigen::MatrixXd p(static_cast<Index>(n), static_cast<Index>(dim));
        for (std::size_t i = 0; i < n; ++i) p.row(static_cast<Index>(i)) = pts[i].transpose();
        graph = VertexSet(p, Eigen::VectorXd::Constant(static_cast<Index>(n), 1.0 / static_cast<double>(n)));
    } else {
        throw ConfigError("config " + r.path() + "/recipe: unknown graph recipe '" + recipe +
                          "' (expected uniform-grid, low-discrepancy, random or explicit)");
    }
    if (r.has("ghost_vertices")) {
        const auto ghosts = number_list(r.raw("ghost_vertices"), r.path() + "/ghost_vertices");
        Eigen::VectorXd m = graph.base_masses();
        for (double g : ghosts) {
            const auto i = static_cast<Index>(g);
            if (g != static_cast<double>(i) || i < 0 || i >= graph.size())
                throw ConfigError("config " + r.path() + "/ghost_vertices: index out of range");
            m(i) = 0.0;
        }
        graph = VertexSet(graph.positions(), m);
    } else {
        r.skip("ghost_vertices");
    }
    return graph;
}

MassVector read_rho(Reader r, const VertexSet& g, std::uint64_t seed)
{
    const auto profile = r.get<std::string>("profile", "gaussian-bump");
    const Index n = g.size();
    MassVector rho(n);
    if (profile == "values") {
        const auto values = number_list(r.raw("values"), r.path() + "/values");
        if (static_cast<Index>(values.size()) != n)
            throw ConfigError("config " + r.path() + "/values: expected " + std::to_string(n) + " entries");
        for (Index i = 0; i < n; ++i) rho(i) = values[static_cast<std::size_t>(i)];
        return rho;
    }
    if (profile == "random") {
        std::mt19937_64 rng(r.get<std::uint64_t>("seed", seed));
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (Index i = 0; i < n; ++i) rho(i) = unit(rng) * g.base_masses()(i);
    } else {
        const SpatialFunction f = read_profile(r, profile);
        for (Index i = 0; i < n; ++i) rho(i) = f(g.point(i).transpose()) * g.base_masses()(i);
    }
    const double total = r.get("total", 1.0);
    const double sum = rho.sum();
    if (sum == 0.0) throw ConfigError("config " + r.path() + ": initial profile has zero total mass");
    return rho * (total / sum);
}

WeightMatrix read_eta(Reader r, const SystemSpec& spec, const MassVector& rho0)
{
    const auto kind = r.get<std::string>("kind", "constant");
    const Index n = spec.graph.size();
    if (kind == "constant") return WeightMatrix::Constant(n, n, r.get("value", 1.0));
    if (kind == "omega") return eval_omega(spec.omega, 0.0, spec.graph, rho0);
    if (kind == "pair") {
        const PairFunction f = read_pair(r);
        WeightMatrix eta(n, n);
        for (Index j = 0; j < n; ++j)
            for (Index i = 0; i < n; ++i) eta(i, j) = f(spec.graph.point(i).transpose(), spec.graph.point(j).transpose());
        return eta;
    }
    if (kind == "values") {
        const Json& rows = r.raw("values");
        if (!rows.is_array() || static_cast<Index>(rows.size()) != n)
            throw ConfigError("config " + r.path() + "/values: expected " + std::to_string(n) + " rows");
        WeightMatrix eta(n, n);
        for (Index i = 0; i < n; ++i) {
            const auto row = number_list(rows[static_cast<std::size_t>(i)], r.path() + "/values");
            if (static_cast<Index>(row.size()) != n) throw ConfigError("config " + r.path() + "/values: ragged matrix");
            for (Index j = 0; j < n; ++j) eta(i, j) = row[static_cast<std::size_t>(j)];
        }
        return eta;
    }
    throw ConfigError("config " + r.path() + "/kind: unknown eta kind '" + kind +
                      "' (expected constant, omega, pair or values)");
}

StudyGates read_gates(Reader r)
{
    StudyGates g;
    if (r.has("slope")) {
        const auto s = number_list(r.raw("slope"), r.path() + "/slope");
        if (s.size() != 2 || !(s[0] <= s[1])) throw ConfigError("config " + r.path() + "/slope: expected [min, max]");
        g.slope = std::make_pair(s[0], s[1]);
    }
    g.within_bounds = r.get("within_bounds", false);
    g.monotone = r.get("monotone", false);
    g.mass_observable = r.optional<double>("mass_observable");
    g.required = r.get("required", false);
    return g;
}

StudyConfig read_study(Reader r, const std::string& kind, const RunConfig& run)
{
    StudyConfig s;
    if (kind == "slow" || kind == "fast") {
        if (!r.has("epsilons")) throw ConfigError("config: missing required field 'epsilons' at /study");
        s.epsilons = number_list(r.raw("epsilons"), "/study/epsilons");
        if (kind == "fast") s.well_prepared = r.get("well_prepared", true);
    } else if (kind == "graph-limit") {
        if (!r.has("counts")) throw ConfigError("config: missing required field 'counts' at /study");
        for (double c : number_list(r.raw("counts"), "/study/counts")) {
            if (c < 1 || c != std::floor(c)) throw ConfigError("config /study/counts: vertex counts must be positive integers");
            s.counts.push_back(static_cast<std::size_t>(c));
        }
        auto& g = s.recipe;
        g.dim = static_cast<Index>(r.get<std::size_t>("dim", 1));
        const auto vertices = r.get<std::string>("vertices", "uniform-grid");
        if (vertices == "uniform-grid")
            g.vertices = VertexRecipe::UniformGrid;
        else if (vertices == "low-discrepancy")
            g.vertices = VertexRecipe::LowDiscrepancy;
        else
            throw ConfigError("config /study/vertices: expected uniform-grid or low-discrepancy");
        {
            Reader d = r.child("density");
            const auto profile = d.get<std::string>("profile", "cosine");
            g.density = read_profile(d, profile);
        }
        g.total_mass = r.get("total_mass", 1.0);
        {
            Reader w = r.child("weights");
            g.weights = read_pair(w);
        }
        const auto bumps = r.get<std::size_t>("panel_bumps", 8);
        const double width = positive(r.get("panel_width", 0.15), "/study/panel_width");
        g.panel = ObservablePanel::standard(g.dim, bumps, width);
        g.velocity = run.spec.velocity;
        g.omega = run.spec.omega;
        g.horizon = run.spec.horizon;
        g.mass_bound = run.spec.mass_bound;
    } else {
        throw ConfigError("unknown study kind '" + kind + "' (expected slow, fast or graph-limit)");
    }
    s.gates = read_gates(r.child("gates"));
    return s;
}

}  // namespace

Json read_config_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    try {
        return Json::parse(in, nullptr, true, true);
    } catch (const Json::parse_error& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
}

Json expand_presets(const Json& config)
{
    if (!config.is_object()) throw ConfigError("config: top level must be an object");
    if (!config.contains("preset")) return config;
    const auto& name = config.at("preset");
    if (!name.is_string()) throw ConfigError("config: field /preset must be a string");
    Json merged = find_preset(name.get<std::string>()).config;
    Json patch = config;
    patch.erase("preset");
    merged.merge_patch(patch);
    merged["preset"] = name;
    return merged;
}

RunConfig parse_config(const Json& input, const Overrides& overrides, const std::string& study_kind)
{
    Json config = expand_presets(input);
    if (overrides.seed) config["seed"] = *overrides.seed;
    if (overrides.dt) config["integrator"]["dt"] = *overrides.dt;
    if (overrides.eta_stride) config["output"]["eta_stride"] = *overrides.eta_stride;

    RunConfig run;
    Reader top(config, run.resolved, "");
    if (config.contains("preset")) top.get<std::string>("preset", "");
    top.get<std::string>("name", "");
    run.seed = top.get<std::uint64_t>("seed", 0);
    run.probes = top.get<std::size_t>("probes", 64);
    if (run.probes < 1) throw ConfigError("config /probes: must be >= 1");

    try {
        SystemSpec& spec = run.spec;
        spec.graph = read_graph(top.child("graph"), run.seed);
        const auto interp = top.get<std::string>("interpolation", "upwind");
        spec.interp = FluxInterpolation::of(parse_interpolation(interp));
        if (auto L = top.optional<double>("lipschitz")) spec.interp.lipschitz = *L;
        spec.velocity = read_velocity(top.child("velocity"));
        spec.omega = read_omega(top.child("omega"));
        spec.regime = parse_regime(top.get<std::string>("regime", "coupled"));
        if (spec.regime == Regime::SlowGraph || spec.regime == Regime::FastGraph)
            spec.epsilon = top.require<double>("epsilon", "regime " + std::string(to_string(spec.regime)) + " needs epsilon > 0");
        else
            top.optional<double>("epsilon");
        spec.horizon = top.get("horizon", 1.0);
        spec.mass_bound = top.get("mass_bound", 1.0);
        spec.validate();

        {
            Reader initial = top.child("initial");
            run.rho0 = read_rho(initial.child("rho"), spec.graph, run.seed);
            run.eta0 = read_eta(initial.child("eta"), spec, run.rho0);
        }
        {
            Reader integ = top.child("integrator");
            run.integrator.scheme = parse_scheme(integ.get<std::string>("scheme", "rk4"));
            run.integrator.dt = positive(integ.get("dt", 1e-2), "/integrator/dt");
            run.integrator.eta_update = parse_eta_update(integ.get<std::string>(
                "eta_update", spec.regime == Regime::FastGraph && spec.epsilon < run.integrator.dt ? "exponential-euler"
                                                                                                  : "in-scheme"));
            run.integrator.audit_every = integ.get<std::size_t>("audit_every", 1);
            if (run.integrator.audit_every < 1) throw ConfigError("config /integrator/audit_every: must be >= 1");
        }
        const auto solver = top.get<std::string>("solver", "integrate");
        if (solver != "integrate" && solver != "picard")
            throw ConfigError("config /solver: expected integrate or picard");
        run.use_picard = solver == "picard";
        {
            Reader p = top.child("picard");
            run.picard.grid_points = p.get<std::size_t>("grid_points", 101);
            run.picard.tol = positive(p.get("tol", 1e-12), "/picard/tol");
            run.picard.max_iters = p.get<std::size_t>("max_iters", 100);
            run.picard.contraction_probes = run.probes;
            run.picard.seed = run.seed;
        }
        {
            Reader o = top.child("output");
            run.output.trajectory = o.get("trajectory", true);
            run.output.audit = o.get("audit", true);
            run.output.summary = o.get("summary", true);
            run.output.eta_stride = o.get<std::size_t>("eta_stride", 10);
        }
        if (top.has("contraction_constants")) {
            Reader c = top.child("contraction_constants");
            ContractionConstants k;
            k.L_phi = c.require<double>("L_phi");
            k.C_V = c.require<double>("C_V");
            k.L_V = c.require<double>("L_V");
            k.M = c.require<double>("M");
            k.C_omega = c.require<double>("C_omega");
            k.L_omega = c.require<double>("L_omega");
            k.eta0_sup = c.require<double>("eta0_sup");
            run.contraction = k;
        }
        if (study_kind.empty()) {
            top.skip("study");
        } else {
            if (!config.contains("study")) throw ConfigError("config: missing required field 'study' for study " + study_kind);
            run.study = read_study(top.child("study"), study_kind, run);
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const ValidationError& e) {
        throw ConfigError(std::string("config: ") + e.what());
    } catch (const DimensionError& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    top.done();
    return run;
}

}  // namespace conet::cli
