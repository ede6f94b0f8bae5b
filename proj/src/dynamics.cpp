#include "conet/dynamics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "conet/analysis.hpp"

namespace conet {

std::string_view to_string(Regime regime)
{
    switch (regime) {
    case Regime::Coupled: return "coupled";
    case Regime::SlowGraph: return "slow-graph";
    case Regime::FastGraph: return "fast-graph";
    case Regime::StaticGraph: return "static-graph";
    case Regime::QuasiStatic: return "quasi-static";
    }
    return "coupled";
}

Regime parse_regime(std::string_view name)
{
    if (name == "coupled") return Regime::Coupled;
    if (name == "slow-graph" || name == "slow") return Regime::SlowGraph;
    if (name == "fast-graph" || name == "fast") return Regime::FastGraph;
    if (name == "static-graph" || name == "static") return Regime::StaticGraph;
    if (name == "quasi-static") return Regime::QuasiStatic;
    throw ValidationError("unknown regime '" + std::string(name) +
                          "' (expected coupled, slow-graph, fast-graph, static-graph or quasi-static)");
}

std::string_view to_string(Scheme scheme)
{
    return scheme == Scheme::RK4 ? "rk4" : "explicit-euler";
}

std::string_view to_string(EtaUpdate update)
{
    return update == EtaUpdate::InScheme ? "in-scheme" : "exponential-euler";
}

Scheme parse_scheme(std::string_view name)
{
    if (name == "rk4") return Scheme::RK4;
    if (name == "explicit-euler" || name == "euler") return Scheme::ExplicitEuler;
    throw ValidationError("unknown scheme '" + std::string(name) + "' (expected rk4 or explicit-euler)");
}

EtaUpdate parse_eta_update(std::string_view name)
{
    if (name == "in-scheme") return EtaUpdate::InScheme;
    if (name == "exponential-euler" || name == "exponential") return EtaUpdate::ExponentialEuler;
    throw ValidationError("unknown eta_update '" + std::string(name) +
                          "' (expected in-scheme or exponential-euler)");
}

void SystemSpec::validate() const
{
    if (!(horizon > 0.0) || !std::isfinite(horizon))
        throw ValidationError("horizon must be positive and finite");
    if (!(mass_bound > 0.0) || !std::isfinite(mass_bound))
        throw ValidationError("mass_bound must be positive and finite");
    if (regime == Regime::SlowGraph || regime == Regime::FastGraph) {
        if (!(epsilon > 0.0) || !std::isfinite(epsilon))
            throw ValidationError("regime " + std::string(to_string(regime)) + " requires epsilon > 0");
    }
    if (!(interp.lipschitz >= 0.0) || !std::isfinite(interp.lipschitz))
        throw ValidationError("flux Lipschitz constant must be nonnegative and finite");
}

double SystemSpec::relaxation_time() const
{
    switch (regime) {
    case Regime::Coupled: return 1.0;
    case Regime::SlowGraph: return 1.0 / epsilon;
    case Regime::FastGraph: return epsilon;
    default: return 0.0;
    }
}

namespace {

double row_weighted_sup(const EdgeMatrix& v, const Eigen::VectorXd& m)
{
    double best = 0.0;
    for (Index i = 0; i < v.rows(); ++i) {
        double acc = 0.0;
        for (Index j = 0; j < v.cols(); ++j)
            if (j != i) acc += std::abs(v(i, j)) * m(j);
        best = std::max(best, acc);
    }
    return best;
}

std::string fmt(double x)
{
    std::ostringstream out;
    out.precision(6);
    out << x;
    return out.str();
}

struct State {
    MassVector rho;
    WeightMatrix eta;
};

// The spec bound to one evaluator; all rates go through here.
class System {
public:
    explicit System(const SystemSpec& spec)
        : spec_(spec), eval_(spec.graph, spec.velocity, spec.omega)
    {
    }

    bool eta_relaxes() const
    {
        return spec_.regime == Regime::Coupled || spec_.regime == Regime::SlowGraph ||
               spec_.regime == Regime::FastGraph;
    }

    MassVector rho_rate(double t, const MassVector& rho, const WeightMatrix& eta) const
    {
        const Index n = rho.size();
        if (eval_.velocity_is_zero()) return MassVector::Zero(n);
        const EdgeMatrix v = eval_.velocity(t, rho);
        if (spec_.regime == Regime::QuasiStatic)
            return mass_rhs(spec_.graph, eval_.omega(t, rho), rho, v, spec_.interp);
        return mass_rhs(spec_.graph, eta, rho, v, spec_.interp);
    }

    WeightMatrix eta_rate(double t, const MassVector& rho, const WeightMatrix& eta) const
    {
        switch (spec_.regime) {
        case Regime::Coupled: return eval_.omega(t, rho) - eta;
        case Regime::SlowGraph: return spec_.epsilon * (eval_.omega(t, rho) - eta);
        case Regime::FastGraph: return (eval_.omega(t, rho) - eta) / spec_.epsilon;
        default: return WeightMatrix::Zero(eta.rows(), eta.cols());
        }
    }

    /// The weights the flux actually sees.
    WeightMatrix effective_eta(double t, const MassVector& rho, const WeightMatrix& eta) const
    {
        return spec_.regime == Regime::QuasiStatic ? eval_.omega(t, rho) : eta;
    }

    const FieldEvaluator& fields() const { return eval_; }
    const SystemSpec& spec() const { return spec_; }

private:
    const SystemSpec& spec_;
    FieldEvaluator eval_;
};

State full_step(const System& sys, Scheme scheme, double t, const State& y, double h)
{
    const bool relax = sys.eta_relaxes();
    auto rate = [&](double s, const State& u) {
        State k{sys.rho_rate(s, u.rho, u.eta), WeightMatrix()};
        if (relax) k.eta = sys.eta_rate(s, u.rho, u.eta);
        return k;
    };
    auto axpy = [&](const State& u, double a, const State& k) {
        State out{u.rho + a * k.rho, relax ? WeightMatrix(u.eta + a * k.eta) : u.eta};
        return out;
    };
    if (scheme == Scheme::ExplicitEuler) return axpy(y, h, rate(t, y));

    const State k1 = rate(t, y);
    const State k2 = rate(t + 0.5 * h, axpy(y, 0.5 * h, k1));
    const State k3 = rate(t + 0.5 * h, axpy(y, 0.5 * h, k2));
    const State k4 = rate(t + h, axpy(y, h, k3));
    State out;
    out.rho = y.rho + (h / 6.0) * (k1.rho + 2.0 * k2.rho + 2.0 * k3.rho + k4.rho);
    out.eta = relax ? WeightMatrix(y.eta + (h / 6.0) * (k1.eta + 2.0 * k2.eta + 2.0 * k3.eta + k4.eta))
                    : y.eta;
    return out;
}

// Advances rho alone with eta frozen.
MassVector rho_step(const System& sys, Scheme scheme, double t, const MassVector& rho,
                    const WeightMatrix& eta, double h)
{
    if (scheme == Scheme::ExplicitEuler) return rho + h * sys.rho_rate(t, rho, eta);
    const MassVector k1 = sys.rho_rate(t, rho, eta);
    const MassVector k2 = sys.rho_rate(t + 0.5 * h, rho + 0.5 * h * k1, eta);
    const MassVector k3 = sys.rho_rate(t + 0.5 * h, rho + 0.5 * h * k2, eta);
    const MassVector k4 = sys.rho_rate(t + h, rho + h * k3, eta);
    return rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

State exponential_step(const System& sys, Scheme scheme, double t, const State& y, double h)
{
    const MassVector rho_half = rho_step(sys, scheme, t, y.rho, y.eta, 0.5 * h);
    WeightMatrix eta = y.eta;
    if (sys.eta_relaxes()) {
        const double tau = sys.spec().relaxation_time();
        const double keep = std::exp(-h / tau);
        const double gain = -std::expm1(-h / tau);
        eta = keep * y.eta + gain * sys.fields().omega(t + 0.5 * h, rho_half);
    }
    MassVector rho = rho_step(sys, scheme, t + 0.5 * h, rho_half, eta, 0.5 * h);
    return {std::move(rho), std::move(eta)};
}

void check_initial(const SystemSpec& spec, const MassVector& rho0, const WeightMatrix& eta0)
{
    const Index n = spec.graph.size();
    if (rho0.size() != n)
        throw DimensionError("rho0 has " + std::to_string(rho0.size()) + " entries, graph has " +
                             std::to_string(n) + " vertices");
    if (eta0.rows() != n || eta0.cols() != n)
        throw DimensionError("eta0 must be " + std::to_string(n) + " x " + std::to_string(n));
    if (!rho0.allFinite() || !eta0.allFinite())
        throw ValidationError("initial data must be finite");
    const double tv = tv_norm(rho0);
    if (tv > spec.mass_bound * (1.0 + 1e-9))
        throw ValidationError("tv_norm(rho0) = " + fmt(tv) + " exceeds mass_bound = " +
                              fmt(spec.mass_bound));
}

std::size_t step_count(double horizon, double dt)
{
    // Guard against ceil(1.0000000000000002) for T an exact multiple of dt.
    const double ratio = horizon / dt;
    const double nearest = std::round(ratio);
    if (std::abs(ratio - nearest) <= 1e-9 * std::max(1.0, nearest))
        return std::max<std::size_t>(1, static_cast<std::size_t>(nearest));
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(ratio)));
}

}  // namespace

Rates rhs(const SystemSpec& spec, double t, const MassVector& rho, const WeightMatrix& eta)
{
    spec.validate();
    if (!std::isfinite(tv_norm(rho))) throw ValidationError("rhs: rho must be finite");
    const Index n = spec.graph.size();
    if (eta.rows() != n || eta.cols() != n)
        throw DimensionError("eta must be " + std::to_string(n) + " x " + std::to_string(n));
    const System sys(spec);
    return {sys.rho_rate(t, rho, eta), sys.eta_rate(t, rho, eta)};
}

void audit_trajectory(Trajectory& traj, double mass_bound)
{
    Audit& audit = traj.audit;
    audit.total_mass.clear();
    audit.tv_norm.clear();
    audit.eta_sup.clear();
    bool warned = false;
    for (std::size_t k = 0; k < traj.samples(); ++k) {
        audit.total_mass.push_back(total_mass(traj.rho[k]));
        const double tv = tv_norm(traj.rho[k]);
        audit.tv_norm.push_back(tv);
        audit.eta_sup.push_back(sup_norm(traj.eta[k]));
        if (!warned && tv > 1.1 * mass_bound) {
            audit.warnings.push_back("bound-violation: tv_norm(rho) = " + fmt(tv) + " exceeds 1.1 * mass_bound at t = " +
                                     fmt(traj.times[k]));
            warned = true;
        }
    }
}

Trajectory integrate(const SystemSpec& spec, const MassVector& rho0, const WeightMatrix& eta0,
                     const IntegratorConfig& cfg)
{
    spec.validate();
    check_initial(spec, rho0, eta0);
    if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) throw ValidationError("dt must be positive");
    if (cfg.dt > spec.horizon * (1.0 + 1e-12))
        throw ValidationError("dt = " + fmt(cfg.dt) + " exceeds the horizon " + fmt(spec.horizon));
    if (cfg.audit_every < 1) throw ValidationError("audit_every must be >= 1");

    const std::size_t steps = step_count(spec.horizon, cfg.dt);
    const double h = spec.horizon / static_cast<double>(steps);
    if (spec.regime == Regime::FastGraph && spec.epsilon < h &&
        cfg.eta_update != EtaUpdate::ExponentialEuler)
        throw ValidationError("fast-graph with epsilon = " + fmt(spec.epsilon) + " < dt = " + fmt(h) +
                              " requires eta_update = exponential-euler");

    const System sys(spec);
    const auto& m = spec.graph.base_masses();
    Trajectory traj;
    std::vector<std::string> warnings;
    bool cfl_warned = false;

    auto record = [&](double t, const State& y) {
        WeightMatrix eta = sys.effective_eta(t, y.rho, y.eta);
        if (!cfl_warned && !sys.fields().velocity_is_zero()) {
            const double cv = row_weighted_sup(sys.fields().velocity(t, y.rho), m);
            const double guard = h * spec.interp.lipschitz * sup_norm(eta) * cv;
            if (guard > 0.5) {
                warnings.push_back("step-size guard: dt * L_phi * sup(eta) * C_V = " + fmt(guard) +
                                   " > 0.5 at t = " + fmt(t) + "; positivity may be lost");
                cfl_warned = true;
            }
        }
        traj.times.push_back(t);
        traj.rho.push_back(y.rho);
        traj.eta.push_back(std::move(eta));
    };
    auto finish = [&](Trajectory& out) {
        audit_trajectory(out, spec.mass_bound);
        out.audit.warnings.insert(out.audit.warnings.begin(), warnings.begin(), warnings.end());
    };

    State y{rho0, eta0};
    record(0.0, y);
    for (std::size_t k = 1; k <= steps; ++k) {
        const double t = spec.horizon * static_cast<double>(k - 1) / static_cast<double>(steps);
        y = cfg.eta_update == EtaUpdate::ExponentialEuler ? exponential_step(sys, cfg.scheme, t, y, h)
                                                          : full_step(sys, cfg.scheme, t, y, h);
        if (!y.rho.allFinite() || !y.eta.allFinite()) {
            traj.truncated = true;
            finish(traj);
            throw DivergenceError("non-finite state at step " + std::to_string(k) + " (t = " +
                                      fmt(t + h) + ")",
                                  k, std::move(traj));
        }
        if (k % cfg.audit_every == 0 || k == steps)
            record(spec.horizon * static_cast<double>(k) / static_cast<double>(steps), y);
    }
    finish(traj);
    return traj;
}

namespace {

// Weights of the cubic interpolant through `nodes` integrated over [a, b].
std::array<double, 4> cubic_weights(const std::array<double, 4>& nodes, double a, double b)
{
    static constexpr double gx[3] = {-0.7745966692414834, 0.0, 0.7745966692414834};
    static constexpr double gw[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    std::array<double, 4> w{};
    for (int q = 0; q < 3; ++q) {
        const double s = mid + half * gx[q];
        for (int i = 0; i < 4; ++i) {
            double basis = 1.0;
            for (int j = 0; j < 4; ++j)
                if (j != i) basis *= (s - nodes[j]) / (nodes[i] - nodes[j]);
            w[i] += half * gw[q] * basis;
        }
    }
    return w;
}

}  // namespace

std::vector<WeightMatrix> eta_exact_path(const WeightMatrix& eta0,
                                         std::span<const WeightMatrix> omega_samples,
                                         std::span<const double> times, Quadrature quadrature)
{
    if (times.empty() || omega_samples.size() != times.size())
        throw AlignmentError("eta_exact: need one omega sample per grid time");
    if (times.front() != 0.0) throw AlignmentError("eta_exact: the grid must start at t = 0");
    for (std::size_t k = 1; k < times.size(); ++k)
        if (!(times[k] > times[k - 1])) throw AlignmentError("eta_exact: grid times must increase");

    const std::size_t count = times.size();
    const bool cubic = quadrature == Quadrature::CubicLagrange && count >= 4;
    std::vector<WeightMatrix> out;
    out.reserve(count);
    out.push_back(eta0);
    // Interval recursion eta_{k+1} = e^{-dt} eta_k + int_{t_k}^{t_{k+1}} e^{s - t_{k+1}} omega_s ds
    // keeps every exponential factor <= 1.
    for (std::size_t k = 0; k + 1 < count; ++k) {
        const double a = times[k];
        const double b = times[k + 1];
        WeightMatrix next = std::exp(a - b) * out.back();
        if (cubic) {
            const std::size_t first = std::clamp<std::size_t>(k == 0 ? 0 : k - 1, 0, count - 4);
            const std::array<double, 4> nodes{times[first], times[first + 1], times[first + 2], times[first + 3]};
            const auto w = cubic_weights(nodes, a, b);
            for (int i = 0; i < 4; ++i)
                next += w[i] * std::exp(nodes[i] - b) * omega_samples[first + i];
        } else {
            next += 0.5 * (b - a) * (std::exp(a - b) * omega_samples[k] + omega_samples[k + 1]);
        }
        out.push_back(std::move(next));
    }
    return out;
}

WeightMatrix eta_exact(const WeightMatrix& eta0, std::span<const WeightMatrix> omega_samples,
                       std::span<const double> times, std::size_t t_index, Quadrature quadrature)
{
    if (t_index >= times.size()) throw AlignmentError("eta_exact: t_index outside the grid");
    auto path = eta_exact_path(eta0, omega_samples.first(t_index + 1), times.first(t_index + 1), quadrature);
    return std::move(path.back());
}

PicardResult picard_solve(const SystemSpec& spec, const MassVector& rho0, const WeightMatrix& eta0,
                          const PicardConfig& cfg)
{
    spec.validate();
    if (spec.regime != Regime::Coupled)
        throw ValidationError("picard_solve requires the coupled regime, got " +
                              std::string(to_string(spec.regime)));
    if (cfg.grid_points < 2) throw ValidationError("picard grid_points must be >= 2");
    if (!(cfg.tol > 0.0)) throw ValidationError("picard tol must be positive");
    if (cfg.max_iters < 1) throw ValidationError("picard max_iters must be >= 1");
    check_initial(spec, rho0, eta0);

    PicardResult result;
    IterationLog& log = result.log;
    if (cfg.contraction_probes > 0) {
        const auto constants = contraction_constants(spec, eta0, cfg.contraction_probes, cfg.seed);
        const auto report = contraction_report(constants, spec.horizon);
        log.t_star = report.t_star;
        if (!report.contractive)
            log.warnings.push_back("horizon " + fmt(spec.horizon) + " is not below T* = " +
                                   fmt(report.t_star) + "; contraction is not guaranteed");
    }

    const System sys(spec);
    const std::size_t points = cfg.grid_points;
    const std::size_t intervals = points - 1;
    std::vector<double> times(points);
    for (std::size_t k = 0; k < points; ++k)
        times[k] = spec.horizon * static_cast<double>(k) / static_cast<double>(intervals);

    std::vector<MassVector> rho(points, rho0);
    std::vector<WeightMatrix> eta(points, eta0);
    std::vector<MassVector> rho_rate(points);
    std::vector<WeightMatrix> eta_rate(points);

    for (std::size_t iter = 0; iter < cfg.max_iters; ++iter) {
        for (std::size_t k = 0; k < points; ++k) {
            rho_rate[k] = sys.rho_rate(times[k], rho[k], eta[k]);
            eta_rate[k] = sys.eta_rate(times[k], rho[k], eta[k]);
        }
        MassVector rho_acc = rho0;
        WeightMatrix eta_acc = eta0;
        double gap = tv_norm(MassVector(rho_acc - rho[0])) + sup_norm(WeightMatrix(eta_acc - eta[0]));
        std::vector<MassVector> next_rho(points);
        std::vector<WeightMatrix> next_eta(points);
        next_rho[0] = rho_acc;
        next_eta[0] = eta_acc;
        for (std::size_t k = 1; k < points; ++k) {
            const double h = times[k] - times[k - 1];
            rho_acc += 0.5 * h * (rho_rate[k - 1] + rho_rate[k]);
            eta_acc += 0.5 * h * (eta_rate[k - 1] + eta_rate[k]);
            next_rho[k] = rho_acc;
            next_eta[k] = eta_acc;
            gap = std::max(gap, tv_norm(MassVector(rho_acc - rho[k])) +
                                    sup_norm(WeightMatrix(eta_acc - eta[k])));
        }
        rho = std::move(next_rho);
        eta = std::move(next_eta);
        if (!log.gaps.empty() && log.gaps.back() > 0.0) log.ratios.push_back(gap / log.gaps.back());
        log.gaps.push_back(gap);
        if (!std::isfinite(gap))
            throw NonConvergenceError("picard iteration produced a non-finite gap", log.gaps);
        if (gap < cfg.tol) {
            Trajectory& traj = result.trajectory;
            traj.times = std::move(times);
            traj.rho = std::move(rho);
            traj.eta = std::move(eta);
            audit_trajectory(traj, spec.mass_bound);
            traj.audit.warnings.insert(traj.audit.warnings.begin(), log.warnings.begin(),
                                       log.warnings.end());
            return result;
        }
    }
    throw NonConvergenceError("picard iteration did not reach tol = " + fmt(cfg.tol) + " in " +
                                  std::to_string(cfg.max_iters) + " iterations (last gap " +
                                  fmt(log.gaps.back()) + ")",
                              log.gaps);
}

}  // namespace conet
