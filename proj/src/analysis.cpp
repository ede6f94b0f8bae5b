#include "conet/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <sstream>
#include <thread>

namespace conet {

double contraction_alpha(const ContractionConstants& c, double T)
{
    const double lead = 2.0 * c.L_phi * (c.C_V + c.L_V * c.M);
    return lead * (c.eta0_sup + c.C_omega * T) * std::exp(T) + c.L_omega;
}

double contraction_beta(const ContractionConstants& c)
{
    return 2.0 * c.L_phi * c.C_V * c.M + 1.0;
}

double contraction_kappa(const ContractionConstants& c, double T)
{
    return std::max(contraction_alpha(c, T), contraction_beta(c));
}

double contraction_horizon(const ContractionConstants& c)
{
    auto f = [&](double T) { return contraction_kappa(c, T) * T - 1.0; };
    double lo = 0.0;
    double hi = 1.0;
    while (f(hi) < 0.0) {
        lo = hi;
        hi *= 2.0;
    }
    for (int it = 0; it < 200 && hi - lo > 1e-16 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (f(mid) < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

ContractionReport contraction_report(const ContractionConstants& constants, double horizon)
{
    const auto& c = constants;
    for (const double v : {c.L_phi, c.C_V, c.L_V, c.C_omega, c.L_omega, c.eta0_sup})
        if (!(v >= 0.0) || !std::isfinite(v))
            throw ValidationError("contraction constants must be nonnegative and finite");
    if (!(c.M > 0.0) || !std::isfinite(c.M)) throw ValidationError("mass bound M must be positive");
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ValidationError("horizon must be positive");

    ContractionReport r;
    r.constants = c;
    r.horizon = horizon;
    r.alpha = contraction_alpha(c, horizon);
    r.beta = contraction_beta(c);
    r.kappa = std::max(r.alpha, r.beta);
    r.factor = r.kappa * horizon;
    r.t_star = contraction_horizon(c);
    const double lead = 2.0 * c.L_phi * (c.C_V + c.L_V * c.M);
    r.sigma = c.L_omega;
    r.gamma = lead * c.eta0_sup;
    r.chi = lead * c.C_omega;
    r.contractive = horizon < r.t_star;
    r.verdict = r.contractive ? "contraction_guaranteed" : "contraction_not_guaranteed";
    return r;
}

SystemConstants system_constants(const SystemSpec& spec, std::size_t probes, std::uint64_t seed)
{
    const ProbeConfig cfg{probes, spec.mass_bound, spec.horizon, seed};
    return {estimate_constants(spec.velocity, spec.graph, cfg), estimate_constants(spec.omega, spec.graph, cfg)};
}

ContractionConstants contraction_constants(const SystemSpec& spec, const SystemConstants& constants,
                                           double eta0_sup)
{
    ContractionConstants c;
    c.L_phi = spec.interp.lipschitz;
    c.C_V = constants.velocity.C_V.working();
    c.L_V = constants.velocity.L_V.working();
    c.M = spec.mass_bound;
    c.C_omega = constants.omega.C_omega.working();
    c.L_omega = constants.omega.L_omega.working();
    c.eta0_sup = eta0_sup;
    return c;
}

ContractionConstants contraction_constants(const SystemSpec& spec, const WeightMatrix& eta0,
                                           std::size_t probes, std::uint64_t seed)
{
    return contraction_constants(spec, system_constants(spec, probes, seed), sup_norm(eta0));
}

RateFit fit_rate(std::span<const double> ladder, std::span<const double> errors)
{
    if (ladder.size() != errors.size())
        throw DimensionError("fit_rate: ladder and errors differ in length");
    RateFit fit;
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < ladder.size(); ++i) {
        if (!(ladder[i] > 0.0) || !std::isfinite(ladder[i]))
            throw ValidationError("fit_rate: ladder values must be positive");
        if (!(errors[i] >= 0.0) || !std::isfinite(errors[i]))
            throw ValidationError("fit_rate: errors must be nonnegative and finite");
        if (errors[i] == 0.0) {
            fit.excluded.push_back(i);
            continue;
        }
        xs.push_back(std::log(ladder[i]));
        ys.push_back(std::log(errors[i]));
    }
    if (!fit.excluded.empty()) {
        std::ostringstream note;
        note << "excluded zero-error rung";
        if (fit.excluded.size() > 1) note << 's';
        for (std::size_t k = 0; k < fit.excluded.size(); ++k) note << (k ? ", " : " ") << fit.excluded[k];
        fit.note = note.str();
    }
    if (xs.size() < 3)
        throw InsufficientDataError("fit_rate needs at least 3 rungs with nonzero error, got " +
                                    std::to_string(xs.size()));
    const Eigen::Map<const Eigen::VectorXd> x(xs.data(), static_cast<Index>(xs.size()));
    const Eigen::Map<const Eigen::VectorXd> y(ys.data(), static_cast<Index>(ys.size()));
    const Eigen::VectorXd dx = x.array() - x.mean();
    const double sxx = dx.squaredNorm();
    if (sxx == 0.0) throw InsufficientDataError("fit_rate: ladder values are all equal");
    fit.slope = dx.dot(y.array().matrix() - Eigen::VectorXd::Constant(y.size(), y.mean())) / sxx;
    fit.intercept = y.mean() - fit.slope * x.mean();
    const Eigen::VectorXd resid = y.array() - (fit.intercept + fit.slope * x.array());
    fit.residual = std::sqrt(resid.squaredNorm() / static_cast<double>(resid.size()));
    return fit;
}

std::vector<double> ConvergenceStudy::ladder() const
{
    std::vector<double> out;
    for (const auto& r : rungs) out.push_back(r.parameter);
    return out;
}

std::vector<double> ConvergenceStudy::errors() const
{
    std::vector<double> out;
    for (const auto& r : rungs) out.push_back(r.error);
    return out;
}

bool decreasing_with_slack(std::span<const double> errors, double slack)
{
    int allowance = 1;
    for (std::size_t i = 1; i < errors.size(); ++i) {
        if (errors[i] < errors[i - 1]) continue;
        if (allowance > 0 && errors[i] <= errors[i - 1] * (1.0 + slack)) {
            --allowance;
            continue;
        }
        return false;
    }
    return true;
}

namespace {

// Runs fn(0..count-1) on up to `jobs` threads. Results are stored by index by
// the callee, so aggregation order never depends on scheduling.
template <class Fn>
void run_jobs(std::size_t count, std::size_t jobs, Fn&& fn)
{
    jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(count, 1));
    std::vector<std::exception_ptr> failures(count);
    if (jobs == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < jobs; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    failures[i] = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    for (const auto& f : failures)
        if (f) std::rethrow_exception(f);
}

void check_epsilon_ladder(std::span<const double> eps)
{
    if (eps.empty()) throw ValidationError("epsilon ladder is empty");
    for (std::size_t i = 0; i < eps.size(); ++i) {
        if (!(eps[i] >= 0.0) || !std::isfinite(eps[i]))
            throw ValidationError("epsilon ladder values must be nonnegative and finite");
        if (i > 0 && !(eps[i] < eps[i - 1]))
            throw ValidationError("epsilon ladder must be strictly decreasing");
    }
}

std::size_t steps_for(double horizon, double dt)
{
    const double ratio = horizon / dt;
    const double nearest = std::round(ratio);
    if (std::abs(ratio - nearest) <= 1e-9 * std::max(1.0, nearest))
        return std::max<std::size_t>(1, static_cast<std::size_t>(nearest));
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(ratio)));
}

void finish_epsilon_study(ConvergenceStudy& study, const StudyOptions& options)
{
    std::vector<double> ladder, errors;
    std::vector<std::size_t> index;  // rung index of each fitted point
    for (std::size_t i = 0; i < study.rungs.size(); ++i) {
        const auto& r = study.rungs[i];
        study.within_bounds = study.within_bounds && r.within_bound();
        if (r.parameter > 0.0) {
            ladder.push_back(r.parameter);
            errors.push_back(r.error);
            index.push_back(i);
        }
    }
    study.monotone = decreasing_with_slack(study.errors(), options.monotone_slack);
    if (!study.monotone) study.notes.push_back("errors do not decrease with epsilon");
    for (std::size_t i = 0; i < study.rungs.size(); ++i)
        if (!study.rungs[i].within_bound())
            study.notes.push_back("rung " + std::to_string(i) + " exceeds its bound");
    try {
        study.fit = fit_rate(ladder, errors);
        // Report exclusions as rung indices; an epsilon = 0 rung is never fitted.
        std::vector<std::size_t> excluded;
        for (std::size_t i = 0; i < study.rungs.size(); ++i)
            if (study.rungs[i].parameter == 0.0) excluded.push_back(i);
        for (std::size_t k : study.fit->excluded) excluded.push_back(index[k]);
        std::sort(excluded.begin(), excluded.end());
        study.fit->excluded = excluded;
        if (!excluded.empty()) {
            std::ostringstream note;
            note << "excluded zero-error rung" << (excluded.size() > 1 ? "s" : "");
            for (std::size_t k = 0; k < excluded.size(); ++k) note << (k ? ", " : " ") << excluded[k];
            study.fit->note = note.str();
            study.notes.push_back(study.fit->note);
        }
    } catch (const InsufficientDataError& e) {
        study.notes.push_back(e.what());
    }
}

}  // namespace

ConvergenceStudy slow_limit_study(const SystemSpec& base, const MassVector& rho0, const WeightMatrix& eta0,
                                  std::span<const double> epsilons, const StudyOptions& options)
{
    base.validate();
    check_epsilon_ladder(epsilons);

    ConvergenceStudy study;
    study.kind = "slow";
    study.bound_label = "explicit";

    SystemSpec reference_spec = base;
    reference_spec.regime = Regime::StaticGraph;
    study.reference = integrate(reference_spec, rho0, eta0, options.integrator);
    study.constants = system_constants(base, options.probes, options.seed);

    const auto& k = study.constants;
    const double L = base.interp.lipschitz;
    const double CV = k.velocity.C_V.working();
    const double LV = k.velocity.L_V.working();
    const double Cw = k.omega.C_omega.working();
    const double Lw = k.omega.L_omega.working();
    const double Ctw = k.omega.Ct_omega.working();
    const double M = base.mass_bound;
    const double T = base.horizon;
    const double eta0_sup = sup_norm(eta0);
    const double M_eta = std::max(eta0_sup, Cw);
    const double delta = sup_norm(WeightMatrix(eta0 - eval_omega(base.omega, 0.0, base.graph, rho0)));
    const double drive = delta + 2.0 * Lw * M + Ctw * T;
    const double growth = 2.0 * L * (M_eta * CV + LV * M * eta0_sup);
    if (delta > 0.0 || Ctw > 0.0)
        study.notes.push_back("eta_0 differs from omega_0[rho_0] or omega depends on t; bound includes those terms");

    study.rungs.resize(epsilons.size());
    run_jobs(epsilons.size(), options.jobs, [&](std::size_t i) {
        StudyRung& rung = study.rungs[i];
        const double eps = epsilons[i];
        rung.parameter = eps;
        rung.dt = options.integrator.dt;
        if (eps == 0.0) {
            rung.trajectory = study.reference;
        } else {
            SystemSpec spec = base;
            spec.regime = Regime::SlowGraph;
            spec.epsilon = eps;
            rung.trajectory = integrate(spec, rho0, eta0, options.integrator);
        }
        const auto parts = d_infinity_parts(rung.trajectory, study.reference);
        rung.error = parts.total;
        rung.error_rho = parts.rho;
        rung.error_eta = parts.eta;
        rung.bound_eta = eps * std::exp(eps * T) * T * drive;
        rung.bound_rho = eps * std::exp((growth + eps) * T) * 2.0 * L * CV * M * T * T * drive;
        rung.bound = *rung.bound_eta + *rung.bound_rho;
    });
    finish_epsilon_study(study, options);
    return study;
}

ConvergenceStudy fast_limit_study(const SystemSpec& base, const MassVector& rho0, const WeightMatrix& eta0,
                                  std::span<const double> epsilons, const StudyOptions& options,
                                  bool well_prepared)
{
    base.validate();
    check_epsilon_ladder(epsilons);
    if (!(options.integrator.dt > 0.0)) throw ValidationError("dt must be positive");

    ConvergenceStudy study;
    study.kind = "fast";
    study.bound_label = "reconstructed";

    const WeightMatrix omega0 = eval_omega(base.omega, 0.0, base.graph, rho0);
    const WeightMatrix eta_start = well_prepared ? omega0 : eta0;

    const std::size_t base_steps = steps_for(base.horizon, options.integrator.dt);
    const double base_dt = base.horizon / static_cast<double>(base_steps);

    SystemSpec reference_spec = base;
    reference_spec.regime = Regime::QuasiStatic;
    IntegratorConfig ref_cfg = options.integrator;
    ref_cfg.dt = base_dt;
    ref_cfg.audit_every = 1;
    ref_cfg.eta_update = EtaUpdate::InScheme;
    study.reference = integrate(reference_spec, rho0, eta_start, ref_cfg);
    study.constants = system_constants(base, options.probes, options.seed);

    const auto& k = study.constants;
    const double L = base.interp.lipschitz;
    const double CV = k.velocity.C_V.working();
    const double LV = k.velocity.L_V.working();
    const double Cw = k.omega.C_omega.working();
    const double Lw = k.omega.L_omega.working();
    const double Ctw = k.omega.Ct_omega.working();
    const double M = base.mass_bound;
    const double T = base.horizon;
    const double M_eta = std::max(sup_norm(eta_start), Cw);
    const double delta = sup_norm(WeightMatrix(eta_start - omega0));
    // Along trajectories omega_t[rho_t] also moves through rho_t.
    const double Ct_total = Ctw + Lw * 2.0 * L * M_eta * CV * M;
    const double C_displayed = 2.0 * L * (M_eta * CV + LV * M * Cw) + std::max(1.0, Lw);
    const double C_quasi = 2.0 * L * Cw * (CV + LV * M) + 2.0 * L * CV * M * Lw;
    const double C = std::max({C_displayed, (1.0 + Lw) * 2.0 * L * CV * M, C_quasi});

    study.rungs.resize(epsilons.size());
    run_jobs(epsilons.size(), options.jobs, [&](std::size_t i) {
        StudyRung& rung = study.rungs[i];
        const double eps = epsilons[i];
        rung.parameter = eps;
        if (eps == 0.0) {
            rung.dt = base_dt;
            rung.trajectory = study.reference;
        } else {
            const std::size_t refine =
                std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(base_dt / (eps / 5.0) - 1e-9)));
            SystemSpec spec = base;
            spec.regime = Regime::FastGraph;
            spec.epsilon = eps;
            IntegratorConfig cfg = options.integrator;
            cfg.dt = base_dt / static_cast<double>(refine);
            cfg.audit_every = refine;
            cfg.eta_update = EtaUpdate::ExponentialEuler;
            rung.dt = cfg.dt;
            rung.trajectory = integrate(spec, rho0, eta_start, cfg);
        }
        const auto parts = d_infinity_parts(rung.trajectory, study.reference);
        rung.error = parts.total;
        rung.error_rho = parts.rho;
        rung.error_eta = parts.eta;
        rung.bound = (delta + Ct_total * eps) * (1.0 + C * T * std::exp(C * T));
    });
    if (!well_prepared) study.notes.push_back("ill-prepared data: only the per-rung bound is meaningful");
    finish_epsilon_study(study, options);
    if (!well_prepared) study.fit.reset();
    return study;
}

ObservablePanel ObservablePanel::standard(Index dim, std::size_t bumps, double width)
{
    ObservablePanel panel;
    panel.phi.push_back([](const Eigen::VectorXd&) { return 1.0; });
    panel.phi_names.push_back("constant");
    for (Index a = 0; a < dim; ++a) {
        panel.phi.push_back([a](const Eigen::VectorXd& x) { return x(a); });
        panel.phi_names.push_back("coordinate-" + std::to_string(a));
    }
    panel.psi.push_back([](const Eigen::VectorXd&, const Eigen::VectorXd&) { return 1.0; });
    panel.psi_names.push_back("constant");
    for (Index a = 0; a < dim; ++a)
        for (std::size_t l = 0; l < bumps; ++l) {
            const double centre = (static_cast<double>(l) + 0.5) / static_cast<double>(bumps);
            auto bump = [a, centre, width](const Eigen::VectorXd& x) {
                const double r = (x(a) - centre) / width;
                return std::exp(-r * r);
            };
            panel.phi.push_back(bump);
            panel.psi.push_back([bump](const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
                return bump(x) * bump(y);
            });
            const std::string name = "gaussian-" + std::to_string(a) + "-" + std::to_string(l);
            panel.phi_names.push_back(name);
            panel.psi_names.push_back(name);
        }
    return panel;
}

namespace {

double radical_inverse(std::size_t index, unsigned base)
{
    double inv = 1.0 / base;
    double scale = inv;
    double out = 0.0;
    while (index > 0) {
        out += static_cast<double>(index % base) * scale;
        index /= base;
        scale *= inv;
    }
    return out;
}

}  // namespace

VertexSet make_vertices(const GraphLimitRecipe& recipe, std::size_t n)
{
    if (n < 1) throw ValidationError("vertex count must be >= 1");
    if (recipe.dim < 1) throw ValidationError("dimension must be >= 1");
    const Index d = recipe.dim;
    Eigen::MatrixXd pts(static_cast<Index>(n), d);
    if (recipe.vertices == VertexRecipe::UniformGrid) {
        const auto side = static_cast<std::size_t>(std::llround(std::pow(static_cast<double>(n), 1.0 / d)));
        std::size_t total = 1;
        for (Index a = 0; a < d; ++a) total *= side;
        if (total != n)
            throw ValidationError("uniform grid in dimension " + std::to_string(d) + " needs a perfect power, got n = " +
                                  std::to_string(n));
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t rest = i;
            for (Index a = 0; a < d; ++a) {
                pts(static_cast<Index>(i), a) = (static_cast<double>(rest % side) + 0.5) / static_cast<double>(side);
                rest /= side;
            }
        }
    } else {
        static constexpr unsigned primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
        if (d > static_cast<Index>(std::size(primes)))
            throw ValidationError("low-discrepancy points support at most 12 dimensions");
        for (std::size_t i = 0; i < n; ++i)
            for (Index a = 0; a < d; ++a)
                pts(static_cast<Index>(i), a) = radical_inverse(i + 1, primes[a]);
    }
    return VertexSet(std::move(pts), Eigen::VectorXd::Constant(static_cast<Index>(n), 1.0 / static_cast<double>(n)));
}

namespace {

// Observable time series of one run: rows are samples, columns panel entries.
struct ObservableSeries {
    Eigen::MatrixXd phi;
    Eigen::MatrixXd psi;
};

ObservableSeries observe(const ObservablePanel& panel, const VertexSet& graph, const Trajectory& traj)
{
    const Index n = graph.size();
    const auto samples = static_cast<Index>(traj.samples());
    std::vector<Eigen::VectorXd> pts(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) pts[static_cast<std::size_t>(i)] = graph.point(i).transpose();

    Eigen::MatrixXd phi_at(n, static_cast<Index>(panel.phi.size()));
    for (std::size_t l = 0; l < panel.phi.size(); ++l)
        for (Index i = 0; i < n; ++i) phi_at(i, static_cast<Index>(l)) = panel.phi[l](pts[static_cast<std::size_t>(i)]);

    // Psi weighted by m_j with the diagonal removed.
    std::vector<Eigen::MatrixXd> psi_at;
    for (const auto& psi : panel.psi) {
        Eigen::MatrixXd w(n, n);
        for (Index j = 0; j < n; ++j)
            for (Index i = 0; i < n; ++i)
                w(i, j) = i == j ? 0.0
                                 : psi(pts[static_cast<std::size_t>(i)], pts[static_cast<std::size_t>(j)]) *
                                       graph.base_masses()(j);
        psi_at.push_back(std::move(w));
    }

    ObservableSeries out{Eigen::MatrixXd(samples, phi_at.cols()),
                         Eigen::MatrixXd(samples, static_cast<Index>(psi_at.size()))};
    for (Index k = 0; k < samples; ++k) {
        const auto& rho = traj.rho[static_cast<std::size_t>(k)];
        const auto& eta = traj.eta[static_cast<std::size_t>(k)];
        out.phi.row(k) = rho.transpose() * phi_at;
        for (std::size_t l = 0; l < psi_at.size(); ++l)
            out.psi(k, static_cast<Index>(l)) = rho.dot(psi_at[l].cwiseProduct(eta).rowwise().sum());
    }
    return out;
}

}  // namespace

ConvergenceStudy graph_limit_study(const GraphLimitRecipe& recipe, std::span<const std::size_t> counts,
                                   const StudyOptions& options)
{
    if (counts.size() < 2) throw ValidationError("graph-limit study needs at least 2 rungs");
    for (std::size_t i = 1; i < counts.size(); ++i)
        if (counts[i] < counts[i - 1]) throw ValidationError("vertex-count ladder must be nondecreasing");
    if (!recipe.density || !recipe.weights)
        throw ValidationError("graph-limit recipe needs an initial density and weight function");
    if (recipe.panel.phi.empty() && recipe.panel.psi.empty())
        throw ValidationError("observable panel is empty");

    ConvergenceStudy study;
    study.kind = "graph-limit";
    study.bound_label = "none";

    const std::size_t count = counts.size();
    std::vector<VertexSet> graphs(count);
    std::vector<ObservableSeries> series(count);
    study.rungs.resize(count);

    run_jobs(count, options.jobs, [&](std::size_t r) {
        const std::size_t n = counts[r];
        graphs[r] = make_vertices(recipe, n);
        const VertexSet& graph = graphs[r];
        const Index size = graph.size();
        MassVector rho0(size);
        for (Index i = 0; i < size; ++i)
            rho0(i) = recipe.density(graph.point(i).transpose()) * graph.base_masses()(i);
        const double sum = rho0.sum();
        if (sum == 0.0 || !std::isfinite(sum))
            throw ValidationError("initial density integrates to zero on n = " + std::to_string(n));
        rho0 *= recipe.total_mass / sum;
        WeightMatrix eta0(size, size);
        for (Index j = 0; j < size; ++j)
            for (Index i = 0; i < size; ++i)
                eta0(i, j) = recipe.weights(graph.point(i).transpose(), graph.point(j).transpose());

        SystemSpec spec{graph,           FluxInterpolation::upwind(), recipe.velocity, recipe.omega,
                        Regime::Coupled, 0.0,                         recipe.horizon,  recipe.mass_bound};
        StudyRung& rung = study.rungs[r];
        rung.parameter = static_cast<double>(n);
        rung.dt = options.integrator.dt;
        rung.trajectory = integrate(spec, rho0, eta0, options.integrator);
        series[r] = observe(recipe.panel, graph, rung.trajectory);
    });

    const ObservableSeries& ref = series.back();
    study.reference = study.rungs.back().trajectory;
    for (std::size_t r = 0; r < count; ++r) {
        StudyRung& rung = study.rungs[r];
        if (rung.trajectory.samples() != study.reference.samples())
            throw AlignmentError("graph-limit rungs must share the time grid");
        const Eigen::MatrixXd dphi = (series[r].phi - ref.phi).cwiseAbs();
        const Eigen::MatrixXd dpsi = (series[r].psi - ref.psi).cwiseAbs();
        const Eigen::VectorXd phi_sum = dphi.rowwise().sum();
        Eigen::VectorXd psi_max = Eigen::VectorXd::Zero(dpsi.rows());
        if (dpsi.cols() > 0) psi_max = dpsi.rowwise().maxCoeff();
        rung.error = (phi_sum + psi_max).maxCoeff();
        rung.error_rho = phi_sum.maxCoeff();
        rung.error_eta = psi_max.maxCoeff();
        rung.mass_observable_error =
            (rung.trajectory.audit.total_mass.empty()
                 ? 0.0
                 : [&] {
                       double worst = 0.0;
                       for (std::size_t k = 0; k < rung.trajectory.samples(); ++k)
                           worst = std::max(worst, std::abs(rung.trajectory.audit.total_mass[k] -
                                                            study.reference.audit.total_mass[k]));
                       return worst;
                   }());
    }

    // The reference rung has error zero by construction and is left out of both checks.
    std::vector<double> ladder, errors;
    for (std::size_t r = 0; r + 1 < count; ++r) {
        ladder.push_back(study.rungs[r].parameter);
        errors.push_back(study.rungs[r].error);
    }
    study.monotone = decreasing_with_slack(errors, options.monotone_slack);
    if (!study.monotone) study.notes.push_back("errors do not decrease with n");
    study.notes.push_back("reference is the finest rung (self-convergence), not a continuum solution");
    try {
        study.fit = fit_rate(ladder, errors);
        if (!study.fit->note.empty()) study.notes.push_back(study.fit->note);
    } catch (const InsufficientDataError& e) {
        study.notes.push_back(e.what());
    }
    return study;
}

}  // namespace conet
