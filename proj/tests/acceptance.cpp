// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>
#include <thread>

#include "conet/analysis.hpp"
#include "conet/cli.hpp"
#include "support.hpp"

using namespace conet;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v)
{
    std::ostringstream s;
    s.precision(3);
    s << v;
    return s.str();
}

cli::RunConfig preset(const std::string& name, const std::string& study_kind = "")
{
    return cli::parse_config(cli::Json{{"preset", name}}, {}, study_kind);
}

std::string timing(bool& pass, double seconds, double limit)
{
    pass = pass && seconds <= limit;
    return ", " + fmt(seconds) + " s (limit " + fmt(limit) + " s)";
}

// 1. Mass preservation on opinion-line-50.
Outcome mass_preservation()
{
    const auto start = std::chrono::steady_clock::now();
    const auto run = preset("opinion-line-50");
    const Trajectory traj = integrate(run.spec, run.rho0, run.eta0, run.integrator);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const double m0 = run.rho0.sum();
    double drift = 0.0;
    for (double m : traj.audit.total_mass) drift = std::max(drift, std::abs(m - m0));
    bool pass = drift <= 1e-10 && traj.audit.total_mass.size() == 1001;
    std::string detail = "max drift " + fmt(drift) + " over " + std::to_string(traj.audit.total_mass.size()) +
                         " audited steps";
    detail += timing(pass, seconds, 10.0);
    return {pass, detail};
}

// Sup discrepancy between integrated eta and the closed form evaluated on the
// integrated rho path.
double eta_discrepancy(const SystemSpec& spec, const MassVector& rho0, const WeightMatrix& eta0, double dt,
                       Quadrature q)
{
    IntegratorConfig cfg;
    cfg.dt = dt;
    const Trajectory traj = integrate(spec, rho0, eta0, cfg);
    std::vector<WeightMatrix> omega;
    for (std::size_t k = 0; k < traj.samples(); ++k)
        omega.push_back(eval_omega(spec.omega, traj.times[k], spec.graph, traj.rho[k]));
    const auto exact = eta_exact_path(eta0, omega, traj.times, q);
    double sup = 0.0;
    for (std::size_t k = 0; k < traj.samples(); ++k) sup = std::max(sup, sup_norm(traj.eta[k] - exact[k]));
    return sup;
}

// 2. eta against its closed form.
Outcome eta_closed_form()
{
    auto run = preset("opinion-line-16");
    // Time-modulated omega so the closed form has a nontrivial integrand.
    run.spec.omega = OmegaFunctional::convolution(PairKernel::parse("gaussian(0.3)", 1.0), TimeProfile{1.0, 0.5, 3.0});
    const double fine = eta_discrepancy(run.spec, run.rho0, run.eta0, 1e-3, Quadrature::Trapezoidal);
    const double coarse = eta_discrepancy(run.spec, run.rho0, run.eta0, 0.1, Quadrature::CubicLagrange);
    const double half = eta_discrepancy(run.spec, run.rho0, run.eta0, 0.05, Quadrature::CubicLagrange);
    const double ratio = coarse / half;
    const bool pass = fine <= 1e-6 && ratio >= 12.0 && ratio <= 20.0;
    return {pass, "sup discrepancy at dt=1e-3 " + fmt(fine) + "; dt 0.1 -> 0.05 reduces " + fmt(coarse) + " to " +
                      fmt(half) + ", factor " + fmt(ratio) + " (need [12, 20])"};
}

// 3. Picard contraction on the 10-vertex scenario.
Outcome picard_contraction()
{
    const auto start = std::chrono::steady_clock::now();
    auto run = preset("picard-10");
    const auto constants = contraction_constants(run.spec, run.eta0, run.probes, run.seed);
    const double t_star = contraction_horizon(constants);
    const double kappa_T = contraction_kappa(constants, run.spec.horizon) * run.spec.horizon;

    run.picard.contraction_probes = 0;
    const auto result = picard_solve(run.spec, run.rho0, run.eta0, run.picard);
    bool ratios_ok = result.log.ratios.size() >= 7;
    double worst = 0.0;
    // ratios[k] compares gap k+1 with gap k; iterations 2..8 are ratios[0..6].
    for (std::size_t k = 0; k < 7 && k < result.log.ratios.size(); ++k) {
        worst = std::max(worst, result.log.ratios[k]);
        ratios_ok = ratios_ok && result.log.ratios[k] <= kappa_T + 0.05;
    }
    IntegratorConfig cfg;
    cfg.dt = run.spec.horizon / 1000.0;
    const Trajectory rk4 = integrate(run.spec, run.rho0, run.eta0, cfg);
    const double gap = d_infinity(result.trajectory, rk4);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    bool pass = t_star >= 0.5 && ratios_ok && gap <= 1e-4;
    std::string detail = "T* = " + fmt(t_star) + ", worst ratio " + fmt(worst) + " vs kappa(T)T + 0.05 = " +
                         fmt(kappa_T + 0.05) + ", d_inf(Picard, RK4) = " + fmt(gap);
    detail += timing(pass, seconds, 30.0);
    return {pass, detail};
}

// 4. The worked T* value, through the constants command.
Outcome worked_t_star()
{
    const fs::path dir = fs::temp_directory_path() / "conet_acceptance_tstar";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::ofstream(dir / "config.json") << R"({"preset": "lemma-worked-example"})";
    std::ostringstream out, err;
    const int status = cli::run({"constants", "--config", (dir / "config.json").string(), "--out", dir.string()}, out, err);
    std::ifstream in(dir / "constants.json");
    const auto doc = cli::Json::parse(in);
    const double t_star = doc.at("T_star").get<double>();
    const double beta = doc.at("contraction").at("beta").get<double>();
    const bool pass = status == 0 && std::abs(t_star - 1.0 / 3.0) <= 1e-9 && beta == 3.0;
    std::ostringstream detail;
    detail.precision(17);
    detail << "T_star = " << t_star << ", beta = " << beta;
    return {pass, detail.str()};
}

Outcome epsilon_study(const std::string& kind, double limit)
{
    const auto start = std::chrono::steady_clock::now();
    const auto run = preset(kind == "slow" ? "slow-20" : "fast-20", kind);
    StudyOptions opts;
    opts.integrator = run.integrator;
    opts.jobs = std::max(1u, std::thread::hardware_concurrency());
    opts.probes = run.probes;
    opts.seed = run.seed;
    const auto& cfg = *run.study;
    const auto study = kind == "slow" ? slow_limit_study(run.spec, run.rho0, run.eta0, cfg.epsilons, opts)
                                      : fast_limit_study(run.spec, run.rho0, run.eta0, cfg.epsilons, opts, true);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const auto [lo, hi] = *cfg.gates.slope;
    const bool slope_ok = study.fit && study.fit->slope >= lo && study.fit->slope <= hi;
    double worst = 0.0;
    for (const auto& r : study.rungs) worst = std::max(worst, r.error / *r.bound);
    bool pass = slope_ok && study.within_bounds;
    std::string detail = "slope " + (study.fit ? fmt(study.fit->slope) : std::string("none")) + " (need [" + fmt(lo) +
                         ", " + fmt(hi) + "]), max error/bound " + fmt(worst) + " (" + study.bound_label + " bound)";
    detail += timing(pass, seconds, limit);
    return {pass, detail};
}

// 7. Discrete-to-continuum ladder.
Outcome graph_limit()
{
    const auto start = std::chrono::steady_clock::now();
    const auto run = preset("graph-limit-line", "graph-limit");
    StudyOptions opts;
    opts.integrator = run.integrator;
    opts.jobs = std::max(1u, std::thread::hardware_concurrency());
    const auto study = graph_limit_study(run.study->recipe, run.study->counts, opts);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    // The reference rung has error 0 by construction; check the others.
    std::vector<double> errors = study.errors();
    errors.pop_back();
    const bool decreasing = decreasing_with_slack(errors, 0.05);
    double mass = 0.0;
    for (const auto& r : study.rungs) mass = std::max(mass, *r.mass_observable_error);
    std::string ladder;
    for (double e : errors) ladder += (ladder.empty() ? "" : " ") + fmt(e);
    bool pass = decreasing && mass <= 1e-10 && study.rungs.size() == 5;
    std::string detail = "errors " + ladder + (decreasing ? " decreasing" : " not decreasing") +
                         ", mass observable " + fmt(mass);
    detail += timing(pass, seconds, 120.0);
    return {pass, detail};
}

// 8. Positivity and support with ghost vertices.
Outcome positivity()
{
    const auto run = preset("positivity-ghosts");
    const ProbeConfig probe{run.probes, run.spec.mass_bound, run.spec.horizon, run.seed};
    // omega <= 0 here, so its negative part is bounded by C_omega.
    const double omega_minus = estimate_constants(run.spec.omega, run.spec.graph, probe).C_omega.working();
    const double threshold = omega_minus * std::expm1(run.spec.horizon);
    const bool gate = run.eta0.minCoeff() >= threshold && (run.eta0 - run.eta0.transpose()).cwiseAbs().maxCoeff() == 0.0;
    const bool rho0_ok = run.rho0.minCoeff() >= 0.0;

    const Trajectory traj = integrate(run.spec, run.rho0, run.eta0, run.integrator);
    std::vector<Index> ghosts;
    for (Index i = 0; i < run.spec.graph.size(); ++i)
        if (run.spec.graph.base_masses()(i) == 0.0) ghosts.push_back(i);
    double min_rho = std::numeric_limits<double>::infinity(), min_eta = min_rho, ghost_max = 0.0;
    for (std::size_t k = 0; k < traj.samples(); ++k) {
        min_rho = std::min(min_rho, traj.rho[k].minCoeff());
        min_eta = std::min(min_eta, traj.eta[k].minCoeff());
        for (Index g : ghosts) ghost_max = std::max(ghost_max, std::abs(traj.rho[k](g)));
    }
    const bool pass = gate && rho0_ok && ghosts.size() == 2 && min_rho >= -1e-10 && ghost_max <= 1e-12;
    return {pass, "eta0 = " + fmt(run.eta0.minCoeff()) + " >= " + fmt(threshold) + ", min rho " + fmt(min_rho) +
                      ", max |ghost rho| " + fmt(ghost_max) + ", min eta " + fmt(min_eta)};
}

// 9. Structural identities on random instances.
Outcome structural_identities()
{
    testing::Gen gen(90210);
    double adjoint = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const Index n = gen.index(1, 15);
        const Eigen::VectorXd phi = gen.vector(n);
        const Eigen::MatrixXd J = gen.matrix(n);
        double rhs = 0.0, scale = 1.0;
        for (Index i = 0; i < n; ++i)
            for (Index k = 0; k < n; ++k)
                if (i != k) {
                    rhs += -0.5 * (phi(k) - phi(i)) * J(i, k);
                    scale = std::max(scale, std::abs((phi(k) - phi(i)) * J(i, k)) * n * n);
                }
        adjoint = std::max(adjoint, std::abs(phi.dot(nonlocal_divergence(J)) - rhs) / scale);
    }

    bool admissible = true;
    for (const auto& interp :
         {FluxInterpolation::upwind(), FluxInterpolation::arithmetic_mean(), FluxInterpolation::max()})
        admissible = admissible && check_admissibility(interp, 10000, 5).pass();

    double zero_sum = 0.0;
    const FluxInterpolation kinds[] = {FluxInterpolation::upwind(), FluxInterpolation::arithmetic_mean(),
                                       FluxInterpolation::max()};
    for (int trial = 0; trial < 1000; ++trial) {
        const Index n = gen.index(1, 12);
        const VertexSet g = gen.graph(n, 1, trial % 4 == 0 ? 1 : 0);
        const Eigen::VectorXd rho = gen.vector(n);
        const Eigen::MatrixXd eta = gen.matrix(n);  // asymmetric and signed
        const Eigen::MatrixXd v = gen.antisymmetric(n);
        const MassVector r = mass_rhs(g, eta, rho, v, kinds[trial % 3]);
        zero_sum = std::max(zero_sum, std::abs(r.sum()) / std::max(1.0, r.cwiseAbs().sum()));
    }
    const bool pass = adjoint <= 1e-12 && admissible && zero_sum <= 1e-12;
    return {pass, "adjointness defect " + fmt(adjoint) + ", admissibility " + (admissible ? "passes" : "fails") +
                      ", zero-sum defect " + fmt(zero_sum)};
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// 10. Byte-identical outputs from repeated executable runs.
Outcome determinism()
{
    const fs::path dir = fs::temp_directory_path() / "conet_acceptance_determinism";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::ofstream(dir / "simulate.json") << R"({
        "preset": "opinion-line-16",
        "graph": {"recipe": "random", "n": 12},
        "initial": {"rho": {"profile": "random", "center": null, "width": null, "floor": null}},
        "integrator": {"dt": 0.005}
    })";
    std::ofstream(dir / "study.json") << R"({
        "preset": "fast-20",
        "graph": {"n": 8},
        "integrator": {"dt": 0.05},
        "study": {"epsilons": [0.1, 0.01, 0.001], "gates": {"required": false}}
    })";
    const std::string exe = CONET_EXECUTABLE;
    const std::vector<std::pair<std::string, std::vector<std::string>>> commands = {
        {"simulate --config " + (dir / "simulate.json").string(), {"trajectory.csv", "audit.json", "summary.json"}},
        {"constants --config " + (dir / "simulate.json").string(), {"constants.json"}},
        {"study fast --jobs 3 --config " + (dir / "study.json").string(),
         {"study.json", "rung_00.csv", "rung_02.csv", "reference.csv"}},
    };
    std::size_t compared = 0;
    for (std::size_t c = 0; c < commands.size(); ++c) {
        std::string first[8];
        for (int rep = 0; rep < 2; ++rep) {
            const fs::path out = dir / ("run" + std::to_string(c) + "_" + std::to_string(rep));
            const std::string cmd = exe + " " + commands[c].first + " --seed 11 --out " + out.string() + " > /dev/null";
            if (std::system(cmd.c_str()) != 0) return {false, "command failed: " + cmd};
            for (std::size_t f = 0; f < commands[c].second.size(); ++f) {
                const std::string bytes = slurp(out / commands[c].second[f]);
                if (bytes.empty()) return {false, "empty output " + commands[c].second[f]};
                if (rep == 0)
                    first[f] = bytes;
                else if (bytes != first[f])
                    return {false, commands[c].second[f] + " differs between runs"};
                else
                    ++compared;
            }
        }
    }
    return {true, std::to_string(compared) + " output files byte-identical across repeated runs"};
}

}  // namespace

int main()
{
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"mass preservation", mass_preservation},
        {"eta closed form", eta_closed_form},
        {"Picard contraction", picard_contraction},
        {"T* worked value", worked_t_star},
        {"slow-graph limit", [] { return epsilon_study("slow", 60.0); }},
        {"fast-graph limit", [] { return epsilon_study("fast", 120.0); }},
        {"discrete-to-continuum", graph_limit},
        {"positivity and support", positivity},
        {"structural identities", structural_identities},
        {"determinism", determinism},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += o.pass ? 0 : 1;
        std::cout << "criterion " << i + 1 << " " << (o.pass ? "PASS" : "FAIL") << " " << criteria[i].first << ": "
                  << o.detail << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
