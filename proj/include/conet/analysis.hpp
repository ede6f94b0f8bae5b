#pragma once

// Contraction constants of the solution maps and the three convergence
// studies (slow-graph, fast-graph and discrete-to-continuum limits).

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "conet/dynamics.hpp"

namespace conet {

struct ContractionConstants {
    double L_phi = 0.0;
    double C_V = 0.0;
    double L_V = 0.0;
    double M = 1.0;
    double C_omega = 0.0;
    double L_omega = 0.0;
    double eta0_sup = 0.0;
};

/// alpha(T) = sigma + gamma e^T + chi T e^T.
double contraction_alpha(const ContractionConstants& c, double T);
/// beta = 2 L_phi C_V M + 1.
double contraction_beta(const ContractionConstants& c);
/// kappa(T) = max(alpha(T), beta).
double contraction_kappa(const ContractionConstants& c, double T);
/// Root of kappa(T) T = 1 by bisection.
double contraction_horizon(const ContractionConstants& c);

struct ContractionReport {
    ContractionConstants constants;
    double horizon = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
    double kappa = 0.0;
    /// kappa(T) T, the contraction factor of the solution maps on [0, T].
    double factor = 0.0;
    double t_star = 0.0;
    double sigma = 0.0;  ///< L_omega
    double gamma = 0.0;  ///< 2 L_phi (C_V + L_V M) sup(eta_0)
    double chi = 0.0;    ///< 2 L_phi (C_V + L_V M) C_omega
    bool contractive = false;
    /// "contraction_guaranteed" or "contraction_not_guaranteed".
    std::string verdict;
};

/// Throws ValidationError on negative constants or M <= 0.
ContractionReport contraction_report(const ContractionConstants& constants, double horizon);

struct SystemConstants {
    VelocityConstants velocity;
    OmegaConstants omega;
};

/// Estimates of all structural constants of `spec` over probes with tv <= mass_bound.
SystemConstants system_constants(const SystemSpec& spec, std::size_t probes, std::uint64_t seed);

/// Working values (max of declared, sampled, closed form) packed for contraction_report.
ContractionConstants contraction_constants(const SystemSpec& spec, const SystemConstants& constants,
                                           double eta0_sup);
ContractionConstants contraction_constants(const SystemSpec& spec, const WeightMatrix& eta0,
                                           std::size_t probes, std::uint64_t seed);

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    /// Root mean square of the log-log residuals.
    double residual = 0.0;
    /// Ladder indices left out because their error was zero.
    std::vector<std::size_t> excluded;
    std::string note;
};

/// Least squares line through (log x, log err). Zero errors are excluded;
/// fewer than three usable points throw InsufficientDataError.
RateFit fit_rate(std::span<const double> ladder, std::span<const double> errors);

struct StudyRung {
    double parameter = 0.0;  ///< epsilon, or the vertex count
    double dt = 0.0;
    double error = 0.0;
    double error_rho = 0.0;
    double error_eta = 0.0;
    std::optional<double> bound;
    std::optional<double> bound_rho;
    std::optional<double> bound_eta;
    /// Graph limit only: max over time of the difference of the constant observable.
    std::optional<double> mass_observable_error;
    Trajectory trajectory;

    bool within_bound() const { return !bound || error <= *bound; }
};

struct ConvergenceStudy {
    std::string kind;  ///< "slow", "fast" or "graph-limit"
    std::vector<StudyRung> rungs;
    Trajectory reference;
    std::optional<RateFit> fit;
    /// Errors shrink along the ladder (slow/fast: with epsilon; graph: with n).
    bool monotone = true;
    bool within_bounds = true;
    /// "explicit", "reconstructed" or "none".
    std::string bound_label = "none";
    std::vector<std::string> notes;
    SystemConstants constants;

    std::vector<double> ladder() const;
    std::vector<double> errors() const;
};

struct StudyOptions {
    IntegratorConfig integrator;
    std::size_t jobs = 1;
    std::size_t probes = 64;
    std::uint64_t seed = 0;
    /// Relative slack allowed on a single adjacent pair in the monotonicity check.
    double monotone_slack = 0.05;
};

/// SlowGraph(eps) against the StaticGraph reference for each eps in a
/// decreasing ladder. A zero rung is the reference itself.
ConvergenceStudy slow_limit_study(const SystemSpec& base, const MassVector& rho0, const WeightMatrix& eta0,
                                  std::span<const double> epsilons, const StudyOptions& options);

/// FastGraph(eps) with exponential eta updates against the QuasiStatic
/// reference. Rungs step with dt = base dt refined to at most eps / 5 and are
/// compared on the base grid. With `well_prepared` eta0 is replaced by omega_0[rho0].
ConvergenceStudy fast_limit_study(const SystemSpec& base, const MassVector& rho0, const WeightMatrix& eta0,
                                  std::span<const double> epsilons, const StudyOptions& options,
                                  bool well_prepared);

enum class VertexRecipe {
    UniformGrid,    ///< cell midpoints of a regular grid on [0,1]^d; n must be a d-th power
    LowDiscrepancy, ///< Halton points in [0,1]^d
};

/// Observable panel for comparing runs on different vertex sets:
///   <phi, rho> = sum_i phi(x_i) rho_i
///   <psi (x) rho, eta> = sum_{i != j} psi(x_i, x_j) eta_ij rho_i m_j
struct ObservablePanel {
    std::vector<std::function<double(const Eigen::VectorXd&)>> phi;
    std::vector<std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>> psi;
    std::vector<std::string> phi_names;
    std::vector<std::string> psi_names;

    /// Constant, coordinate functions and `bumps` Gaussians of width `width`
    /// centred at (l + 1/2) / bumps along each axis; psi pairs each bump with itself.
    static ObservablePanel standard(Index dim, std::size_t bumps = 8, double width = 0.15);
};

struct GraphLimitRecipe {
    Index dim = 1;
    VertexRecipe vertices = VertexRecipe::UniformGrid;
    /// Continuum initial density; rho0 is sampled at the vertices and normalised.
    std::function<double(const Eigen::VectorXd&)> density;
    double total_mass = 1.0;
    /// Continuum initial weight function eta0(x, y).
    std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)> weights;
    VelocityField velocity;
    OmegaFunctional omega;
    double horizon = 1.0;
    double mass_bound = 1.0;
    ObservablePanel panel = ObservablePanel::standard(1);
};

/// Vertex set of the recipe with n vertices and masses 1/n.
VertexSet make_vertices(const GraphLimitRecipe& recipe, std::size_t n);

/// Coupled upwind runs on each vertex count; the last (largest) rung is the
/// reference. Errors are measured through the observable panel.
ConvergenceStudy graph_limit_study(const GraphLimitRecipe& recipe, std::span<const std::size_t> counts,
                                   const StudyOptions& options);

/// True when errors decrease strictly except for at most one adjacent pair
/// that rises by no more than `slack` relative.
bool decreasing_with_slack(std::span<const double> errors, double slack);

}  // namespace conet
