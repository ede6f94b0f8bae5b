#pragma once

// Time integration of the co-evolving system
//   d/dt rho = -div F[eta_eff; rho, V_t[rho]]
//   d/dt eta = rate * (omega_t[rho] - eta)
// in its five time-scale regimes, and the Picard solver for the coupled case.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "conet/fields.hpp"
#include "conet/flux.hpp"
#include "conet/graph_core.hpp"

namespace conet {

enum class Regime {
    Coupled,      ///< d/dt eta = omega - eta
    SlowGraph,    ///< d/dt eta = eps (omega - eta)
    FastGraph,    ///< eps d/dt eta = omega - eta
    StaticGraph,  ///< eta frozen at eta_0
    QuasiStatic,  ///< eta replaced by omega_t[rho_t] in the flux
};

std::string_view to_string(Regime regime);
Regime parse_regime(std::string_view name);

struct SystemSpec {
    VertexSet graph;
    FluxInterpolation interp = FluxInterpolation::upwind();
    VelocityField velocity = VelocityField::zero();
    OmegaFunctional omega = OmegaFunctional::constant(0.0);
    Regime regime = Regime::Coupled;
    double epsilon = 0.0;  ///< used by SlowGraph and FastGraph only
    double horizon = 1.0;
    double mass_bound = 1.0;

    /// Throws ValidationError when epsilon/horizon/mass bound are out of range.
    void validate() const;
    /// Relaxation time tau of the eta equation (1, 1/eps, eps); zero when eta does not relax.
    double relaxation_time() const;
};

enum class Scheme { ExplicitEuler, RK4 };
enum class EtaUpdate { InScheme, ExponentialEuler };

std::string_view to_string(Scheme scheme);
std::string_view to_string(EtaUpdate update);
Scheme parse_scheme(std::string_view name);
EtaUpdate parse_eta_update(std::string_view name);

struct IntegratorConfig {
    Scheme scheme = Scheme::RK4;
    double dt = 1e-2;
    EtaUpdate eta_update = EtaUpdate::InScheme;
    /// Keep (and audit) every audit_every-th step; the final step is always kept.
    std::size_t audit_every = 1;
};

/// Right-hand side of the system at (t, rho, eta).
struct Rates {
    MassVector rho;
    WeightMatrix eta;
};
Rates rhs(const SystemSpec& spec, double t, const MassVector& rho, const WeightMatrix& eta);

/// NaN or Inf appeared during integration. Carries the samples recorded so far.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, std::size_t step, Trajectory partial)
        : Error(what), step_(step), partial_(std::move(partial)) {}

    std::size_t step() const noexcept { return step_; }
    const Trajectory& partial() const noexcept { return partial_; }

private:
    std::size_t step_;
    Trajectory partial_;
};

/// Integrates on the uniform grid with N = ceil(T / dt) steps of size T / N.
///
/// With EtaUpdate::ExponentialEuler each step is split symmetrically: half a
/// step of rho with eta frozen, the exact relaxation
///   eta <- e^{-h/tau} eta + (1 - e^{-h/tau}) omega_{t+h/2}[rho_{t+h/2}],
/// then the second half step of rho. FastGraph with eps < dt requires it.
///
/// For QuasiStatic the recorded eta samples are omega_t[rho_t].
Trajectory integrate(const SystemSpec& spec, const MassVector& rho0, const WeightMatrix& eta0,
                     const IntegratorConfig& cfg);

enum class Quadrature {
    Trapezoidal,
    CubicLagrange,  ///< piecewise cubic interpolation of the integrand, fourth order
};

/// eta_t = e^{-t} (eta_0 + int_0^t e^s omega_s ds) at every grid time, with the
/// integral approximated from the omega samples on the grid.
std::vector<WeightMatrix> eta_exact_path(const WeightMatrix& eta0,
                                         std::span<const WeightMatrix> omega_samples,
                                         std::span<const double> times,
                                         Quadrature quadrature = Quadrature::Trapezoidal);

WeightMatrix eta_exact(const WeightMatrix& eta0, std::span<const WeightMatrix> omega_samples,
                       std::span<const double> times, std::size_t t_index,
                       Quadrature quadrature = Quadrature::Trapezoidal);

struct PicardConfig {
    std::size_t grid_points = 101;
    double tol = 1e-12;
    std::size_t max_iters = 100;
    /// Probes used to estimate constants for the T < T* check (0 disables the check).
    std::size_t contraction_probes = 32;
    std::uint64_t seed = 0;
};

struct IterationLog {
    /// gaps[k] = d_infinity(iterate k+1, iterate k).
    std::vector<double> gaps;
    /// ratios[k] = gaps[k+1] / gaps[k].
    std::vector<double> ratios;
    std::optional<double> t_star;
    std::vector<std::string> warnings;
};

struct PicardResult {
    Trajectory trajectory;
    IterationLog log;
};

/// Fixed-point iteration of the coupled solution maps on a uniform grid with
/// trapezoidal quadrature, starting from the constant curve (rho_0, eta_0).
/// Throws NonConvergenceError after max_iters.
PicardResult picard_solve(const SystemSpec& spec, const MassVector& rho0, const WeightMatrix& eta0,
                          const PicardConfig& cfg);

/// Fills the audit record of `traj` from its samples.
void audit_trajectory(Trajectory& traj, double mass_bound);

}  // namespace conet
