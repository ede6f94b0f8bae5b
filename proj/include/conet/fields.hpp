#pragma once

// Velocity fields V_t[rho] and weight targets omega_t[rho], plus estimates of
// the structural constants the well-posedness and limit bounds are stated in.

#include <cstdint>
#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "conet/graph_core.hpp"
#include "conet/kernels.hpp"

namespace conet {

/// Edge matrices given on a time grid, piecewise constant with nearest-left lookup.
struct TabulatedEdges {
    std::vector<double> times;
    std::vector<EdgeMatrix> values;

    const EdgeMatrix& at(double t) const;
};

struct ZeroVelocity {};

/// v_ij = -[(K*rho)(x_j) - (K*rho)(x_i)] g(t) with (K*rho)(x) = sum_k K(x, x_k) rho_k.
struct InteractionVelocity {
    PairKernel kernel;
    TimeProfile modulation;
};

struct VelocityField {
    std::variant<ZeroVelocity, InteractionVelocity, TabulatedEdges> kind;
    std::optional<double> declared_CV;
    std::optional<double> declared_LV;

    static VelocityField zero() { return {ZeroVelocity{}, 0.0, 0.0}; }
    static VelocityField interaction(PairKernel kernel, TimeProfile modulation = {})
    {
        return {InteractionVelocity{kernel, modulation}, std::nullopt, std::nullopt};
    }
    static VelocityField tabulated(TabulatedEdges table)
    {
        return {std::move(table), std::nullopt, std::nullopt};
    }
};

/// omega_t[rho]_ij = sum_k K(t, x_i, x_j, x_k) rho_k.
///
/// With `general` unset the kernel has product form
///   K(t, x, y, z) = g(t) k(x, z) k(y, z),
/// which evaluates as g(t) A diag(rho) A^T with A = k(x_i, x_k).
struct ConvolutionOmega {
    using Quad = std::function<double(double t, const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                      const Eigen::VectorXd& z)>;
    PairKernel kernel;
    TimeProfile modulation;
    Quad general;
    /// Bounds for a general kernel: sup |K| and sup |d_t K|. Unused in product form.
    std::optional<double> general_sup;
    std::optional<double> general_sup_dt;

    /// sup |K| when known.
    std::optional<double> sup_abs() const;
    std::optional<double> sup_abs_dt() const;
};

/// A fixed target: `matrix` when given, otherwise `value` on every edge.
struct ConstantOmega {
    double value = 0.0;
    std::optional<WeightMatrix> matrix;
};

struct OmegaFunctional {
    std::variant<ConstantOmega, ConvolutionOmega, TabulatedEdges> kind;
    std::optional<double> declared_C;
    std::optional<double> declared_L;
    std::optional<double> declared_Ct;

    static OmegaFunctional constant(double value)
    {
        return {ConstantOmega{value, std::nullopt}, std::abs(value), 0.0, 0.0};
    }
    static OmegaFunctional constant(WeightMatrix matrix)
    {
        const double sup = sup_norm(matrix);
        return {ConstantOmega{0.0, std::move(matrix)}, sup, 0.0, 0.0};
    }
    static OmegaFunctional convolution(PairKernel kernel, TimeProfile modulation = {})
    {
        return {ConvolutionOmega{kernel, modulation, {}, std::nullopt, std::nullopt}, std::nullopt,
                std::nullopt, std::nullopt};
    }
    static OmegaFunctional tabulated(TabulatedEdges table)
    {
        return {std::move(table), std::nullopt, std::nullopt, std::nullopt};
    }
};

/// Antisymmetric velocity matrix at time t. Tabulated data is validated.
EdgeMatrix eval_velocity(const VelocityField& field, double t, const VertexSet& graph,
                         const MassVector& rho);

/// Weight target matrix at time t.
WeightMatrix eval_omega(const OmegaFunctional& omega, double t, const VertexSet& graph,
                        const MassVector& rho);

/// Evaluates fields on one fixed graph, caching kernel matrices between calls.
class FieldEvaluator {
public:
    FieldEvaluator(const VertexSet& graph, const VelocityField& velocity, const OmegaFunctional& omega);

    EdgeMatrix velocity(double t, const MassVector& rho) const;
    WeightMatrix omega(double t, const MassVector& rho) const;

    bool velocity_is_zero() const;
    const VertexSet& graph() const noexcept { return *graph_; }

private:
    const VertexSet* graph_;
    const VelocityField* velocity_;
    const OmegaFunctional* omega_;
    Eigen::MatrixXd velocity_kernel_;
    Eigen::MatrixXd omega_kernel_;
};

/// One structural constant seen three ways.
struct ConstantEstimate {
    std::optional<double> declared;
    double empirical = 0.0;
    std::optional<double> closed_form;

    /// max(declared, empirical, closed form): the value the analysis consumes.
    double working() const;
    /// True when sampling found a value above the declared one.
    bool inconsistent() const;
};

struct VelocityConstants {
    ConstantEstimate C_V;  ///< sup_t sup_rho max_i sum_j |v_ij| m_j
    ConstantEstimate L_V;  ///< Lipschitz constant of that quantity w.r.t. tv(rho - sigma)
};

struct OmegaConstants {
    ConstantEstimate C_omega;   ///< sup |omega_ij|
    ConstantEstimate L_omega;   ///< Lipschitz constant w.r.t. tv(rho - sigma)
    ConstantEstimate Ct_omega;  ///< sup |d_t omega_ij| at fixed rho
};

struct ProbeConfig {
    std::size_t probes = 64;
    double mass_bound = 1.0;
    double horizon = 1.0;
    std::uint64_t seed = 0;
};

/// Sampled suprema over random probes rho with tv(rho) <= M and times in [0, T].
/// Probe p draws from its own generator seeded with seed + p, so adding probes
/// never lowers an estimate.
VelocityConstants estimate_constants(const VelocityField& field, const VertexSet& graph,
                                     const ProbeConfig& cfg);
OmegaConstants estimate_constants(const OmegaFunctional& omega, const VertexSet& graph,
                                  const ProbeConfig& cfg);

}  // namespace conet
