#pragma once

// Vertex/edge containers and the discrete nonlocal calculus on a finite
// weighted graph. Edge quantities are dense n x n matrices indexed by ordered
// vertex pairs; diagonal entries are stored but never read.

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "conet/errors.hpp"

namespace conet {

using Index = Eigen::Index;

template <class Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <class Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Signed vertex masses rho_i.
using MassVector = VectorX<double>;
/// Edge weights eta_ij; neither symmetric nor nonnegative in general.
using WeightMatrix = MatrixX<double>;
/// Generic edge quantity (fluxes, velocities, nonlocal gradients).
using EdgeMatrix = MatrixX<double>;

/// Vertex points x_i in R^d together with the atomic base measure sum_i m_i delta_{x_i}.
///
/// A zero base mass is allowed and marks a vertex outside the support of the
/// base measure ("ghost" vertex).
class VertexSet {
public:
    VertexSet() = default;

    /// Validates and builds a vertex set. `positions` is n x d, one point per row.
    VertexSet(Eigen::MatrixXd positions, Eigen::VectorXd base_masses);

    Index size() const noexcept { return positions_.rows(); }
    Index dim() const noexcept { return positions_.cols(); }

    const Eigen::MatrixXd& positions() const noexcept { return positions_; }
    const Eigen::VectorXd& base_masses() const noexcept { return base_masses_; }
    double total_base_mass() const noexcept { return total_base_mass_; }

    auto point(Index i) const { return positions_.row(i); }

private:
    Eigen::MatrixXd positions_;
    Eigen::VectorXd base_masses_;
    double total_base_mass_ = 0.0;
};

/// Per-sample conserved-quantity record kept alongside a trajectory.
struct Audit {
    std::vector<double> total_mass;
    std::vector<double> tv_norm;
    std::vector<double> eta_sup;
    std::vector<std::string> warnings;
};

/// Time-gridded samples of (rho_t, eta_t).
struct Trajectory {
    std::vector<double> times;
    std::vector<MassVector> rho;
    std::vector<WeightMatrix> eta;
    Audit audit;
    bool truncated = false;

    std::size_t samples() const noexcept { return times.size(); }
    double horizon() const { return times.empty() ? 0.0 : times.back(); }
};

/// Nonlocal gradient: out(i, j) = phi(j) - phi(i).
template <class Derived>
MatrixX<typename Derived::Scalar> nonlocal_gradient(const Eigen::MatrixBase<Derived>& phi)
{
    if (phi.cols() != 1)
        throw DimensionError("nonlocal_gradient: expected a column vector");
    const Index n = phi.rows();
    MatrixX<typename Derived::Scalar> out(n, n);
    for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < n; ++i)
            out(i, j) = phi(j) - phi(i);
    return out;
}

template <class Derived>
MatrixX<typename Derived::Scalar> nonlocal_gradient(const VertexSet& graph,
                                                    const Eigen::MatrixBase<Derived>& phi)
{
    if (phi.rows() != graph.size())
        throw DimensionError("nonlocal_gradient: phi has " + std::to_string(phi.rows()) +
                             " entries, graph has " + std::to_string(graph.size()) + " vertices");
    return nonlocal_gradient(phi);
}

/// Nonlocal divergence, the negative half-adjoint of the nonlocal gradient:
/// out(i) = 1/2 sum_{j != i} (J(i, j) - J(j, i)).
template <class Derived>
VectorX<typename Derived::Scalar> nonlocal_divergence(const Eigen::MatrixBase<Derived>& flux)
{
    if (flux.rows() != flux.cols())
        throw DimensionError("nonlocal_divergence: edge matrix must be square");
    using Scalar = typename Derived::Scalar;
    // The diagonal of J - J^T vanishes identically, so no masking is needed.
    return Scalar(0.5) * (flux - flux.transpose()).rowwise().sum();
}

/// Total variation norm of an atomic signed measure.
template <class Derived>
typename Derived::Scalar tv_norm(const Eigen::MatrixBase<Derived>& rho)
{
    return rho.cwiseAbs().sum();
}

/// max_{i != j} |A(i, j)|; zero for 1 x 1 matrices.
template <class Derived>
typename Derived::Scalar sup_norm(const Eigen::MatrixBase<Derived>& a)
{
    using Scalar = typename Derived::Scalar;
    Scalar best(0);
    for (Index j = 0; j < a.cols(); ++j)
        for (Index i = 0; i < a.rows(); ++i)
            if (i != j) best = std::max<Scalar>(best, std::abs(a(i, j)));
    return best;
}

/// Total mass sum_i rho_i.
template <class Derived>
typename Derived::Scalar total_mass(const Eigen::MatrixBase<Derived>& rho)
{
    return rho.sum();
}

/// Grid-sampled metric between two trajectories:
/// max_k [ tv(rho_a - rho_b) + sup(eta_a - eta_b) ] over the shared time grid.
/// Throws AlignmentError when grids or vertex counts differ.
double d_infinity(const Trajectory& a, const Trajectory& b);

/// The two parts of d_infinity evaluated separately (each maximized over time).
struct DistanceParts {
    double total = 0.0;
    double rho = 0.0;
    double eta = 0.0;
};
DistanceParts d_infinity_parts(const Trajectory& a, const Trajectory& b);

}  // namespace conet
