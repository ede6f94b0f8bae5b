#pragma once

// Admissible flux interpolations and assembly of the edge flux
//   F_ij = Phi(rho_i m_j, m_i rho_j; v_ij) * eta_ij
// with the reference measure fixed to counting measure on ordered pairs.

#include <cstdint>
#include <string>
#include <string_view>

#include "conet/graph_core.hpp"

namespace conet {

enum class Interpolation { Upwind, ArithmeticMean, Max };

std::string_view to_string(Interpolation kind);
/// Parses "upwind", "mean"/"arithmetic-mean", "max". Throws ValidationError otherwise.
Interpolation parse_interpolation(std::string_view name);

/// Interpolation rule Phi(a, b; w) together with its declared Lipschitz constant.
struct FluxInterpolation {
    Interpolation kind = Interpolation::Upwind;
    double lipschitz = 1.0;

    static FluxInterpolation upwind() { return {Interpolation::Upwind, 1.0}; }
    static FluxInterpolation arithmetic_mean() { return {Interpolation::ArithmeticMean, 0.5}; }
    static FluxInterpolation max() { return {Interpolation::Max, 1.0}; }
    /// The rule with its default constant (1, 1/2, 1).
    static FluxInterpolation of(Interpolation kind);
};

/// Phi(a, b; w). Max acts on signed values.
template <class Scalar>
Scalar evaluate(const FluxInterpolation& interp, Scalar a, Scalar b, Scalar w)
{
    switch (interp.kind) {
    case Interpolation::Upwind: {
        const Scalar wp = w > Scalar(0) ? w : Scalar(0);
        const Scalar wm = w < Scalar(0) ? -w : Scalar(0);
        return a * wp - b * wm;
    }
    case Interpolation::ArithmeticMean:
        return Scalar(0.5) * (a + b) * w;
    case Interpolation::Max:
        // a == b == 0 and w == 0 must give an exact zero.
        return (a > b ? a : b) * w;
    }
    return Scalar(0);
}

/// Worst observed violation of one admissibility axiom.
struct AxiomCheck {
    bool pass = true;
    /// Largest lhs / rhs ratio seen (Lipschitz), or largest |violation| (identities).
    double worst = 0.0;
    /// Witness arguments for the worst sample: a, b, c, d, v, w, alpha.
    double a = 0, b = 0, c = 0, d = 0, v = 0, w = 0, alpha = 1;
};

struct AdmissibilityReport {
    AxiomCheck degeneracy;
    AxiomCheck lipschitz_velocity;  ///< |Phi(a,b;w) - Phi(a,b;v)| <= L (|a|+|b|) |w - v|
    AxiomCheck lipschitz_mass;      ///< |Phi(a,b;v) - Phi(c,d;v)| <= L (|a-c|+|b-d|) |v|
    AxiomCheck homogeneity;
    std::size_t samples = 0;

    bool pass() const
    {
        return degeneracy.pass && lipschitz_velocity.pass && lipschitz_mass.pass &&
               homogeneity.pass;
    }
};

/// Sampled check of the admissibility axioms with the declared constant
/// `interp.lipschitz`. Failures are reported, never thrown.
AdmissibilityReport check_admissibility(const FluxInterpolation& interp, std::size_t samples,
                                        std::uint64_t seed);

/// Largest |v_ij + v_ji| over i != j together with the offending pair.
struct AntisymmetryDefect {
    double defect = 0.0;
    Index i = 0, j = 0;
};
AntisymmetryDefect antisymmetry_defect(const EdgeMatrix& v);

/// Throws ValidationError naming the worst pair when |v_ij + v_ji| exceeds
/// tol * max(1, |v_ij|, |v_ji|).
void validate_antisymmetric(const EdgeMatrix& v, double tol = 1e-10);

/// (v - v^T) / 2. Never applied implicitly.
EdgeMatrix antisymmetrize(const EdgeMatrix& v);

/// Edge flux F_ij = Phi(rho_i m_j, m_i rho_j; v_ij) eta_ij for i != j; zero diagonal.
EdgeMatrix assemble_flux(const VertexSet& graph, const WeightMatrix& eta, const MassVector& rho,
                         const EdgeMatrix& v, const FluxInterpolation& interp);

/// Mass right-hand side -div F; its entries sum to zero up to rounding.
MassVector mass_rhs(const VertexSet& graph, const WeightMatrix& eta, const MassVector& rho,
                    const EdgeMatrix& v, const FluxInterpolation& interp);

}  // namespace conet
