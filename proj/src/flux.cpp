#include "conet/flux.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace conet {

std::string_view to_string(Interpolation kind)
{
    switch (kind) {
    case Interpolation::Upwind: return "upwind";
    case Interpolation::ArithmeticMean: return "arithmetic-mean";
    case Interpolation::Max: return "max";
    }
    return "unknown";
}

Interpolation parse_interpolation(std::string_view name)
{
    if (name == "upwind") return Interpolation::Upwind;
    if (name == "arithmetic-mean" || name == "mean") return Interpolation::ArithmeticMean;
    if (name == "max") return Interpolation::Max;
    throw ValidationError("unknown flux interpolation '" + std::string(name) +
                          "' (expected upwind, arithmetic-mean or max)");
}

FluxInterpolation FluxInterpolation::of(Interpolation kind)
{
    switch (kind) {
    case Interpolation::Upwind: return upwind();
    case Interpolation::ArithmeticMean: return arithmetic_mean();
    case Interpolation::Max: return max();
    }
    return upwind();
}

namespace {

// Draws reals that exercise zeros, ties and a wide magnitude range.
class SampleSource {
public:
    explicit SampleSource(std::uint64_t seed) : rng_(seed) {}

    double value()
    {
        const double u = unit_(rng_);
        if (u < 0.08) return 0.0;
        const double sign = unit_(rng_) < 0.5 ? -1.0 : 1.0;
        const double mag = std::pow(10.0, -2.0 + 4.0 * unit_(rng_));
        return sign * mag * unit_(rng_);
    }

    double alpha() { return std::pow(10.0, -3.0 + 6.0 * unit_(rng_)); }

    bool coin(double p) { return unit_(rng_) < p; }

private:
    std::mt19937_64 rng_;
    std::uniform_real_distribution<double> unit_{0.0, 1.0};
};

constexpr double kRoundoff = 8.0 * std::numeric_limits<double>::epsilon();

void record(AxiomCheck& check, double score, bool ok, double a, double b, double c, double d,
            double v, double w, double alpha)
{
    if (!ok) check.pass = false;
    if (score > check.worst) {
        check.worst = score;
        check.a = a;
        check.b = b;
        check.c = c;
        check.d = d;
        check.v = v;
        check.w = w;
        check.alpha = alpha;
    }
}

// lhs <= L * rhs, scored as lhs / (L * rhs). `roundoff` is the rounding error
// of lhs itself, which cancellation can make large relative to lhs.
std::pair<double, bool> lipschitz_score(double lhs, double lipschitz, double rhs, double roundoff)
{
    lhs = std::max(0.0, lhs - roundoff);
    const double bound = lipschitz * rhs;
    if (bound == 0.0) {
        if (lhs == 0.0) return {0.0, true};
        return {std::numeric_limits<double>::infinity(), false};
    }
    const double score = lhs / bound;
    return {score, score <= 1.0 + 1e-12};
}

}  // namespace

AdmissibilityReport check_admissibility(const FluxInterpolation& interp, std::size_t samples,
                                        std::uint64_t seed)
{
    AdmissibilityReport report;
    report.samples = samples;
    SampleSource src(seed);
    const double L = interp.lipschitz;

    for (std::size_t s = 0; s < samples; ++s) {
        const double a = src.value();
        const double b = src.coin(0.1) ? a : src.value();
        const double c = src.coin(0.1) ? a : src.value();
        const double d = src.coin(0.1) ? b : src.value();
        const double v = src.value();
        const double w = src.coin(0.1) ? -v : src.value();
        const double alpha = src.alpha();

        // (i) degeneracy: exact zeros.
        const double deg = std::abs(evaluate(interp, 0.0, 0.0, v)) + std::abs(evaluate(interp, a, b, 0.0));
        record(report.degeneracy, deg, deg == 0.0, a, b, c, d, v, w, alpha);

        // (ii) argument-wise Lipschitz bounds.
        {
            const double f = evaluate(interp, a, b, w);
            const double g = evaluate(interp, a, b, v);
            const auto [score, ok] = lipschitz_score(std::abs(f - g), L, (std::abs(a) + std::abs(b)) * std::abs(w - v),
                                                     kRoundoff * (std::abs(f) + std::abs(g)));
            record(report.lipschitz_velocity, score, ok, a, b, c, d, v, w, alpha);
        }
        {
            const double f = evaluate(interp, a, b, v);
            const double g = evaluate(interp, c, d, v);
            const auto [score, ok] = lipschitz_score(std::abs(f - g), L, (std::abs(a - c) + std::abs(b - d)) * std::abs(v),
                                                     kRoundoff * (std::abs(f) + std::abs(g)));
            record(report.lipschitz_mass, score, ok, a, b, c, d, v, w, alpha);
        }

        // (iii) positive one-homogeneity, relative to the natural magnitude alpha (|a|+|b|) |w|.
        {
            const double lhs = evaluate(interp, alpha * a, alpha * b, w);
            const double rhs = alpha * evaluate(interp, a, b, w);
            const double scale = alpha * (std::abs(a) + std::abs(b)) * std::abs(w);
            const double err = std::abs(lhs - rhs);
            const double rel = scale > 0.0 ? err / scale : err;
            record(report.homogeneity, rel, rel <= 1e-12, a, b, c, d, v, w, alpha);
        }
    }
    return report;
}

AntisymmetryDefect antisymmetry_defect(const EdgeMatrix& v)
{
    AntisymmetryDefect worst;
    for (Index j = 0; j < v.cols(); ++j)
        for (Index i = 0; i < j; ++i) {
            const double defect = std::abs(v(i, j) + v(j, i)) /
                                  std::max({1.0, std::abs(v(i, j)), std::abs(v(j, i))});
            if (defect > worst.defect) worst = {defect, i, j};
        }
    return worst;
}

void validate_antisymmetric(const EdgeMatrix& v, double tol)
{
    if (v.rows() != v.cols())
        throw DimensionError("velocity matrix must be square");
    if (!v.allFinite())
        throw ValidationError("velocity matrix has non-finite entries");
    const auto worst = antisymmetry_defect(v);
    if (worst.defect > tol) {
        std::ostringstream msg;
        msg << "velocity is not antisymmetric: pair (" << worst.i << ", " << worst.j
            << ") has v_ij = " << v(worst.i, worst.j) << ", v_ji = " << v(worst.j, worst.i);
        throw ValidationError(msg.str());
    }
}

EdgeMatrix antisymmetrize(const EdgeMatrix& v)
{
    return 0.5 * (v - v.transpose());
}

EdgeMatrix assemble_flux(const VertexSet& graph, const WeightMatrix& eta, const MassVector& rho,
                         const EdgeMatrix& v, const FluxInterpolation& interp)
{
    const Index n = graph.size();
    if (rho.size() != n || eta.rows() != n || eta.cols() != n || v.rows() != n || v.cols() != n)
        throw DimensionError("assemble_flux: operands do not match the " + std::to_string(n) +
                             "-vertex graph");
    validate_antisymmetric(v);
    const auto& m = graph.base_masses();
    EdgeMatrix flux = EdgeMatrix::Zero(n, n);
    for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < n; ++i) {
            if (i == j || eta(i, j) == 0.0) continue;
            flux(i, j) = evaluate(interp, rho(i) * m(j), m(i) * rho(j), v(i, j)) * eta(i, j);
        }
    return flux;
}

MassVector mass_rhs(const VertexSet& graph, const WeightMatrix& eta, const MassVector& rho,
                    const EdgeMatrix& v, const FluxInterpolation& interp)
{
    return -nonlocal_divergence(assemble_flux(graph, eta, rho, v, interp));
}

}  // namespace conet
