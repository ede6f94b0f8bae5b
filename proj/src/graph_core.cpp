#include "conet/graph_core.hpp"

#include <algorithm>
#include <cmath>

namespace conet {

VertexSet::VertexSet(Eigen::MatrixXd positions, Eigen::VectorXd base_masses)
    : positions_(std::move(positions)), base_masses_(std::move(base_masses))
{
    const Index n = positions_.rows();
    if (n < 1)
        throw ValidationError("VertexSet: at least one vertex is required");
    if (positions_.cols() < 1)
        throw ValidationError("VertexSet: positions need dimension d >= 1");
    if (base_masses_.size() != n)
        throw DimensionError("VertexSet: " + std::to_string(base_masses_.size()) +
                             " base masses for " + std::to_string(n) + " vertices");
    if (!positions_.allFinite())
        throw ValidationError("VertexSet: non-finite position");
    for (Index i = 0; i < n; ++i) {
        if (!(base_masses_(i) >= 0.0) || !std::isfinite(base_masses_(i)))
            throw ValidationError("VertexSet: base mass m_" + std::to_string(i) +
                                  " must be finite and nonnegative");
    }
    for (Index i = 0; i < n; ++i)
        for (Index j = i + 1; j < n; ++j)
            if (positions_.row(i) == positions_.row(j))
                throw ValidationError("VertexSet: vertices " + std::to_string(i) + " and " +
                                      std::to_string(j) + " coincide");
    total_base_mass_ = base_masses_.sum();
}

namespace {

void check_aligned(const Trajectory& a, const Trajectory& b)
{
    if (a.times.size() != b.times.size())
        throw AlignmentError("d_infinity: trajectories have " + std::to_string(a.times.size()) +
                             " and " + std::to_string(b.times.size()) + " samples");
    if (a.rho.size() != a.times.size() || b.rho.size() != b.times.size() ||
        a.eta.size() != a.times.size() || b.eta.size() != b.times.size())
        throw AlignmentError("d_infinity: sample arrays do not match the time grid");
    for (std::size_t k = 0; k < a.times.size(); ++k) {
        const double scale = std::max({1.0, std::abs(a.times[k]), std::abs(b.times[k])});
        if (std::abs(a.times[k] - b.times[k]) > 1e-12 * scale)
            throw AlignmentError("d_infinity: time grids differ at sample " + std::to_string(k));
        if (a.rho[k].size() != b.rho[k].size() || a.eta[k].rows() != b.eta[k].rows() ||
            a.eta[k].cols() != b.eta[k].cols())
            throw AlignmentError("d_infinity: vertex counts differ at sample " + std::to_string(k));
    }
}

}  // namespace

DistanceParts d_infinity_parts(const Trajectory& a, const Trajectory& b)
{
    check_aligned(a, b);
    DistanceParts parts;
    for (std::size_t k = 0; k < a.times.size(); ++k) {
        const double r = tv_norm(a.rho[k] - b.rho[k]);
        const double e = sup_norm(a.eta[k] - b.eta[k]);
        parts.rho = std::max(parts.rho, r);
        parts.eta = std::max(parts.eta, e);
        parts.total = std::max(parts.total, r + e);
    }
    return parts;
}

double d_infinity(const Trajectory& a, const Trajectory& b)
{
    return d_infinity_parts(a, b).total;
}

}  // namespace conet
