#pragma once

// Random instance generators shared by the property tests.

#include <cstdint>
#include <random>

#include "conet/graph_core.hpp"

namespace conet::testing {

class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }
    Index index(Index lo, Index hi) { return std::uniform_int_distribution<Index>(lo, hi)(rng_); }

    /// Values spread over several magnitudes with occasional exact zeros.
    double wide()
    {
        if (uniform(0.0, 1.0) < 0.1) return 0.0;
        const double mag = std::pow(10.0, uniform(-3.0, 3.0));
        return uniform(0.0, 1.0) < 0.5 ? -mag : mag;
    }

    Eigen::VectorXd vector(Index n)
    {
        Eigen::VectorXd v(n);
        for (Index i = 0; i < n; ++i) v(i) = normal();
        return v;
    }

    Eigen::MatrixXd matrix(Index n)
    {
        Eigen::MatrixXd a(n, n);
        for (Index j = 0; j < n; ++j)
            for (Index i = 0; i < n; ++i) a(i, j) = normal();
        return a;
    }

    Eigen::MatrixXd antisymmetric(Index n)
    {
        const Eigen::MatrixXd a = matrix(n);
        return a - a.transpose();
    }

    /// Distinct points in [0,1]^d with positive masses (some zero when ghosts > 0).
    VertexSet graph(Index n, Index d = 1, Index ghosts = 0)
    {
        Eigen::MatrixXd pts(n, d);
        for (Index i = 0; i < n; ++i)
            for (Index a = 0; a < d; ++a) pts(i, a) = (static_cast<double>(i) + uniform(0.1, 0.9)) / n;
        Eigen::VectorXd m(n);
        for (Index i = 0; i < n; ++i) m(i) = i < ghosts ? 0.0 : uniform(0.1, 1.0);
        return VertexSet(pts, m);
    }

    std::mt19937_64& engine() { return rng_; }

private:
    std::mt19937_64 rng_;
};

inline VertexSet line_graph(Index n)
{
    Eigen::MatrixXd pts(n, 1);
    for (Index i = 0; i < n; ++i) pts(i, 0) = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    return VertexSet(pts, Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n)));
}

}  // namespace conet::testing
