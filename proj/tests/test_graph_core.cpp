#include "doctest.h"

#include "conet/graph_core.hpp"
#include "support.hpp"

using namespace conet;
using conet::testing::Gen;

namespace {

Trajectory constant_trajectory(const std::vector<double>& times, const MassVector& rho, const WeightMatrix& eta)
{
    Trajectory t;
    t.times = times;
    t.rho.assign(times.size(), rho);
    t.eta.assign(times.size(), eta);
    return t;
}

Trajectory random_trajectory(Gen& gen, const std::vector<double>& times, Index n)
{
    Trajectory t;
    t.times = times;
    for (std::size_t k = 0; k < times.size(); ++k) {
        t.rho.push_back(gen.vector(n));
        t.eta.push_back(gen.matrix(n));
    }
    return t;
}

}  // namespace

TEST_CASE("vertex set validation")
{
    Eigen::MatrixXd pts(2, 1);
    pts << 0.0, 1.0;
    const VertexSet g(pts, Eigen::Vector2d(0.5, 0.0));
    CHECK(g.size() == 2);
    CHECK(g.dim() == 1);
    CHECK(g.total_base_mass() == doctest::Approx(0.5));

    CHECK_THROWS_AS(VertexSet(pts, Eigen::Vector2d(1.0, -1.0)), ValidationError);
    CHECK_THROWS_AS(VertexSet(pts, Eigen::Vector3d(1.0, 1.0, 1.0)), DimensionError);
    Eigen::MatrixXd dup(2, 1);
    dup << 0.3, 0.3;
    CHECK_THROWS_AS(VertexSet(dup, Eigen::Vector2d(1.0, 1.0)), ValidationError);
    CHECK_THROWS_AS(VertexSet(Eigen::MatrixXd(0, 1), Eigen::VectorXd(0)), ValidationError);
}

TEST_CASE("nonlocal gradient")
{
    const Eigen::VectorXd c = Eigen::VectorXd::Constant(4, 2.5);
    CHECK(nonlocal_gradient(c).cwiseAbs().maxCoeff() == 0.0);

    const EdgeMatrix g = nonlocal_gradient(Eigen::Vector2d(0.0, 1.0));
    CHECK(g(0, 1) == 1.0);
    CHECK(g(1, 0) == -1.0);

    Gen gen(7);
    for (int trial = 0; trial < 100; ++trial) {
        const Index n = gen.index(1, 12);
        const EdgeMatrix r = nonlocal_gradient(gen.vector(n));
        CHECK((r + r.transpose()).cwiseAbs().maxCoeff() == 0.0);
    }

    const VertexSet g3 = gen.graph(3);
    CHECK_THROWS_AS(nonlocal_gradient(g3, Eigen::Vector2d(0.0, 1.0)), DimensionError);
    CHECK_THROWS_AS(nonlocal_gradient(Eigen::MatrixXd::Ones(2, 2)), DimensionError);
}

TEST_CASE("nonlocal divergence")
{
    Gen gen(11);
    const Eigen::MatrixXd a = gen.matrix(5);
    const Eigen::MatrixXd sym = a + a.transpose();
    CHECK(nonlocal_divergence(sym).cwiseAbs().maxCoeff() == 0.0);

    Eigen::Matrix2d j;
    j << 0.0, 1.0, -1.0, 0.0;
    const Eigen::Vector2d d = nonlocal_divergence(j);
    CHECK(d(0) == 1.0);
    CHECK(d(1) == -1.0);

    CHECK_THROWS_AS(nonlocal_divergence(Eigen::MatrixXd::Ones(2, 3)), DimensionError);
}

TEST_CASE("divergence is the negative half-adjoint of the gradient")
{
    Gen gen(2024);
    for (int trial = 0; trial < 1000; ++trial) {
        const Index n = gen.index(1, 15);
        const Eigen::VectorXd phi = gen.vector(n);
        const Eigen::MatrixXd J = gen.matrix(n);
        const double lhs = phi.dot(nonlocal_divergence(J));
        // Independent double loop over ordered pairs.
        double rhs = 0.0, scale = 0.0;
        for (Index i = 0; i < n; ++i)
            for (Index k = 0; k < n; ++k)
                if (i != k) {
                    rhs += -0.5 * (phi(k) - phi(i)) * J(i, k);
                    scale += 0.5 * std::abs((phi(k) - phi(i)) * J(i, k));
                }
        CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, scale));
    }
}

TEST_CASE("tv norm")
{
    CHECK(tv_norm(Eigen::VectorXd::Zero(3)) == 0.0);
    CHECK(tv_norm(Eigen::Vector3d(1.0, -2.0, 0.5)) == 3.5);
    Gen gen(3);
    for (int trial = 0; trial < 200; ++trial) {
        const Index n = gen.index(1, 10);
        const Eigen::VectorXd a = gen.vector(n), b = gen.vector(n);
        const double alpha = gen.uniform(-5.0, 5.0);
        CHECK(tv_norm(a) == tv_norm(Eigen::VectorXd(-a)));
        CHECK(tv_norm(Eigen::VectorXd(alpha * a)) == doctest::Approx(std::abs(alpha) * tv_norm(a)));
        CHECK(tv_norm(Eigen::VectorXd(a + b)) <= tv_norm(a) + tv_norm(b) + 1e-12);
    }
}

TEST_CASE("sup norm skips the diagonal")
{
    Eigen::Matrix2d a;
    a << 100.0, -2.0, 1.0, -50.0;
    CHECK(sup_norm(a) == 2.0);
    CHECK(sup_norm(Eigen::MatrixXd::Constant(1, 1, 7.0)) == 0.0);
}

TEST_CASE("d_infinity examples")
{
    const std::vector<double> times{0.0, 0.5, 1.0};
    Gen gen(5);
    const MassVector rho = gen.vector(3);
    const WeightMatrix eta = gen.matrix(3);
    const Trajectory a = constant_trajectory(times, rho, eta);
    CHECK(d_infinity(a, a) == 0.0);

    const Trajectory shifted = constant_trajectory(times, rho, (eta.array() + 0.7).matrix());
    CHECK(d_infinity(a, shifted) == doctest::Approx(0.7).epsilon(1e-14));

    Trajectory x = constant_trajectory({0.0, 1.0}, MassVector::Zero(2), WeightMatrix::Zero(2, 2));
    Trajectory y = x;
    y.rho[0] = Eigen::Vector2d(0.3, 0.0);
    y.rho[1] = Eigen::Vector2d(0.0, -0.1);
    CHECK(d_infinity(x, y) == doctest::Approx(0.3));
    const auto parts = d_infinity_parts(x, y);
    CHECK(parts.rho == doctest::Approx(0.3));
    CHECK(parts.eta == 0.0);
}

TEST_CASE("d_infinity rejects misaligned trajectories")
{
    const Trajectory a = constant_trajectory({0.0, 1.0}, MassVector::Zero(2), WeightMatrix::Zero(2, 2));
    const Trajectory b = constant_trajectory({0.0, 0.5}, MassVector::Zero(2), WeightMatrix::Zero(2, 2));
    const Trajectory c = constant_trajectory({0.0, 0.5, 1.0}, MassVector::Zero(2), WeightMatrix::Zero(2, 2));
    const Trajectory d = constant_trajectory({0.0, 1.0}, MassVector::Zero(3), WeightMatrix::Zero(3, 3));
    CHECK_THROWS_AS(d_infinity(a, b), AlignmentError);
    CHECK_THROWS_AS(d_infinity(a, c), AlignmentError);
    CHECK_THROWS_AS(d_infinity(a, d), AlignmentError);
}

TEST_CASE("d_infinity is a metric on a fixed grid")
{
    Gen gen(99);
    const std::vector<double> times{0.0, 0.25, 0.5, 0.75, 1.0};
    for (int trial = 0; trial < 200; ++trial) {
        const Index n = gen.index(1, 6);
        const Trajectory a = random_trajectory(gen, times, n);
        const Trajectory b = random_trajectory(gen, times, n);
        const Trajectory c = random_trajectory(gen, times, n);
        const double ab = d_infinity(a, b);
        CHECK(ab >= 0.0);
        CHECK(ab == d_infinity(b, a));
        CHECK(d_infinity(a, c) <= ab + d_infinity(b, c) + 1e-12);
    }
}
