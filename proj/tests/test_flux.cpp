#include "doctest.h"

#include "conet/flux.hpp"
#include "support.hpp"

using namespace conet;
using conet::testing::Gen;

namespace {

const FluxInterpolation kAll[] = {FluxInterpolation::upwind(), FluxInterpolation::arithmetic_mean(),
                                  FluxInterpolation::max()};

VertexSet unit_pair()
{
    Eigen::MatrixXd pts(2, 1);
    pts << 0.0, 1.0;
    return VertexSet(pts, Eigen::Vector2d(1.0, 1.0));
}

// Flux by the defining formula, written out per pair.
EdgeMatrix flux_oracle(const VertexSet& g, const WeightMatrix& eta, const MassVector& rho, const EdgeMatrix& v,
                       const FluxInterpolation& interp)
{
    const Index n = g.size();
    const auto& m = g.base_masses();
    EdgeMatrix f = EdgeMatrix::Zero(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) {
            if (i == j) continue;
            const double a = rho(i) * m(j);
            const double b = m(i) * rho(j);
            double phi = 0.0;
            switch (interp.kind) {
            case Interpolation::Upwind: phi = a * std::max(v(i, j), 0.0) - b * std::max(-v(i, j), 0.0); break;
            case Interpolation::ArithmeticMean: phi = (a + b) / 2.0 * v(i, j); break;
            case Interpolation::Max: phi = std::max(a, b) * v(i, j); break;
            }
            f(i, j) = phi * eta(i, j);
        }
    return f;
}

}  // namespace

TEST_CASE("evaluate examples")
{
    const auto up = FluxInterpolation::upwind();
    CHECK(evaluate(up, 2.0, 3.0, 1.0) == 2.0);
    CHECK(evaluate(up, 2.0, 3.0, -1.0) == -3.0);
    CHECK(evaluate(up, 2.0, 4.0, -0.5) == -2.0);
    CHECK(evaluate(up, 2.0, 4.0, -0.5) == 2.0 * evaluate(up, 1.0, 2.0, -0.5));
    CHECK(evaluate(FluxInterpolation::arithmetic_mean(), 1.0, 3.0, 2.0) == 4.0);
    const auto mx = FluxInterpolation::max();
    CHECK(evaluate(mx, 3.0, 6.0, 1.0) == 6.0);
    CHECK(evaluate(mx, 3.0, 6.0, 1.0) == 3.0 * evaluate(mx, 1.0, 2.0, 1.0));
    CHECK(evaluate(mx, -3.0, -1.0, 2.0) == -2.0);
    for (const auto& interp : kAll) {
        CHECK(evaluate(interp, 1.5, -2.0, 0.0) == 0.0);
        CHECK(evaluate(interp, 0.0, 0.0, 4.0) == 0.0);
    }
}

TEST_CASE("interpolation names round-trip")
{
    for (const auto& interp : kAll) CHECK(parse_interpolation(to_string(interp.kind)) == interp.kind);
    CHECK(parse_interpolation("mean") == Interpolation::ArithmeticMean);
    CHECK_THROWS_AS(parse_interpolation("central"), ValidationError);
    CHECK(FluxInterpolation::of(Interpolation::ArithmeticMean).lipschitz == 0.5);
}

TEST_CASE("admissibility suite passes with declared constants")
{
    for (const auto& interp : kAll) {
        const auto report = check_admissibility(interp, 10000, 17);
        CHECK_MESSAGE(report.pass(), to_string(interp.kind));
        CHECK(report.samples == 10000);
        CHECK(report.lipschitz_velocity.worst <= 1.0 + 1e-12);
        CHECK(report.lipschitz_mass.worst <= 1.0 + 1e-12);
    }
}

TEST_CASE("admissibility suite rejects an understated constant with a witness")
{
    const FluxInterpolation wrong{Interpolation::ArithmeticMean, 0.1};
    const auto report = check_admissibility(wrong, 2000, 1);
    CHECK_FALSE(report.pass());
    CHECK_FALSE(report.lipschitz_velocity.pass);
    CHECK(report.lipschitz_velocity.worst > 1.0);
    // Hand-picked witness: a = b = 1, w - v = 1 gives |diff| = 1 > 0.1 * 2 * 1.
    const auto& w = report.lipschitz_velocity;
    const double lhs = std::abs(evaluate(wrong, w.a, w.b, w.w) - evaluate(wrong, w.a, w.b, w.v));
    CHECK(lhs > 0.1 * (std::abs(w.a) + std::abs(w.b)) * std::abs(w.w - w.v));
    CHECK(std::abs(evaluate(wrong, 1.0, 1.0, 1.0) - evaluate(wrong, 1.0, 1.0, 0.0)) > 0.1 * 2.0);
}

TEST_CASE("two-vertex upwind flux and mass rhs")
{
    const VertexSet g = unit_pair();
    const WeightMatrix eta = WeightMatrix::Ones(2, 2);
    EdgeMatrix v(2, 2);
    v << 0.0, 1.0, -1.0, 0.0;
    const MassVector rho = Eigen::Vector2d(1.0, 0.0);
    const EdgeMatrix f = assemble_flux(g, eta, rho, v, FluxInterpolation::upwind());
    CHECK(f(0, 1) == 1.0);
    CHECK(f(1, 0) == -1.0);
    const MassVector r = mass_rhs(g, eta, rho, v, FluxInterpolation::upwind());
    CHECK(r(0) == -1.0);
    CHECK(r(1) == 1.0);
}

TEST_CASE("flux vanishes without edges, mass or velocity")
{
    Gen gen(4);
    const VertexSet g = gen.graph(5);
    const EdgeMatrix v = gen.antisymmetric(5);
    const MassVector rho = gen.vector(5);
    const WeightMatrix eta = gen.matrix(5);
    for (const auto& interp : kAll) {
        CHECK(assemble_flux(g, WeightMatrix::Zero(5, 5), rho, v, interp).cwiseAbs().maxCoeff() == 0.0);
        CHECK(assemble_flux(g, eta, MassVector::Zero(5), v, interp).cwiseAbs().maxCoeff() == 0.0);
        CHECK(assemble_flux(g, eta, rho, EdgeMatrix::Zero(5, 5), interp).cwiseAbs().maxCoeff() == 0.0);
        CHECK(mass_rhs(g, eta, MassVector::Zero(5), v, interp).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("assembly matches the pairwise formula")
{
    Gen gen(8);
    for (int trial = 0; trial < 200; ++trial) {
        const Index n = gen.index(1, 9);
        const VertexSet g = gen.graph(n, 1, trial % 3 == 0 ? 1 : 0);
        const EdgeMatrix v = gen.antisymmetric(n);
        const MassVector rho = gen.vector(n);
        const WeightMatrix eta = gen.matrix(n);
        for (const auto& interp : kAll) {
            const EdgeMatrix f = assemble_flux(g, eta, rho, v, interp);
            CHECK((f - flux_oracle(g, eta, rho, v, interp)).cwiseAbs().maxCoeff() <= 1e-14 * (1.0 + f.cwiseAbs().maxCoeff()));
        }
    }
}

TEST_CASE("antisymmetry validation names the worst pair")
{
    EdgeMatrix v = EdgeMatrix::Zero(3, 3);
    v(0, 2) = 1.0;
    v(2, 0) = -0.5;
    const auto defect = antisymmetry_defect(v);
    CHECK(defect.defect == 0.5);
    CHECK(((defect.i == 0 && defect.j == 2) || (defect.i == 2 && defect.j == 0)));
    try {
        validate_antisymmetric(v);
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        const std::string what = e.what();
        CHECK((what.find("(0, 2)") != std::string::npos || what.find("(2, 0)") != std::string::npos));
    }
    CHECK_THROWS_AS(mass_rhs(unit_pair(), WeightMatrix::Ones(2, 2), Eigen::Vector2d(1.0, 0.0),
                             EdgeMatrix::Ones(2, 2), FluxInterpolation::upwind()),
                    ValidationError);
    const EdgeMatrix fixed = antisymmetrize(v);
    CHECK(antisymmetry_defect(fixed).defect == 0.0);
    CHECK_NOTHROW(validate_antisymmetric(fixed));
    // Relative tolerance: large entries may carry proportionally larger rounding.
    EdgeMatrix big = EdgeMatrix::Zero(2, 2);
    big(0, 1) = 1e6;
    big(1, 0) = -1e6 * (1.0 + 1e-12);
    CHECK_NOTHROW(validate_antisymmetric(big));
}

TEST_CASE("mass rhs sums to zero for arbitrary weights")
{
    Gen gen(31);
    for (int trial = 0; trial < 1000; ++trial) {
        const Index n = gen.index(1, 12);
        const VertexSet g = gen.graph(n, 1, gen.index(0, std::min<Index>(2, n)));
        const EdgeMatrix v = gen.antisymmetric(n);
        const MassVector rho = gen.vector(n);
        const WeightMatrix eta = gen.matrix(n);  // asymmetric and signed
        const auto& interp = kAll[trial % 3];
        const MassVector r = mass_rhs(g, eta, rho, v, interp);
        CHECK(std::abs(r.sum()) <= 1e-12 * std::max(1.0, r.cwiseAbs().sum()));
    }
}

TEST_CASE("upwind never drains an empty vertex")
{
    Gen gen(12);
    for (int trial = 0; trial < 300; ++trial) {
        const Index n = gen.index(2, 10);
        const VertexSet g = gen.graph(n);
        const Eigen::MatrixXd a = gen.matrix(n).cwiseAbs();
        const WeightMatrix eta = a + a.transpose();
        MassVector rho = gen.vector(n).cwiseAbs();
        const Index empty = gen.index(0, n - 1);
        rho(empty) = 0.0;
        const MassVector r = mass_rhs(g, eta, rho, gen.antisymmetric(n), FluxInterpolation::upwind());
        CHECK(r(empty) >= 0.0);
    }
}

TEST_CASE("zeroing an edge pair only changes its endpoints")
{
    Gen gen(13);
    for (int trial = 0; trial < 100; ++trial) {
        const Index n = gen.index(3, 9);
        const VertexSet g = gen.graph(n);
        const EdgeMatrix v = gen.antisymmetric(n);
        const MassVector rho = gen.vector(n);
        WeightMatrix eta = gen.matrix(n);
        const auto& interp = kAll[trial % 3];
        const MassVector before = mass_rhs(g, eta, rho, v, interp);
        const Index i = gen.index(0, n - 1);
        Index j = gen.index(0, n - 2);
        if (j >= i) ++j;
        const EdgeMatrix f = assemble_flux(g, eta, rho, v, interp);
        eta(i, j) = 0.0;
        eta(j, i) = 0.0;
        const MassVector after = mass_rhs(g, eta, rho, v, interp);
        MassVector expected = before;
        // -div loses the (i, j) and (j, i) terms.
        expected(i) += 0.5 * (f(i, j) - f(j, i));
        expected(j) += 0.5 * (f(j, i) - f(i, j));
        CHECK((after - expected).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + before.cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("mass rhs is one-homogeneous in jointly scaled masses")
{
    Gen gen(21);
    for (int trial = 0; trial < 200; ++trial) {
        const Index n = gen.index(2, 8);
        const VertexSet g = gen.graph(n);
        const EdgeMatrix v = gen.antisymmetric(n);
        const MassVector rho = gen.vector(n);
        const WeightMatrix eta = gen.matrix(n);
        const double alpha = gen.uniform(0.01, 10.0);
        const VertexSet scaled(g.positions(), alpha * g.base_masses());
        for (const auto& interp : kAll) {
            // rho and m both scale, so Phi's arguments scale by alpha^2.
            const MassVector lhs = mass_rhs(scaled, eta, alpha * rho, v, interp);
            const MassVector rhs = alpha * alpha * mass_rhs(g, eta, rho, v, interp);
            CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + rhs.cwiseAbs().maxCoeff()));
            const MassVector lin = mass_rhs(g, eta, alpha * rho, v, interp);
            const MassVector lin_ref = alpha * mass_rhs(g, eta, rho, v, interp);
            CHECK((lin - lin_ref).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + lin_ref.cwiseAbs().maxCoeff()));
        }
    }
}

TEST_CASE("dimension mismatches are reported")
{
    const VertexSet g = unit_pair();
    CHECK_THROWS_AS(mass_rhs(g, WeightMatrix::Ones(3, 3), Eigen::Vector2d(1.0, 0.0), EdgeMatrix::Zero(2, 2),
                             FluxInterpolation::upwind()),
                    DimensionError);
    CHECK_THROWS_AS(mass_rhs(g, WeightMatrix::Ones(2, 2), Eigen::Vector3d(1.0, 0.0, 0.0), EdgeMatrix::Zero(2, 2),
                             FluxInterpolation::upwind()),
                    DimensionError);
}
