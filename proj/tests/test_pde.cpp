#include "bcstab/pde.hpp"

#include "oracles.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

using namespace bcstab;

namespace {

Vector random_boundary(int nb, std::mt19937_64& rng, double scale)
{
    // Smooth trigonometric datum.
    std::normal_distribution<double> N(0.0, 1.0);
    const double c0 = N(rng), c1 = N(rng), s1 = N(rng), c3 = N(rng);
    Vector v(nb);
    for (int k = 0; k < nb; ++k) {
        const double s = 2 * std::numbers::pi * k / nb;
        v[k] = scale * (c0 + c1 * std::cos(s) + s1 * std::sin(s) + 0.5 * c3 * std::cos(3 * s));
    }
    return v;
}

}  // namespace

TEST(StateEquation, ZeroDataGivesZeroState)
{
    const auto dp = support::discrete(support::spec("y^2", "y^3 + y"));
    const Vector zero = Vector::Zero(dp->num_boundary());
    const StateSolveReport rep = solve_state(*dp, zero, zero);
    EXPECT_EQ(rep.y.values().cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(rep.iterations, 0);
    EXPECT_EQ(rep.apriori_ratio, 0.0);
}

TEST(StateEquation, RadialNeumannSolutionMatchesOde)
{
    // -Laplace y + y + h(y) with h = y, flux u + lam = 1.
    const oracle::RadialOde exact(2.0, 0.0, 1.0);
    const auto dp = support::discrete(support::spec("y^2", "y"), 64, 1);
    const Vector u = Vector::Constant(dp->num_boundary(), 0.75);
    const Vector lam = Vector::Constant(dp->num_boundary(), 0.25);
    const StateSolveReport rep = solve_state(*dp, u, lam);
    EXPECT_LE(l2_distance(rep.y, [&](const Point2& p) { return exact(p.norm()); }), 1e-3);
}

TEST(StateEquation, MonotoneCubicConvergesQuadratically)
{
    const auto dp = support::discrete(support::spec("y^2", "y^3 + y"), 32, 1);
    std::mt19937_64 rng(5);
    const Vector u = random_boundary(dp->num_boundary(), rng, 3.0);
    const Vector lam = random_boundary(dp->num_boundary(), rng, 1.0);
    NewtonOptions opts;
    opts.tol = 1e-13;
    const StateSolveReport rep = solve_state(*dp, u, lam, opts);
    EXPECT_LE(rep.residual, opts.tol * (1 + dp->weights().cwiseProduct(u + lam).norm()));
    EXPECT_LE((state_residual(*dp, rep.y.values(), u, lam)).norm(), rep.residual * (1 + 1e-12));
    const auto& h = rep.history;
    ASSERT_GE(h.size(), 3u);
    int quadratic_steps = 0;
    for (std::size_t k = 1; k < h.size(); ++k) {
        EXPECT_LT(h[k], h[k - 1]);
        if (h[k - 1] < 1e-2 && h[k] > 1e-14) {
            EXPECT_LE(h[k], 10.0 * h[k - 1] * h[k - 1]) << k;
            ++quadratic_steps;
        }
    }
    EXPECT_GE(quadratic_steps, 1);
}

TEST(StateEquation, WarmStartFromSolutionTakesNoSteps)
{
    const auto dp = support::discrete(support::spec("y^2", "y^3 + y"));
    const Vector u = Vector::Constant(dp->num_boundary(), 2.0);
    const Vector lam = Vector::Zero(dp->num_boundary());
    const StateSolveReport a = solve_state(*dp, u, lam);
    const StateSolveReport b = solve_state(*dp, u, lam, {}, a.y.values());
    EXPECT_EQ(b.iterations, 0);
}

TEST(StateEquation, ReportsNonConvergenceWithHistory)
{
    const auto dp = support::discrete(support::spec("y^2", "y^3 + y"));
    const Vector u = Vector::Constant(dp->num_boundary(), 50.0);
    NewtonOptions opts;
    opts.max_iter = 1;
    try {
        (void)solve_state(*dp, u, Vector::Zero(dp->num_boundary()), opts);
        FAIL();
    }
    catch (const NewtonError& e) {
        EXPECT_EQ(e.history().size(), 2u);
    }
    EXPECT_THROW((void)solve_state(*dp, Vector::Zero(3), Vector::Zero(3)), std::invalid_argument);
}

TEST(StateEquation, AprioriRatioStaysBounded)
{
    const auto dp = support::discrete(support::spec("y^2", "y^3 + y"), 32, 1);
    std::mt19937_64 rng(17);
    double lo = 1e300, hi = 0.0;
    for (int k = 0; k < 20; ++k) {
        const double scale = std::pow(10.0, -3.0 + 3.5 * k / 19.0);
        const StateSolveReport rep = solve_state(*dp, random_boundary(dp->num_boundary(), rng, scale),
                                                 random_boundary(dp->num_boundary(), rng, scale));
        lo = std::min(lo, rep.apriori_ratio);
        hi = std::max(hi, rep.apriori_ratio);
    }
    EXPECT_GT(lo, 0.0);
    EXPECT_LE(hi / lo, 50.0);
}

TEST(Linearized, OperatorIsJacobianOfResidual)
{
    const auto dp = support::discrete(support::spec("y^2", "y^3 + y"), 16, 1);
    std::mt19937_64 rng(2);
    std::normal_distribution<double> N(0.0, 1.0);
    Vector y(dp->num_vertices()), d(dp->num_vertices());
    for (int i = 0; i < y.size(); ++i) {
        y[i] = N(rng);
        d[i] = N(rng);
    }
    const Vector u = Vector::Zero(dp->num_boundary());
    const double h = 1e-6;
    const Vector fd = (state_residual(*dp, y + h * d, u, u) - state_residual(*dp, y - h * d, u, u)) / (2 * h);
    const Vector jd = linearized_operator(*dp, y) * d;
    EXPECT_LE((fd - jd).norm(), 1e-6 * (1 + jd.norm()));
}

TEST(Linearized, BoundaryResponseIsSymmetric)
{
    const auto dp = support::discrete(support::spec("y^2", "exp(y) - 1"), 24, 1);
    std::mt19937_64 rng(9);
    const Vector y = Vector::LinSpaced(dp->num_vertices(), -1.0, 1.0);
    const LinearizedSolver S(*dp, y);
    const Vector v1 = random_boundary(dp->num_boundary(), rng, 1.0);
    const Vector v2 = random_boundary(dp->num_boundary(), rng, 1.0);
    const Vector z1 = S.solve_boundary(v1), z2 = S.solve_boundary(v2);
    const double a = v2.dot(dp->weights().cwiseProduct(dp->boundary_trace(z1)));
    const double b = v1.dot(dp->weights().cwiseProduct(dp->boundary_trace(z2)));
    EXPECT_NEAR(a, b, 1e-12 * (1 + std::abs(a)));
    EXPECT_LE((solve_linearized(*dp, y, v1) - z1).norm(), 1e-12 * (1 + z1.norm()));
}

TEST(Adjoint, RadialSolutionMatchesOde)
{
    // L = y, ell = y, h = y, no multipliers: -Laplace theta + 2 theta = -1, d_nu theta = -1.
    const oracle::RadialOde exact(2.0, -1.0, -1.0);
    const auto dp = support::discrete(support::spec("y", "y", {"y - 1", "y - 2"}, "y"), 64, 1);
    const Vector y = Vector::Zero(dp->num_vertices());
    const Vector lam = Vector::Zero(dp->num_boundary());
    const std::vector<Vector> e(2, Vector::Zero(dp->num_boundary()));
    const Vector theta = solve_adjoint(*dp, y, lam, e);
    EXPECT_LE(l2_distance(FeFunction(dp->mesh_ptr(), theta), [&](const Point2& p) { return exact(p.norm()); }),
              1e-3);
    EXPECT_LE(adjoint_residual(*dp, y, theta, lam, e), 1e-10);
}

TEST(Adjoint, MultiplierTermsEnterThroughGy)
{
    // g_1 = 2 y: multiplier e_1 adds -2 W e_1 to the right-hand side.
    const auto dp = support::discrete(support::spec("0", "y", {"2*y", "y - 2"}), 16, 0);
    const Vector y = Vector::Zero(dp->num_vertices());
    const Vector lam = Vector::Zero(dp->num_boundary());
    std::vector<Vector> e(2, Vector::Zero(dp->num_boundary()));
    e[0].setConstant(0.5);
    const Vector rhs = adjoint_rhs(*dp, y, lam, e);
    const Vector expected = -scatter_boundary(dp->mesh(), dp->weights());
    EXPECT_LE((rhs - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Adjoint, DualityWithLinearizedState)
{
    // For e = 0 and L = 0: theta^T W v = -(W ell_y)^T z, z the boundary response to v.
    const auto dp = support::discrete(support::spec("0", "y^3 + y", {"y - 1", "y - 2"}, "x1*y"), 24, 1);
    std::mt19937_64 rng(4);
    const Vector y = Vector::LinSpaced(dp->num_vertices(), -0.5, 0.5);
    const Vector lam = Vector::Zero(dp->num_boundary());
    const std::vector<Vector> e(2, Vector::Zero(dp->num_boundary()));
    const Vector theta = solve_adjoint(*dp, y, lam, e);
    const Vector v = random_boundary(dp->num_boundary(), rng, 1.0);
    const Vector z = solve_linearized(*dp, y, v);
    const Vector ell_y = dp->eval_boundary(dp->problem().ell_y, dp->boundary_trace(y), lam);
    const double lhs = dp->boundary_trace(theta).dot(dp->weights().cwiseProduct(v));
    const double rhs = -ell_y.dot(dp->weights().cwiseProduct(dp->boundary_trace(z)));
    EXPECT_NEAR(lhs, rhs, 1e-11 * (1 + std::abs(lhs)));
}
