#include "bcstab/errors.hpp"
#include "bcstab/fem.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <random>

using namespace bcstab;

namespace {

OperatorCoefficients laplace_plus(double a0)
{
    OperatorCoefficients c;
    c.a0 = Expr::constant(a0);
    return c;
}

Eigen::MatrixXd dense(const SparseMatrix& A) { return Eigen::MatrixXd(A); }

}  // namespace

TEST(Assemble, MatchesClosedFormElementMatrices)
{
    for (int r = 0; r <= 1; ++r) {
        const MeshPtr mesh = make_disk_mesh(16, r);
        const EllipticForm f = assemble(laplace_plus(2.0), mesh);
        const oracle::DenseForms ref = oracle::dense_forms(*mesh);
        const Eigen::MatrixXd expected = ref.stiffness + 2.0 * ref.mass;
        EXPECT_LE((dense(f.K) - expected).cwiseAbs().maxCoeff(), 1e-13);
        EXPECT_LE((dense(f.mass_domain) - ref.mass).cwiseAbs().maxCoeff(), 1e-14);
        EXPECT_LE((f.boundary_weights - ref.weights).cwiseAbs().maxCoeff(), 1e-15);
    }
}

TEST(Assemble, StiffnessIsExactlySymmetricAndPositiveDefinite)
{
    OperatorCoefficients c;
    c.a11 = parse("2 + x1^2");
    c.a12 = parse("0.3*sin(x2)");
    c.a22 = parse("1.5 + x1*x2");
    c.a0 = parse("0.5 + 0.5*x1");
    c.c0 = 0.5;
    const EllipticForm f = assemble(c, make_disk_mesh(20, 1));
    const Eigen::MatrixXd K = dense(f.K);
    EXPECT_EQ((K - K.transpose()).cwiseAbs().maxCoeff(), 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K);
    EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
}

TEST(Assemble, ConstantsOnlySeeTheReactionTerm)
{
    const MeshPtr mesh = make_disk_mesh(24, 1);
    const EllipticForm f = assemble(laplace_plus(1.0), mesh);
    const Vector one = Vector::Ones(mesh->num_vertices());
    EXPECT_NEAR(one.dot(f.K * one), mesh->area(), 1e-12);
    const EllipticForm g = assemble(laplace_plus(3.0), mesh);
    EXPECT_NEAR(one.dot(g.K * one), 3.0 * mesh->area(), 1e-12);
}

TEST(Assemble, RejectsDegenerateCoefficients)
{
    const MeshPtr mesh = make_disk_mesh(16, 0);
    auto label_of = [&](const OperatorCoefficients& c) -> std::string {
        try {
            (void)assemble(c, mesh);
        }
        catch (const AdmissionError& e) {
            return e.label();
        }
        return "";
    };
    OperatorCoefficients weak;
    weak.c0 = 2.0;
    EXPECT_EQ(label_of(weak), "C0");
    OperatorCoefficients no_reaction = laplace_plus(0.0);
    EXPECT_EQ(label_of(no_reaction), "C0");
    OperatorCoefficients negative = laplace_plus(1.0);
    negative.a0 = parse("x1");
    EXPECT_EQ(label_of(negative), "C0");
    OperatorCoefficients state_dependent;
    state_dependent.a11 = parse("1 + y^2");
    EXPECT_EQ(label_of(state_dependent), "C0");
    OperatorCoefficients indefinite;
    indefinite.a12 = parse("2");
    EXPECT_EQ(label_of(indefinite), "C0");
}

TEST(BoundaryMass, RowSumsAreLumpedWeights)
{
    const MeshPtr mesh = make_disk_mesh(30, 1);
    const SparseMatrix Mb = boundary_mass_matrix(*mesh);
    const Vector rows = Mb * Vector::Ones(mesh->num_boundary());
    EXPECT_LE((rows - lumped_boundary_weights(*mesh)).cwiseAbs().maxCoeff(), 1e-15);
    // Consistent P1 edge mass: len/6 [2 1; 1 2].
    const double len = mesh->edge_length(0);
    EXPECT_NEAR(Mb.coeff(0, 1), len / 6.0, 1e-15);
    EXPECT_NEAR(Vector::Ones(mesh->num_boundary()).dot(rows), mesh->perimeter(), 1e-13);
}

TEST(SpdSolve, MatchesGaussianEliminationOnRandomSystem)
{
    std::mt19937_64 rng(11);
    std::normal_distribution<double> N(0.0, 1.0);
    const int n = 50;
    Eigen::MatrixXd B(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) B(i, j) = N(rng);
    const Eigen::MatrixXd A = B * B.transpose() + n * Eigen::MatrixXd::Identity(n, n);
    Vector b(n);
    for (int i = 0; i < n; ++i) b[i] = N(rng);
    const Vector x = solve_spd(A.sparseView(), b);
    const Vector ref = oracle::gauss_solve(A, b);
    EXPECT_LE((x - ref).norm(), 1e-10 * (1 + ref.norm()));
}

TEST(SpdSolve, SolverCanBeReused)
{
    const MeshPtr mesh = make_disk_mesh(16, 1);
    const EllipticForm f = assemble(laplace_plus(1.0), mesh);
    const SpdSolver solver(f.K);
    for (int k = 0; k < 3; ++k) {
        const Vector b = Vector::LinSpaced(mesh->num_vertices(), -1.0 + k, 1.0 + k);
        const Vector x = solver.solve(b);
        EXPECT_LE((f.K * x - b).norm(), 1e-10 * (1 + b.norm()));
    }
}

TEST(SpdSolve, FailsOnIndefiniteMatrix)
{
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(3, 3);
    A(2, 2) = -1.0;
    EXPECT_THROW((void)solve_spd(A.sparseView(), Vector::Ones(3)), LinearSolveError);
}

TEST(Norms, ConstantFunction)
{
    const MeshPtr mesh = make_disk_mesh(32, 0);
    const FeFunction one = FeFunction::constant(mesh, 1.0);
    EXPECT_NEAR(norm(one, NormKind::L2Omega), std::sqrt(mesh->area()), 1e-13);
    EXPECT_NEAR(norm(one, NormKind::L2Gamma), std::sqrt(mesh->perimeter()), 1e-13);
    EXPECT_NEAR(norm(one, NormKind::Linf), 1.0, 0.0);
    EXPECT_NEAR(norm(one, NormKind::W1r, 3.0), std::cbrt(mesh->area()), 1e-13);
    EXPECT_THROW((void)norm(BoundaryFunction::zeros(mesh), NormKind::W1r), std::invalid_argument);
}

TEST(Norms, LinearFunction)
{
    const MeshPtr mesh = make_disk_mesh(32, 1);
    Vector v(mesh->num_vertices());
    for (int i = 0; i < v.size(); ++i) v[i] = mesh->vertices()[i].x();
    const FeFunction f(mesh, v);
    // x1 is in the P1 space; the 3-point rule is exact for x1^2.
    double m2 = 0.0;
    const oracle::DenseForms ref = oracle::dense_forms(*mesh);
    m2 = v.dot(ref.mass * v);
    EXPECT_NEAR(norm(f, NormKind::L2Omega), std::sqrt(m2), 1e-13);
    EXPECT_NEAR(norm(f, NormKind::L2Omega), std::sqrt(std::numbers::pi / 4), 5e-3);
    EXPECT_NEAR(norm(f, NormKind::L2Gamma), std::sqrt(std::numbers::pi), 5e-3);
    EXPECT_NEAR(norm(f, NormKind::Linf), 1.0, 1e-15);
    EXPECT_NEAR(l2_distance(f, [](const Point2& p) { return p.x(); }), 0.0, 1e-14);
}

TEST(Norms, ConstructorsRejectBadInput)
{
    const MeshPtr mesh = make_disk_mesh(16, 0);
    EXPECT_THROW(FeFunction(mesh, Vector::Zero(3)), std::invalid_argument);
    Vector v = Vector::Zero(mesh->num_boundary());
    v[0] = std::nan("");
    EXPECT_THROW(BoundaryFunction(mesh, v), std::invalid_argument);
}

TEST(Manufactured, ConstantSolutionIsReproducedExactly)
{
    // -Laplace y + y = 1, zero flux: y = 1.
    const MeshPtr mesh = make_disk_mesh(24, 1);
    const EllipticForm f = assemble(laplace_plus(1.0), mesh);
    const Vector b = load_vector(*mesh, f.quad, Vector::Ones(f.quad.size()));
    const Vector y = solve_spd(f.K, b);
    EXPECT_LE((y.array() - 1.0).abs().maxCoeff(), 1e-11);
}

TEST(Manufactured, RadialNeumannProblemConvergesAtSecondOrder)
{
    // -Laplace y + 2 y = 0, d_nu y = 1 on the unit circle.
    const oracle::RadialOde exact(2.0, 0.0, 1.0);
    const double k = std::sqrt(2.0);
    const double y0 = 1.0 / (k * std::cyl_bessel_i(1.0, k));
    EXPECT_NEAR(exact(0.0), y0, 1e-9);
    EXPECT_NEAR(exact(0.5), y0 * std::cyl_bessel_i(0.0, 0.5 * k), 1e-9);

    std::vector<double> err;
    for (int r = 0; r <= 3; ++r) {
        const MeshPtr mesh = make_disk_mesh(16, r);
        const EllipticForm f = assemble(laplace_plus(2.0), mesh);
        const Vector y = solve_spd(f.K, scatter_boundary(*mesh, f.boundary_weights));
        err.push_back(l2_distance(FeFunction(mesh, y), [&](const Point2& p) { return exact(p.norm()); }));
    }
    for (std::size_t i = 1; i < err.size(); ++i) EXPECT_GE(std::log2(err[i - 1] / err[i]), 1.8) << i;
}

TEST(Trace, AndScatterAreInverse)
{
    const MeshPtr mesh = make_disk_mesh(16, 1);
    const Vector b = Vector::LinSpaced(mesh->num_boundary(), 0.0, 1.0);
    const Vector full = scatter_boundary(*mesh, b);
    EXPECT_EQ((trace(FeFunction(mesh, full)).values() - b).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_NEAR(full.sum(), b.sum(), 1e-14);
}
