#pragma once

#include "bcstab/expr.hpp"
#include "bcstab/geometry.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cstdint>
#include <functional>
#include <memory>

namespace bcstab {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

/// Continuous piecewise-linear field on the mesh, one value per vertex.
class FeFunction {
public:
    FeFunction(MeshPtr mesh, Vector values);

    [[nodiscard]] static FeFunction zeros(MeshPtr mesh);
    [[nodiscard]] static FeFunction constant(MeshPtr mesh, double c);

    [[nodiscard]] const Mesh& mesh() const noexcept { return *mesh_; }
    [[nodiscard]] const MeshPtr& mesh_ptr() const noexcept { return mesh_; }
    [[nodiscard]] const Vector& values() const noexcept { return values_; }
    [[nodiscard]] Vector& values() noexcept { return values_; }
    [[nodiscard]] double operator[](int i) const { return values_[i]; }

private:
    MeshPtr mesh_;
    Vector values_;
};

/// Nodal field on the boundary vertices, indexed like Mesh::boundary_vertices().
class BoundaryFunction {
public:
    BoundaryFunction(MeshPtr mesh, Vector values);

    [[nodiscard]] static BoundaryFunction zeros(MeshPtr mesh);
    [[nodiscard]] static BoundaryFunction constant(MeshPtr mesh, double c);
    /// Samples an expression in (x1, x2, s) at the boundary vertices.
    [[nodiscard]] static BoundaryFunction from_expr(MeshPtr mesh, const Expr& e);

    [[nodiscard]] const Mesh& mesh() const noexcept { return *mesh_; }
    [[nodiscard]] const MeshPtr& mesh_ptr() const noexcept { return mesh_; }
    [[nodiscard]] const Vector& values() const noexcept { return values_; }
    [[nodiscard]] Vector& values() noexcept { return values_; }
    [[nodiscard]] double operator[](int i) const { return values_[i]; }

private:
    MeshPtr mesh_;
    Vector values_;
};

[[nodiscard]] BoundaryFunction trace(const FeFunction& f);

/// Three-point interior rule (barycentric 2/3, 1/6, 1/6), exact for quadratics.
/// Point q of triangle t is stored at index 3 t + q.
struct DomainQuadrature {
    std::vector<Point2> points;
    std::vector<double> weights;

    static constexpr double kBary[3][3] = {
        {2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0},
        {1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0},
        {1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0},
    };

    [[nodiscard]] int size() const noexcept { return static_cast<int>(weights.size()); }
};

[[nodiscard]] DomainQuadrature domain_quadrature(const Mesh& mesh);

/// Values of a nodal P1 field at the quadrature points.
[[nodiscard]] Vector at_quadrature(const Mesh& mesh, const Vector& nodal);
/// b_i = sum_q w_q f_q phi_i(x_q).
[[nodiscard]] Vector load_vector(const Mesh& mesh, const DomainQuadrature& quad, const Vector& qvalues);
/// M_ij = sum_q w_q c_q phi_i(x_q) phi_j(x_q).
[[nodiscard]] SparseMatrix mass_matrix(const Mesh& mesh, const DomainQuadrature& quad, const Vector& qcoeff);
/// Consistent boundary mass matrix on boundary indices (two-point Gauss per edge).
[[nodiscard]] SparseMatrix boundary_mass_matrix(const Mesh& mesh);
/// Row sums of the boundary mass matrix: half the length of each adjacent edge.
[[nodiscard]] Vector lumped_boundary_weights(const Mesh& mesh);
/// Lifts boundary-indexed values to a vertex-indexed vector (zeros in the interior).
[[nodiscard]] Vector scatter_boundary(const Mesh& mesh, const Vector& boundary_values);

struct OperatorCoefficients {
    Expr a11 = Expr::constant(1.0);
    Expr a12 = Expr::constant(0.0);
    Expr a22 = Expr::constant(1.0);
    Expr a0 = Expr::constant(1.0);
    /// Declared ellipticity constant.
    double c0 = 1.0;
};

/// Assembled bilinear forms of the operator A on one mesh.
struct EllipticForm {
    MeshPtr mesh;
    DomainQuadrature quad;
    /// Stiffness plus a0 reaction.
    SparseMatrix K;
    SparseMatrix mass_domain;
    SparseMatrix mass_boundary;
    Vector boundary_weights;
};

/// Assembles K, M_Omega and M_Gamma. Rejects coefficients that fail the sampled ellipticity
/// bound or the a0 sign condition with AdmissionError("C0").
[[nodiscard]] EllipticForm assemble(const OperatorCoefficients& coeffs, MeshPtr mesh,
                                    std::uint64_t seed = 0x5eedc0ef);

/// Factorises once, solves many right-hand sides.
class SpdSolver {
public:
    explicit SpdSolver(const SparseMatrix& K);
    ~SpdSolver();
    SpdSolver(SpdSolver&&) noexcept;
    SpdSolver& operator=(SpdSolver&&) noexcept;

    /// Residual guaranteed to satisfy ||K x - b|| <= 1e-10 (1 + ||b||) or LinearSolveError.
    [[nodiscard]] Vector solve(const Vector& b) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

[[nodiscard]] Vector solve_spd(const SparseMatrix& K, const Vector& b);

enum class NormKind { L2Omega, L2Gamma, Linf, W1r };

/// Quadrature norms. For W1r the exponent is `r` (2 < r < 4). L2Gamma of an FeFunction
/// uses its trace; L2Omega and W1r are undefined for boundary functions.
[[nodiscard]] double norm(const FeFunction& f, NormKind kind, double r = 3.0);
[[nodiscard]] double norm(const BoundaryFunction& f, NormKind kind, double r = 3.0);

/// L2(Omega_h) distance between a P1 field and a pointwise function, degree-4 quadrature.
[[nodiscard]] double l2_distance(const FeFunction& f, const std::function<double(const Point2&)>& exact);

}  // namespace bcstab
