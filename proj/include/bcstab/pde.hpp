#pragma once

#include "bcstab/fem.hpp"
#include "bcstab/problem.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace bcstab {

struct NewtonOptions {
    /// Stop once ||F(y)|| <= tol * (1 + ||W (u + lam)||).
    double tol = 1e-10;
    int max_iter = 50;
    int max_halvings = 30;
};

struct StateSolveReport {
    FeFunction y;
    int iterations = 0;
    double residual = 0.0;
    std::vector<double> history;
    /// ||y||_{W1r} / (||u||_{L2(Gamma)} + ||lam||_{L2(Gamma)}); 0 for zero data.
    double apriori_ratio = 0.0;
};

class NewtonError : public std::runtime_error {
public:
    NewtonError(const std::string& message, std::vector<double> history)
        : std::runtime_error(message), history_(std::move(history))
    {
    }
    [[nodiscard]] const std::vector<double>& history() const noexcept { return history_; }

private:
    std::vector<double> history_;
};

/// F(y) = K y + N(y) - W (u + lam), with N the h-load at the interior quadrature points.
[[nodiscard]] Vector state_residual(const DiscreteProblem& dp, const Vector& y, const Vector& u, const Vector& lam);

/// K + M(h_y(y)), the Jacobian of F.
[[nodiscard]] SparseMatrix linearized_operator(const DiscreteProblem& dp, const Vector& y);

/// Damped Newton on F. `y0` seeds the iteration (zero if empty).
[[nodiscard]] StateSolveReport solve_state(const DiscreteProblem& dp, const Vector& u, const Vector& lam,
                                           const NewtonOptions& opts = {}, const Vector& y0 = Vector());
[[nodiscard]] StateSolveReport solve_state(const DiscreteProblem& dp, const BoundaryFunction& u,
                                           const BoundaryFunction& lam, const NewtonOptions& opts = {});

/// Right-hand side of the adjoint system: -load(L_y) - W (ell_y + sum_i g_iy e_i).
[[nodiscard]] Vector adjoint_rhs(const DiscreteProblem& dp, const Vector& y, const Vector& lam,
                                 const std::vector<Vector>& e);

/// Solves (K + M(h_y)) theta = adjoint_rhs.
[[nodiscard]] Vector solve_adjoint(const DiscreteProblem& dp, const Vector& y, const Vector& lam,
                                   const std::vector<Vector>& e);
[[nodiscard]] FeFunction solve_adjoint(const DiscreteProblem& dp, const FeFunction& y, const BoundaryFunction& lam,
                                       const std::vector<BoundaryFunction>& e);

/// Euclidean norm of the adjoint residual at (y, theta, e).
[[nodiscard]] double adjoint_residual(const DiscreteProblem& dp, const Vector& y, const Vector& theta,
                                      const Vector& lam, const std::vector<Vector>& e);

/// Factorised linearised operator at a fixed state, for repeated solves.
class LinearizedSolver {
public:
    LinearizedSolver(const DiscreteProblem& dp, const Vector& y);

    [[nodiscard]] const SparseMatrix& matrix() const noexcept { return A_; }
    [[nodiscard]] Vector solve(const Vector& rhs) const { return solver_.solve(rhs); }
    /// State direction z of the linearised equation with Neumann datum v: A z = W v.
    [[nodiscard]] Vector solve_boundary(const Vector& v) const;

private:
    const DiscreteProblem* dp_;
    SparseMatrix A_;
    SpdSolver solver_;
};

/// Linearised state equation A z + h_y(y) z = 0, d_nu z = v.
[[nodiscard]] Vector solve_linearized(const DiscreteProblem& dp, const Vector& y, const Vector& v);

}  // namespace bcstab
