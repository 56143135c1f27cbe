#include "bcstab/pde.hpp"

#include "bcstab/errors.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace bcstab {

namespace {

Vector boundary_load(const DiscreteProblem& dp, const Vector& boundary_values)
{
    return scatter_boundary(dp.mesh(), dp.weights().cwiseProduct(boundary_values));
}

void check_sizes(const DiscreteProblem& dp, const Vector& u, const Vector& lam)
{
    if (u.size() != dp.num_boundary() || lam.size() != dp.num_boundary()) {
        throw std::invalid_argument("boundary data size does not match the mesh");
    }
}

}  // namespace

Vector state_residual(const DiscreteProblem& dp, const Vector& y, const Vector& u, const Vector& lam)
{
    const Mesh& mesh = dp.mesh();
    const Vector yq = at_quadrature(mesh, y);
    const Vector hq = dp.eval_domain(dp.spec().h, yq);
    return dp.form().K * y + load_vector(mesh, dp.form().quad, hq) - boundary_load(dp, u + lam);
}

SparseMatrix linearized_operator(const DiscreteProblem& dp, const Vector& y)
{
    const Vector yq = at_quadrature(dp.mesh(), y);
    const Vector hy = dp.eval_domain(dp.problem().h_y, yq);
    SparseMatrix A = dp.form().K + mass_matrix(dp.mesh(), dp.form().quad, hy);
    return A;
}

StateSolveReport solve_state(const DiscreteProblem& dp, const Vector& u, const Vector& lam,
                             const NewtonOptions& opts, const Vector& y0)
{
    check_sizes(dp, u, lam);
    const double target = opts.tol * (1.0 + dp.weights().cwiseProduct(u + lam).norm());

    Vector y = y0.size() == dp.num_vertices() ? y0 : Vector::Zero(dp.num_vertices());
    Vector F = state_residual(dp, y, u, lam);
    double res = F.norm();
    std::vector<double> history{res};
    int it = 0;
    while (res > target) {
        if (it == opts.max_iter) {
            std::ostringstream os;
            os << "state Newton did not converge in " << opts.max_iter << " iterations, residual " << res;
            throw NewtonError(os.str(), history);
        }
        ++it;
        const Vector dy = SpdSolver(linearized_operator(dp, y)).solve(-F);
        double step = 1.0;
        Vector trial = y + dy;
        Vector Ft = state_residual(dp, trial, u, lam);
        int halvings = 0;
        while (!(Ft.norm() < res) && Ft.norm() > target) {
            if (++halvings > opts.max_halvings) {
                std::ostringstream os;
                os << "state Newton line search failed after " << opts.max_halvings << " halvings, residual "
                   << res;
                throw NewtonError(os.str(), history);
            }
            step *= 0.5;
            trial = y + step * dy;
            Ft = state_residual(dp, trial, u, lam);
        }
        y = std::move(trial);
        F = std::move(Ft);
        res = F.norm();
        history.push_back(res);
    }

    StateSolveReport rep{FeFunction(dp.mesh_ptr(), y), it, res, std::move(history), 0.0};
    const double data = norm(BoundaryFunction(dp.mesh_ptr(), u), NormKind::L2Gamma) +
                        norm(BoundaryFunction(dp.mesh_ptr(), lam), NormKind::L2Gamma);
    const double ny = norm(rep.y, NormKind::W1r, dp.spec().r);
    rep.apriori_ratio = data > 0.0 ? ny / data : (ny > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    return rep;
}

StateSolveReport solve_state(const DiscreteProblem& dp, const BoundaryFunction& u, const BoundaryFunction& lam,
                             const NewtonOptions& opts)
{
    return solve_state(dp, u.values(), lam.values(), opts);
}

Vector adjoint_rhs(const DiscreteProblem& dp, const Vector& y, const Vector& lam, const std::vector<Vector>& e)
{
    const Problem& prob = dp.problem();
    const Vector yq = at_quadrature(dp.mesh(), y);
    const Vector yb = dp.boundary_trace(y);
    Vector bd = dp.eval_boundary(prob.ell_y, yb, lam);
    for (std::size_t i = 0; i < e.size(); ++i) {
        bd += dp.eval_boundary(prob.g_y[i], yb, lam).cwiseProduct(e[i]);
    }
    return -load_vector(dp.mesh(), dp.form().quad, dp.eval_domain(prob.L_y, yq)) - boundary_load(dp, bd);
}

Vector solve_adjoint(const DiscreteProblem& dp, const Vector& y, const Vector& lam, const std::vector<Vector>& e)
{
    return LinearizedSolver(dp, y).solve(adjoint_rhs(dp, y, lam, e));
}

FeFunction solve_adjoint(const DiscreteProblem& dp, const FeFunction& y, const BoundaryFunction& lam,
                         const std::vector<BoundaryFunction>& e)
{
    std::vector<Vector> ev;
    for (const auto& ei : e) ev.push_back(ei.values());
    return {dp.mesh_ptr(), solve_adjoint(dp, y.values(), lam.values(), ev)};
}

double adjoint_residual(const DiscreteProblem& dp, const Vector& y, const Vector& theta, const Vector& lam,
                        const std::vector<Vector>& e)
{
    return (linearized_operator(dp, y) * theta - adjoint_rhs(dp, y, lam, e)).norm();
}

LinearizedSolver::LinearizedSolver(const DiscreteProblem& dp, const Vector& y)
    : dp_(&dp), A_(linearized_operator(dp, y)), solver_(A_)
{
}

Vector LinearizedSolver::solve_boundary(const Vector& v) const { return solve(boundary_load(*dp_, v)); }

Vector solve_linearized(const DiscreteProblem& dp, const Vector& y, const Vector& v)
{
    return LinearizedSolver(dp, y).solve_boundary(v);
}

}  // namespace bcstab
