#include "bcstab/solver.hpp"

#include "bcstab/pde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace bcstab {

namespace {

constexpr double kMinDamping = 1.0 / 64.0;

KktPoint make_point(const DiscreteProblem& dp, const Vector& y, const Vector& u, const Vector& theta,
                    const std::vector<Vector>& e, const Vector& lam)
{
    std::vector<BoundaryFunction> ef;
    for (const auto& ei : e) ef.emplace_back(dp.mesh_ptr(), ei);
    return {FeFunction(dp.mesh_ptr(), y), BoundaryFunction(dp.mesh_ptr(), u), FeFunction(dp.mesh_ptr(), theta),
            std::move(ef), BoundaryFunction(dp.mesh_ptr(), lam)};
}

}  // namespace

void SolveOptions::validate() const
{
    if (max_outer < 1) throw std::invalid_argument("max_outer must be at least 1");
    if (!(kkt_tol > 0.0)) throw std::invalid_argument("kkt_tol must be positive");
    if (!(damping > 0.0 && damping <= 1.0)) throw std::invalid_argument("damping must lie in (0, 1]");
}

nlohmann::json to_json(const SolveOptions& o)
{
    return {{"max_outer", o.max_outer}, {"kkt_tol", o.kkt_tol}, {"damping", o.damping}, {"adaptive", o.adaptive}};
}

SolveResult solve(const DiscreteProblem& dp, const Vector& lam, const Vector& u0, const SolveOptions& opts)
{
    opts.validate();
    const int nb = dp.num_boundary();
    if (lam.size() != nb || u0.size() != nb) throw std::invalid_argument("solve: boundary data size mismatch");

    NewtonOptions newton;
    newton.tol = std::min(1e-10, 0.1 * opts.kkt_tol);

    Vector u = u0;
    Vector y = Vector::Zero(dp.num_vertices());
    Vector theta_prev;
    double theta_damp = opts.damping;
    double prev_res = std::numeric_limits<double>::infinity();
    std::vector<double> history;

    for (int k = 0; k <= opts.max_outer; ++k) {
        try {
            y = solve_state(dp, u, lam, newton, y).y.values();
        }
        catch (const std::exception& err) {
            throw SolveError(SolveError::Kind::State, std::string("state solve failed: ") + err.what(), history);
        }
        const Vector yb = dp.boundary_trace(y);
        const PartitionH5 part = h5_margins(dp, yb, lam);
        if (!(part.sigma1 > 0.0)) {
            std::ostringstream os;
            os << "[H5] partition margin sigma1 = " << part.sigma1 << " <= 0 at outer iteration " << k;
            throw SolveError(SolveError::Kind::H5, os.str(), history);
        }
        // Multipliers are recovered against the undamped projection of the previous adjoint, so that
        // nodes where the constraint is inactive get e = 0 before the damped u has caught up.
        std::vector<Vector> e(dp.m(), Vector::Zero(nb));
        if (theta_prev.size() != 0) {
            const Vector thb_prev = dp.boundary_trace(theta_prev);
            const BoundaryValues bv = boundary_values(dp, yb, lam);
            Vector u_proj(nb);
            for (int j = 0; j < nb; ++j) u_proj[j] = std::min(-bv.g_max[j], (thb_prev[j] - bv.alpha[j]) / bv.beta[j]);
            e = recover_multipliers(dp, thb_prev, u_proj, lam, part);
        }
        const Vector theta = solve_adjoint(dp, y, lam, e);

        KktPoint point = make_point(dp, y, u, theta, e, lam);
        const KktResiduals res = residuals(dp, point);
        history.push_back(res.max());
        if (res.within(opts.kkt_tol)) return {std::move(point), res, std::move(history), k};
        if (k == opts.max_outer) break;

        const BoundaryValues bv = boundary_values(dp, yb, lam);
        const Vector thb = dp.boundary_trace(theta);
        Vector target(nb);
        for (int j = 0; j < nb; ++j) target[j] = std::min(-bv.g_max[j], (thb[j] - bv.alpha[j]) / bv.beta[j]);

        if (opts.adaptive && k > 0) {
            theta_damp = res.max() > prev_res ? std::max(kMinDamping, 0.5 * theta_damp)
                                              : std::min(1.0, 1.2 * theta_damp);
        }
        prev_res = res.max();
        u = (1.0 - theta_damp) * u + theta_damp * target;
        theta_prev = theta;
    }
    std::ostringstream os;
    os << "projection iteration did not reach kkt_tol = " << opts.kkt_tol << " in " << opts.max_outer
       << " outer iterations (last max residual " << history.back() << ")";
    throw SolveError(SolveError::Kind::NonConvergence, os.str(), history);
}

SolveResult solve(const DiscreteProblem& dp, const BoundaryFunction& lam, const BoundaryFunction& u0,
                  const SolveOptions& opts)
{
    return solve(dp, lam.values(), u0.values(), opts);
}

double cost(const DiscreteProblem& dp, const Vector& y, const Vector& u, const Vector& lam)
{
    const Vector yq = at_quadrature(dp.mesh(), y);
    const Vector Lq = dp.eval_domain(dp.spec().L, yq);
    double J = 0.0;
    for (int q = 0; q < Lq.size(); ++q) J += dp.form().quad.weights[q] * Lq[q];
    const Vector yb = dp.boundary_trace(y);
    const Vector ell = dp.eval_boundary(dp.spec().ell, yb, lam);
    const Vector alpha = dp.eval_boundary(dp.spec().alpha, yb, lam);
    const Vector beta = dp.eval_boundary(dp.spec().beta, yb, lam);
    const Vector& W = dp.weights();
    for (int k = 0; k < u.size(); ++k) J += W[k] * (ell[k] + alpha[k] * u[k] + 0.5 * beta[k] * u[k] * u[k]);
    return J;
}

double reduced_cost(const DiscreteProblem& dp, const Vector& lam, const Vector& u)
{
    const Vector y = solve_state(dp, u, lam).y.values();
    return cost(dp, y, u, lam);
}

Vector reduced_gradient(const DiscreteProblem& dp, const Vector& lam, const Vector& u)
{
    const Vector y = solve_state(dp, u, lam).y.values();
    const Vector theta = solve_adjoint(dp, y, lam, std::vector<Vector>(dp.m(), Vector::Zero(dp.num_boundary())));
    const Vector yb = dp.boundary_trace(y);
    const Vector alpha = dp.eval_boundary(dp.spec().alpha, yb, lam);
    const Vector beta = dp.eval_boundary(dp.spec().beta, yb, lam);
    return dp.weights().cwiseProduct(alpha + beta.cwiseProduct(u) - dp.boundary_trace(theta));
}

double lagrangian(const DiscreteProblem& dp, const KktPoint& p, const Vector& y, const Vector& u)
{
    const Vector& lam = p.lambda.values();
    double val = cost(dp, y, u, lam) + p.theta.values().dot(state_residual(dp, y, u, lam));
    const Vector yb = dp.boundary_trace(y);
    for (int i = 0; i < dp.m(); ++i) {
        const Vector g = dp.eval_boundary(dp.spec().g[i], yb, lam);
        val += p.e[i].values().dot(dp.weights().cwiseProduct(g + u));
    }
    return val;
}

double ssc_quadratic_form(const DiscreteProblem& dp, const KktPoint& p, const Vector& z, const Vector& v)
{
    const Problem& prob = dp.problem();
    const Vector& lam = p.lambda.values();
    const Vector yq = at_quadrature(dp.mesh(), p.y.values());
    const Vector thq = at_quadrature(dp.mesh(), p.theta.values());
    const Vector zq = at_quadrature(dp.mesh(), z);
    const Vector coeff = dp.eval_domain(prob.L_yy, yq) + thq.cwiseProduct(dp.eval_domain(prob.h_yy, yq));
    double Q = 0.0;
    for (int q = 0; q < zq.size(); ++q) Q += dp.form().quad.weights[q] * coeff[q] * zq[q] * zq[q];

    const Vector yb = dp.boundary_trace(p.y.values());
    const Vector zb = dp.boundary_trace(z);
    Vector bcoeff = dp.eval_boundary(prob.ell_yy, yb, lam);
    for (int i = 0; i < dp.m(); ++i) bcoeff += p.e[i].values().cwiseProduct(dp.eval_boundary(prob.g_yy[i], yb, lam));
    const Vector beta = dp.eval_boundary(dp.spec().beta, yb, lam);
    const Vector& W = dp.weights();
    for (int k = 0; k < zb.size(); ++k) Q += W[k] * (bcoeff[k] * zb[k] * zb[k] + beta[k] * v[k] * v[k]);
    return Q;
}

}  // namespace bcstab
