#include "bcstab/kkt.hpp"

#include "bcstab/errors.hpp"
#include "bcstab/pde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace bcstab {

namespace {

bool same_mesh(const MeshPtr& a, const MeshPtr& b) { return a.get() == b.get() || a->hash() == b->hash(); }

std::vector<Vector> values_of(const std::vector<BoundaryFunction>& fs)
{
    std::vector<Vector> out;
    out.reserve(fs.size());
    for (const auto& f : fs) out.push_back(f.values());
    return out;
}

}  // namespace

void KktPoint::validate(int m) const
{
    if (m < 2) throw std::invalid_argument("KktPoint: need m >= 2 multipliers");
    if (static_cast<int>(e.size()) != m) {
        throw std::invalid_argument("KktPoint: expected " + std::to_string(m) + " multipliers, got " +
                                    std::to_string(e.size()));
    }
    const MeshPtr& ref = y.mesh_ptr();
    bool ok = same_mesh(ref, u.mesh_ptr()) && same_mesh(ref, theta.mesh_ptr()) && same_mesh(ref, lambda.mesh_ptr());
    for (const auto& ei : e) ok = ok && same_mesh(ref, ei.mesh_ptr());
    if (!ok) throw std::invalid_argument("KktPoint: fields live on different meshes");
}

double KktResiduals::max() const noexcept
{
    return std::max({r_state, r_adjoint, r_stationarity, r_comp, r_feas});
}

nlohmann::json to_json(const KktResiduals& r)
{
    return {{"r_state", r.r_state},       {"r_adjoint", r.r_adjoint}, {"r_stationarity", r.r_stationarity},
            {"r_comp", r.r_comp},         {"r_feas", r.r_feas},       {"sigma1", r.sigma1}};
}

BoundaryValues boundary_values(const DiscreteProblem& dp, const Vector& y_b, const Vector& lam)
{
    const Problem& prob = dp.problem();
    BoundaryValues bv;
    bv.alpha = dp.eval_boundary(prob.spec.alpha, y_b, lam);
    bv.beta = dp.eval_boundary(prob.spec.beta, y_b, lam);
    bv.g_max = Vector::Constant(dp.num_boundary(), -std::numeric_limits<double>::infinity());
    for (int i = 0; i < prob.m(); ++i) {
        bv.g.push_back(dp.eval_boundary(prob.spec.g[i], y_b, lam));
        bv.g_y.push_back(dp.eval_boundary(prob.g_y[i], y_b, lam));
        bv.g_max = bv.g_max.cwiseMax(bv.g.back());
    }
    return bv;
}

double active_tolerance(const Vector& u)
{
    return 1e-8 * (1.0 + (u.size() ? u.cwiseAbs().maxCoeff() : 0.0));
}

KktResiduals residuals(const DiscreteProblem& dp, const KktPoint& p)
{
    p.validate(dp.m());
    const Vector& y = p.y.values();
    const Vector& u = p.u.values();
    const Vector& lam = p.lambda.values();
    const Vector yb = dp.boundary_trace(y);
    const Vector thb = dp.boundary_trace(p.theta.values());
    const std::vector<Vector> e = values_of(p.e);
    const BoundaryValues bv = boundary_values(dp, yb, lam);

    KktResiduals r;
    r.r_state = state_residual(dp, y, u, lam).norm();
    r.r_adjoint = adjoint_residual(dp, y, p.theta.values(), lam, e);

    Vector sta = bv.alpha + bv.beta.cwiseProduct(u) - thb;
    for (const auto& ei : e) sta += ei;
    r.r_stationarity = sta.cwiseAbs().maxCoeff();

    for (int i = 0; i < dp.m(); ++i) {
        const Vector slack = bv.g[i] + u;
        r.r_comp = std::max(r.r_comp, e[i].cwiseProduct(slack).cwiseAbs().maxCoeff());
        r.r_comp = std::max(r.r_comp, (-e[i]).maxCoeff());
        r.r_feas = std::max(r.r_feas, slack.maxCoeff());
    }
    r.sigma1 = h5_margins(dp, yb, lam).sigma1;
    return r;
}

double projection_identity_gap(const DiscreteProblem& dp, const KktPoint& p)
{
    p.validate(dp.m());
    const Vector& u = p.u.values();
    const Vector yb = dp.boundary_trace(p.y.values());
    const Vector thb = dp.boundary_trace(p.theta.values());
    const BoundaryValues bv = boundary_values(dp, yb, p.lambda.values());
    const double floor = 0.5 * dp.spec().gamma;
    double gap = 0.0;
    for (int k = 0; k < dp.num_boundary(); ++k) {
        if (bv.beta[k] < floor) {
            throw AdmissionError("H3", "beta(lambda) = " + std::to_string(bv.beta[k]) + " < gamma/2 at boundary node " +
                                           std::to_string(k));
        }
        const double g = bv.g_max[k];
        const double lhs = g + u[k];
        const double rhs = project_halfline((thb[k] - bv.alpha[k]) / bv.beta[k] + g);
        gap = std::max(gap, std::abs(lhs - rhs));
    }
    return gap;
}

PartitionH5 h5_margins(const DiscreteProblem& dp, const Vector& y_b, const Vector& lam)
{
    const int m = dp.m();
    const int nb = dp.num_boundary();
    std::vector<Vector> g;
    for (int i = 0; i < m; ++i) g.push_back(dp.eval_boundary(dp.spec().g[i], y_b, lam));

    constexpr double kNegInf = -std::numeric_limits<double>::infinity();
    PartitionH5 part;
    part.label.assign(nb, 0);
    part.margin = Eigen::MatrixXd::Constant(m, m, kNegInf);
    for (int k = 0; k < nb; ++k) {
        int best = 0;
        for (int i = 1; i < m; ++i) {
            if (g[i][k] > g[best][k]) best = i;
        }
        part.label[k] = best;
        for (int j = 0; j < m; ++j) {
            if (j != best) part.margin(best, j) = std::max(part.margin(best, j), g[j][k] - g[best][k]);
        }
    }
    double worst = kNegInf;
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            if (i != j) worst = std::max(worst, part.margin(i, j));
        }
    }
    part.sigma1 = -worst;
    return part;
}

PartitionH5 h5_margins(const DiscreteProblem& dp, const KktPoint& p)
{
    return h5_margins(dp, dp.boundary_trace(p.y.values()), p.lambda.values());
}

std::vector<Vector> recover_multipliers(const DiscreteProblem& dp, const Vector& theta_b, const Vector& u,
                                        const Vector& lam, const PartitionH5& partition)
{
    const int nb = dp.num_boundary();
    const Vector zero = Vector::Zero(nb);
    const Vector alpha = dp.eval_boundary(dp.spec().alpha, zero, lam);
    const Vector beta = dp.eval_boundary(dp.spec().beta, zero, lam);
    std::vector<Vector> e(dp.m(), Vector::Zero(nb));
    for (int k = 0; k < nb; ++k) {
        e[partition.label[k]][k] = std::max(0.0, theta_b[k] - alpha[k] - beta[k] * u[k]);
    }
    return e;
}

std::vector<BoundaryFunction> recover_multipliers(const DiscreteProblem& dp, const FeFunction& /*y*/,
                                                  const BoundaryFunction& u, const FeFunction& theta,
                                                  const BoundaryFunction& lam, const PartitionH5& partition)
{
    const auto e = recover_multipliers(dp, dp.boundary_trace(theta.values()), u.values(), lam.values(), partition);
    std::vector<BoundaryFunction> out;
    for (const auto& ei : e) out.emplace_back(dp.mesh_ptr(), ei);
    return out;
}

}  // namespace bcstab
