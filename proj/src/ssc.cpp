#include "bcstab/pde.hpp"
#include "bcstab/solver.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

namespace bcstab {

namespace {

using Dense = Eigen::MatrixXd;

constexpr int kMaxSweeps = 20;
constexpr int kFrequencies = 8;
constexpr int kInverseIterations = 50;

/// Everything the cone sampler and the subspace estimator need, expressed in the nodal control v.
/// The linearised state of v is z = Z v; C v collects the rows g_iy z_k + v_k of the label constraints.
struct ConeModel {
    Dense Z;
    Dense C;
    Dense H;
    Vector grad;
    Dense mass_gamma;
    Dense mass_state;
    std::vector<int> strong;
    std::vector<int> weak;
    std::vector<char> is_strong;
    std::vector<char> is_weak;
};

ConeModel build_model(const DiscreteProblem& dp, const KktPoint& p)
{
    const Problem& prob = dp.problem();
    const Mesh& mesh = dp.mesh();
    const int nb = dp.num_boundary();
    const Vector& y = p.y.values();
    const Vector& u = p.u.values();
    const Vector& lam = p.lambda.values();
    const Vector& W = dp.weights();
    const Vector yb = dp.boundary_trace(y);
    const BoundaryValues bv = boundary_values(dp, yb, lam);
    const PartitionH5 part = h5_margins(dp, yb, lam);

    ConeModel cm;
    const LinearizedSolver lin(dp, y);
    cm.Z.resize(dp.num_vertices(), nb);
    for (int j = 0; j < nb; ++j) cm.Z.col(j) = lin.solve_boundary(Vector::Unit(nb, j));

    Dense R(nb, nb);
    for (int k = 0; k < nb; ++k) R.row(k) = cm.Z.row(mesh.boundary_vertices()[k]);
    Vector gy(nb);
    for (int k = 0; k < nb; ++k) gy[k] = bv.g_y[part.label[k]][k];
    cm.C = gy.asDiagonal() * R;
    cm.C.diagonal().array() += 1.0;

    const Vector yq = at_quadrature(mesh, y);
    const Vector thq = at_quadrature(mesh, p.theta.values());
    const Vector qcoeff = dp.eval_domain(prob.L_yy, yq) + thq.cwiseProduct(dp.eval_domain(prob.h_yy, yq));
    Vector bcoeff = dp.eval_boundary(prob.ell_yy, yb, lam);
    for (int i = 0; i < dp.m(); ++i) bcoeff += p.e[i].values().cwiseProduct(dp.eval_boundary(prob.g_yy[i], yb, lam));
    const SparseMatrix Dq = mass_matrix(mesh, dp.form().quad, qcoeff);
    const Dense ZbT = R.transpose();
    cm.H = cm.Z.transpose() * (Dq * cm.Z) + ZbT * W.cwiseProduct(bcoeff).asDiagonal() * R;
    cm.H.diagonal() += W.cwiseProduct(bv.beta);
    cm.H = 0.5 * (cm.H + cm.H.transpose()).eval();

    const Vector gy_state = load_vector(mesh, dp.form().quad, dp.eval_domain(prob.L_y, yq)) +
                            scatter_boundary(mesh, W.cwiseProduct(dp.eval_boundary(prob.ell_y, yb, lam)));
    cm.grad = cm.Z.transpose() * gy_state + W.cwiseProduct(bv.alpha + bv.beta.cwiseProduct(u));

    cm.mass_gamma = Dense(dp.form().mass_boundary);
    cm.mass_state = cm.Z.transpose() * (dp.form().mass_domain * cm.Z);

    const double eps = active_tolerance(u);
    cm.is_strong.assign(nb, 0);
    cm.is_weak.assign(nb, 0);
    for (int k = 0; k < nb; ++k) {
        const int i = part.label[k];
        if (bv.g[i][k] + u[k] < -eps) continue;
        if (p.e[i][k] > eps) {
            cm.strong.push_back(k);
            cm.is_strong[k] = 1;
        }
        else {
            cm.weak.push_back(k);
            cm.is_weak[k] = 1;
        }
    }
    return cm;
}

Dense select(const Dense& A, const std::vector<int>& rows, const std::vector<int>& cols)
{
    Dense out(rows.size(), cols.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = A(rows[i], cols[j]);
    }
    return out;
}

/// Keeps v on the free nodes and solves (C v)_k = 0 for k in `eq`.
Vector enforce_equalities(const ConeModel& cm, Vector v, const std::vector<int>& eq)
{
    if (eq.empty()) return v;
    const int nb = static_cast<int>(v.size());
    std::vector<char> in_eq(nb, 0);
    for (int k : eq) in_eq[k] = 1;
    std::vector<int> free;
    for (int k = 0; k < nb; ++k) {
        if (!in_eq[k]) free.push_back(k);
    }
    Vector vf(free.size());
    for (std::size_t j = 0; j < free.size(); ++j) vf[j] = v[free[j]];
    const Vector rhs = -(select(cm.C, eq, free) * vf);
    const Vector ve = select(cm.C, eq, eq).partialPivLu().solve(rhs);
    for (std::size_t j = 0; j < eq.size(); ++j) v[eq[j]] = ve[j];
    return v;
}

Vector smooth_random(const Mesh& mesh, std::mt19937_64& rng)
{
    std::normal_distribution<double> normal;
    double a[kFrequencies + 1];
    double b[kFrequencies + 1];
    for (int k = 0; k <= kFrequencies; ++k) {
        a[k] = normal(rng);
        b[k] = normal(rng);
    }
    Vector v(mesh.num_boundary());
    for (int j = 0; j < v.size(); ++j) {
        const double s = mesh.arc_parameter()[j];
        double val = 0.0;
        for (int k = 0; k <= kFrequencies; ++k) {
            val += (a[k] * std::cos(k * s) + b[k] * std::sin(k * s)) / ((1.0 + k) * (1.0 + k));
        }
        v[j] = val;
    }
    return v;
}

double direction_norm(const ConeModel& cm, const Vector& v)
{
    return std::sqrt(std::max(0.0, v.dot(cm.mass_gamma * v))) + std::sqrt(std::max(0.0, v.dot(cm.mass_state * v)));
}

std::vector<Vector> sample_controls(const DiscreteProblem& dp, const ConeModel& cm, int n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::vector<Vector> out;
    const int max_attempts = 20 * std::max(n, 1);
    for (int attempt = 0; attempt < max_attempts && static_cast<int>(out.size()) < n; ++attempt) {
        const Vector v0 = smooth_random(dp.mesh(), rng);
        std::vector<int> eq = cm.strong;
        Vector v;
        bool feasible = false;
        for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
            v = enforce_equalities(cm, v0, eq);
            const Vector c = cm.C * v;
            const double tol = 1e-12 * (1.0 + v.cwiseAbs().maxCoeff());
            bool added = false;
            for (int k : cm.weak) {
                if (c[k] > tol && std::find(eq.begin(), eq.end(), k) == eq.end()) {
                    eq.push_back(k);
                    added = true;
                }
            }
            if (!added) {
                feasible = true;
                break;
            }
            std::sort(eq.begin(), eq.end());
        }
        if (!feasible) continue;

        const double slope = cm.grad.dot(v);
        if (slope > 1e-10 * (1.0 + cm.grad.norm() * v.norm())) {
            // Flipping keeps the equalities; it is admissible only if no slack weak row turns positive.
            const Vector c = cm.C * v;
            bool flippable = true;
            for (int k : cm.weak) flippable = flippable && c[k] >= -1e-12 * (1.0 + v.cwiseAbs().maxCoeff());
            if (!flippable) continue;
            v = -v;
        }
        const double nrm = direction_norm(cm, v);
        if (!(nrm > 1e-14)) continue;
        out.push_back(v / nrm);
    }
    return out;
}

double subspace_min_eigenvalue(const DiscreteProblem& dp, const ConeModel& cm, std::uint64_t seed)
{
    const int nb = dp.num_boundary();
    std::vector<int> free;
    for (int k = 0; k < nb; ++k) {
        if (!cm.is_strong[k]) free.push_back(k);
    }
    if (free.empty()) return std::numeric_limits<double>::infinity();

    Dense B = Dense::Zero(nb, free.size());
    for (std::size_t j = 0; j < free.size(); ++j) B(free[j], j) = 1.0;
    if (!cm.strong.empty()) {
        const Dense T = select(cm.C, cm.strong, cm.strong).partialPivLu().solve(-select(cm.C, cm.strong, free));
        for (std::size_t i = 0; i < cm.strong.size(); ++i) B.row(cm.strong[i]) = T.row(i);
    }
    const Dense Hr = B.transpose() * cm.H * B;
    const Dense Mr = B.transpose() * dp.weights().asDiagonal() * B;

    const Eigen::LLT<Dense> chol(Mr);
    Dense Ct = chol.matrixL().solve(Hr);
    Dense Cs = chol.matrixL().solve(Ct.transpose());
    Cs = 0.5 * (Cs + Cs.transpose()).eval();

    double lower = std::numeric_limits<double>::infinity();
    for (int i = 0; i < Cs.rows(); ++i) {
        lower = std::min(lower, Cs(i, i) - (Cs.row(i).cwiseAbs().sum() - std::abs(Cs(i, i))));
    }
    const double shift = lower - 1e-8 * (1.0 + std::abs(lower));
    Dense S = Cs;
    S.diagonal().array() -= shift;
    const Eigen::LDLT<Dense> fact(S);

    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> normal;
    Vector x(Cs.rows());
    for (int i = 0; i < x.size(); ++i) x[i] = normal(rng);
    x.normalize();
    for (int it = 0; it < kInverseIterations; ++it) {
        x = fact.solve(x);
        x.normalize();
    }
    return x.dot(Cs * x);
}

}  // namespace

std::vector<CriticalDirection> critical_direction_sample(const DiscreteProblem& dp, const KktPoint& p, int n,
                                                         std::uint64_t seed)
{
    p.validate(dp.m());
    const ConeModel cm = build_model(dp, p);
    std::vector<CriticalDirection> out;
    for (const Vector& v : sample_controls(dp, cm, n, seed)) {
        out.push_back({FeFunction(dp.mesh_ptr(), cm.Z * v), BoundaryFunction(dp.mesh_ptr(), v)});
    }
    return out;
}

nlohmann::json to_json(const SscReport& r)
{
    auto num = [](double x) -> nlohmann::json {
        if (std::isfinite(x)) return x;
        return x > 0 ? "inf" : "-inf";
    };
    return {{"min_rayleigh", num(r.min_rayleigh)},
            {"subspace_min_eig", num(r.subspace_min_eig)},
            {"n_samples", r.n_samples},
            {"n_strongly_active", r.n_strongly_active},
            {"n_weakly_active", r.n_weakly_active}};
}

SscReport check_ssc(const DiscreteProblem& dp, const KktPoint& p, int n_samples, std::uint64_t seed)
{
    p.validate(dp.m());
    n_samples = std::max(n_samples, 100);
    const ConeModel cm = build_model(dp, p);
    SscReport rep;
    rep.n_strongly_active = static_cast<int>(cm.strong.size());
    rep.n_weakly_active = static_cast<int>(cm.weak.size());
    rep.min_rayleigh = std::numeric_limits<double>::infinity();
    for (const Vector& v : sample_controls(dp, cm, n_samples, seed)) {
        rep.min_rayleigh = std::min(rep.min_rayleigh, v.dot(cm.H * v));
        ++rep.n_samples;
    }
    rep.subspace_min_eig = subspace_min_eigenvalue(dp, cm, seed);
    return rep;
}

}  // namespace bcstab
