#pragma once

#include "bcstab/fem.hpp"
#include "bcstab/problem.hpp"

#include "json.hpp"

#include <vector>

namespace bcstab {

/// Candidate tuple (y, u, theta, e_1..e_m) for parameter lambda.
struct KktPoint {
    FeFunction y;
    BoundaryFunction u;
    FeFunction theta;
    std::vector<BoundaryFunction> e;
    BoundaryFunction lambda;

    /// Throws std::invalid_argument unless all fields share one mesh and m matches.
    void validate(int m) const;
};

struct KktResiduals {
    double r_state = 0.0;
    double r_adjoint = 0.0;
    double r_stationarity = 0.0;
    double r_comp = 0.0;
    double r_feas = 0.0;
    /// Discrete (H5) margin at the point; positive when the argmax partition is separated.
    double sigma1 = 0.0;

    [[nodiscard]] double max() const noexcept;
    [[nodiscard]] bool within(double tol) const noexcept { return max() <= tol; }
};

[[nodiscard]] nlohmann::json to_json(const KktResiduals& r);

/// Argmax partition of the constraints on the boundary nodes.
struct PartitionH5 {
    /// 0-based constraint index per boundary node.
    std::vector<int> label;
    /// margin(i, k) = max over nodes of Gamma_i of (g_k - g_i); -inf on the diagonal and for empty Gamma_i.
    Eigen::MatrixXd margin;
    /// -max_{i != k} margin(i, k).
    double sigma1 = 0.0;
};

/// Boundary-node values of alpha, beta, g_i and g_iy at a state trace and parameter.
struct BoundaryValues {
    Vector alpha, beta;
    std::vector<Vector> g, g_y;
    /// max_i g_i per node.
    Vector g_max;
};

[[nodiscard]] BoundaryValues boundary_values(const DiscreteProblem& dp, const Vector& y_b, const Vector& lam);

/// Metric projection onto (-inf, 0].
[[nodiscard]] constexpr double project_halfline(double a) noexcept { return a < 0.0 ? a : 0.0; }

/// Threshold above which g_i + u counts as active: 1e-8 (1 + ||u||_inf).
[[nodiscard]] double active_tolerance(const Vector& u);

[[nodiscard]] KktResiduals residuals(const DiscreteProblem& dp, const KktPoint& p);

/// max over nodes of |g + u - P(g + (theta - alpha) / beta)|, g = max_i g_i.
/// Throws AdmissionError("H3") if beta < gamma / 2 at some node.
[[nodiscard]] double projection_identity_gap(const DiscreteProblem& dp, const KktPoint& p);

[[nodiscard]] PartitionH5 h5_margins(const DiscreteProblem& dp, const Vector& y_b, const Vector& lam);
[[nodiscard]] PartitionH5 h5_margins(const DiscreteProblem& dp, const KktPoint& p);

/// e_i = max(0, theta - alpha - beta u) on Gamma_i, zero elsewhere.
[[nodiscard]] std::vector<Vector> recover_multipliers(const DiscreteProblem& dp, const Vector& theta_b,
                                                      const Vector& u, const Vector& lam,
                                                      const PartitionH5& partition);
[[nodiscard]] std::vector<BoundaryFunction> recover_multipliers(const DiscreteProblem& dp, const FeFunction& y,
                                                                const BoundaryFunction& u, const FeFunction& theta,
                                                                const BoundaryFunction& lam,
                                                                const PartitionH5& partition);

}  // namespace bcstab
