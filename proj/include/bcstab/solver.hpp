#pragma once

#include "bcstab/fem.hpp"
#include "bcstab/kkt.hpp"
#include "bcstab/problem.hpp"

#include "json.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace bcstab {

struct SolveOptions {
    int max_outer = 200;
    double kkt_tol = 1e-8;
    /// Initial damping theta in (0, 1].
    double damping = 0.5;
    /// Halve theta when the max residual grows, multiply by 1.2 (capped at 1) when it shrinks.
    bool adaptive = true;

    /// Throws std::invalid_argument for out-of-range fields.
    void validate() const;
};

[[nodiscard]] nlohmann::json to_json(const SolveOptions& o);

struct SolveResult {
    KktPoint point;
    KktResiduals residuals;
    /// Max residual after every outer iteration.
    std::vector<double> history;
    int iterations = 0;
};

class SolveError : public std::runtime_error {
public:
    enum class Kind { NonConvergence, H5, State };

    SolveError(Kind kind, const std::string& message, std::vector<double> history)
        : std::runtime_error(message), kind_(kind), history_(std::move(history))
    {
    }
    [[nodiscard]] Kind kind() const noexcept { return kind_; }
    [[nodiscard]] const std::vector<double>& history() const noexcept { return history_; }

private:
    Kind kind_;
    std::vector<double> history_;
};

/// Damped projection fixed point u <- (1 - theta) u + theta min(-max_i g_i, (theta_adj - alpha) / beta).
[[nodiscard]] SolveResult solve(const DiscreteProblem& dp, const Vector& lam, const Vector& u0,
                                const SolveOptions& opts = {});
[[nodiscard]] SolveResult solve(const DiscreteProblem& dp, const BoundaryFunction& lam, const BoundaryFunction& u0,
                                const SolveOptions& opts = {});

/// J(y, u, lam) = sum_q w_q L + sum_k W_k (ell + alpha u + beta u^2 / 2).
[[nodiscard]] double cost(const DiscreteProblem& dp, const Vector& y, const Vector& u, const Vector& lam);
/// cost at y = solve_state(u, lam).
[[nodiscard]] double reduced_cost(const DiscreteProblem& dp, const Vector& lam, const Vector& u);
/// Gradient of reduced_cost with respect to the nodal control: W (alpha + beta u - theta), e = 0 in the adjoint.
[[nodiscard]] Vector reduced_gradient(const DiscreteProblem& dp, const Vector& lam, const Vector& u);

/// J + theta^T F + sum_i e_i^T W (g_i + u) at (y, u) with the multipliers of `p` frozen.
[[nodiscard]] double lagrangian(const DiscreteProblem& dp, const KktPoint& p, const Vector& y, const Vector& u);

/// Second-order form of the Lagrangian at `p` along (z, v).
[[nodiscard]] double ssc_quadratic_form(const DiscreteProblem& dp, const KktPoint& p, const Vector& z,
                                        const Vector& v);

struct CriticalDirection {
    FeFunction y;
    BoundaryFunction u;
};

/// Random directions of the discrete critical cone, normalised to ||u||_{L2(Gamma)} + ||y||_{L2(Omega)} = 1.
/// May return fewer than n (possibly none) when the cone is numerically trivial.
[[nodiscard]] std::vector<CriticalDirection> critical_direction_sample(const DiscreteProblem& dp, const KktPoint& p,
                                                                       int n, std::uint64_t seed = 1);

struct SscReport {
    /// Minimum of the quadratic form over the sampled unit critical directions; +inf if none.
    double min_rayleigh = 0.0;
    /// Smallest eigenvalue of the reduced Hessian on the strongly active equality subspace.
    double subspace_min_eig = 0.0;
    int n_samples = 0;
    int n_strongly_active = 0;
    int n_weakly_active = 0;
};

[[nodiscard]] nlohmann::json to_json(const SscReport& r);

/// n_samples is raised to at least 100.
[[nodiscard]] SscReport check_ssc(const DiscreteProblem& dp, const KktPoint& p, int n_samples = 100,
                                  std::uint64_t seed = 1);

}  // namespace bcstab
