#pragma once

#include "bcstab/expr.hpp"
#include "bcstab/fem.hpp"
#include "bcstab/geometry.hpp"

#include <cstdint>
#include <memory>
#include <vector>

namespace bcstab {

/// Problem data of one control instance. Expressions range over:
///   L, h              x1, x2, y
///   ell, g_i          x1, x2, s, y, lam
///   alpha, beta       lam
///   lambda_bar        x1, x2, s
struct ProblemSpec {
    OperatorCoefficients op;
    Expr L;
    Expr ell;
    Expr alpha;
    Expr beta = Expr::constant(1.0);
    double gamma = 1.0;
    Expr h;
    std::vector<Expr> g;
    Expr lambda_bar;
    /// Exponent of the W^{1,r} norm, 2 < r < 4.
    double r = 3.0;
    /// Bound M of the y-interval used by the sampled sign gates.
    double sample_bound = 10.0;
};

/// A spec together with the symbolic derivatives the optimality system needs.
struct Problem {
    explicit Problem(ProblemSpec s);

    [[nodiscard]] int m() const noexcept { return static_cast<int>(spec.g.size()); }

    ProblemSpec spec;
    Expr L_y, L_yy;
    Expr ell_y, ell_yy;
    Expr h_y, h_yy;
    std::vector<Expr> g_y, g_yy;
};

/// Runs the instance admission rules with 1000 random samples per sign gate. Throws
/// AdmissionError whose label names the violated rule: "m>=2", "H1", "H2", "H3", "H4",
/// "gamma" or "C0".
void check_admission(const ProblemSpec& spec, std::uint64_t seed = 0x5eedc0ef);

/// A problem on a concrete mesh: assembled operator and boundary data at the nodes.
class DiscreteProblem {
public:
    DiscreteProblem(std::shared_ptr<const Problem> problem, MeshPtr mesh);

    [[nodiscard]] const Problem& problem() const noexcept { return *problem_; }
    [[nodiscard]] const ProblemSpec& spec() const noexcept { return problem_->spec; }
    [[nodiscard]] int m() const noexcept { return problem_->m(); }
    [[nodiscard]] const Mesh& mesh() const noexcept { return *mesh_; }
    [[nodiscard]] const MeshPtr& mesh_ptr() const noexcept { return mesh_; }
    [[nodiscard]] const EllipticForm& form() const noexcept { return form_; }
    [[nodiscard]] int num_vertices() const noexcept { return mesh_->num_vertices(); }
    [[nodiscard]] int num_boundary() const noexcept { return mesh_->num_boundary(); }
    /// Lumped boundary weights, used for every boundary integral of the optimality system.
    [[nodiscard]] const Vector& weights() const noexcept { return form_.boundary_weights; }
    [[nodiscard]] const Vector& lambda_bar() const noexcept { return lambda_bar_; }

    /// Expression values at the boundary nodes for boundary traces y_b and parameter lam.
    [[nodiscard]] Vector eval_boundary(const Expr& e, const Vector& y_b, const Vector& lam) const;
    /// Expression values at the interior quadrature points for quadrature values y_q.
    [[nodiscard]] Vector eval_domain(const Expr& e, const Vector& y_q) const;
    /// Boundary trace of a vertex vector.
    [[nodiscard]] Vector boundary_trace(const Vector& y) const;
    /// Samples a boundary expression in (x1, x2, s) at the boundary nodes.
    [[nodiscard]] Vector boundary_data(const Expr& e) const;

private:
    std::shared_ptr<const Problem> problem_;
    MeshPtr mesh_;
    EllipticForm form_;
    Vector lambda_bar_;
};

}  // namespace bcstab
