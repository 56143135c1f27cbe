#include "bcstab/problem.hpp"

#include "bcstab/errors.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <utility>

namespace bcstab {

namespace {

constexpr int kGateSamples = 1000;

unsigned mask(std::initializer_list<Var> vars)
{
    unsigned m = 0;
    for (Var v : vars) m |= 1u << static_cast<unsigned>(v);
    return m;
}

void require_vars(const Expr& e, unsigned allowed, const std::string& label, const std::string& name)
{
    const unsigned extra = e.free_variables() & ~allowed;
    if (extra == 0) return;
    std::string bad;
    for (std::size_t i = 0; i < kNumVars; ++i) {
        if (extra & (1u << i)) {
            if (!bad.empty()) bad += ", ";
            bad += var_name(static_cast<Var>(i));
        }
    }
    throw AdmissionError(label, name + " = '" + e.to_string() + "' must not depend on " + bad);
}

double checked_eval(const Expr& e, const Env& env, const std::string& label, const std::string& name)
{
    try {
        const double v = e.eval(env);
        if (!std::isfinite(v)) throw EvalError(EvalError::Kind::Domain, "non-finite value");
        return v;
    }
    catch (const EvalError& err) {
        throw AdmissionError(label, name + " cannot be evaluated at a sample point: " + err.what());
    }
}

std::string where(const Env& env)
{
    std::ostringstream os;
    os << "(x1=" << env[Var::X1] << ", x2=" << env[Var::X2];
    if (env.bound(Var::Y)) os << ", y=" << env[Var::Y];
    if (env.bound(Var::Lam)) os << ", lam=" << env[Var::Lam];
    os << ")";
    return os.str();
}

struct Sampler {
    explicit Sampler(std::uint64_t seed) : rng(seed) {}

    Env interior()
    {
        const double rad = std::sqrt(unit(rng));
        const double ang = 2.0 * std::numbers::pi * unit(rng);
        return Env().x(rad * std::cos(ang), rad * std::sin(ang));
    }
    Env boundary()
    {
        const double ang = 2.0 * std::numbers::pi * unit(rng);
        return Env().x(std::cos(ang), std::sin(ang)).s(ang);
    }
    double symmetric(double half_width) { return half_width * (2.0 * unit(rng) - 1.0); }

    std::mt19937_64 rng;
    std::uniform_real_distribution<double> unit{0.0, 1.0};
};

}  // namespace

Problem::Problem(ProblemSpec s) : spec(std::move(s))
{
    L_y = diff(spec.L, Var::Y, 1);
    L_yy = diff(spec.L, Var::Y, 2);
    ell_y = diff(spec.ell, Var::Y, 1);
    ell_yy = diff(spec.ell, Var::Y, 2);
    h_y = diff(spec.h, Var::Y, 1);
    h_yy = diff(spec.h, Var::Y, 2);
    for (const Expr& gi : spec.g) {
        g_y.push_back(diff(gi, Var::Y, 1));
        g_yy.push_back(diff(gi, Var::Y, 2));
    }
}

void check_admission(const ProblemSpec& spec, std::uint64_t seed)
{
    if (spec.g.size() < 2) {
        throw AdmissionError("m>=2", "need m >= 2 mixed constraints, got " + std::to_string(spec.g.size()));
    }

    const unsigned space = mask({Var::X1, Var::X2});
    const unsigned domain_vars = mask({Var::X1, Var::X2, Var::Y});
    const unsigned boundary_vars = mask({Var::X1, Var::X2, Var::S, Var::Y, Var::Lam});
    const unsigned lam_only = mask({Var::Lam});

    for (const auto& [e, name] : {std::pair{&spec.op.a11, "a11"}, std::pair{&spec.op.a12, "a12"},
                                  std::pair{&spec.op.a22, "a22"}, std::pair{&spec.op.a0, "a0"}}) {
        require_vars(*e, space, "C0", name);
    }
    require_vars(spec.L, domain_vars, "H1", "L");
    require_vars(spec.h, domain_vars, "H1", "h");
    require_vars(spec.ell, boundary_vars, "H2", "ell");
    for (std::size_t i = 0; i < spec.g.size(); ++i) {
        require_vars(spec.g[i], boundary_vars, "H2", "g" + std::to_string(i + 1));
    }
    require_vars(spec.alpha, lam_only, "H3", "alpha");
    require_vars(spec.beta, lam_only, "H3", "beta");
    require_vars(spec.lambda_bar, mask({Var::X1, Var::X2, Var::S}), "H3", "lambda_bar");

    if (!(spec.gamma > 0.0)) throw AdmissionError("gamma", "declared gamma must be positive");
    if (!(spec.op.c0 > 0.0)) throw AdmissionError("C0", "declared C0 must be positive");
    if (!(spec.r > 2.0 && spec.r < 4.0)) throw AdmissionError("H1", "norm exponent r must lie in (2, 4)");
    if (!(spec.sample_bound > 0.0)) throw AdmissionError("H4", "sample bound M must be positive");

    const Problem prob(spec);
    Sampler smp(seed);
    const double M = spec.sample_bound;

    // C0: ellipticity and a0 >= 0, a0 not identically zero.
    bool a0_positive = false;
    for (int k = 0; k < kGateSamples; ++k) {
        const Env env = smp.interior();
        const double a11 = checked_eval(spec.op.a11, env, "C0", "a11");
        const double a12 = checked_eval(spec.op.a12, env, "C0", "a12");
        const double a22 = checked_eval(spec.op.a22, env, "C0", "a22");
        const double a0 = checked_eval(spec.op.a0, env, "C0", "a0");
        const double lmin = 0.5 * (a11 + a22) - std::hypot(0.5 * (a11 - a22), a12);
        if (lmin < spec.op.c0 * (1.0 - 1e-12)) {
            throw AdmissionError("C0", "ellipticity bound fails at " + where(env) + ": smallest eigenvalue " +
                                           std::to_string(lmin) + " < C0");
        }
        if (a0 < 0.0) throw AdmissionError("C0", "a0 is negative at " + where(env));
        a0_positive |= a0 > 0.0;
    }
    if (!a0_positive) throw AdmissionError("C0", "a0 vanishes at every sample point");

    // H1: L, L_y, h bounded at y = 0; H4: h(x, 0) = 0 and h_y >= 0 on [-M, M].
    for (int k = 0; k < kGateSamples; ++k) {
        Env env = smp.interior();
        env.y(0.0);
        (void)checked_eval(spec.L, env, "H1", "L");
        (void)checked_eval(prob.L_y, env, "H1", "L_y");
        const double h0 = checked_eval(spec.h, env, "H4", "h");
        if (std::abs(h0) > 1e-12) throw AdmissionError("H4", "h(x, 0) != 0 at " + where(env));
        env.y(smp.symmetric(M));
        (void)checked_eval(prob.L_yy, env, "H1", "L_yy");
        const double hy = checked_eval(prob.h_y, env, "H4", "h_y");
        if (hy < 0.0) {
            throw AdmissionError("H4", "h_y = " + std::to_string(hy) + " < 0 at " + where(env) +
                                           " (state equation must be monotone)");
        }
    }

    // H3: beta(lambda_bar) >= gamma; H2: ell, g finite; H4: g_iy >= 0.
    for (int k = 0; k < kGateSamples; ++k) {
        Env env = smp.boundary();
        const double lb = checked_eval(spec.lambda_bar, env, "H3", "lambda_bar");
        env.lam(lb);
        (void)checked_eval(spec.alpha, env, "H3", "alpha");
        const double b = checked_eval(spec.beta, env, "H3", "beta");
        if (b < spec.gamma) {
            throw AdmissionError("H3", "beta(lambda_bar) = " + std::to_string(b) + " < gamma = " +
                                           std::to_string(spec.gamma) + " at " + where(env));
        }
        env.y(0.0).lam(0.0);
        (void)checked_eval(spec.ell, env, "H2", "ell");
        (void)checked_eval(prob.ell_y, env, "H2", "ell_y");
        env.y(smp.symmetric(M)).lam(lb + smp.symmetric(1.0));
        (void)checked_eval(prob.ell_yy, env, "H2", "ell_yy");
        for (int i = 0; i < prob.m(); ++i) {
            const std::string gname = "g" + std::to_string(i + 1);
            (void)checked_eval(spec.g[i], env, "H2", gname);
            (void)checked_eval(prob.g_yy[i], env, "H2", gname + "_yy");
            const double gy = checked_eval(prob.g_y[i], env, "H4", gname + "_y");
            if (gy < 0.0) {
                throw AdmissionError("H4", gname + "_y = " + std::to_string(gy) + " < 0 at " + where(env));
            }
        }
    }
}

DiscreteProblem::DiscreteProblem(std::shared_ptr<const Problem> problem, MeshPtr mesh)
    : problem_(std::move(problem)), mesh_(std::move(mesh)), form_(assemble(problem_->spec.op, mesh_))
{
    lambda_bar_ = boundary_data(problem_->spec.lambda_bar);
}

Vector DiscreteProblem::eval_boundary(const Expr& e, const Vector& y_b, const Vector& lam) const
{
    const int nb = num_boundary();
    Vector out(nb);
    if (e.is_constant()) return Vector::Constant(nb, e.constant_value());
    for (int k = 0; k < nb; ++k) {
        const Point2& p = mesh_->vertices()[mesh_->boundary_vertices()[k]];
        out[k] = e.eval(Env().x(p.x(), p.y()).s(mesh_->arc_parameter()[k]).y(y_b[k]).lam(lam[k]));
    }
    return out;
}

Vector DiscreteProblem::eval_domain(const Expr& e, const Vector& y_q) const
{
    const int nq = form_.quad.size();
    if (e.is_constant()) return Vector::Constant(nq, e.constant_value());
    Vector out(nq);
    for (int q = 0; q < nq; ++q) {
        const Point2& p = form_.quad.points[q];
        out[q] = e.eval(Env().x(p.x(), p.y()).y(y_q[q]));
    }
    return out;
}

Vector DiscreteProblem::boundary_trace(const Vector& y) const
{
    Vector out(num_boundary());
    for (int k = 0; k < num_boundary(); ++k) out[k] = y[mesh_->boundary_vertices()[k]];
    return out;
}

Vector DiscreteProblem::boundary_data(const Expr& e) const
{
    return BoundaryFunction::from_expr(mesh_, e).values();
}

}  // namespace bcstab
