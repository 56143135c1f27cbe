#include "bcstab/stability.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <thread>

namespace bcstab {

void SweepPlan::validate() const
{
    if (t.size() < 4) {
        throw std::invalid_argument("sweep needs at least 4 t values, got " + std::to_string(t.size()));
    }
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!std::isfinite(t[i]) || t[i] < 0.0) throw std::invalid_argument("sweep t values must be nonnegative");
        if (i > 0 && !(t[i] > t[i - 1])) throw std::invalid_argument("sweep t values must be strictly increasing");
    }
    if (delta.size() == 0 || std::abs(delta.cwiseAbs().maxCoeff() - 1.0) > 1e-12) {
        throw std::invalid_argument("sweep direction must have unit max norm");
    }
}

SweepPlan make_plan(const DiscreteProblem& dp, const Expr& delta, std::vector<double> t, bool warm_start)
{
    SweepPlan plan;
    plan.delta = dp.boundary_data(delta);
    const double mx = plan.delta.cwiseAbs().maxCoeff();
    if (!(mx > 0.0)) throw std::invalid_argument("sweep direction vanishes on the boundary nodes");
    plan.delta /= mx;
    plan.t = std::move(t);
    plan.warm_start = warm_start;
    plan.validate();
    return plan;
}

ExponentFit fit_exponent(const std::vector<std::pair<double, double>>& rows)
{
    std::vector<double> lx, ly;
    for (const auto& [t, d] : rows) {
        if (t > 0.0 && d > 0.0 && std::isfinite(t) && std::isfinite(d)) {
            lx.push_back(std::log(t));
            ly.push_back(std::log(d));
        }
    }
    const std::size_t n = lx.size();
    if (n < 4) throw FitError("exponent fit needs at least 4 rows with t > 0 and d > 0, got " + std::to_string(n));
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    if (!(sxx > 0.0)) throw FitError("exponent fit needs distinct t values");
    ExponentFit fit;
    fit.slope = sxy / sxx;
    fit.constant = std::exp(my - fit.slope * mx);
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = ly[i] - (my + fit.slope * (lx[i] - mx));
        sse += r * r;
    }
    fit.r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
    return fit;
}

bool StabilityReport::all_ok() const
{
    const bool rows_ok = std::all_of(rows.begin(), rows.end(), [](const SweepRow& r) { return r.kkt_ok; });
    return rows_ok && fit_L2 && fit_Linf && fit_W1r;
}

namespace {

SweepRow solve_row(const DiscreteProblem& dp, const SolveResult& base, const SweepPlan& plan, double t,
                   const Vector& u0, const SolveOptions& opts, Vector* u_out)
{
    SweepRow row;
    row.t = t;
    const Vector lam = dp.lambda_bar() + t * plan.delta;
    try {
        const SolveResult res = solve(dp, lam, u0, opts);
        const BoundaryFunction du(dp.mesh_ptr(), res.point.u.values() - base.point.u.values());
        const FeFunction dy(dp.mesh_ptr(), res.point.y.values() - base.point.y.values());
        row.d_L2 = norm(du, NormKind::L2Gamma);
        row.d_Linf = norm(du, NormKind::Linf);
        row.d_W1r = norm(dy, NormKind::W1r, dp.spec().r);
        row.kkt_ok = true;
        if (u_out) *u_out = res.point.u.values();
    }
    catch (const std::exception& err) {
        row.kkt_ok = false;
        row.error = err.what();
    }
    return row;
}

}  // namespace

StabilityReport run_sweep(const DiscreteProblem& dp, const SolveResult& base, const SweepPlan& plan,
                          const SolveOptions& opts, unsigned threads)
{
    plan.validate();
    if (plan.delta.size() != dp.num_boundary()) throw std::invalid_argument("sweep direction size mismatch");
    StabilityReport rep;
    rep.base_residuals = base.residuals;
    const std::size_t n = plan.t.size();
    rep.rows.resize(n);
    const Vector zero = Vector::Zero(dp.num_boundary());

    if (plan.warm_start) {
        Vector u0 = base.point.u.values();
        for (std::size_t i = 0; i < n; ++i) {
            Vector next = u0;
            rep.rows[i] = solve_row(dp, base, plan, plan.t[i], u0, opts, &next);
            u0 = next;
        }
    }
    else {
        if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
        threads = std::min<unsigned>(threads, static_cast<unsigned>(n));
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (std::size_t i = next++; i < n; i = next++) {
                rep.rows[i] = solve_row(dp, base, plan, plan.t[i], zero, opts, nullptr);
            }
        };
        std::vector<std::thread> pool;
        for (unsigned w = 1; w < threads; ++w) pool.emplace_back(worker);
        worker();
        for (auto& th : pool) th.join();
    }

    if (std::none_of(rep.rows.begin(), rep.rows.end(), [](const SweepRow& r) { return r.kkt_ok; })) {
        throw SweepError("every sweep row failed to solve; first error: " + rep.rows.front().error);
    }

    std::vector<std::pair<double, double>> l2, linf, w1r;
    rep.quotient_min = std::numeric_limits<double>::infinity();
    rep.quotient_max = 0.0;
    bool have_tmin = false;
    for (const auto& r : rep.rows) {
        if (!r.kkt_ok) continue;
        l2.emplace_back(r.t, r.d_L2);
        linf.emplace_back(r.t, r.d_Linf);
        w1r.emplace_back(r.t, r.d_W1r);
        if (r.t > 0.0) {
            const double q = r.d_Linf / std::sqrt(r.t);
            if (!have_tmin) {
                rep.quotient_at_tmin = q;
                have_tmin = true;
            }
            rep.quotient_min = std::min(rep.quotient_min, q);
            rep.quotient_max = std::max(rep.quotient_max, q);
        }
    }
    if (!have_tmin) rep.quotient_min = 0.0;
    rep.holder_constant = rep.quotient_max;
    rep.holder_bounded = have_tmin && rep.quotient_max <= 100.0 * rep.quotient_at_tmin;

    auto try_fit = [&](const std::vector<std::pair<double, double>>& data, const char* name,
                       std::optional<ExponentFit>& out) {
        try {
            out = fit_exponent(data);
        }
        catch (const FitError& err) {
            if (!rep.fit_error.empty()) rep.fit_error += "; ";
            rep.fit_error += std::string(name) + ": " + err.what();
        }
    };
    try_fit(l2, "d_L2", rep.fit_L2);
    try_fit(linf, "d_Linf", rep.fit_Linf);
    try_fit(w1r, "d_W1r", rep.fit_W1r);
    return rep;
}

StabilityReport run_sweep(const DiscreteProblem& dp, const SweepPlan& plan, const SolveOptions& opts,
                          unsigned threads)
{
    const SolveResult base = solve(dp, dp.lambda_bar(), Vector::Zero(dp.num_boundary()), opts);
    return run_sweep(dp, base, plan, opts, threads);
}

void write_csv(std::ostream& os, const StabilityReport& rep)
{
    os << "t,d_L2,d_Linf,d_W1r,kkt_ok\n";
    char buf[160];
    for (const auto& r : rep.rows) {
        std::snprintf(buf, sizeof buf, "%.6e,%.12e,%.12e,%.12e,%d\n", r.t, r.d_L2, r.d_Linf, r.d_W1r,
                      r.kkt_ok ? 1 : 0);
        os << buf;
    }
}

nlohmann::json to_json(const StabilityReport& rep)
{
    auto fit = [](const std::optional<ExponentFit>& f) -> nlohmann::json {
        if (!f) return nullptr;
        return {{"exponent", f->slope}, {"constant", f->constant}, {"r2", f->r2}};
    };
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : rep.rows) {
        nlohmann::json row = {{"t", r.t}, {"d_L2", r.d_L2}, {"d_Linf", r.d_Linf}, {"d_W1r", r.d_W1r},
                              {"kkt_ok", r.kkt_ok}};
        if (!r.error.empty()) row["error"] = r.error;
        rows.push_back(std::move(row));
    }
    nlohmann::json j = {{"rows", rows},
                        {"fit", {{"d_L2", fit(rep.fit_L2)}, {"d_Linf", fit(rep.fit_Linf)}, {"d_W1r", fit(rep.fit_W1r)}}},
                        {"holder",
                         {{"quotient_min", rep.quotient_min},
                          {"quotient_max", rep.quotient_max},
                          {"quotient_at_tmin", rep.quotient_at_tmin},
                          {"constant", rep.holder_constant},
                          {"bounded", rep.holder_bounded}}},
                        {"base_residuals", to_json(rep.base_residuals)}};
    if (!rep.fit_error.empty()) j["fit_error"] = rep.fit_error;
    return j;
}

}  // namespace bcstab
