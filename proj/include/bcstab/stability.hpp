#pragma once

#include "bcstab/fem.hpp"
#include "bcstab/problem.hpp"
#include "bcstab/solver.hpp"

#include "json.hpp"

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace bcstab {

/// lambda(t) = lambda_bar + t delta for each t.
struct SweepPlan {
    /// Boundary direction with ||delta||_inf = 1.
    Vector delta;
    std::vector<double> t;
    bool warm_start = false;

    /// Throws std::invalid_argument unless there are at least 4 nonnegative, strictly increasing t.
    void validate() const;
};

/// Samples `delta` on the boundary nodes and rescales it to unit max norm.
[[nodiscard]] SweepPlan make_plan(const DiscreteProblem& dp, const Expr& delta, std::vector<double> t,
                                  bool warm_start = false);

struct SweepRow {
    double t = 0.0;
    double d_L2 = 0.0;
    double d_Linf = 0.0;
    double d_W1r = 0.0;
    bool kkt_ok = false;
    std::string error;
};

struct ExponentFit {
    double slope = 0.0;
    /// exp(intercept) of the log-log fit.
    double constant = 0.0;
    double r2 = 0.0;
};

class FitError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Ordinary least squares on (log t, log d). Rows with t <= 0 or d <= 0 are skipped;
/// throws FitError if fewer than 4 remain.
[[nodiscard]] ExponentFit fit_exponent(const std::vector<std::pair<double, double>>& rows);

struct StabilityReport {
    std::vector<SweepRow> rows;
    std::optional<ExponentFit> fit_L2, fit_Linf, fit_W1r;
    std::string fit_error;
    /// d_Linf / t^{1/2} over the accepted rows with t > 0.
    double quotient_min = 0.0;
    double quotient_max = 0.0;
    double quotient_at_tmin = 0.0;
    /// Smallest l such that d_Linf <= l t^{1/2} holds on every accepted row.
    double holder_constant = 0.0;
    /// quotient_max <= 100 * quotient_at_tmin.
    bool holder_bounded = false;
    KktResiduals base_residuals;

    [[nodiscard]] bool all_ok() const;
};

class SweepError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Solves P(lambda_bar + t delta) for every t and measures the distance to `base`.
/// Rows without warm start run on `threads` worker threads (0 = hardware concurrency);
/// results do not depend on the thread count.
[[nodiscard]] StabilityReport run_sweep(const DiscreteProblem& dp, const SolveResult& base, const SweepPlan& plan,
                                        const SolveOptions& opts, unsigned threads = 0);
/// Same, solving the base problem from u = 0 first.
[[nodiscard]] StabilityReport run_sweep(const DiscreteProblem& dp, const SweepPlan& plan, const SolveOptions& opts,
                                        unsigned threads = 0);

void write_csv(std::ostream& os, const StabilityReport& rep);
[[nodiscard]] nlohmann::json to_json(const StabilityReport& rep);

}  // namespace bcstab
