#pragma once

#include "bcstab/problem.hpp"
#include "bcstab/solver.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace bcstab {

/// Malformed or incomplete instance file. Admission-rule failures raise AdmissionError instead.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SweepConfig {
    Expr delta;
    std::vector<double> t;
    std::uint64_t seed = 1;
    bool warm_start = false;
};

/// INI instance file:
///
///   [domain]      n_boundary, refinement, r
///   [operator]    a11, a12, a22, a0, C0
///   [cost]        L, ell, alpha, beta, gamma
///   [state]       h, M
///   [constraints] g1, g2, ...
///   [parameter]   lambda_bar
///   [solver]      kkt_tol, damping, adaptive, max_outer, ssc_samples
///   [sweep]       delta, t (comma separated), seed, warm_start
struct InstanceConfig {
    ProblemSpec spec;
    int n_boundary = 64;
    int refinement = 0;
    SolveOptions solver;
    int ssc_samples = 100;
    std::optional<SweepConfig> sweep;
};

[[nodiscard]] InstanceConfig parse_config(std::istream& is);
[[nodiscard]] InstanceConfig load_config(const std::string& path);

}  // namespace bcstab
