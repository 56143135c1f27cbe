#pragma once

#include "bcstab/problem.hpp"

#include <initializer_list>
#include <memory>
#include <string>

namespace support {

/// Spec with identity operator, a0 = 1, beta = gamma = 1 and the given expressions.
inline bcstab::ProblemSpec spec(const std::string& L, const std::string& h,
                                std::initializer_list<std::string> g = {"y - 1", "y - 2"},
                                const std::string& ell = "0", const std::string& alpha = "0",
                                const std::string& lambda_bar = "0")
{
    bcstab::ProblemSpec s;
    s.L = bcstab::parse(L);
    s.h = bcstab::parse(h);
    s.ell = bcstab::parse(ell);
    s.alpha = bcstab::parse(alpha);
    s.beta = bcstab::Expr::constant(1.0);
    s.gamma = 1.0;
    s.lambda_bar = bcstab::parse(lambda_bar);
    for (const auto& gi : g) s.g.push_back(bcstab::parse(gi));
    return s;
}

inline std::unique_ptr<bcstab::DiscreteProblem> discrete(const bcstab::ProblemSpec& s, int n = 32, int refinement = 0)
{
    return std::make_unique<bcstab::DiscreteProblem>(std::make_shared<const bcstab::Problem>(s),
                                                     bcstab::make_disk_mesh(n, refinement));
}

}  // namespace support
