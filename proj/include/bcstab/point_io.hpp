#pragma once

#include "bcstab/kkt.hpp"
#include "bcstab/problem.hpp"

#include <iosfwd>
#include <stdexcept>

namespace bcstab {

/// Point file does not fit the mesh or instance (wrong hash, counts or value count).
class PointFormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Header `kktpoint v1 mesh=<hash> vertices=N boundary=Nb m=M`, then one value per line:
/// y (N), u (Nb), theta (N), e_1 .. e_m (Nb each).
void write_point(std::ostream& os, const DiscreteProblem& dp, const KktPoint& p);

/// Reads a point written by write_point; lambda is supplied by the caller.
[[nodiscard]] KktPoint read_point(std::istream& is, const DiscreteProblem& dp, const Vector& lambda);

}  // namespace bcstab
