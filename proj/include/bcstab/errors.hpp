#pragma once

#include <stdexcept>
#include <string>

namespace bcstab {

/// An instance failed one of the admission rules. `label()` names the violated assumption,
/// e.g. "H4", "C0", "gamma", "m>=2".
class AdmissionError : public std::runtime_error {
public:
    AdmissionError(std::string label, const std::string& message)
        : std::runtime_error("[" + label + "] " + message), label_(std::move(label))
    {
    }

    [[nodiscard]] const std::string& label() const noexcept { return label_; }

private:
    std::string label_;
};

/// Sparse factorisation failed or the solve missed its residual target.
class LinearSolveError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace bcstab
