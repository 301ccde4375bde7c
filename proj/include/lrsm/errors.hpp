#pragma once

#include <stdexcept>
#include <string>

namespace lrsm {

// Numerical failures: factorization breakdown, quadrature non-convergence,
// eigen-decomposition trouble.  Carries enough context to identify the
// offending computation.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& msg, double residual = 0.0)
        : std::runtime_error(msg), residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

// File/format problems on external inputs.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace lrsm
