#pragma once

#include <functional>
#include <vector>

namespace lrsm {

struct QuadratureConfig {
    double abs_tol = 1e-10;
    double rel_tol = 1e-8;
    int max_subdivisions = 400;
};

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;   // residual error estimate
    int evaluations = 0;
};

// Adaptive Gauss-Kronrod (15 point) on [a,b].  Optional interior breakpoints
// seed the initial subdivision; they are clamped to (a,b).  Throws
// NumericalError carrying the residual estimate if the tolerance cannot be
// met within cfg.max_subdivisions intervals.
QuadratureResult integrate(const std::function<double(double)>& f, double a,
                           double b, const QuadratureConfig& cfg,
                           const std::vector<double>& breakpoints = {});

}  // namespace lrsm
