#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "lrsm/quadrature.hpp"
#include "lrsm/special.hpp"

namespace lrsm {

// Levy location/scale are fixed at (0, 1/2) throughout; alpha/c = 2 alpha
// then controls the extremal dependence class.
inline constexpr double kLevyLocation = 0.0;
inline constexpr double kLevyScale = 0.5;

inline bool asymptotically_dependent(double alpha) {
    return alpha >= kLevyScale;
}

// Levy(0, 1/2) density (4 pi r^3)^{-1/2} exp(-1/(4r)).
double levy_pdf(double r);
double levy_log_pdf(double r);
// Inverse CDF; median ~ 1.0990.
double levy_quantile(double u);

// Marginal law of X = R^alpha g(Z).  The mixing integral over the Levy
// scale is computed as a half-normal expectation (R = 1/(2 Q^2), Q standard
// normal), which removes the endpoint singularities of the direct r-integral.
// Adaptive Gauss-Kronrod, authoritative for the scalar API.
class MarginalDist {
public:
    explicit MarginalDist(double alpha, QuadratureConfig cfg = {});

    double alpha() const { return alpha_; }
    double cdf(double x) const;
    double sf(double x) const;          // 1 - cdf, computed without cancellation
    double pdf(double x) const;
    // Bracketed root solve (geometric expansion, then bisection/secant) to
    // |F(x) - u| <= 1e-10.
    double quantile(double u) const;

private:
    double mix_expectation(double x, int form) const;
    double alpha_;
    QuadratureConfig cfg_;
};

// Fixed-node companion engine for bulk sweeps inside likelihood evaluation:
// a composite 15-point Gauss rule whose nodes are shared across all x, so a
// cdf/pdf evaluation is a dot product with no transcendental calls.
// Validated against MarginalDist to ~1e-9; not the public scalar API.
class MarginalBulk {
public:
    explicit MarginalBulk(double alpha);

    double alpha() const { return alpha_; }
    double cdf(double x) const;
    double sf(double x) const;
    double pdf(double x) const;
    double quantile(double u) const;

    // For ascending u, fills x[i] = quantile(u[i]) and logpdf[i] =
    // log pdf(x[i]) with warm-started brackets.
    void quantile_sweep(const std::vector<double>& u_sorted,
                        std::vector<double>& x,
                        std::vector<double>& logpdf) const;

private:
    double quantile_from(double u, double lo_hint) const;
    double alpha_;
    std::vector<double> s_;   // (2 q_j^2)^alpha per node
    std::vector<double> a_;   // 2 phi(q_j) w_j (including log-panel jacobian)
};

// Copula transformations between the Gaussian and uniform scales.
double h_transform(double z, double levy_r, double alpha,
                   const QuadratureConfig& cfg = {});
double h_inverse(double u, double levy_r, double alpha,
                 const QuadratureConfig& cfg = {});
// dz/du of the componentwise transformation; positive.
double jacobian_du_to_dz(double u, double levy_r, double alpha,
                         const QuadratureConfig& cfg = {});

struct ChiLimit {
    double value = 0.0;
    double se = 0.0;
};

// Limiting upper tail dependence coefficient chi for a pair with latent
// Gaussian correlation corr: Monte Carlo evaluation of the ratio
// E[min{g^{c/a}(Z1), g^{c/a}(Z2)}] / E[g^{c/a}(Z1)] when alpha >= c,
// exactly 0 when alpha < c.
ChiLimit chi_limit(double corr, double alpha, long n_mc, std::uint64_t seed);

// Coefficient of tail dependence eta: 1 under asymptotic dependence, else
// max{(1 + corr)/2, alpha/c}.
double eta_coefficient(double corr, double alpha);

}  // namespace lrsm
