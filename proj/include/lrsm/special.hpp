#pragma once

#include <cmath>

namespace lrsm {

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;
inline constexpr double kSqrt2Pi = 2.5066282746310005024157652848110;

inline double norm_pdf(double z) { return std::exp(-0.5 * z * z) / kSqrt2Pi; }
inline double log_norm_pdf(double z) { return -0.5 * (z * z + kLog2Pi); }

inline double norm_cdf(double z) { return 0.5 * std::erfc(-z * M_SQRT1_2); }

// Upper tail P(Z > z).  erfc keeps full relative precision down to ~1e-308.
inline double norm_sf(double z) { return 0.5 * std::erfc(z * M_SQRT1_2); }

// log of the upper tail, valid for all z (asymptotic expansion once erfc
// underflows, z > ~37.5).
double log_norm_sf(double z);

// Inverse standard normal CDF (Wichura's AS 241, double precision).
double norm_quantile(double p);

// Phi^{-1} evaluated from whichever of (p, 1-p) is smaller, guarded against
// denormal underflow of the small side (saturates near +-37.6).
inline double norm_quantile_pair(double p, double one_minus_p) {
    constexpr double tiny = 2.2250738585072014e-308;
    if (p <= 0.5) return norm_quantile(p < tiny ? tiny : p);
    return -norm_quantile(one_minus_p < tiny ? tiny : one_minus_p);
}

// Pareto-tailed transform g(z) = 1/(1-Phi(z)) - 1; P{g(Z) > t} = (1+t)^{-1}.
// Saturates at ~1e300 instead of overflowing for extreme z.
double pareto_g(double z);

// Matern correlation, UNSCALED argument h/rho:
//   C(h) = 2^{1-nu}/Gamma(nu) * (h/rho)^nu * K_nu(h/rho).
// Closed forms are used at nu = 0.5 and nu = 1.5.
double matern_corr(double h, double rho, double nu);

}  // namespace lrsm
