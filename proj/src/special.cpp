#include "lrsm/special.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "lrsm/rng.hpp"

namespace lrsm {

double log_norm_sf(double z) {
    if (z < 37.0) {
        double s = norm_sf(z);
        if (s > 0.0) return std::log(s);
    }
    // asymptotic: log Phi-bar(z) = -z^2/2 - log(z sqrt(2 pi)) + log(1 - 1/z^2 + 3/z^4 - ...)
    double z2 = z * z;
    double corr = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
    return -0.5 * z2 - std::log(z * kSqrt2Pi) + std::log(corr);
}

// Wichura (1988), algorithm AS 241, PPND16.
double norm_quantile(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw std::invalid_argument("norm_quantile: p must be in (0,1)");
    const double q = p - 0.5;
    double r, x;
    if (std::fabs(q) <= 0.425) {
        r = 0.180625 - q * q;
        x = q *
            (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                  6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
                1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
              1.3314166789178437745e+2) * r + 3.3871328727963666080e+0) /
            (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                  3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
                5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
              4.2313330701600911252e+1) * r + 1.0);
        return x;
    }
    r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    if (r <= 5.0) {
        r -= 1.6;
        x = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                  2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
                3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
              4.63033784615654529590e+0) * r + 1.42343711074968357734e+0) /
            (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                  1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
              2.05319162663775882187e+0) * r + 1.0);
    } else {
        r -= 5.0;
        x = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                  1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
              5.46378491116411436990e+0) * r + 6.65790464350110377720e+0) /
            (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                  1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
              5.99832206555887937690e-1) * r + 1.0);
    }
    return q < 0.0 ? -x : x;
}

double pareto_g(double z) {
    if (!std::isfinite(z)) throw std::invalid_argument("pareto_g: non-finite z");
    double s = norm_sf(z);
    if (s >= 1e-280) return 1.0 / s - 1.0;
    double lg = -log_norm_sf(z);
    if (lg > 690.0) return 1e300;
    return std::exp(lg) - 1.0;
}

double matern_corr(double h, double rho, double nu) {
    if (!(rho > 0.0) || !(nu > 0.0))
        throw std::invalid_argument("matern_corr: rho and nu must be positive");
    if (!std::isfinite(h) || h < 0.0)
        throw std::invalid_argument("matern_corr: distance must be finite and >= 0");
    if (h == 0.0) return 1.0;
    const double u = h / rho;
    if (nu == 0.5) return std::exp(-u);
    if (nu == 1.5) return (1.0 + u) * std::exp(-u);
    if (nu == 2.5) return (1.0 + u + u * u / 3.0) * std::exp(-u);
    if (u > 600.0) return 0.0;
    double v = std::exp((1.0 - nu) * std::log(2.0) - std::lgamma(nu) +
                        nu * std::log(u)) *
               std::cyl_bessel_k(nu, u);
    // guard for rounding at very small u where the limit is exactly 1
    if (v > 1.0) v = 1.0;
    return v;
}

double Rng::normal() { return norm_quantile(uniform()); }

}  // namespace lrsm
