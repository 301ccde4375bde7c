#pragma once

#include <optional>
#include <vector>

namespace lrsm {

// Weight function for the tail-weighted CRPS.
struct TwcrpsWeight {
    enum Kind { LowerTail, GaussianCdf, UpperTail, One };
    Kind kind = One;
    double a = 0.0;       // indicator cutoff
    double mu = 0.0;      // Gaussian weight center
    double sigma = 1.0;   // Gaussian weight scale

    static TwcrpsWeight lower_tail(double a);
    static TwcrpsWeight gaussian_cdf(double mu, double sigma);
    static TwcrpsWeight upper_tail(double a80);
    static TwcrpsWeight one();

    double operator()(double z) const;
    std::optional<double> anchor() const;  // location of the weight feature
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

// Fraction of intervals containing the true value.
double empirical_coverage(const std::vector<Interval>& intervals, double truth);

// IS = (u-l) + (2/a*)(l-x) 1{x<l} + (2/a*)(x-u) 1{x>u}.
double interval_score(double lo, double hi, double truth, double alpha_star);

// Reported aggregate: (a*/2) * mean(IS).
double mean_interval_score(const std::vector<Interval>& intervals, double truth,
                           double alpha_star);

struct TwcrpsResult {
    double score = 0.0;
    bool degenerate_weight = false;  // weight anchor fell outside the grid
};

// Grid integral of w(z) (Fhat(z) - 1{z >= truth})^2 over
// [min - 3 range, max + 3 range] of samples plus truth, >= 1000 nodes plus
// the step locations, trapezoidal weight integration.
TwcrpsResult twcrps(const std::vector<double>& samples, double truth,
                    const TwcrpsWeight& weight);

struct ScoreReport {
    double coverage = 0.0;
    double mean_interval_score = 0.0;
    double twcrps_1 = 0.0;  // lower tail, training-median cutoff
    double twcrps_2 = 0.0;  // smooth Gaussian weight
    double twcrps_3 = 0.0;  // upper tail, predictive 80th percentile cutoff
    double walltime_sec = 0.0;
};

}  // namespace lrsm
