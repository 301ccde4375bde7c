#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lrsm/fields.hpp"
#include "lrsm/sites.hpp"

namespace lrsm {

struct ChiEstimate {
    std::vector<double> u_grid;
    std::vector<double> chi_hat;
    std::vector<double> ci_low;
    std::vector<double> ci_high;
    double lag_h = 0.0;
    double lag_tol = 0.0;
    int n_pairs = 0;
};

// Pooled ratio estimator over all site pairs within the lag window:
// chi_u = #{both exceed u} / ((1-u) * T * #pairs), with pointwise bands from
// a nonparametric bootstrap over replicates.
ChiEstimate empirical_chi(const ReplicateMatrix& u, const SiteSet& s,
                          double lag_h, double lag_tol,
                          const std::vector<double>& u_grid, int n_boot,
                          std::uint64_t seed);

struct MaxStabTestResult {
    double ad_statistic = 0.0;
    double p_value = 1.0;
    int n_bootstrap = 0;
    double gumbel_location_hat = 0.0;
    long clamped = 0;  // uniforms clamped away from {0,1}
};

// Bootstrap max-stability test: the replicate-wise max of log unit-Frechet
// margins should be Gumbel(mu, 1) under max-stability.  The location is
// fitted by maximum likelihood with unit scale, the Anderson-Darling distance
// to the fitted Gumbel is the statistic, and the null distribution comes
// from a parametric bootstrap with the location refitted on each draw.
MaxStabTestResult max_stability_test(const ReplicateMatrix& u,
                                     const std::vector<int>& site_subset,
                                     int n_bootstrap, std::uint64_t seed);

struct GevParams {
    double mu = 0.0;
    double sigma = 1.0;
    double xi = 0.0;
};

double gev_cdf(double z, const GevParams& p);
double gev_quantile(double prob, const GevParams& p);
double gev_logpdf(double z, const GevParams& p);  // -inf outside support

// Thrown with the best parameters found when Nelder-Mead fails to converge.
class EstimationError : public std::runtime_error {
public:
    EstimationError(const std::string& msg, GevParams best)
        : std::runtime_error(msg), best_(best) {}
    const GevParams& best() const { return best_; }

private:
    GevParams best_;
};

GevParams gev_fit_mle(const std::vector<double>& block_maxima,
                      std::optional<GevParams> init = std::nullopt);

// Per-site probability integral transform of block maxima to uniforms,
// clamped to [1e-12, 1 - 1e-12].
ReplicateMatrix pit_to_uniform(const Eigen::MatrixXd& block_maxima,
                               const std::vector<GevParams>& fits);

struct GofResult {
    double statistic = 0.0;
    double p_value = 1.0;
    bool tie_warning = false;
};

// Anderson-Darling test of uniformity (case 0 asymptotic p-value).
GofResult anderson_darling_gof(std::vector<double> u);

}  // namespace lrsm
