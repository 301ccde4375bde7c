#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "lrsm/likelihood.hpp"

namespace lrsm {

// alpha ~ Uniform(0,1), rho ~ Uniform(0,0.5), R_t ~ Levy(0,1/2).
// The supports double as the proposal transformation ranges (logit scales).
struct Priors {
    double alpha_lo = 0.0, alpha_hi = 1.0;
    double rho_lo = 0.0, rho_hi = 0.5;
};

struct McmcConfig {
    long n_iter = 50000;
    int adapt_every = 200;          // LAP batch length
    double target_accept = 0.44;
    double burn_in = 0.5;           // fraction discarded, adaptation window
    std::uint64_t seed = 1;
    int store_r_every = 50;         // thinning for stored latent scales
    double init_alpha = 0.5;
    double init_rho = 0.25;
    double init_r = 1.099;          // Levy median
    double init_step = 0.5;         // initial proposal sd on transformed scales
    bool prior_only = false;        // diagnostic: constant likelihood
};

struct McmcState {
    double alpha = 0.5;
    double rho = 0.25;
    std::vector<double> r;
};

struct PosteriorChain {
    std::vector<double> alpha_draws;   // index 0 is the initial state
    std::vector<double> rho_draws;
    Eigen::MatrixXd r_draws;           // stored rows x T
    std::vector<long> r_store_iters;

    double accept_alpha = 0.0;
    double accept_rho = 0.0;
    std::vector<double> accept_r;      // per replicate block

    std::vector<double> alpha_log_sd_history;  // one entry per LAP batch
    std::vector<double> rho_log_sd_history;

    double burn_in = 0.5;
    double walltime_sec = 0.0;

    long n_draws() const { return static_cast<long>(alpha_draws.size()); }
    long burn_in_cutoff() const {
        return static_cast<long>(burn_in * static_cast<double>(n_draws()));
    }
};

// One-at-a-time adaptive Metropolis over (alpha, rho, R_1..R_T): Gaussian
// random walks on logit(alpha), logit(rho/rho_hi) and log R_t, proposal
// scales tuned every adapt_every iterations by
// log sd += b^{-1/2} (rate - target); adaptation freezes after burn-in.
// Deterministic for a fixed seed.
PosteriorChain run_mcmc(const ReplicateMatrix& u,
                        const LikelihoodBackend& backend, const SiteSet& s,
                        double nu, const McmcConfig& cfg,
                        const Priors& priors = {});

// Log posterior on the transformed proposal scale (includes the logit/log
// change-of-variables terms); -inf outside support.
double log_posterior(const McmcState& state, const ReplicateMatrix& u,
                     const LikelihoodBackend& backend, const SiteSet& s,
                     double nu, const Priors& priors = {});

// Batch means standard error with batch size floor(sqrt(N)).
double batch_means_se(const std::vector<double>& draws);

// Type-7 empirical quantile (linear interpolation).
double quantile_type7(std::vector<double> v, double p);

struct ParamSummary {
    double mean = 0.0;
    double median = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double bm_se = 0.0;
};

struct ChainSummary {
    ParamSummary alpha;
    ParamSummary rho;
    double accept_alpha = 0.0;
    double accept_rho = 0.0;
    double accept_r_mean = 0.0;
    double walltime_sec = 0.0;
    long n_draws_used = 0;
};

// Posterior mean/median and equal-tailed credible interval from the
// post-burn-in draws; requires at least 100 of them.
ChainSummary summarize(const PosteriorChain& chain, double level = 0.95);

}  // namespace lrsm
