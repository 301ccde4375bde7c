#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "lrsm/inference.hpp"
#include "lrsm/likelihood.hpp"

namespace lrsm {

// Posterior-predictive draws of the uniform-scale field at held-out sites.
// draws[d] is an n_targets x T matrix; all entries lie in (0,1).
struct PredictiveSamples {
    std::vector<Eigen::MatrixXd> draws;
    int n_targets() const {
        return draws.empty() ? 0 : static_cast<int>(draws[0].rows());
    }
    int T() const { return draws.empty() ? 0 : static_cast<int>(draws[0].cols()); }
    int n_draws() const { return static_cast<int>(draws.size()); }
};

struct PredictConfig {
    int n_retain = 500;        // posterior draws kept (evenly thinned)
    int draws_per_sample = 1;  // M
    int vecchia_m = 10;        // conditioning size for Vecchia prediction
    std::uint64_t seed = 1;
};

// For each retained posterior draw (alpha, rho, R_1..R_T): transform the
// observed uniforms to the Gaussian scale, sample the conditional Gaussian
// field at the targets under the draw's covariance, and map back through h.
// Conditioning is backend-consistent: FullGP/Taper condition on all observed
// sites under their own covariance, Vecchia on the m nearest observed sites
// per target, LowRank through the shared basis coefficients.
PredictiveSamples conditional_simulate(const ReplicateMatrix& u_obs,
                                       const SiteSet& s_obs,
                                       const SiteSet& s_new,
                                       const PosteriorChain& chain,
                                       const LikelihoodBackend& backend,
                                       double nu, const PredictConfig& cfg);

// One scored unit: a predictive sample set paired with the realized value.
struct ScoredUnit {
    std::vector<double> samples;
    double truth = 0.0;
};

// Lossless pairing of predictive draws with held-out truth (n_targets x T).
std::vector<ScoredUnit> twcrps_inputs(const PredictiveSamples& pred,
                                      const Eigen::MatrixXd& truth);

}  // namespace lrsm
