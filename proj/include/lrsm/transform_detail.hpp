#pragma once

// Internals shared by the likelihood evaluator and the MCMC sampler: the
// dataset's uniforms are sorted once, and per-alpha quantile/density tables
// are built against that fixed ordering.

#include <vector>

#include <Eigen/Dense>

#include "lrsm/marginal.hpp"

namespace lrsm::detail {

struct SortedUniforms {
    std::vector<double> sorted;  // ascending values of the full matrix
    std::vector<int> rank;       // flat column-major index -> sorted position
};

SortedUniforms sort_uniforms(const Eigen::MatrixXd& u);

struct AlphaTable {
    std::vector<double> x;     // marginal quantiles of SortedUniforms::sorted
    std::vector<double> logf;  // log marginal density at x
};

AlphaTable build_alpha_table(const SortedUniforms& su, const MarginalBulk& marg);

// z and summed log |dz/du| for replicate column t.
void replicate_from_table(const SortedUniforms& su, const AlphaTable& tab,
                          const Eigen::MatrixXd& u, int t, double levy_r,
                          double alpha, Eigen::VectorXd& z, double& log_jac);

}  // namespace lrsm::detail
