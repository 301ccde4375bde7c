#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lrsm/correlation.hpp"
#include "lrsm/sites.hpp"

namespace lrsm {

enum class Scale { UniformU, GaussianZ, RawX };

// n x T replicate matrix: column t is one spatial replicate.
struct ReplicateMatrix {
    Eigen::MatrixXd values;
    Scale scale = Scale::UniformU;

    int n() const { return static_cast<int>(values.rows()); }
    int T() const { return static_cast<int>(values.cols()); }
};

struct LevyDraws {
    std::vector<double> r;
    int T() const { return static_cast<int>(r.size()); }
};

// T iid Levy(0,1/2) draws by inverse CDF; deterministic per seed.
LevyDraws sample_levy(int T, std::uint64_t seed);

// Gaussian replicates with covariance matern(s; p): columns are L * eps with
// per-column derived substreams, so results do not depend on thread count.
ReplicateMatrix sample_gp(const SiteSet& s, const MaternParams& p, int T,
                          std::uint64_t seed);

struct LrsmSimulation {
    ReplicateMatrix u;  // UniformU
    ReplicateMatrix z;  // GaussianZ latent truth
    LevyDraws r;
};

// Full model draw: U_t(s_i) = h(Z_t(s_i); R_t, alpha).
LrsmSimulation simulate_lrsm(const SiteSet& s, const MaternParams& p,
                             double alpha, int T, std::uint64_t seed);

// CSV layout: header site_id,t,value; metadata goes in a JSON sidecar.
void write_replicates_csv(const ReplicateMatrix& m, const std::string& path);
ReplicateMatrix read_replicates_csv(const std::string& path, Scale scale);

namespace ref {
// serial counterpart of the OpenMP uniform-transform kernel
Eigen::MatrixXd lrsm_uniforms(const Eigen::MatrixXd& z,
                              const std::vector<double>& levy_r, double alpha);
}

}  // namespace lrsm
