#pragma once

#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "lrsm/correlation.hpp"
#include "lrsm/fields.hpp"
#include "lrsm/marginal.hpp"
#include "lrsm/sites.hpp"

namespace lrsm {

enum class BackendKind { FullGP, Vecchia, Taper, LowRank };

struct LogLikResult {
    double loglik = 0.0;
    double gaussian_part = 0.0;
    double jacobian_part = 0.0;
};

// One of the four interchangeable Gaussian engines behind the copula
// likelihood.  prepare() factorizes for a given theta and caches; the cache
// is keyed on (rho, nu) and reused until theta changes.  logdensity() is
// then valid for any replicate vector.
class LikelihoodBackend {
public:
    static LikelihoodBackend full_gp();
    static LikelihoodBackend vecchia(VecchiaPlan plan);
    static LikelihoodBackend taper(TaperSpec spec);
    static LikelihoodBackend low_rank(BasisExpansion basis);

    BackendKind kind() const { return kind_; }
    const VecchiaPlan* plan() const { return plan_ ? &*plan_ : nullptr; }
    const TaperSpec* taper_spec() const { return taper_ ? &*taper_ : nullptr; }
    const BasisExpansion* basis() const { return basis_ ? &*basis_ : nullptr; }

    void prepare(const SiteSet& s, const MaternParams& p) const;
    double gaussian_logdensity(const Eigen::VectorXd& z) const;

private:
    LikelihoodBackend() = default;
    BackendKind kind_ = BackendKind::FullGP;
    std::optional<VecchiaPlan> plan_;
    std::optional<TaperSpec> taper_;
    std::optional<BasisExpansion> basis_;

    struct Cache;
    mutable std::shared_ptr<Cache> cache_;
};

// Convenience wrapper matching the per-operation contract: prepares the
// backend for (s, p) if needed and evaluates one replicate.
double gaussian_logdensity(const Eigen::VectorXd& z,
                           const LikelihoodBackend& backend, const SiteSet& s,
                           const MaternParams& p);

struct TransformedReplicate {
    Eigen::VectorXd z;
    double log_jacobian = 0.0;
};

// Componentwise u -> z for one replicate plus the summed log |dz/du|.
// u entries must lie strictly inside (0,1); callers clamp file-rounded data
// (see clamp_uniforms).
TransformedReplicate transform_replicate(const Eigen::VectorXd& u_t,
                                         double levy_r, double alpha,
                                         const QuadratureConfig& cfg = {});

// Clamps to [1e-12, 1 - 1e-12]; returns the number of clamped entries.
long clamp_uniforms(Eigen::MatrixXd& u);

// Conditional log density log f_U(u | R, alpha, theta): Gaussian part under
// the chosen backend plus the change-of-variables Jacobian, summed over
// replicates.  OpenMP-parallel across replicates.
LogLikResult loglik_full(const ReplicateMatrix& u, const LevyDraws& r,
                         double alpha, const MaternParams& p,
                         const LikelihoodBackend& backend, const SiteSet& s);

namespace ref {
// Serial reference: scalar adaptive-quadrature transforms and a dense
// normal density, independent of the bulk-engine code paths.
LogLikResult loglik_full(const ReplicateMatrix& u, const LevyDraws& r,
                         double alpha, const MaternParams& p, const SiteSet& s);
}

}  // namespace lrsm
