#include "lrsm/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "lrsm/errors.hpp"
#include "lrsm/special.hpp"
#include "lrsm/transform_detail.hpp"

namespace lrsm {

struct LikelihoodBackend::Cache {
    double rho = std::numeric_limits<double>::quiet_NaN();
    double nu = std::numeric_limits<double>::quiet_NaN();
    int n = 0;

    // FullGP / Taper
    Eigen::LLT<Eigen::MatrixXd> llt;
    double logdet = 0.0;

    // Vecchia: per ordered position, regression of z[site] on z[nbrs]
    struct VecchiaEntry {
        int site = 0;
        Eigen::VectorXd weights;
        double sd = 1.0;
    };
    std::vector<VecchiaEntry> ventries;

    // LowRank: M = tau^2 I + B^T B
    Eigen::LLT<Eigen::MatrixXd> mllt;
    double lr_logdet = 0.0;
};

LikelihoodBackend LikelihoodBackend::full_gp() {
    LikelihoodBackend b;
    b.kind_ = BackendKind::FullGP;
    return b;
}

LikelihoodBackend LikelihoodBackend::vecchia(VecchiaPlan plan) {
    LikelihoodBackend b;
    b.kind_ = BackendKind::Vecchia;
    b.plan_ = std::move(plan);
    return b;
}

LikelihoodBackend LikelihoodBackend::taper(TaperSpec spec) {
    LikelihoodBackend b;
    b.kind_ = BackendKind::Taper;
    b.taper_ = spec;
    return b;
}

LikelihoodBackend LikelihoodBackend::low_rank(BasisExpansion basis) {
    LikelihoodBackend b;
    b.kind_ = BackendKind::LowRank;
    b.basis_ = std::move(basis);
    return b;
}

void LikelihoodBackend::prepare(const SiteSet& s, const MaternParams& p) const {
    if (cache_ && cache_->rho == p.rho && cache_->nu == p.nu &&
        cache_->n == s.n())
        return;
    auto cache = std::make_shared<Cache>();
    cache->rho = p.rho;
    cache->nu = p.nu;
    cache->n = s.n();

    switch (kind_) {
        case BackendKind::FullGP: {
            Eigen::MatrixXd c = covariance_matrix(s, p);
            cache->llt = checked_llt(c, "FullGP backend");
            cache->logdet =
                2.0 * cache->llt.matrixLLT().diagonal().array().log().sum();
            break;
        }
        case BackendKind::Taper: {
            Eigen::MatrixXd c = tapered_covariance(s, p, *taper_);
            cache->llt = checked_llt(c, "Taper backend");
            cache->logdet =
                2.0 * cache->llt.matrixLLT().diagonal().array().log().sum();
            break;
        }
        case BackendKind::Vecchia: {
            const auto& plan = *plan_;
            const int n = s.n();
            cache->ventries.resize(n);
#pragma omp parallel for schedule(dynamic, 16)
            for (int i = 0; i < n; ++i) {
                auto& e = cache->ventries[i];
                e.site = plan.ordering[i];
                const auto& nbrs = plan.neighbor_sets[i];
                const int m = static_cast<int>(nbrs.size());
                if (m == 0) {
                    e.sd = 1.0;
                    continue;
                }
                Eigen::MatrixXd k(m, m);
                Eigen::VectorXd c(m);
                for (int a = 0; a < m; ++a) {
                    c(a) = matern(dist(s[e.site], s[nbrs[a]]), p);
                    k(a, a) = 1.0;
                    for (int b = a + 1; b < m; ++b) {
                        const double v = matern(dist(s[nbrs[a]], s[nbrs[b]]), p);
                        k(a, b) = v;
                        k(b, a) = v;
                    }
                }
                Eigen::LLT<Eigen::MatrixXd> llt(k);
                if (llt.info() != Eigen::Success)
                    throw NumericalError(
                        "Vecchia backend: neighbor covariance not PD at "
                        "ordered index " + std::to_string(i));
                e.weights = llt.solve(c);
                const double var = 1.0 - c.dot(e.weights);
                if (!(var > 0.0))
                    throw NumericalError(
                        "Vecchia backend: nonpositive conditional variance at "
                        "ordered index " + std::to_string(i));
                e.sd = std::sqrt(var);
            }
            break;
        }
        case BackendKind::LowRank: {
            const auto& basis = *basis_;
            const int k = basis.k;
            const double tau2 = basis.nugget_tau2;
            Eigen::MatrixXd m = basis.B.transpose() * basis.B;
            m.diagonal().array() += tau2;
            cache->mllt = checked_llt(m, "LowRank backend");
            cache->lr_logdet =
                (s.n() - k) * std::log(tau2) +
                2.0 * cache->mllt.matrixLLT().diagonal().array().log().sum();
            break;
        }
    }
    cache_ = std::move(cache);
}

double LikelihoodBackend::gaussian_logdensity(const Eigen::VectorXd& z) const {
    if (!cache_)
        throw std::logic_error("LikelihoodBackend: prepare() not called");
    const Cache& c = *cache_;
    const int n = static_cast<int>(z.size());

    switch (kind_) {
        case BackendKind::FullGP:
        case BackendKind::Taper: {
            Eigen::VectorXd y =
                c.llt.matrixL().solve(z);
            return -0.5 * (n * kLog2Pi + c.logdet + y.squaredNorm());
        }
        case BackendKind::Vecchia: {
            double acc = 0.0;
            for (std::size_t i = 0; i < c.ventries.size(); ++i) {
                const auto& e = c.ventries[i];
                const auto& nbrs = plan_->neighbor_sets[i];
                const int m = static_cast<int>(e.weights.size());
                double mean = 0.0;
                for (int a = 0; a < m; ++a) mean += e.weights(a) * z(nbrs[a]);
                const double r = (z(e.site) - mean) / e.sd;
                acc += -0.5 * (kLog2Pi + r * r) - std::log(e.sd);
            }
            return acc;
        }
        case BackendKind::LowRank: {
            const double tau2 = basis_->nugget_tau2;
            Eigen::VectorXd v = basis_->B.transpose() * z;
            const double quad =
                (z.squaredNorm() - v.dot(c.mllt.solve(v))) / tau2;
            return -0.5 * (n * kLog2Pi + c.lr_logdet + quad);
        }
    }
    return 0.0;
}

double gaussian_logdensity(const Eigen::VectorXd& z,
                           const LikelihoodBackend& backend, const SiteSet& s,
                           const MaternParams& p) {
    backend.prepare(s, p);
    return backend.gaussian_logdensity(z);
}

TransformedReplicate transform_replicate(const Eigen::VectorXd& u_t,
                                         double levy_r, double alpha,
                                         const QuadratureConfig& cfg) {
    if (!(levy_r > 0.0))
        throw std::invalid_argument("transform_replicate: R must be > 0");
    const int n = static_cast<int>(u_t.size());
    for (int i = 0; i < n; ++i)
        if (!(u_t(i) > 0.0 && u_t(i) < 1.0))
            throw std::invalid_argument(
                "transform_replicate: u must lie strictly inside (0,1); "
                "clamp file-rounded inputs first");

    TransformedReplicate out;
    out.z.resize(n);
    if (alpha == 0.0) {
        for (int i = 0; i < n; ++i) {
            out.z(i) = norm_quantile(u_t(i));
            out.log_jacobian -= log_norm_pdf(out.z(i));
        }
        return out;
    }
    MarginalDist dist(alpha, cfg);
    const double ra = std::pow(levy_r, alpha);
    const double log_ra = alpha * std::log(levy_r);
    for (int i = 0; i < n; ++i) {
        const double x = dist.quantile(u_t(i));
        const double cc = x / (x + ra);
        const double ss = ra / (x + ra);
        const double z = norm_quantile_pair(cc, ss);
        out.z(i) = z;
        out.log_jacobian += -log_norm_pdf(z) + log_ra - 2.0 * std::log(x + ra) -
                            std::log(dist.pdf(x));
    }
    return out;
}

long clamp_uniforms(Eigen::MatrixXd& u) {
    constexpr double lo = 1e-12, hi = 1.0 - 1e-12;
    long clamped = 0;
    for (int t = 0; t < u.cols(); ++t)
        for (int i = 0; i < u.rows(); ++i) {
            double& v = u(i, t);
            if (v < lo) { v = lo; ++clamped; }
            else if (v > hi) { v = hi; ++clamped; }
        }
    return clamped;
}

namespace detail {

SortedUniforms sort_uniforms(const Eigen::MatrixXd& u) {
    const long nt = static_cast<long>(u.size());
    std::vector<std::pair<double, long>> vals(nt);
    const double* raw = u.data();
    for (long i = 0; i < nt; ++i) vals[i] = {raw[i], i};
    std::sort(vals.begin(), vals.end());
    SortedUniforms su;
    su.sorted.resize(nt);
    su.rank.resize(nt);
    for (long i = 0; i < nt; ++i) {
        su.sorted[i] = vals[i].first;
        su.rank[vals[i].second] = static_cast<int>(i);
    }
    return su;
}

AlphaTable build_alpha_table(const SortedUniforms& su,
                             const MarginalBulk& marg) {
    AlphaTable tab;
    marg.quantile_sweep(su.sorted, tab.x, tab.logf);
    return tab;
}

void replicate_from_table(const SortedUniforms& su, const AlphaTable& tab,
                          const Eigen::MatrixXd& u, int t, double levy_r,
                          double alpha, Eigen::VectorXd& z, double& log_jac) {
    const int n = static_cast<int>(u.rows());
    z.resize(n);
    log_jac = 0.0;
    if (alpha == 0.0) {
        for (int i = 0; i < n; ++i) {
            z(i) = norm_quantile(u(i, t));
            log_jac -= log_norm_pdf(z(i));
        }
        return;
    }
    const double ra = std::pow(levy_r, alpha);
    const double log_ra = alpha * std::log(levy_r);
    for (int i = 0; i < n; ++i) {
        const long flat = static_cast<long>(i) + static_cast<long>(n) * t;
        const int pos = su.rank[flat];
        const double x = tab.x[pos];
        const double cc = x / (x + ra);
        const double ss = ra / (x + ra);
        const double zi = norm_quantile_pair(cc, ss);
        z(i) = zi;
        log_jac += -log_norm_pdf(zi) + log_ra - 2.0 * std::log(x + ra) -
                   tab.logf[pos];
    }
}

}  // namespace detail

LogLikResult loglik_full(const ReplicateMatrix& u, const LevyDraws& r,
                         double alpha, const MaternParams& p,
                         const LikelihoodBackend& backend, const SiteSet& s) {
    if (u.n() != s.n())
        throw std::invalid_argument("loglik_full: site count mismatch");
    if (u.T() != r.T())
        throw std::invalid_argument("loglik_full: replicate count mismatch");
    const double* raw = u.values.data();
    for (long i = 0; i < static_cast<long>(u.values.size()); ++i)
        if (!(raw[i] > 0.0 && raw[i] < 1.0))
            throw std::invalid_argument(
                "loglik_full: u must lie strictly inside (0,1)");

    backend.prepare(s, p);
    MarginalBulk marg(alpha);
    auto su = detail::sort_uniforms(u.values);
    auto tab = detail::build_alpha_table(su, marg);

    const int T = u.T();
    std::vector<double> gauss(T), jac(T);
#pragma omp parallel for schedule(static)
    for (int t = 0; t < T; ++t) {
        Eigen::VectorXd z;
        detail::replicate_from_table(su, tab, u.values, t, r.r[t], alpha, z,
                                     jac[t]);
        gauss[t] = backend.gaussian_logdensity(z);
    }
    LogLikResult out;
    for (int t = 0; t < T; ++t) {  // fixed order keeps the sum deterministic
        out.gaussian_part += gauss[t];
        out.jacobian_part += jac[t];
    }
    out.loglik = out.gaussian_part + out.jacobian_part;
    return out;
}

namespace ref {
LogLikResult loglik_full(const ReplicateMatrix& u, const LevyDraws& r,
                         double alpha, const MaternParams& p,
                         const SiteSet& s) {
    Eigen::MatrixXd c = lrsm::ref::covariance_matrix(s, p);
    Eigen::LLT<Eigen::MatrixXd> llt(c);
    const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    LogLikResult out;
    for (int t = 0; t < u.T(); ++t) {
        auto tr = transform_replicate(u.values.col(t), r.r[t], alpha);
        Eigen::VectorXd y = llt.matrixL().solve(tr.z);
        out.gaussian_part +=
            -0.5 * (u.n() * kLog2Pi + logdet + y.squaredNorm());
        out.jacobian_part += tr.log_jacobian;
    }
    out.loglik = out.gaussian_part + out.jacobian_part;
    return out;
}
}  // namespace ref

}  // namespace lrsm
