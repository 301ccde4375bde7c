#include "lrsm/prediction.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lrsm/errors.hpp"
#include "lrsm/rng.hpp"
#include "lrsm/special.hpp"
#include "lrsm/transform_detail.hpp"

namespace lrsm {

namespace {

// retained posterior draw indices: stored-R rows at or past burn-in,
// evenly thinned down to n_retain
std::vector<int> retained_rows(const PosteriorChain& chain, int n_retain) {
    const long cutoff = chain.burn_in_cutoff();
    std::vector<int> rows;
    for (std::size_t i = 0; i < chain.r_store_iters.size(); ++i)
        if (chain.r_store_iters[i] >= cutoff) rows.push_back(static_cast<int>(i));
    if (rows.empty() && !chain.r_store_iters.empty())
        rows.push_back(static_cast<int>(chain.r_store_iters.size()) - 1);
    if (static_cast<int>(rows.size()) > n_retain) {
        std::vector<int> thin;
        thin.reserve(n_retain);
        const double stride =
            static_cast<double>(rows.size()) / static_cast<double>(n_retain);
        for (int j = 0; j < n_retain; ++j)
            thin.push_back(rows[static_cast<std::size_t>(j * stride)]);
        rows = std::move(thin);
    }
    return rows;
}

struct GaussianPredictor {
    // z_new = mean_op * z_obs + noise;  the noise law depends on the backend
    Eigen::MatrixXd mean_op;          // dense conditioning (FullGP/Taper)
    Eigen::MatrixXd cond_chol;        // Cholesky of conditional covariance

    // Vecchia: per-target univariate regression
    std::vector<std::vector<int>> nbrs;
    Eigen::MatrixXd weights;          // n_new x m
    Eigen::VectorXd sd;

    // LowRank
    Eigen::MatrixXd b_new;            // n_new x k
    Eigen::LLT<Eigen::MatrixXd> mllt; // tau2 I + B_obs^T B_obs
    Eigen::MatrixXd b_obs_t;          // k x n_obs
    double tau = 0.0;
};

GaussianPredictor build_predictor(BackendKind kind, const SiteSet& s_obs,
                                  const SiteSet& s_new,
                                  const LikelihoodBackend& backend,
                                  const MaternParams& p, int vecchia_m) {
    GaussianPredictor g;
    const int n_obs = s_obs.n();
    const int n_new = s_new.n();
    switch (kind) {
        case BackendKind::FullGP:
        case BackendKind::Taper: {
            const TaperSpec* taper = backend.taper_spec();
            auto corr = [&](const Point& a, const Point& b) {
                const double h = dist(a, b);
                double v = matern(h, p);
                if (taper) v *= spherical_taper(h, *taper);
                return v;
            };
            Eigen::MatrixXd c_oo(n_obs, n_obs), c_no(n_new, n_obs),
                c_nn(n_new, n_new);
            for (int i = 0; i < n_obs; ++i)
                for (int j = 0; j < n_obs; ++j)
                    c_oo(i, j) = corr(s_obs[i], s_obs[j]);
            for (int i = 0; i < n_new; ++i) {
                for (int j = 0; j < n_obs; ++j)
                    c_no(i, j) = corr(s_new[i], s_obs[j]);
                for (int j = 0; j < n_new; ++j)
                    c_nn(i, j) = corr(s_new[i], s_new[j]);
            }
            Eigen::LLT<Eigen::MatrixXd> llt =
                checked_llt(c_oo, "conditional_simulate: observed covariance");
            g.mean_op = llt.solve(c_no.transpose()).transpose();
            Eigen::MatrixXd cond = c_nn - g.mean_op * c_no.transpose();
            cond = 0.5 * (cond + cond.transpose());
            cond.diagonal().array() += 1e-12;  // kriging roundoff guard
            Eigen::LLT<Eigen::MatrixXd> cllt(cond);
            if (cllt.info() != Eigen::Success)
                throw NumericalError(
                    "conditional_simulate: conditional covariance not PSD");
            g.cond_chol = cllt.matrixL();
            break;
        }
        case BackendKind::Vecchia: {
            const int m = std::min(vecchia_m, n_obs);
            g.nbrs = knn_to_targets(s_obs, s_new, m);
            g.weights.resize(n_new, m);
            g.sd.resize(n_new);
            for (int j = 0; j < n_new; ++j) {
                const auto& nb = g.nbrs[j];
                Eigen::MatrixXd k(m, m);
                Eigen::VectorXd c(m);
                for (int a = 0; a < m; ++a) {
                    c(a) = matern(dist(s_new[j], s_obs[nb[a]]), p);
                    k(a, a) = 1.0;
                    for (int b = a + 1; b < m; ++b) {
                        const double v =
                            matern(dist(s_obs[nb[a]], s_obs[nb[b]]), p);
                        k(a, b) = v;
                        k(b, a) = v;
                    }
                }
                Eigen::LLT<Eigen::MatrixXd> llt(k);
                if (llt.info() != Eigen::Success)
                    throw NumericalError(
                        "conditional_simulate: neighbor covariance not PD");
                g.weights.row(j) = llt.solve(c).transpose();
                const double var = 1.0 - g.weights.row(j).dot(c) + 1e-12;
                if (!(var > 0.0))
                    throw NumericalError(
                        "conditional_simulate: nonpositive Vecchia variance");
                g.sd(j) = std::sqrt(var);
            }
            break;
        }
        case BackendKind::LowRank: {
            const BasisExpansion* basis = backend.basis();
            if (basis->source_sites.n() != n_obs)
                throw std::invalid_argument(
                    "conditional_simulate: basis built on different sites");
            g.b_new = basis->evaluate(s_new);
            Eigen::MatrixXd m =
                basis->B.transpose() * basis->B;
            m.diagonal().array() += basis->nugget_tau2;
            g.mllt = checked_llt(m, "conditional_simulate: low-rank system");
            g.b_obs_t = basis->B.transpose();
            g.tau = std::sqrt(basis->nugget_tau2);
            break;
        }
    }
    return g;
}

}  // namespace

PredictiveSamples conditional_simulate(const ReplicateMatrix& u_obs,
                                       const SiteSet& s_obs,
                                       const SiteSet& s_new,
                                       const PosteriorChain& chain,
                                       const LikelihoodBackend& backend,
                                       double nu, const PredictConfig& cfg) {
    if (chain.n_draws() == 0 || chain.r_store_iters.empty())
        throw std::invalid_argument("conditional_simulate: empty chain");
    if (u_obs.n() != s_obs.n())
        throw std::invalid_argument("conditional_simulate: size mismatch");
    for (int j = 0; j < s_new.n(); ++j)
        for (int i = 0; i < s_obs.n(); ++i)
            if (dist(s_new[j], s_obs[i]) == 0.0)
                throw std::invalid_argument(
                    "conditional_simulate: target coincides with observed site");

    const int T = u_obs.T();
    const int n_new = s_new.n();
    const std::vector<int> rows = retained_rows(chain, cfg.n_retain);
    const int n_total = static_cast<int>(rows.size()) * cfg.draws_per_sample;

    PredictiveSamples out;
    out.draws.assign(n_total, Eigen::MatrixXd(n_new, T));

    const auto su = detail::sort_uniforms(u_obs.values);

#pragma omp parallel for schedule(dynamic)
    for (int di = 0; di < static_cast<int>(rows.size()); ++di) {
        const int row = rows[di];
        const long iter = chain.r_store_iters[row];
        const double alpha = chain.alpha_draws[iter];
        const double rho = chain.rho_draws[iter];
        const Eigen::VectorXd r_draw = chain.r_draws.row(row);
        const MaternParams p{rho, nu};

        MarginalBulk marg(alpha);
        const auto tab = detail::build_alpha_table(su, marg);
        GaussianPredictor pred = build_predictor(backend.kind(), s_obs, s_new,
                                                 backend, p, cfg.vecchia_m);

        Eigen::VectorXd z_obs;
        double unused_jac = 0.0;
        for (int m = 0; m < cfg.draws_per_sample; ++m) {
            Eigen::MatrixXd& dst = out.draws[di * cfg.draws_per_sample + m];
            for (int t = 0; t < T; ++t) {
                Rng rng(Rng::derive(cfg.seed,
                                    {0x9aedu, static_cast<std::uint64_t>(row),
                                     static_cast<std::uint64_t>(m),
                                     static_cast<std::uint64_t>(t)}));
                detail::replicate_from_table(su, tab, u_obs.values, t,
                                             r_draw(t), alpha, z_obs,
                                             unused_jac);
                Eigen::VectorXd z_new(n_new);
                switch (backend.kind()) {
                    case BackendKind::FullGP:
                    case BackendKind::Taper: {
                        Eigen::VectorXd eps(n_new);
                        for (int j = 0; j < n_new; ++j) eps(j) = rng.normal();
                        z_new = pred.mean_op * z_obs + pred.cond_chol * eps;
                        break;
                    }
                    case BackendKind::Vecchia: {
                        for (int j = 0; j < n_new; ++j) {
                            const auto& nb = pred.nbrs[j];
                            double mean = 0.0;
                            for (std::size_t a = 0; a < nb.size(); ++a)
                                mean += pred.weights(j, static_cast<int>(a)) *
                                        z_obs(nb[a]);
                            z_new(j) = mean + pred.sd(j) * rng.normal();
                        }
                        break;
                    }
                    case BackendKind::LowRank: {
                        const int k = static_cast<int>(pred.b_new.cols());
                        Eigen::VectorXd v = pred.b_obs_t * z_obs;
                        Eigen::VectorXd delta_mean = pred.mllt.solve(v);
                        Eigen::VectorXd eps(k);
                        for (int j = 0; j < k; ++j) eps(j) = rng.normal();
                        // delta | z_obs ~ N(M^{-1} B' z, tau^2 M^{-1})
                        Eigen::VectorXd delta =
                            delta_mean +
                            pred.tau * pred.mllt.matrixU().solve(eps);
                        z_new = pred.b_new * delta;
                        for (int j = 0; j < n_new; ++j)
                            z_new(j) += pred.tau * rng.normal();
                        break;
                    }
                }
                const double ra = std::pow(r_draw(t), alpha);
                for (int j = 0; j < n_new; ++j)
                    dst(j, t) = alpha == 0.0
                                    ? norm_cdf(z_new(j))
                                    : marg.cdf(ra * pareto_g(z_new(j)));
            }
        }
    }
    return out;
}

std::vector<ScoredUnit> twcrps_inputs(const PredictiveSamples& pred,
                                      const Eigen::MatrixXd& truth) {
    if (pred.n_targets() != truth.rows() || pred.T() != truth.cols())
        throw std::invalid_argument("twcrps_inputs: shape mismatch");
    std::vector<ScoredUnit> units;
    units.reserve(static_cast<std::size_t>(truth.size()));
    for (int i = 0; i < truth.rows(); ++i)
        for (int t = 0; t < truth.cols(); ++t) {
            ScoredUnit u;
            u.truth = truth(i, t);
            u.samples.reserve(pred.n_draws());
            for (const auto& d : pred.draws) u.samples.push_back(d(i, t));
            units.push_back(std::move(u));
        }
    return units;
}

}  // namespace lrsm
