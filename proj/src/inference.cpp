#include "lrsm/inference.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "lrsm/errors.hpp"
#include "lrsm/rng.hpp"
#include "lrsm/special.hpp"
#include "lrsm/transform_detail.hpp"

namespace lrsm {

namespace {

inline double logit(double p) { return std::log(p / (1.0 - p)); }
inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// prior density + proposal-scale change-of-variables terms, block by block
inline double alpha_block_term(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        return -std::numeric_limits<double>::infinity();
    return std::log(alpha) + std::log1p(-alpha);
}

inline double rho_block_term(double rho, const Priors& pri) {
    if (!(rho > pri.rho_lo && rho < pri.rho_hi))
        return -std::numeric_limits<double>::infinity();
    const double width = pri.rho_hi - pri.rho_lo;
    const double frac = rho / pri.rho_hi;
    return -std::log(width) + std::log(rho) + std::log1p(-frac);
}

inline double r_block_term(double r) {
    if (!(r > 0.0)) return -std::numeric_limits<double>::infinity();
    return levy_log_pdf(r) + std::log(r);
}

// All likelihood components for one state of the chain.
struct Components {
    detail::AlphaTable tab;
    std::vector<Eigen::VectorXd> z;
    std::vector<double> gauss, jac;

    double gauss_sum() const {
        double g = 0.0;
        for (double v : gauss) g += v;
        return g;
    }
    double jac_sum() const {
        double j = 0.0;
        for (double v : jac) j += v;
        return j;
    }
};

class Evaluator {
public:
    Evaluator(const Eigen::MatrixXd& u, const LikelihoodBackend& backend,
              const SiteSet& s, double nu)
        : u_(u), backend_(backend), s_(s), nu_(nu),
          su_(detail::sort_uniforms(u)) {}

    int T() const { return static_cast<int>(u_.cols()); }

    detail::AlphaTable alpha_table(double alpha) const {
        MarginalBulk marg(alpha);
        return detail::build_alpha_table(su_, marg);
    }

    void prepare_theta(double rho) { backend_.prepare(s_, {rho, nu_}); }

    // rebuilds z/jacobian for all replicates under (tab, alpha, R), and the
    // Gaussian part under the currently prepared theta
    void refresh_all(Components& c, double alpha, const std::vector<double>& r,
                     bool redo_transform) const {
        const int T = this->T();
        c.z.resize(T);
        c.gauss.resize(T);
        c.jac.resize(T);
#pragma omp parallel for schedule(static)
        for (int t = 0; t < T; ++t) {
            if (redo_transform)
                detail::replicate_from_table(su_, c.tab, u_, t, r[t], alpha,
                                             c.z[t], c.jac[t]);
            c.gauss[t] = backend_.gaussian_logdensity(c.z[t]);
        }
    }

    void refresh_replicate(Components& c, int t, double alpha, double r) const {
        detail::replicate_from_table(su_, c.tab, u_, t, r, alpha, c.z[t],
                                     c.jac[t]);
        c.gauss[t] = backend_.gaussian_logdensity(c.z[t]);
    }

    const LikelihoodBackend& backend() const { return backend_; }
    LikelihoodBackend& backend() { return backend_; }

private:
    const Eigen::MatrixXd& u_;
    LikelihoodBackend backend_;
    const SiteSet& s_;
    double nu_;
    detail::SortedUniforms su_;
};

void check_uniform_input(const ReplicateMatrix& u, const SiteSet& s) {
    if (u.scale != Scale::UniformU)
        throw std::invalid_argument("mcmc: data must be on uniform scale");
    if (u.n() != s.n())
        throw std::invalid_argument("mcmc: site count mismatch");
    const double* raw = u.values.data();
    for (long i = 0; i < static_cast<long>(u.values.size()); ++i)
        if (!(raw[i] > 0.0 && raw[i] < 1.0))
            throw std::invalid_argument(
                "mcmc: u values must lie strictly inside (0,1); clamp first");
}

}  // namespace

double log_posterior(const McmcState& state, const ReplicateMatrix& u,
                     const LikelihoodBackend& backend, const SiteSet& s,
                     double nu, const Priors& priors) {
    check_uniform_input(u, s);
    if (static_cast<int>(state.r.size()) != u.T())
        throw std::invalid_argument("log_posterior: R length mismatch");

    double prior = alpha_block_term(state.alpha) +
                   rho_block_term(state.rho, priors);
    for (double r : state.r) prior += r_block_term(r);
    if (!std::isfinite(prior)) return -std::numeric_limits<double>::infinity();

    Evaluator ev(u.values, backend, s, nu);
    ev.prepare_theta(state.rho);
    Components c;
    c.tab = ev.alpha_table(state.alpha);
    ev.refresh_all(c, state.alpha, state.r, true);
    return c.gauss_sum() + c.jac_sum() + prior;
}

PosteriorChain run_mcmc(const ReplicateMatrix& u,
                        const LikelihoodBackend& backend, const SiteSet& s,
                        double nu, const McmcConfig& cfg,
                        const Priors& priors) {
    check_uniform_input(u, s);
    const int T = u.T();

    // state
    double alpha = cfg.init_alpha;
    double rho = cfg.init_rho;
    std::vector<double> R(T, cfg.init_r);

    const bool lik = !cfg.prior_only;

    // prior support of the starting state, checked before any transform
    double lp_alpha = alpha_block_term(alpha);
    double lp_rho = rho_block_term(rho, priors);
    std::vector<double> lp_r(T);
    for (int t = 0; t < T; ++t) lp_r[t] = r_block_term(R[t]);
    {
        double total = lp_alpha + lp_rho;
        for (double v : lp_r) total += v;
        if (!std::isfinite(total))
            throw NumericalError(
                "mcmc initialization: starting state outside the prior "
                "support");
    }

    Evaluator ev(u.values, backend, s, nu);
    Components cur;
    if (lik) {
        ev.prepare_theta(rho);
        cur.tab = ev.alpha_table(alpha);
        ev.refresh_all(cur, alpha, R, true);
        const double total = cur.gauss_sum() + cur.jac_sum();
        if (!std::isfinite(total))
            throw NumericalError(
                "mcmc initialization: log posterior not finite at the "
                "starting state");
    }

    PosteriorChain chain;
    chain.burn_in = cfg.burn_in;
    chain.alpha_draws.reserve(cfg.n_iter + 1);
    chain.rho_draws.reserve(cfg.n_iter + 1);
    chain.alpha_draws.push_back(alpha);
    chain.rho_draws.push_back(rho);
    std::vector<Eigen::VectorXd> stored_r;
    auto store_r = [&](long iter) {
        stored_r.emplace_back(Eigen::Map<const Eigen::VectorXd>(R.data(), T));
        chain.r_store_iters.push_back(iter);
    };
    store_r(0);

    // proposal scales (log sd) per block
    double lsd_alpha = std::log(cfg.init_step);
    double lsd_rho = std::log(cfg.init_step);
    std::vector<double> lsd_r(T, std::log(cfg.init_step));

    const long adapt_until =
        static_cast<long>(cfg.burn_in * static_cast<double>(cfg.n_iter));
    long acc_alpha_batch = 0, acc_rho_batch = 0;
    std::vector<long> acc_r_batch(T, 0);
    long acc_alpha_post = 0, acc_rho_post = 0, post_iters = 0;
    std::vector<long> acc_r_post(T, 0);
    long acc_alpha_all = 0, acc_rho_all = 0;
    std::vector<long> acc_r_all(T, 0);

    Rng rng(Rng::derive(cfg.seed, {0x3c3cu}));
    Components cand;  // reused buffers for alpha proposals

    // walltime covers the sampling loop only
    const auto t_start = std::chrono::steady_clock::now();

    for (long iter = 1; iter <= cfg.n_iter; ++iter) {
        const bool post = iter > chain.burn_in * cfg.n_iter;
        if (post) ++post_iters;

        // --- alpha block ---
        {
            const double step = std::exp(lsd_alpha);
            const double a_prop = logit(alpha) + step * rng.normal();
            const double u01 = rng.uniform();
            const double alpha_prop = sigmoid(a_prop);
            const double lp_alpha_prop = alpha_block_term(alpha_prop);
            if (std::isfinite(lp_alpha_prop)) {
                double delta = lp_alpha_prop - lp_alpha;
                if (lik) {
                    cand.tab = ev.alpha_table(alpha_prop);
                    cand.z = cur.z;  // sized buffers; fully overwritten
                    cand.gauss = cur.gauss;
                    cand.jac = cur.jac;
                    ev.refresh_all(cand, alpha_prop, R, true);
                    delta += (cand.gauss_sum() - cur.gauss_sum()) +
                             (cand.jac_sum() - cur.jac_sum());
                }
                if (std::log(u01) < delta) {
                    if (lik) std::swap(cur, cand);
                    alpha = alpha_prop;
                    lp_alpha = lp_alpha_prop;
                    ++acc_alpha_batch;
                    ++acc_alpha_all;
                    if (post) ++acc_alpha_post;
                }
            }
        }

        // --- rho block ---
        {
            const double step = std::exp(lsd_rho);
            const double frac = rho / priors.rho_hi;
            const double r_prop = logit(frac) + step * rng.normal();
            const double u01 = rng.uniform();
            const double rho_prop = priors.rho_hi * sigmoid(r_prop);
            const double lp_rho_prop = rho_block_term(rho_prop, priors);
            if (std::isfinite(lp_rho_prop)) {
                double delta = lp_rho_prop - lp_rho;
                std::vector<double> gauss_prop;
                LikelihoodBackend saved = ev.backend();
                if (lik) {
                    ev.prepare_theta(rho_prop);
                    gauss_prop.resize(T);
                    const auto& bk = ev.backend();
#pragma omp parallel for schedule(static)
                    for (int t = 0; t < T; ++t)
                        gauss_prop[t] = bk.gaussian_logdensity(cur.z[t]);
                    double gsum_prop = 0.0;
                    for (double v : gauss_prop) gsum_prop += v;
                    delta += gsum_prop - cur.gauss_sum();
                }
                if (std::log(u01) < delta) {
                    if (lik) cur.gauss = std::move(gauss_prop);
                    rho = rho_prop;
                    lp_rho = lp_rho_prop;
                    ++acc_rho_batch;
                    ++acc_rho_all;
                    if (post) ++acc_rho_post;
                } else if (lik) {
                    ev.backend() = saved;  // restore cached factorization
                }
            }
        }

        // --- latent scale blocks ---
        for (int t = 0; t < T; ++t) {
            const double step = std::exp(lsd_r[t]);
            const double l_prop = std::log(R[t]) + step * rng.normal();
            const double u01 = rng.uniform();
            const double r_prop = std::exp(l_prop);
            const double lp_r_prop = r_block_term(r_prop);
            if (!std::isfinite(lp_r_prop)) continue;
            double delta = lp_r_prop - lp_r[t];
            double g_old = 0.0, j_old = 0.0;
            Eigen::VectorXd z_old;
            if (lik) {
                g_old = cur.gauss[t];
                j_old = cur.jac[t];
                z_old.swap(cur.z[t]);
                cur.z[t].resize(z_old.size());
                ev.refresh_replicate(cur, t, alpha, r_prop);
                delta += (cur.gauss[t] - g_old) + (cur.jac[t] - j_old);
            }
            if (std::log(u01) < delta) {
                R[t] = r_prop;
                lp_r[t] = lp_r_prop;
                ++acc_r_batch[t];
                ++acc_r_all[t];
                if (post) ++acc_r_post[t];
            } else if (lik) {
                cur.z[t].swap(z_old);
                cur.gauss[t] = g_old;
                cur.jac[t] = j_old;
            }
        }

        chain.alpha_draws.push_back(alpha);
        chain.rho_draws.push_back(rho);
        if (iter % cfg.store_r_every == 0) store_r(iter);

        // --- LAP adaptation, frozen after burn-in ---
        if (iter % cfg.adapt_every == 0 && iter <= adapt_until) {
            const double b = static_cast<double>(iter / cfg.adapt_every);
            const double gamma = 1.0 / std::sqrt(b);
            const double denom = static_cast<double>(cfg.adapt_every);
            lsd_alpha += gamma * (acc_alpha_batch / denom - cfg.target_accept);
            lsd_rho += gamma * (acc_rho_batch / denom - cfg.target_accept);
            for (int t = 0; t < T; ++t)
                lsd_r[t] += gamma * (acc_r_batch[t] / denom - cfg.target_accept);
            chain.alpha_log_sd_history.push_back(lsd_alpha);
            chain.rho_log_sd_history.push_back(lsd_rho);
            acc_alpha_batch = acc_rho_batch = 0;
            std::fill(acc_r_batch.begin(), acc_r_batch.end(), 0);
        }
    }

    const double rate_den =
        post_iters > 0 ? static_cast<double>(post_iters)
                       : std::max(1.0, static_cast<double>(cfg.n_iter));
    auto rate = [&](long post_cnt, long all_cnt) {
        return post_iters > 0 ? post_cnt / rate_den : all_cnt / rate_den;
    };
    chain.accept_alpha = rate(acc_alpha_post, acc_alpha_all);
    chain.accept_rho = rate(acc_rho_post, acc_rho_all);
    chain.accept_r.resize(T);
    for (int t = 0; t < T; ++t)
        chain.accept_r[t] = rate(acc_r_post[t], acc_r_all[t]);

    chain.r_draws.resize(static_cast<long>(stored_r.size()), T);
    for (std::size_t i = 0; i < stored_r.size(); ++i)
        chain.r_draws.row(static_cast<long>(i)) = stored_r[i].transpose();

    chain.walltime_sec = std::chrono::duration<double>(
                             std::chrono::steady_clock::now() - t_start)
                             .count();
    return chain;
}

double batch_means_se(const std::vector<double>& draws) {
    const long n = static_cast<long>(draws.size());
    if (n < 100)
        throw std::invalid_argument("batch_means_se: need at least 100 draws");
    const long b = static_cast<long>(std::floor(std::sqrt(n)));
    const long k = n / b;
    std::vector<double> means(k, 0.0);
    for (long j = 0; j < k; ++j) {
        double acc = 0.0;
        for (long i = j * b; i < (j + 1) * b; ++i) acc += draws[i];
        means[j] = acc / static_cast<double>(b);
    }
    double mbar = 0.0;
    for (double m : means) mbar += m;
    mbar /= static_cast<double>(k);
    double ss = 0.0;
    for (double m : means) ss += (m - mbar) * (m - mbar);
    const double sd = std::sqrt(ss / static_cast<double>(k - 1));
    return sd / std::sqrt(static_cast<double>(k));
}

double quantile_type7(std::vector<double> v, double p) {
    if (v.empty()) throw std::invalid_argument("quantile_type7: empty input");
    std::sort(v.begin(), v.end());
    if (p <= 0.0) return v.front();
    if (p >= 1.0) return v.back();
    const double h = p * static_cast<double>(v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(h);
    const double frac = h - static_cast<double>(lo);
    if (lo + 1 >= v.size()) return v.back();
    return v[lo] + frac * (v[lo + 1] - v[lo]);
}

namespace {
ParamSummary summarize_draws(std::vector<double> draws, double level) {
    ParamSummary s;
    double acc = 0.0;
    for (double v : draws) acc += v;
    s.mean = acc / static_cast<double>(draws.size());
    s.bm_se = batch_means_se(draws);
    s.median = quantile_type7(draws, 0.5);
    const double tail = 0.5 * (1.0 - level);
    s.ci_low = quantile_type7(draws, tail);
    s.ci_high = quantile_type7(draws, 1.0 - tail);
    return s;
}
}  // namespace

ChainSummary summarize(const PosteriorChain& chain, double level) {
    const long cutoff = chain.burn_in_cutoff();
    const long n = chain.n_draws();
    if (n - cutoff < 100)
        throw std::invalid_argument(
            "summarize: need at least 100 post-burn-in draws");
    std::vector<double> a(chain.alpha_draws.begin() + cutoff,
                          chain.alpha_draws.end());
    std::vector<double> r(chain.rho_draws.begin() + cutoff,
                          chain.rho_draws.end());
    ChainSummary s;
    s.alpha = summarize_draws(std::move(a), level);
    s.rho = summarize_draws(std::move(r), level);
    s.accept_alpha = chain.accept_alpha;
    s.accept_rho = chain.accept_rho;
    if (!chain.accept_r.empty()) {
        double acc = 0.0;
        for (double v : chain.accept_r) acc += v;
        s.accept_r_mean = acc / static_cast<double>(chain.accept_r.size());
    }
    s.walltime_sec = chain.walltime_sec;
    s.n_draws_used = n - cutoff;
    return s;
}

}  // namespace lrsm
