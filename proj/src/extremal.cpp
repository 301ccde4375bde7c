#include "lrsm/extremal.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "lrsm/errors.hpp"
#include "lrsm/rng.hpp"
#include "lrsm/special.hpp"

namespace lrsm {

namespace {

std::vector<std::pair<int, int>> pairs_at_lag(const SiteSet& s, double h,
                                              double tol) {
    std::vector<std::pair<int, int>> out;
    for (int i = 0; i < s.n(); ++i)
        for (int j = i + 1; j < s.n(); ++j)
            if (std::fabs(dist(s[i], s[j]) - h) <= tol) out.emplace_back(i, j);
    return out;
}

// chi_hat over the pooled pairs for one set of replicate indices
void chi_curve(const Eigen::MatrixXd& u,
               const std::vector<std::pair<int, int>>& pairs,
               const std::vector<int>& reps, const std::vector<double>& grid,
               std::vector<double>& out) {
    out.assign(grid.size(), 0.0);
    for (std::size_t g = 0; g < grid.size(); ++g) {
        const double thr = grid[g];
        long cnt = 0;
        for (int t : reps)
            for (const auto& [i, j] : pairs)
                if (u(i, t) > thr && u(j, t) > thr) ++cnt;
        const double denom = (1.0 - thr) * static_cast<double>(reps.size()) *
                             static_cast<double>(pairs.size());
        out[g] = std::clamp(cnt / denom, 0.0, 1.0);
    }
}

}  // namespace

ChiEstimate empirical_chi(const ReplicateMatrix& u, const SiteSet& s,
                          double lag_h, double lag_tol,
                          const std::vector<double>& u_grid, int n_boot,
                          std::uint64_t seed) {
    if (u.T() < 20)
        throw std::invalid_argument("empirical_chi: need T >= 20 replicates");
    if (u.n() != s.n())
        throw std::invalid_argument("empirical_chi: site count mismatch");
    for (double g : u_grid)
        if (!(g > 0.0 && g < 1.0))
            throw std::invalid_argument("empirical_chi: u grid in (0,1)");

    const auto pairs = pairs_at_lag(s, lag_h, lag_tol);
    if (pairs.empty())
        throw std::invalid_argument(
            "empirical_chi: no site pair within the lag window");

    ChiEstimate est;
    est.u_grid = u_grid;
    est.lag_h = lag_h;
    est.lag_tol = lag_tol;
    est.n_pairs = static_cast<int>(pairs.size());

    // rank transform per site: the estimator then depends on the data only
    // through ranks, so any strictly increasing marginal transform applied
    // to all sites leaves it unchanged
    const int T = u.T();
    Eigen::MatrixXd ranked(u.n(), T);
    {
        std::vector<std::pair<double, int>> row(T);
        for (int i = 0; i < u.n(); ++i) {
            for (int t = 0; t < T; ++t) row[t] = {u.values(i, t), t};
            std::sort(row.begin(), row.end());
            for (int r = 0; r < T; ++r)
                ranked(i, row[r].second) =
                    static_cast<double>(r + 1) / static_cast<double>(T + 1);
        }
    }

    std::vector<int> all(T);
    std::iota(all.begin(), all.end(), 0);
    chi_curve(ranked, pairs, all, u_grid, est.chi_hat);

    // pointwise percentile bands from resampling replicates
    std::vector<std::vector<double>> boot(u_grid.size());
    Rng rng(Rng::derive(seed, {0xb007u}));
    std::vector<int> reps(T);
    std::vector<double> curve;
    for (int b = 0; b < n_boot; ++b) {
        for (int t = 0; t < T; ++t)
            reps[t] = static_cast<int>(rng.uniform() * T);
        chi_curve(ranked, pairs, reps, u_grid, curve);
        for (std::size_t g = 0; g < u_grid.size(); ++g)
            boot[g].push_back(curve[g]);
    }
    est.ci_low.resize(u_grid.size());
    est.ci_high.resize(u_grid.size());
    for (std::size_t g = 0; g < u_grid.size(); ++g) {
        if (n_boot > 0) {
            std::sort(boot[g].begin(), boot[g].end());
            const auto q = [&](double p) {
                const double h = p * (boot[g].size() - 1);
                const std::size_t lo = static_cast<std::size_t>(h);
                const double f = h - lo;
                return lo + 1 < boot[g].size()
                           ? boot[g][lo] + f * (boot[g][lo + 1] - boot[g][lo])
                           : boot[g].back();
            };
            est.ci_low[g] = std::min(q(0.025), est.chi_hat[g]);
            est.ci_high[g] = std::max(q(0.975), est.chi_hat[g]);
        } else {
            est.ci_low[g] = est.chi_hat[g];
            est.ci_high[g] = est.chi_hat[g];
        }
    }
    return est;
}

namespace {

// location MLE for Gumbel(mu, 1): mu = -log(mean(exp(-x))), via log-sum-exp
double gumbel_location_mle(const std::vector<double>& x) {
    const double xmin = *std::min_element(x.begin(), x.end());
    double acc = 0.0;
    for (double v : x) acc += std::exp(-(v - xmin));
    return xmin - std::log(acc / static_cast<double>(x.size()));
}

double anderson_darling_statistic(std::vector<double> v) {
    // v must hold probability transforms in (0,1)
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double vi = std::clamp(v[i], 1e-300, 1.0 - 1e-16);
        const double vj = std::clamp(v[n - 1 - i], 1e-300, 1.0 - 1e-16);
        acc += (2.0 * static_cast<double>(i) + 1.0) *
               (std::log(vi) + std::log1p(-vj));
    }
    return -static_cast<double>(n) - acc / static_cast<double>(n);
}

double gumbel_ad_statistic(const std::vector<double>& x, double mu) {
    std::vector<double> v(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        v[i] = std::exp(-std::exp(-(x[i] - mu)));
    return anderson_darling_statistic(std::move(v));
}

}  // namespace

MaxStabTestResult max_stability_test(const ReplicateMatrix& u,
                                     const std::vector<int>& site_subset,
                                     int n_bootstrap, std::uint64_t seed) {
    if (n_bootstrap < 1)
        throw std::invalid_argument("max_stability_test: n_bootstrap >= 1");
    if (site_subset.size() < 2)
        throw std::invalid_argument("max_stability_test: need >= 2 sites");
    if (u.T() < 20)
        throw std::invalid_argument("max_stability_test: need T >= 20");
    for (int i : site_subset)
        if (i < 0 || i >= u.n())
            throw std::invalid_argument("max_stability_test: bad site index");

    MaxStabTestResult res;
    res.n_bootstrap = n_bootstrap;

    // replicate-wise max of log unit-Frechet values; log(-1/log u) = -log(-log u)
    std::vector<double> stat(u.T());
    for (int t = 0; t < u.T(); ++t) {
        double mx = -std::numeric_limits<double>::infinity();
        for (int i : site_subset) {
            double v = u.values(i, t);
            if (v >= 1.0 - 1e-12) { v = 1.0 - 1e-12; ++res.clamped; }
            if (v <= 1e-12) { v = 1e-12; ++res.clamped; }
            mx = std::max(mx, -std::log(-std::log(v)));
        }
        stat[t] = mx;
    }

    res.gumbel_location_hat = gumbel_location_mle(stat);
    res.ad_statistic = gumbel_ad_statistic(stat, res.gumbel_location_hat);

    Rng rng(Rng::derive(seed, {0x6a57abu}));
    int exceed = 0;
    std::vector<double> sim(stat.size());
    for (int b = 0; b < n_bootstrap; ++b) {
        for (auto& v : sim)
            v = res.gumbel_location_hat - std::log(-std::log(rng.uniform()));
        const double mu_b = gumbel_location_mle(sim);
        if (gumbel_ad_statistic(sim, mu_b) >= res.ad_statistic) ++exceed;
    }
    res.p_value = (1.0 + exceed) / (1.0 + n_bootstrap);
    return res;
}

// ---------------------------------------------------------------------------

double gev_cdf(double z, const GevParams& p) {
    if (!(p.sigma > 0.0)) throw std::invalid_argument("gev_cdf: sigma > 0");
    const double y = (z - p.mu) / p.sigma;
    if (std::fabs(p.xi) < 1e-8) return std::exp(-std::exp(-y));
    const double arg = 1.0 + p.xi * y;
    if (arg <= 0.0) return p.xi > 0.0 ? 0.0 : 1.0;
    return std::exp(-std::pow(arg, -1.0 / p.xi));
}

double gev_quantile(double prob, const GevParams& p) {
    if (!(prob > 0.0 && prob < 1.0))
        throw std::invalid_argument("gev_quantile: prob in (0,1)");
    if (!(p.sigma > 0.0)) throw std::invalid_argument("gev_quantile: sigma > 0");
    const double w = -std::log(prob);
    if (std::fabs(p.xi) < 1e-8) return p.mu - p.sigma * std::log(w);
    return p.mu + p.sigma * (std::pow(w, -p.xi) - 1.0) / p.xi;
}

double gev_logpdf(double z, const GevParams& p) {
    if (!(p.sigma > 0.0)) throw std::invalid_argument("gev_logpdf: sigma > 0");
    const double y = (z - p.mu) / p.sigma;
    if (std::fabs(p.xi) < 1e-8)
        return -std::log(p.sigma) - y - std::exp(-y);
    const double arg = 1.0 + p.xi * y;
    if (arg <= 0.0) return -std::numeric_limits<double>::infinity();
    const double lg = std::log(arg);
    return -std::log(p.sigma) - (1.0 + 1.0 / p.xi) * lg -
           std::exp(-lg / p.xi);
}

namespace {

// Nelder-Mead on (mu, log sigma, xi)
struct NmResult {
    Eigen::Vector3d x;
    double f = 0.0;
    bool converged = false;
    int iterations = 0;
};

NmResult nelder_mead(const std::function<double(const Eigen::Vector3d&)>& f,
                     Eigen::Vector3d x0, int max_iter) {
    constexpr int d = 3;
    std::vector<Eigen::Vector3d> simplex(d + 1, x0);
    std::vector<double> fv(d + 1);
    for (int i = 0; i < d; ++i)
        simplex[i + 1](i) += x0(i) != 0.0 ? 0.1 * std::fabs(x0(i)) + 0.05 : 0.1;
    for (int i = 0; i <= d; ++i) fv[i] = f(simplex[i]);

    NmResult res;
    int iter = 0;
    while (iter < max_iter) {
        std::vector<int> ord(d + 1);
        std::iota(ord.begin(), ord.end(), 0);
        std::sort(ord.begin(), ord.end(),
                  [&](int a, int b) { return fv[a] < fv[b]; });
        std::vector<Eigen::Vector3d> sx(d + 1);
        std::vector<double> sf(d + 1);
        for (int i = 0; i <= d; ++i) {
            sx[i] = simplex[ord[i]];
            sf[i] = fv[ord[i]];
        }
        simplex = sx;
        fv = sf;

        if (std::fabs(fv[d] - fv[0]) <
                1e-10 * (1.0 + std::fabs(fv[0])) &&
            (simplex[d] - simplex[0]).norm() < 1e-9) {
            res.converged = true;
            break;
        }

        Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
        for (int i = 0; i < d; ++i) centroid += simplex[i];
        centroid /= d;

        const Eigen::Vector3d xr = centroid + (centroid - simplex[d]);
        const double fr = f(xr);
        ++iter;
        if (fr < fv[0]) {
            const Eigen::Vector3d xe = centroid + 2.0 * (centroid - simplex[d]);
            const double fe = f(xe);
            if (fe < fr) { simplex[d] = xe; fv[d] = fe; }
            else { simplex[d] = xr; fv[d] = fr; }
        } else if (fr < fv[d - 1]) {
            simplex[d] = xr;
            fv[d] = fr;
        } else {
            const Eigen::Vector3d xc =
                centroid + 0.5 * (simplex[d] - centroid);
            const double fc = f(xc);
            if (fc < fv[d]) { simplex[d] = xc; fv[d] = fc; }
            else {
                for (int i = 1; i <= d; ++i) {
                    simplex[i] = simplex[0] + 0.5 * (simplex[i] - simplex[0]);
                    fv[i] = f(simplex[i]);
                }
            }
        }
    }
    res.x = simplex[0];
    res.f = fv[0];
    res.iterations = iter;
    return res;
}

}  // namespace

GevParams gev_fit_mle(const std::vector<double>& block_maxima,
                      std::optional<GevParams> init) {
    const std::size_t n = block_maxima.size();
    if (n < 20)
        throw std::invalid_argument("gev_fit_mle: need at least 20 maxima");

    GevParams start;
    if (init) {
        start = *init;
    } else {
        // Gumbel moment matching as the starting point
        double mean = 0.0;
        for (double v : block_maxima) mean += v;
        mean /= static_cast<double>(n);
        double ss = 0.0;
        for (double v : block_maxima) ss += (v - mean) * (v - mean);
        const double sd = std::sqrt(ss / static_cast<double>(n - 1));
        start.sigma = std::max(1e-8, sd * std::sqrt(6.0) / M_PI);
        start.mu = mean - 0.5772156649015329 * start.sigma;
        start.xi = 0.1;
    }

    auto negloglik = [&](const Eigen::Vector3d& x) {
        GevParams p{x(0), std::exp(x(1)), x(2)};
        double acc = 0.0;
        for (double v : block_maxima) {
            const double l = gev_logpdf(v, p);
            if (!std::isfinite(l)) return 1e100;
            acc -= l;
        }
        return acc;
    };

    const int max_iter = 500 * 3;
    Eigen::Vector3d x0(start.mu, std::log(start.sigma), start.xi);
    NmResult r = nelder_mead(negloglik, x0, max_iter);
    if (!r.converged && r.f >= 1e100) {
        // retry from a flat-tail start before giving up
        x0(2) = 0.0;
        r = nelder_mead(negloglik, x0, max_iter);
    }
    GevParams best{r.x(0), std::exp(r.x(1)), r.x(2)};
    if (!r.converged)
        throw EstimationError("gev_fit_mle: Nelder-Mead did not converge", best);
    return best;
}

ReplicateMatrix pit_to_uniform(const Eigen::MatrixXd& block_maxima,
                               const std::vector<GevParams>& fits) {
    if (static_cast<int>(fits.size()) != block_maxima.rows())
        throw std::invalid_argument("pit_to_uniform: one fit per site required");
    ReplicateMatrix out;
    out.scale = Scale::UniformU;
    out.values.resize(block_maxima.rows(), block_maxima.cols());
    for (int i = 0; i < block_maxima.rows(); ++i)
        for (int t = 0; t < block_maxima.cols(); ++t)
            out.values(i, t) = std::clamp(gev_cdf(block_maxima(i, t), fits[i]),
                                          1e-12, 1.0 - 1e-12);
    return out;
}

GofResult anderson_darling_gof(std::vector<double> u) {
    if (u.size() < 8)
        throw std::invalid_argument("anderson_darling_gof: need >= 8 values");
    std::sort(u.begin(), u.end());
    GofResult res;
    for (std::size_t i = 0; i + 1 < u.size(); ++i)
        if (u[i] == u[i + 1]) { res.tie_warning = true; break; }
    for (auto& v : u) v = std::clamp(v, 1e-12, 1.0 - 1e-12);
    res.statistic = anderson_darling_statistic(u);

    // case-0 asymptotic distribution, Marsaglia & Marsaglia approximation
    const double z = res.statistic;
    double cdf;
    if (z <= 0.0) {
        cdf = 0.0;
    } else if (z < 2.0) {
        cdf = std::exp(-1.2337141 / z) / std::sqrt(z) *
              (2.00012 +
               (0.247105 -
                (0.0649821 - (0.0347962 - (0.011672 - 0.00168691 * z) * z) *
                                 z) * z) * z);
    } else {
        cdf = std::exp(-std::exp(
            1.0776 - (2.30695 -
                      (0.43424 - (0.082433 - (0.008056 - 0.0003146 * z) * z) *
                                     z) * z) * z));
    }
    res.p_value = std::clamp(1.0 - cdf, 0.0, 1.0);
    return res;
}

}  // namespace lrsm
