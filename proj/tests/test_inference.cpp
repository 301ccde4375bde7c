#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "lrsm/errors.hpp"
#include "lrsm/fields.hpp"
#include "lrsm/inference.hpp"
#include "lrsm/marginal.hpp"
#include "lrsm/rng.hpp"

#include "test_util.hpp"

using namespace lrsm;

namespace {

struct SmallProblem {
    SiteSet sites;
    ReplicateMatrix u;
    LikelihoodBackend backend = LikelihoodBackend::full_gp();
    double nu = 0.5;
};

SmallProblem make_problem(int n, int T, double alpha, double rho,
                          std::uint64_t seed) {
    SmallProblem p{sample_uniform_sites(n, seed), {}, LikelihoodBackend::full_gp(),
                   0.5};
    p.u = simulate_lrsm(p.sites, {rho, 0.5}, alpha, T, seed + 1).u;
    return p;
}

}  // namespace

TEST_CASE("batch means standard error") {
    CHECK_THROWS_AS(batch_means_se(std::vector<double>(50, 1.0)),
                    std::invalid_argument);
    CHECK(batch_means_se(std::vector<double>(400, 3.25)) == 0.0);

    // iid normal: SE within 30% of 1/sqrt(N)
    Rng rng(12);
    std::vector<double> iid(10000);
    for (auto& v : iid) v = rng.normal();
    const double se = batch_means_se(iid);
    CHECK(se == doctest::Approx(0.01).epsilon(0.30));

    // AR(1) with phi = 0.9 has a larger SE than iid
    std::vector<double> ar(10000);
    double x = 0.0;
    for (auto& v : ar) {
        x = 0.9 * x + rng.normal();
        v = x;
    }
    CHECK(batch_means_se(ar) > se);
}

TEST_CASE("type-7 quantiles and summarize") {
    std::vector<double> v{1.0, 2.0, 3.0, 4.0};
    CHECK(quantile_type7(v, 0.5) == doctest::Approx(2.5));
    CHECK(quantile_type7(v, 0.0) == 1.0);
    CHECK(quantile_type7(v, 1.0) == 4.0);

    SUBCASE("constant chain") {
        PosteriorChain chain;
        chain.burn_in = 0.5;
        chain.alpha_draws.assign(400, 0.37);
        chain.rho_draws.assign(400, 0.11);
        auto s = summarize(chain);
        CHECK(s.alpha.mean == doctest::Approx(0.37).epsilon(1e-15));
        CHECK(s.alpha.median == 0.37);
        CHECK(s.alpha.ci_low == 0.37);
        CHECK(s.alpha.ci_high == 0.37);
        CHECK(s.alpha.bm_se == 0.0);
    }

    SUBCASE("symmetric draws: mean near median") {
        PosteriorChain chain;
        chain.burn_in = 0.0;
        Rng rng(5);
        for (int i = 0; i < 20000; ++i) {
            const double z = rng.normal();
            chain.alpha_draws.push_back(0.5 + 0.1 * z);
            chain.rho_draws.push_back(0.25);
        }
        auto s = summarize(chain);
        CHECK(s.alpha.mean == doctest::Approx(s.alpha.median).epsilon(0.01));
    }

    SUBCASE("uniform draws: CI endpoints near 0.025 / 0.975") {
        PosteriorChain chain;
        chain.burn_in = 0.0;
        Rng rng(6);
        for (int i = 0; i < 100000; ++i) {
            chain.alpha_draws.push_back(rng.uniform());
            chain.rho_draws.push_back(0.25);
        }
        auto s = summarize(chain);
        CHECK(std::fabs(s.alpha.ci_low - 0.025) < 0.005);
        CHECK(std::fabs(s.alpha.ci_high - 0.975) < 0.005);
    }

    SUBCASE("too-short chain") {
        PosteriorChain chain;
        chain.burn_in = 0.5;
        chain.alpha_draws.assign(150, 0.5);
        chain.rho_draws.assign(150, 0.2);
        CHECK_THROWS_AS(summarize(chain), std::invalid_argument);
    }
}

TEST_CASE("log_posterior support handling") {
    auto prob = make_problem(10, 4, 0.3, 0.1, 51);
    McmcState state;
    state.r.assign(4, 1.0);

    state.alpha = 1.5;
    CHECK(log_posterior(state, prob.u, prob.backend, prob.sites, prob.nu) ==
          -std::numeric_limits<double>::infinity());
    state.alpha = 0.5;
    state.rho = 0.7;
    CHECK(log_posterior(state, prob.u, prob.backend, prob.sites, prob.nu) ==
          -std::numeric_limits<double>::infinity());
    state.rho = 0.2;
    CHECK(std::isfinite(
        log_posterior(state, prob.u, prob.backend, prob.sites, prob.nu)));
}

TEST_CASE("log_posterior consistency with a reduction at tiny alpha") {
    auto prob = make_problem(12, 5, 0.0, 0.1, 61);
    McmcState a, b;
    a.alpha = 1e-8;
    b.alpha = 1e-8;
    a.rho = 0.1;
    b.rho = 0.1;
    a.r.assign(5, 1.0);
    b.r.assign(5, 1.0);
    // at alpha ~ 0 the scale R should not matter beyond the prior terms
    for (auto& v : b.r) v = 2.0;

    const double la =
        log_posterior(a, prob.u, prob.backend, prob.sites, prob.nu);
    const double lb =
        log_posterior(b, prob.u, prob.backend, prob.sites, prob.nu);
    double prior_shift = 0.0;
    for (int t = 0; t < 5; ++t)
        prior_shift += (levy_log_pdf(2.0) + std::log(2.0)) -
                       (levy_log_pdf(1.0) + std::log(1.0));
    CHECK(la - lb == doctest::Approx(-prior_shift).epsilon(1e-4));
}

TEST_CASE("zero-iteration run returns the initial state only") {
    auto prob = make_problem(10, 3, 0.3, 0.1, 71);
    McmcConfig cfg;
    cfg.n_iter = 0;
    auto chain = run_mcmc(prob.u, prob.backend, prob.sites, prob.nu, cfg);
    CHECK(chain.n_draws() == 1);
    CHECK(chain.alpha_draws[0] == cfg.init_alpha);
    CHECK(chain.rho_draws[0] == cfg.init_rho);
    CHECK(chain.r_draws.rows() == 1);
}

TEST_CASE("fixed seed fixes the chain bit for bit") {
    auto prob = make_problem(15, 6, 0.4, 0.08, 81);
    McmcConfig cfg;
    cfg.n_iter = 300;
    cfg.adapt_every = 50;
    cfg.seed = 777;
    auto c1 = run_mcmc(prob.u, prob.backend, prob.sites, prob.nu, cfg);
    auto c2 = run_mcmc(prob.u, prob.backend, prob.sites, prob.nu, cfg);
    REQUIRE(c1.n_draws() == c2.n_draws());
    for (long i = 0; i < c1.n_draws(); ++i) {
        CHECK(c1.alpha_draws[i] == c2.alpha_draws[i]);
        CHECK(c1.rho_draws[i] == c2.rho_draws[i]);
    }
    CHECK((c1.r_draws - c2.r_draws).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("chain stays in the prior support and metropolis ratio matches "
          "log_posterior differences") {
    auto prob = make_problem(12, 4, 0.35, 0.1, 91);
    McmcConfig cfg;
    cfg.n_iter = 400;
    cfg.seed = 31;
    auto chain = run_mcmc(prob.u, prob.backend, prob.sites, prob.nu, cfg);
    for (long i = 0; i < chain.n_draws(); ++i) {
        CHECK(chain.alpha_draws[i] > 0.0);
        CHECK(chain.alpha_draws[i] < 1.0);
        CHECK(chain.rho_draws[i] > 0.0);
        CHECK(chain.rho_draws[i] < 0.5);
    }
    for (long r = 0; r < chain.r_draws.rows(); ++r)
        CHECK(chain.r_draws.row(r).minCoeff() > 0.0);

    // single-code-path check: a one-block change in the state moves
    // log_posterior by the same amount the sampler would use
    McmcState s1{0.4, 0.2, {1.0, 1.5, 0.7, 2.0}};
    McmcState s2 = s1;
    s2.alpha = 0.45;
    const double d_direct =
        log_posterior(s2, prob.u, prob.backend, prob.sites, prob.nu) -
        log_posterior(s1, prob.u, prob.backend, prob.sites, prob.nu);
    // recompute the same delta from the likelihood pieces the sampler uses
    LevyDraws r;
    r.r = s1.r;
    auto full = LikelihoodBackend::full_gp();
    const double l1 =
        loglik_full(prob.u, r, s1.alpha, {s1.rho, prob.nu}, full, prob.sites)
            .loglik;
    const double l2 =
        loglik_full(prob.u, r, s2.alpha, {s2.rho, prob.nu}, full, prob.sites)
            .loglik;
    const double d_blocks =
        (l2 - l1) + (std::log(s2.alpha) + std::log1p(-s2.alpha)) -
        (std::log(s1.alpha) + std::log1p(-s1.alpha));
    CHECK(d_direct == doctest::Approx(d_blocks).epsilon(1e-8));
}

TEST_CASE("adaptation freezes after burn-in") {
    auto prob = make_problem(10, 3, 0.3, 0.1, 101);
    McmcConfig cfg;
    cfg.n_iter = 1000;
    cfg.adapt_every = 100;
    cfg.burn_in = 0.5;
    cfg.seed = 17;
    auto chain = run_mcmc(prob.u, prob.backend, prob.sites, prob.nu, cfg);
    // batches only during the first half: 500/100 = 5 entries
    CHECK(chain.alpha_log_sd_history.size() == 5);
}

TEST_CASE("prior-only sampler reproduces the uniform prior (detailed balance)") {
    auto prob = make_problem(5, 3, 0.3, 0.1, 111);
    McmcConfig cfg;
    cfg.n_iter = 40000;
    cfg.prior_only = true;
    cfg.seed = 5;
    auto chain = run_mcmc(prob.u, prob.backend, prob.sites, prob.nu, cfg);

    // thin to reduce autocorrelation, then KS against Uniform(0,1)
    std::vector<double> thinned;
    for (long i = chain.burn_in_cutoff(); i < chain.n_draws(); i += 2)
        thinned.push_back(chain.alpha_draws[i]);
    const double ks =
        testutil::ks_statistic(thinned, [](double x) { return x; });
    CHECK(ks < testutil::ks_crit_1pct(thinned.size()) *
                   2.0);  // thinned draws retain some dependence

    // rho marginal stays inside its support with the right spread
    std::vector<double> rhos(chain.rho_draws.begin() + chain.burn_in_cutoff(),
                             chain.rho_draws.end());
    CHECK(testutil::mean(rhos) == doctest::Approx(0.25).epsilon(0.05));
}

TEST_CASE("posterior concentrates on simulated data") {
    // short sanity fit: the posterior should track the truth direction
    auto prob = make_problem(40, 20, 0.6, 0.08, 121);
    McmcConfig cfg;
    cfg.n_iter = 1500;
    cfg.seed = 99;
    auto chain = run_mcmc(prob.u, prob.backend, prob.sites, prob.nu, cfg);
    auto s = summarize(chain);
    CHECK(s.alpha.median > 0.35);  // far from the 0.5 initialization floor
    CHECK(s.alpha.median < 0.85);
    CHECK(s.rho.median < 0.25);
    CHECK(chain.walltime_sec > 0.0);
}

TEST_CASE("acceptance rates end up near the LAP target") {
    auto prob = make_problem(25, 10, 0.4, 0.1, 131);
    McmcConfig cfg;
    cfg.n_iter = 4000;
    cfg.adapt_every = 100;
    cfg.seed = 3;
    auto chain = run_mcmc(prob.u, prob.backend, prob.sites, prob.nu, cfg);
    CHECK(chain.accept_alpha > 0.2);
    CHECK(chain.accept_alpha < 0.7);
    CHECK(chain.accept_rho > 0.2);
    CHECK(chain.accept_rho < 0.7);
    for (double r : chain.accept_r) {
        CHECK(r > 0.2);
        CHECK(r < 0.7);
    }
}

TEST_CASE("non-finite initialization is reported") {
    auto prob = make_problem(8, 3, 0.3, 0.1, 141);
    McmcConfig cfg;
    cfg.init_r = -1.0;  // outside the Levy support
    CHECK_THROWS_AS(
        run_mcmc(prob.u, prob.backend, prob.sites, prob.nu, cfg),
        NumericalError);
}
