#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lrsm/fields.hpp"
#include "lrsm/likelihood.hpp"
#include "lrsm/marginal.hpp"
#include "lrsm/rng.hpp"
#include "lrsm/special.hpp"

using namespace lrsm;

namespace {

// independently coded Gaussian-copula log likelihood (the alpha = 0 oracle)
double gaussian_copula_loglik(const ReplicateMatrix& u, const SiteSet& s,
                              const MaternParams& p) {
    Eigen::MatrixXd c(s.n(), s.n());
    for (int i = 0; i < s.n(); ++i)
        for (int j = 0; j < s.n(); ++j)
            c(i, j) = matern_corr(dist(s[i], s[j]), p.rho, p.nu);
    Eigen::LLT<Eigen::MatrixXd> llt(c);
    const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    double total = 0.0;
    for (int t = 0; t < u.T(); ++t) {
        Eigen::VectorXd z(s.n());
        double jac = 0.0;
        for (int i = 0; i < s.n(); ++i) {
            z(i) = norm_quantile(u.values(i, t));
            jac -= log_norm_pdf(z(i));
        }
        Eigen::VectorXd y = llt.matrixL().solve(z);
        total += -0.5 * (s.n() * kLog2Pi + logdet + y.squaredNorm()) + jac;
    }
    return total;
}

}  // namespace

TEST_CASE("transform_replicate") {
    SUBCASE("alpha = 0 reduction") {
        Eigen::VectorXd u(3);
        u << 0.1, 0.5, 0.9;
        auto tr = transform_replicate(u, 2.0, 0.0);
        double jac = 0.0;
        for (int i = 0; i < 3; ++i) {
            CHECK(tr.z(i) == doctest::Approx(norm_quantile(u(i))).epsilon(1e-14));
            jac -= log_norm_pdf(tr.z(i));
        }
        CHECK(tr.log_jacobian == doctest::Approx(jac).epsilon(1e-12));
    }

    SUBCASE("n = 1 agrees with the scalar ops") {
        Eigen::VectorXd u(1);
        u << 0.73;
        auto tr = transform_replicate(u, 1.7, 0.4);
        CHECK(tr.z(0) == doctest::Approx(h_inverse(0.73, 1.7, 0.4)).epsilon(1e-10));
        CHECK(tr.log_jacobian ==
              doctest::Approx(std::log(jacobian_du_to_dz(0.73, 1.7, 0.4)))
                  .epsilon(1e-8));
    }

    SUBCASE("boundary values rejected") {
        Eigen::VectorXd u(2);
        u << 0.5, 1.0;
        CHECK_THROWS_AS(transform_replicate(u, 1.0, 0.3),
                        std::invalid_argument);
    }

    SUBCASE("round trip against the simulator") {
        auto s = sample_uniform_sites(30, 41);
        auto sim = simulate_lrsm(s, {0.1, 0.5}, 0.6, 5, 42);
        for (int t = 0; t < 5; ++t) {
            auto tr = transform_replicate(sim.u.values.col(t), sim.r.r[t], 0.6);
            CHECK((tr.z - sim.z.values.col(t)).cwiseAbs().maxCoeff() < 1e-6);
        }
    }
}

TEST_CASE("clamp uniforms") {
    Eigen::MatrixXd u(2, 2);
    u << 0.0, 0.5, 1.0, 0.25;
    CHECK(clamp_uniforms(u) == 2);
    CHECK(u(0, 0) == 1e-12);
    CHECK(u(1, 0) == 1.0 - 1e-12);
    CHECK(clamp_uniforms(u) == 0);
}

TEST_CASE("gaussian_logdensity single point") {
    SiteSet one({{0.3, 0.3}});
    auto full = LikelihoodBackend::full_gp();
    Eigen::VectorXd z(1);
    z << 0.0;
    CHECK(gaussian_logdensity(z, full, one, {0.1, 0.5}) ==
          doctest::Approx(-0.5 * std::log(2.0 * M_PI)).epsilon(1e-14));
}

TEST_CASE("backend exactness ladder on gaussian_logdensity") {
    auto s = sample_uniform_sites(50, 61);
    const MaternParams p{0.1, 0.5};
    Rng rng(7);
    Eigen::VectorXd z(50);
    {
        // correlated draw so the quadratic form is representative
        Eigen::MatrixXd c = covariance_matrix(s, p);
        Eigen::VectorXd e(50);
        for (int i = 0; i < 50; ++i) e(i) = rng.normal();
        z = Eigen::LLT<Eigen::MatrixXd>(c).matrixL() * e;
    }
    auto full = LikelihoodBackend::full_gp();
    const double exact = gaussian_logdensity(z, full, s, p);

    SUBCASE("vecchia with m = n-1 telescopes to the full density") {
        auto vec = LikelihoodBackend::vecchia(build_vecchia_plan(s, 49));
        CHECK(gaussian_logdensity(z, vec, s, p) ==
              doctest::Approx(exact).epsilon(1e-10));
    }

    SUBCASE("taper with huge psi matches") {
        auto tap = LikelihoodBackend::taper(TaperSpec{1e6});
        CHECK(std::fabs(gaussian_logdensity(z, tap, s, p) - exact) < 1e-5);
    }

    SUBCASE("low rank k = n against a dense oracle with the same covariance") {
        auto basis = eigenbasis(s, 50, MaternParams{0.5, 0.5}, 1e-6);
        Eigen::MatrixXd cov = basis.B * basis.B.transpose();
        cov.diagonal().array() += basis.nugget_tau2;
        Eigen::LLT<Eigen::MatrixXd> llt(cov);
        const double logdet =
            2.0 * llt.matrixLLT().diagonal().array().log().sum();
        const double dense =
            -0.5 * (50 * kLog2Pi + logdet +
                    llt.matrixL().solve(z).squaredNorm());
        auto lr = LikelihoodBackend::low_rank(basis);
        CHECK(gaussian_logdensity(z, lr, s, p) ==
              doctest::Approx(dense).epsilon(1e-6));
    }
}

TEST_CASE("loglik_full") {
    auto s = sample_uniform_sites(30, 71);
    const MaternParams p{0.08, 0.5};
    auto sim = simulate_lrsm(s, p, 0.4, 10, 81);
    auto full = LikelihoodBackend::full_gp();

    SUBCASE("components sum to the total") {
        auto r = loglik_full(sim.u, sim.r, 0.4, p, full, s);
        CHECK(r.loglik == r.gaussian_part + r.jacobian_part);
        CHECK(std::isfinite(r.loglik));
    }

    SUBCASE("T = 1 equals the single-replicate computation") {
        ReplicateMatrix u1;
        u1.scale = Scale::UniformU;
        u1.values = sim.u.values.col(0);
        LevyDraws r1;
        r1.r = {sim.r.r[0]};
        auto whole = loglik_full(u1, r1, 0.4, p, full, s);
        auto tr = transform_replicate(sim.u.values.col(0), sim.r.r[0], 0.4);
        const double gauss = gaussian_logdensity(tr.z, full, s, p);
        CHECK(whole.loglik ==
              doctest::Approx(gauss + tr.log_jacobian).epsilon(1e-8));
    }

    SUBCASE("additivity across disjoint replicate blocks") {
        auto split = [&](int lo, int hi) {
            ReplicateMatrix u;
            u.scale = Scale::UniformU;
            u.values = sim.u.values.middleCols(lo, hi - lo);
            LevyDraws r;
            r.r.assign(sim.r.r.begin() + lo, sim.r.r.begin() + hi);
            return loglik_full(u, r, 0.4, p, full, s).loglik;
        };
        const double whole = loglik_full(sim.u, sim.r, 0.4, p, full, s).loglik;
        CHECK(whole ==
              doctest::Approx(split(0, 4) + split(4, 10)).epsilon(1e-9));
    }

    SUBCASE("replicate permutation invariance") {
        ReplicateMatrix perm;
        perm.scale = Scale::UniformU;
        perm.values = sim.u.values;
        LevyDraws rperm = sim.r;
        std::vector<int> order{3, 1, 4, 0, 2, 9, 8, 5, 7, 6};
        for (int t = 0; t < 10; ++t) {
            perm.values.col(t) = sim.u.values.col(order[t]);
            rperm.r[t] = sim.r.r[order[t]];
        }
        const double a = loglik_full(sim.u, sim.r, 0.4, p, full, s).loglik;
        const double b = loglik_full(perm, rperm, 0.4, p, full, s).loglik;
        CHECK(a == doctest::Approx(b).epsilon(1e-10));
    }

    SUBCASE("alpha = 0 equals the Gaussian-copula oracle") {
        auto sim0 = simulate_lrsm(s, p, 0.0, 10, 91);
        auto r = loglik_full(sim0.u, sim0.r, 0.0, p, full, s);
        CHECK(r.loglik ==
              doctest::Approx(gaussian_copula_loglik(sim0.u, s, p))
                  .epsilon(1e-10));
    }

    SUBCASE("agrees with the serial reference implementation") {
        auto a = loglik_full(sim.u, sim.r, 0.4, p, full, s);
        auto b = ref::loglik_full(sim.u, sim.r, 0.4, p, s);
        CHECK(a.loglik == doctest::Approx(b.loglik).epsilon(1e-8));
        CHECK(a.gaussian_part ==
              doctest::Approx(b.gaussian_part).epsilon(1e-7));
        CHECK(a.jacobian_part ==
              doctest::Approx(b.jacobian_part).epsilon(1e-7));
    }
}

TEST_CASE("backend agreement at the exactness limits") {
    auto s = sample_uniform_sites(50, 101);
    const MaternParams p{0.1, 0.5};
    auto sim = simulate_lrsm(s, p, 0.55, 8, 103);

    auto full = LikelihoodBackend::full_gp();
    auto vec = LikelihoodBackend::vecchia(build_vecchia_plan(s, 49));
    auto tap = LikelihoodBackend::taper(TaperSpec{1e6});

    const auto rf = loglik_full(sim.u, sim.r, 0.55, p, full, s);
    const auto rv = loglik_full(sim.u, sim.r, 0.55, p, vec, s);
    const auto rt = loglik_full(sim.u, sim.r, 0.55, p, tap, s);
    // per-replicate tolerance 1e-5 absolute
    CHECK(std::fabs(rv.loglik - rf.loglik) < 1e-5 * sim.u.T());
    CHECK(std::fabs(rt.loglik - rf.loglik) < 1e-5 * sim.u.T());
}

TEST_CASE("loglik smoothness in alpha (finite differences)") {
    auto s = sample_uniform_sites(25, 111);
    const MaternParams p{0.1, 0.5};
    auto sim = simulate_lrsm(s, p, 0.4, 6, 113);
    auto full = LikelihoodBackend::full_gp();
    auto ll = [&](double a) {
        return loglik_full(sim.u, sim.r, a, p, full, s).loglik;
    };
    const double d4 = (ll(0.4 + 1e-4) - ll(0.4 - 1e-4)) / 2e-4;
    const double d5 = (ll(0.4 + 1e-5) - ll(0.4 - 1e-5)) / 2e-5;
    CHECK(std::isfinite(d4));
    CHECK(d4 == doctest::Approx(d5).epsilon(0.01));
}

TEST_CASE("vecchia invariant to site relabeling") {
    auto s = sample_uniform_sites(40, 121);
    const MaternParams p{0.1, 0.5};
    auto sim = simulate_lrsm(s, p, 0.5, 5, 123);

    // relabel sites by a permutation and rebuild the plan deterministically
    std::vector<int> perm(40);
    for (int i = 0; i < 40; ++i) perm[i] = (i * 17 + 5) % 40;
    std::vector<Point> pts(40);
    ReplicateMatrix u2;
    u2.scale = Scale::UniformU;
    u2.values.resize(40, 5);
    for (int i = 0; i < 40; ++i) {
        pts[i] = s[perm[i]];
        u2.values.row(i) = sim.u.values.row(perm[i]);
    }
    SiteSet s2(std::move(pts));

    auto v1 = LikelihoodBackend::vecchia(build_vecchia_plan(s, 6));
    auto v2 = LikelihoodBackend::vecchia(build_vecchia_plan(s2, 6));
    const double a = loglik_full(sim.u, sim.r, 0.5, p, v1, s).loglik;
    const double b = loglik_full(u2, sim.r, 0.5, p, v2, s2).loglik;
    CHECK(a == doctest::Approx(b).epsilon(1e-9));
}

TEST_CASE("theta cache invalidation") {
    auto s = sample_uniform_sites(20, 131);
    auto sim = simulate_lrsm(s, {0.1, 0.5}, 0.3, 4, 133);
    auto full = LikelihoodBackend::full_gp();
    const double a1 =
        loglik_full(sim.u, sim.r, 0.3, {0.1, 0.5}, full, s).loglik;
    const double b = loglik_full(sim.u, sim.r, 0.3, {0.2, 0.5}, full, s).loglik;
    const double a2 =
        loglik_full(sim.u, sim.r, 0.3, {0.1, 0.5}, full, s).loglik;
    CHECK(a1 == a2);
    CHECK(a1 != b);
}
