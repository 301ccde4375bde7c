// Acceptance suite: one criterion per invocation (argument 1..10), or all
// when no argument is given.  Prints one PASS/FAIL line per criterion.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lrsm/extremal.hpp"
#include "lrsm/fields.hpp"
#include "lrsm/harness.hpp"
#include "lrsm/inference.hpp"
#include "lrsm/io.hpp"
#include "lrsm/likelihood.hpp"
#include "lrsm/marginal.hpp"
#include "lrsm/prediction.hpp"
#include "lrsm/rng.hpp"
#include "lrsm/scoring.hpp"
#include "lrsm/special.hpp"

using namespace lrsm;
namespace fs = std::filesystem;

namespace {

struct Criterion {
    bool ok = true;
    std::vector<std::string> notes;

    void require(bool cond, const std::string& what) {
        if (!cond) ok = false;
        notes.push_back(std::string(cond ? "    ok   " : "    FAIL ") + what);
    }
    void info(const std::string& what) { notes.push_back("         " + what); }
};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

// ---------------------------------------------------------------------- 1
Criterion exactness_ladder() {
    Criterion c;
    auto s = sample_uniform_sites(50, 20250101);
    const MaternParams p{0.1, 0.5};
    const double alpha = 0.45;
    auto sim = simulate_lrsm(s, p, alpha, 20, 20250102);

    auto full = LikelihoodBackend::full_gp();
    auto vec = LikelihoodBackend::vecchia(build_vecchia_plan(s, 49));
    auto tap = LikelihoodBackend::taper(TaperSpec{1e6});
    auto basis = eigenbasis(s, 50, MaternParams{0.5, 0.5}, 1e-6);
    auto lr = LikelihoodBackend::low_rank(basis);

    // dense oracle for the low-rank covariance
    Eigen::MatrixXd cov = basis.B * basis.B.transpose();
    cov.diagonal().array() += basis.nugget_tau2;
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    const double lr_logdet =
        2.0 * llt.matrixLLT().diagonal().array().log().sum();

    double worst_vec = 0.0, worst_tap = 0.0, worst_lr = 0.0;
    for (int t = 0; t < sim.u.T(); ++t) {
        auto tr = transform_replicate(sim.u.values.col(t), sim.r.r[t], alpha);
        const double g_full = gaussian_logdensity(tr.z, full, s, p);
        worst_vec = std::max(
            worst_vec, std::fabs(gaussian_logdensity(tr.z, vec, s, p) - g_full));
        worst_tap = std::max(
            worst_tap, std::fabs(gaussian_logdensity(tr.z, tap, s, p) - g_full));
        const double dense =
            -0.5 * (50 * kLog2Pi + lr_logdet +
                    llt.matrixL().solve(tr.z).squaredNorm());
        worst_lr = std::max(
            worst_lr, std::fabs(gaussian_logdensity(tr.z, lr, s, p) - dense));
    }
    c.require(worst_vec < 1e-8,
              "Vecchia m=n-1 vs full GP per replicate: " + fmt(worst_vec));
    c.require(worst_tap < 1e-5,
              "taper psi=1e6 vs full GP per replicate: " + fmt(worst_tap));
    c.require(worst_lr < 1e-6,
              "low rank k=n vs dense BB^T+tau2 I per replicate: " +
                  fmt(worst_lr));
    return c;
}

// ---------------------------------------------------------------------- 2
Criterion copula_reduction() {
    Criterion c;
    MarginalDist d0(0.0);
    double worst_f = 0.0;
    for (double x : {0.01, 0.5, 1.0, 4.0, 100.0})
        worst_f = std::max(worst_f, std::fabs(d0.cdf(x) - x / (1.0 + x)));
    c.require(worst_f == 0.0, "F_X(x;0) = x/(1+x) exactly");

    double worst_h = 0.0;
    for (double z = -6.0; z <= 6.0; z += 0.37)
        worst_h = std::max(worst_h,
                           std::fabs(h_transform(z, 2.7, 0.0) - norm_cdf(z)));
    c.require(worst_h == 0.0, "h( . ; R, 0) = Phi exactly");

    auto s = sample_uniform_sites(30, 20250201);
    const MaternParams p{0.1, 0.5};
    auto sim = simulate_lrsm(s, p, 0.0, 10, 20250202);
    auto full = LikelihoodBackend::full_gp();
    const double ll = loglik_full(sim.u, sim.r, 0.0, p, full, s).loglik;

    // independently coded Gaussian-copula likelihood
    Eigen::MatrixXd cov(30, 30);
    for (int i = 0; i < 30; ++i)
        for (int j = 0; j < 30; ++j)
            cov(i, j) = matern_corr(dist(s[i], s[j]), p.rho, p.nu);
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    double oracle = 0.0;
    for (int t = 0; t < 10; ++t) {
        Eigen::VectorXd z(30);
        double jac = 0.0;
        for (int i = 0; i < 30; ++i) {
            z(i) = norm_quantile(sim.u.values(i, t));
            jac -= log_norm_pdf(z(i));
        }
        oracle += -0.5 * (30 * kLog2Pi + logdet +
                          llt.matrixL().solve(z).squaredNorm()) +
                  jac;
    }
    c.require(std::fabs(ll - oracle) < 1e-8,
              "loglik vs Gaussian-copula oracle: |diff| = " +
                  fmt(std::fabs(ll - oracle)));
    return c;
}

// ---------------------------------------------------------------------- 3
Criterion transform_round_trips() {
    Criterion c;
    const std::vector<double> us{1e-6, 1e-5, 1e-3, 0.01, 0.1, 0.25, 0.5,
                                 0.75, 0.9,  0.99, 1.0 - 1e-3, 1.0 - 1e-5,
                                 1.0 - 1e-6};
    double worst = 0.0;
    for (double alpha : {0.05, 0.2, 0.35, 0.5, 0.7})
        for (double r : {0.1, 1.0, 10.0})
            for (double u : us) {
                const double z = h_inverse(u, r, alpha);
                worst =
                    std::max(worst, std::fabs(h_transform(z, r, alpha) - u));
            }
    c.require(worst <= 1e-7, "max |h(h_inv(u)) - u| = " + fmt(worst));

    // finite-difference oracle computed with a tightened quadrature so the
    // quantile noise stays below the differencing step
    QuadratureConfig tight;
    tight.abs_tol = 5e-14;
    tight.rel_tol = 1e-12;
    tight.max_subdivisions = 2000;
    double worst_j = 0.0;
    for (double alpha : {0.05, 0.35, 0.7})
        for (double r : {0.1, 1.0, 10.0})
            for (double u : {1e-5, 0.01, 0.5, 0.9, 1.0 - 1e-5}) {
                const double delta = std::min(u, 1.0 - u) * 3e-3;
                const double fd = (h_inverse(u + delta, r, alpha, tight) -
                                   h_inverse(u - delta, r, alpha, tight)) /
                                  (2.0 * delta);
                const double j = jacobian_du_to_dz(u, r, alpha);
                worst_j = std::max(worst_j, std::fabs(j - fd) / fd);
            }
    c.require(worst_j <= 1e-4,
              "max relative Jacobian-vs-FD error = " + fmt(worst_j));
    return c;
}

// ---------------------------------------------------------------------- 4
Criterion marginal_law_ks() {
    Criterion c;
    const long n = 1000000;
    for (double alpha : {0.3, 0.7}) {
        Rng rng(20250400 + static_cast<long>(alpha * 100));
        std::vector<double> xs(n);
        for (long i = 0; i < n; ++i) {
            const double q = rng.normal();
            const double r = 1.0 / (2.0 * q * q);
            xs[i] = std::pow(r, alpha) * pareto_g(rng.normal());
        }
        std::sort(xs.begin(), xs.end());
        MarginalBulk marg(alpha);
        std::vector<double> cdfs(n);
#pragma omp parallel for schedule(static)
        for (long i = 0; i < n; ++i) cdfs[i] = marg.cdf(xs[i]);
        double ks = 0.0;
        for (long i = 0; i < n; ++i) {
            ks = std::max(ks, std::fabs((i + 1.0) / n - cdfs[i]));
            ks = std::max(ks, std::fabs(cdfs[i] - static_cast<double>(i) / n));
        }
        const double crit = 1.63 / std::sqrt(static_cast<double>(n));
        c.require(ks < crit, "alpha = " + fmt(alpha) + ": KS = " + fmt(ks) +
                                 " < " + fmt(crit));
    }
    return c;
}

// ---------------------------------------------------------------------- 5
Criterion theorem_consistency() {
    Criterion c;
    // two sites with latent correlation 0.5
    const double rho = 0.2;
    const double h = rho * std::log(2.0);
    SiteSet s({{0.0, 0.0}, {h, 0.0}});
    const long T = 1000000;

    {
        auto sim = simulate_lrsm(s, {rho, 0.5}, 0.7, static_cast<int>(T),
                                 20250501);
        const double u = 0.99;
        long cnt = 0;
        for (long t = 0; t < T; ++t)
            if (sim.u.values(0, t) > u && sim.u.values(1, t) > u) ++cnt;
        const double p = static_cast<double>(cnt) / static_cast<double>(T);
        const double chi_hat = p / (1.0 - u);
        const double se_emp =
            std::sqrt(p * (1.0 - p) / static_cast<double>(T)) / (1.0 - u);

        auto limit = chi_limit(0.5, 0.7, 1000000, 20250502);
        const double gap = std::fabs(chi_hat - limit.value);
        const double tol =
            3.0 * std::sqrt(se_emp * se_emp + limit.se * limit.se);
        c.require(gap <= tol,
                  "chi_hat(0.99) = " + fmt(chi_hat) + " vs chi_limit = " +
                      fmt(limit.value) + " (gap " + fmt(gap) + ", 3 se " +
                      fmt(tol) + ")");
        if (gap > tol)
            c.info("sub-asymptotic bias of chi_u at u = 0.99 exceeds Monte "
                   "Carlo noise at this sample size; chi_u decreases toward "
                   "the limit as u -> 1 (see decisions ledger)");
    }

    {
        auto sim = simulate_lrsm(s, {rho, 0.5}, 0.3, static_cast<int>(T),
                                 20250503);
        const double u = 0.995;
        long cnt = 0;
        for (long t = 0; t < T; ++t)
            if (sim.u.values(0, t) > u && sim.u.values(1, t) > u) ++cnt;
        const double chi_hat =
            static_cast<double>(cnt) / static_cast<double>(T) / (1.0 - u);
        c.require(chi_hat < 0.05,
                  "alpha = 0.3: chi_hat(0.995) = " + fmt(chi_hat) + " < 0.05");
    }
    return c;
}

// ------------------------------------------------------------------- 6 / 7
struct SeedFit {
    bool cov_alpha = false, cov_rho = false;
    double median_alpha = 0.0;
    double is_alpha = 0.0;
};

SeedFit run_seed_fit(int seed_idx, const BackendSettings& settings) {
    const std::uint64_t data_seed = 7000 + seed_idx;
    auto s = sample_uniform_sites(100, data_seed);
    const MaternParams p{0.05, 0.5};
    auto sim = simulate_lrsm(s, p, 0.3, 50, data_seed + 5000);

    LikelihoodBackend backend = build_backend(settings, s);
    McmcConfig cfg;
    cfg.n_iter = 10000;
    cfg.seed = 100 + seed_idx;
    auto chain = run_mcmc(sim.u, backend, s, 0.5, cfg);
    auto sum = summarize(chain);

    SeedFit out;
    out.cov_alpha = 0.3 >= sum.alpha.ci_low && 0.3 <= sum.alpha.ci_high;
    out.cov_rho = 0.05 >= sum.rho.ci_low && 0.05 <= sum.rho.ci_high;
    out.median_alpha = sum.alpha.median;
    out.is_alpha = interval_score(sum.alpha.ci_low, sum.alpha.ci_high, 0.3,
                                  0.05);
    return out;
}

const char* kCacheDir = "acceptance_cache";

std::string cache_path(const std::string& tag, int seed_idx) {
    return std::string(kCacheDir) + "/" + tag + "_seed" +
           std::to_string(seed_idx) + ".json";
}

SeedFit cached_seed_fit(const std::string& tag, int seed_idx,
                        const BackendSettings& settings) {
    const std::string path = cache_path(tag, seed_idx);
    {
        std::ifstream f(path);
        if (f) {
            try {
                nlohmann::json j;
                f >> j;
                SeedFit out;
                out.cov_alpha = j.at("cov_alpha");
                out.cov_rho = j.at("cov_rho");
                out.median_alpha = j.at("median_alpha");
                out.is_alpha = j.at("is_alpha");
                return out;
            } catch (const std::exception&) {
            }
        }
    }
    SeedFit out = run_seed_fit(seed_idx, settings);
    fs::create_directories(kCacheDir);
    nlohmann::json j{{"cov_alpha", out.cov_alpha},
                     {"cov_rho", out.cov_rho},
                     {"median_alpha", out.median_alpha},
                     {"is_alpha", out.is_alpha}};
    std::ofstream f(path);
    f << j.dump(2) << "\n";
    return out;
}

Criterion inference_calibration() {
    Criterion c;
    int cov_a = 0, cov_r = 0, med_ok = 0;
    for (int i = 0; i < 10; ++i) {
        SeedFit fit = cached_seed_fit("full", i, BackendSettings::parse("full"));
        cov_a += fit.cov_alpha;
        cov_r += fit.cov_rho;
        med_ok += std::fabs(fit.median_alpha - 0.3) <= 0.1;
        c.info("seed " + std::to_string(i) + ": median alpha = " +
               fmt(fit.median_alpha) + ", covers alpha = " +
               (fit.cov_alpha ? "yes" : "no") + ", covers rho = " +
               (fit.cov_rho ? "yes" : "no"));
    }
    c.require(cov_a >= 8, "alpha CI coverage " + std::to_string(cov_a) + "/10");
    c.require(cov_r >= 8, "rho CI coverage " + std::to_string(cov_r) + "/10");
    c.require(med_ok >= 8,
              "median within 0.1 of truth in " + std::to_string(med_ok) +
                  "/10 seeds");
    return c;
}

Criterion method_ordering() {
    Criterion c;
    double is_full = 0.0, is_vec = 0.0;
    int cov_lr = 0;
    for (int i = 0; i < 10; ++i) {
        SeedFit full = cached_seed_fit("full", i, BackendSettings::parse("full"));
        SeedFit vec = cached_seed_fit("vec10", i,
                                      BackendSettings::parse("vecchia:m=10"));
        SeedFit lr = cached_seed_fit("lr20", i,
                                     BackendSettings::parse("lowrank:k=20"));
        is_full += full.is_alpha;
        is_vec += vec.is_alpha;
        cov_lr += lr.cov_alpha;
    }
    is_full /= 10.0;
    is_vec /= 10.0;
    c.require(is_vec <= 2.0 * is_full,
              "Vecchia(10) mean alpha interval score " + fmt(is_vec) +
                  " within 2x of full GP " + fmt(is_full));
    c.require(cov_lr <= 5, "low-rank(20) alpha coverage " +
                               std::to_string(cov_lr) + "/10 <= 5/10");
    return c;
}

// ---------------------------------------------------------------------- 8
Criterion scoring_oracles() {
    Criterion c;
    c.require(interval_score(0.2, 0.6, 0.4, 0.05) == 0.6 - 0.2,
              "interval score inside: exactly the width");
    c.require(std::fabs(interval_score(0.2, 0.6, 0.7, 0.05) - 4.4) < 1e-12,
              "interval score above: 0.4 + 40 x 0.1 = 4.4");
    c.require(interval_score(0.3, 0.3, 0.3, 0.05) == 0.0,
              "degenerate covered interval scores 0");

    Rng rng(20250801);
    double worst = 0.0;
    for (int rep = 0; rep < 10; ++rep) {
        std::vector<double> samples(50);
        for (auto& v : samples) v = rng.normal();
        const double truth = rng.normal();
        double t1 = 0.0;
        for (double x : samples) t1 += std::fabs(x - truth);
        t1 /= samples.size();
        double t2 = 0.0;
        for (double a : samples)
            for (double b : samples) t2 += std::fabs(a - b);
        t2 /= 2.0 * samples.size() * samples.size();
        const double closed = t1 - t2;
        const double grid = twcrps(samples, truth, TwcrpsWeight::one()).score;
        worst = std::max(worst, std::fabs(grid - closed) / closed);
    }
    c.require(worst < 1e-3,
              "unweighted twCRPS vs closed form, worst rel err = " + fmt(worst));

    std::vector<double> point(20, 0.42);
    bool zeros = twcrps(point, 0.42, TwcrpsWeight::one()).score == 0.0 &&
                 twcrps(point, 0.42, TwcrpsWeight::lower_tail(0.5)).score == 0.0 &&
                 twcrps(point, 0.42, TwcrpsWeight::upper_tail(0.4)).score == 0.0 &&
                 twcrps(point, 0.42, TwcrpsWeight::gaussian_cdf(0.0, 1.0))
                         .score == 0.0;
    c.require(zeros, "point mass at truth scores 0 under every weight");
    return c;
}

// ---------------------------------------------------------------------- 9
Criterion maxstab_calibration() {
    Criterion c;
    int rejections = 0;
    for (int d = 0; d < 50; ++d) {
        ReplicateMatrix m;
        m.scale = Scale::UniformU;
        m.values.resize(5, 100);
        Rng rng(20250900 + d);
        for (int t = 0; t < 100; ++t) {
            const double v = rng.uniform();
            for (int i = 0; i < 5; ++i) m.values(i, t) = v;
        }
        auto res = max_stability_test(m, {0, 1, 2, 3, 4}, 200, 300 + d);
        if (res.p_value < 0.05) ++rejections;
    }
    c.require(rejections <= 5, "null rejection rate " +
                                   std::to_string(rejections) + "/50 <= 10%");

    auto s = sample_uniform_sites(49, 20250910);
    std::vector<int> all(49);
    for (int i = 0; i < 49; ++i) all[i] = i;
    int power = 0;
    for (int d = 0; d < 20; ++d) {
        auto sim = simulate_lrsm(s, {0.4, 0.5}, 0.05, 100, 20250920 + d);
        auto res = max_stability_test(sim.u, all, 200, 400 + d);
        if (res.p_value < 0.05) ++power;
    }
    c.require(power >= 12, "weak-dependence rejection rate " +
                               std::to_string(power) + "/20 >= 60%");
    return c;
}

// --------------------------------------------------------------------- 10
Criterion end_to_end_study() {
    Criterion c;
    const std::string dir = "acceptance_study";
    fs::remove_all(dir);
    fs::create_directories(dir);
    {
        std::ofstream f(dir + "/study.cfg");
        f << "n = 50\nT = 20\nnu = 0.5\nrho = 0.1\nalpha = 0.3, 0.7\n"
             "repetitions = 5\nbackends = full, vecchia:m=8, lowrank:k=15\n"
             "iters = 1500\nadapt_every = 150\nstore_r_every = 25\n"
             "n_retain = 100\nseed = 20251001\n";
    }

    auto r1 = cmd_study(dir + "/study.cfg", dir + "/out", false);
    c.require(r1.cells_total == 30, "grid is 2 x 3 x 5 = 30 cells");
    c.require(r1.cells_failed == 0,
              "no failed cells (" + std::to_string(r1.cells_failed) + ")");
    c.require(fs::exists(dir + "/out/results.txt") &&
                  fs::exists(dir + "/out/results.csv"),
              "results table emitted");

    // shaped like the paper's results tables: per-method rows with coverage,
    // interval score, twCRPS and walltime columns
    std::ifstream tf(dir + "/out/results.txt");
    std::stringstream buf;
    buf << tf.rdbuf();
    const std::string table = buf.str();
    for (const char* needle :
         {"Full GP", "Vecchia (m=8)", "Low Rank (15)", "Cov a", "IS a",
          "twCRPS1", "twCRPS2", "twCRPS3", "Wall(min)"})
        c.require(table.find(needle) != std::string::npos,
                  std::string("table contains '") + needle + "'");

    auto strip_walltime = [](const std::string& csv) {
        std::string out;
        std::istringstream ss(csv);
        std::string line;
        while (std::getline(ss, line))
            out += line.substr(0, line.rfind(',')) + "\n";
        return out;
    };
    std::ifstream c1(dir + "/out/results.csv");
    std::stringstream cb1;
    cb1 << c1.rdbuf();

    auto r2 = cmd_study(dir + "/study.cfg", dir + "/out", true);
    c.require(r2.cells_skipped == 30 && r2.cells_run == 0,
              "resume skips all finished cells");

    fs::remove_all(dir + "/out/cells/s0_rep2_vecchia_m8");
    auto r3 = cmd_study(dir + "/study.cfg", dir + "/out", true);
    c.require(r3.cells_run == 1 && r3.cells_skipped == 29,
              "resume recomputes exactly the missing cell");
    std::ifstream c2(dir + "/out/results.csv");
    std::stringstream cb2;
    cb2 << c2.rdbuf();
    c.require(strip_walltime(cb1.str()) == strip_walltime(cb2.str()),
              "aggregated statistics identical after resume");
    return c;
}

struct Entry {
    int id;
    const char* name;
    std::function<Criterion()> fn;
};

const std::vector<Entry>& entries() {
    static const std::vector<Entry> all = {
        {1, "exactness ladder (Vecchia / taper / low rank)", exactness_ladder},
        {2, "reduction to the Gaussian copula at alpha = 0", copula_reduction},
        {3, "transform round trips and Jacobian", transform_round_trips},
        {4, "marginal law KS at 1e6 draws", marginal_law_ks},
        {5, "tail dependence consistency with the theory", theorem_consistency},
        {6, "desk-scale inference calibration (full GP)", inference_calibration},
        {7, "method ordering (Vecchia vs low rank)", method_ordering},
        {8, "scoring oracles", scoring_oracles},
        {9, "max-stability test calibration and power", maxstab_calibration},
        {10, "end-to-end study with resume", end_to_end_study},
    };
    return all;
}

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    if (argc > 1) only = std::atoi(argv[1]);

    bool all_ok = true;
    for (const auto& e : entries()) {
        if (only != 0 && e.id != only) continue;
        Criterion c;
        try {
            c = e.fn();
        } catch (const std::exception& ex) {
            c.ok = false;
            c.notes.push_back(std::string("    FAIL exception: ") + ex.what());
        }
        std::printf("[%s] criterion %d: %s\n", c.ok ? "PASS" : "FAIL", e.id,
                    e.name);
        for (const auto& n : c.notes) std::printf("%s\n", n.c_str());
        all_ok = all_ok && c.ok;
    }
    return all_ok ? 0 : 1;
}
