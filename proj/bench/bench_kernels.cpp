// Timing comparison of the production kernels (bulk marginal engine plus
// OpenMP) against the serial reference implementations kept for testing:
// covariance assembly, marginal quantile sweeps, and the likelihood sweep.

#include <chrono>
#include <cstdio>
#include <vector>

#include "lrsm/correlation.hpp"
#include "lrsm/fields.hpp"
#include "lrsm/likelihood.hpp"
#include "lrsm/marginal.hpp"
#include "lrsm/rng.hpp"
#include "lrsm/sites.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

template <typename F>
double time_ms(F&& fn, int reps = 3) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        const auto t1 = std::chrono::steady_clock::now();
        best = std::min(best,
                        std::chrono::duration<double, std::milli>(t1 - t0)
                            .count());
    }
    return best;
}

void row(const char* name, double ref_ms, double kernel_ms) {
    std::printf("%-34s %10.1f %10.1f %8.2fx\n", name, ref_ms, kernel_ms,
                ref_ms / kernel_ms);
}

}  // namespace

int main() {
#ifdef _OPENMP
    std::printf("OpenMP threads: %d\n\n", omp_get_max_threads());
#else
    std::printf("built without OpenMP; both columns are serial\n\n");
#endif
    std::printf("%-34s %10s %10s %9s\n", "kernel", "ref ms", "kernel ms",
                "speedup");

    {
        const auto s = lrsm::sample_uniform_sites(1500, 7);
        const lrsm::MaternParams p{0.1, 0.5};
        const double t_ser =
            time_ms([&] { (void)lrsm::ref::covariance_matrix(s, p); });
        const double t_par =
            time_ms([&] { (void)lrsm::covariance_matrix(s, p); });
        row("covariance assembly n=1500", t_ser, t_par);
    }

    {
        lrsm::MarginalBulk marg(0.3);
        lrsm::Rng rng(3);
        std::vector<double> u(50000);
        for (auto& v : u) v = rng.uniform();
        std::sort(u.begin(), u.end());
        std::vector<double> x, lf;
        const double t_ser = time_ms([&] {
            x.clear();
            lf.clear();
            for (double v : u) {
                const double q = marg.quantile(v);
                x.push_back(q);
                lf.push_back(std::log(marg.pdf(q)));
            }
        }, 1);
        const double t_par = time_ms([&] { marg.quantile_sweep(u, x, lf); }, 1);
        row("marginal quantile sweep 50k", t_ser, t_par);
    }

    {
        const auto s = lrsm::sample_uniform_sites(200, 11);
        const lrsm::MaternParams p{0.05, 0.5};
        auto sim = lrsm::simulate_lrsm(s, p, 0.3, 64, 19);
        auto backend = lrsm::LikelihoodBackend::full_gp();
        const double t_ser = time_ms(
            [&] { (void)lrsm::ref::loglik_full(sim.u, sim.r, 0.3, p, s); }, 1);
        const double t_par = time_ms([&] {
            (void)lrsm::loglik_full(sim.u, sim.r, 0.3, p, backend, s);
        }, 1);
        row("full-GP loglik n=200 T=64", t_ser, t_par);
    }

    return 0;
}
