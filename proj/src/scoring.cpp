#include "lrsm/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lrsm/special.hpp"

namespace lrsm {

TwcrpsWeight TwcrpsWeight::lower_tail(double a) {
    TwcrpsWeight w;
    w.kind = LowerTail;
    w.a = a;
    return w;
}

TwcrpsWeight TwcrpsWeight::gaussian_cdf(double mu, double sigma) {
    TwcrpsWeight w;
    w.kind = GaussianCdf;
    w.mu = mu;
    w.sigma = sigma;
    return w;
}

TwcrpsWeight TwcrpsWeight::upper_tail(double a80) {
    TwcrpsWeight w;
    w.kind = UpperTail;
    w.a = a80;
    return w;
}

TwcrpsWeight TwcrpsWeight::one() { return TwcrpsWeight{}; }

double TwcrpsWeight::operator()(double z) const {
    switch (kind) {
        case LowerTail: return z <= a ? 1.0 : 0.0;
        case GaussianCdf: return norm_cdf((z - mu) / sigma);
        case UpperTail: return z >= a ? 1.0 : 0.0;
        default: return 1.0;
    }
}

std::optional<double> TwcrpsWeight::anchor() const {
    switch (kind) {
        case LowerTail:
        case UpperTail: return a;
        case GaussianCdf: return mu;
        default: return std::nullopt;
    }
}

double empirical_coverage(const std::vector<Interval>& intervals,
                          double truth) {
    if (intervals.empty())
        throw std::invalid_argument("empirical_coverage: empty list");
    long hits = 0;
    for (const auto& iv : intervals) {
        if (iv.lo > iv.hi)
            throw std::invalid_argument("empirical_coverage: lo > hi");
        if (truth >= iv.lo && truth <= iv.hi) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(intervals.size());
}

double interval_score(double lo, double hi, double truth, double alpha_star) {
    if (lo > hi) throw std::invalid_argument("interval_score: lo > hi");
    double s = hi - lo;
    if (truth < lo) s += 2.0 / alpha_star * (lo - truth);
    if (truth > hi) s += 2.0 / alpha_star * (truth - hi);
    return s;
}

double mean_interval_score(const std::vector<Interval>& intervals, double truth,
                           double alpha_star) {
    if (intervals.empty())
        throw std::invalid_argument("mean_interval_score: empty list");
    double acc = 0.0;
    for (const auto& iv : intervals)
        acc += interval_score(iv.lo, iv.hi, truth, alpha_star);
    return 0.5 * alpha_star * acc / static_cast<double>(intervals.size());
}

TwcrpsResult twcrps(const std::vector<double>& samples, double truth,
                    const TwcrpsWeight& weight) {
    if (samples.size() < 2)
        throw std::invalid_argument("twcrps: need at least 2 samples");

    std::vector<double> sorted = samples;
    std::sort(sorted.begin(), sorted.end());
    const double mn = std::min(sorted.front(), truth);
    const double mx = std::max(sorted.back(), truth);
    const double range = mx - mn;
    TwcrpsResult out;
    if (range == 0.0) return out;  // all predictive mass on the truth

    const double lo = mn - 3.0 * range;
    const double hi = mx + 3.0 * range;
    if (auto a = weight.anchor())
        out.degenerate_weight = *a < lo || *a > hi;

    // uniform grid plus every discontinuity of the integrand
    std::vector<double> grid;
    const int n_uniform = 1024;
    grid.reserve(n_uniform + sorted.size() + 3);
    for (int i = 0; i <= n_uniform; ++i)
        grid.push_back(lo + (hi - lo) * i / n_uniform);
    for (double s : sorted) grid.push_back(s);
    grid.push_back(truth);
    if (auto a = weight.anchor()) {
        if (*a > lo && *a < hi) grid.push_back(*a);
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    // (Fhat - H)^2 is constant between consecutive grid points, so evaluate
    // it at segment midpoints and apply the trapezoid rule to the weight.
    const double m = static_cast<double>(sorted.size());
    double acc = 0.0;
    double w_left = weight(grid.front());
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        const double z0 = grid[i], z1 = grid[i + 1];
        const double mid = 0.5 * (z0 + z1);
        const double fhat =
            static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(),
                                                 mid) -
                                sorted.begin()) /
            m;
        const double h = mid >= truth ? 1.0 : 0.0;
        const double d = fhat - h;
        const double w_right = weight(z1);
        // indicator weights switch exactly at grid points; use the midpoint
        const double wmid =
            weight.kind == TwcrpsWeight::GaussianCdf
                ? 0.5 * (w_left + w_right)
                : weight(mid);
        acc += wmid * d * d * (z1 - z0);
        w_left = w_right;
    }
    out.score = acc;
    return out;
}

}  // namespace lrsm
