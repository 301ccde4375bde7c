#include "lrsm/marginal.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lrsm/errors.hpp"
#include "lrsm/rng.hpp"

namespace lrsm {

double levy_pdf(double r) {
    if (!(r > 0.0)) throw std::invalid_argument("levy_pdf: r must be > 0");
    return std::exp(levy_log_pdf(r));
}

double levy_log_pdf(double r) {
    if (!(r > 0.0)) throw std::invalid_argument("levy_log_pdf: r must be > 0");
    return -0.5 * std::log(4.0 * M_PI * r * r * r) - 0.25 / r;
}

double levy_quantile(double u) {
    if (!(u > 0.0 && u < 1.0))
        throw std::invalid_argument("levy_quantile: u in (0,1)");
    const double q = norm_quantile(1.0 - 0.5 * u);
    return 1.0 / (2.0 * q * q);
}

namespace {

// Integration domain for the half-normal mixing variable.
constexpr double kQMin = 1e-18;
constexpr double kQSwitch = 0.25;  // log-spaced below, linear above
constexpr double kQMax = 9.5;

enum Form { kCdf = 0, kSf = 1, kPdf = 2 };

// integrand factor in terms of t = x * s with s = (2 q^2)^alpha = R^{-alpha}
inline double form_factor(Form f, double x, double s) {
    const double t = x * s;
    switch (f) {
        case kCdf: return t / (1.0 + t);
        case kSf: return 1.0 / (1.0 + t);
        default: return s / ((1.0 + t) * (1.0 + t));
    }
}

// 15-point Gauss-Legendre on [-1,1].
constexpr double kGlx[8] = {
    0.000000000000000, 0.201194093997435, 0.394151347077563,
    0.570972172608539, 0.724417731360170, 0.848206583410427,
    0.937273392400706, 0.987992518020485};
constexpr double kGlw[8] = {
    0.202578241925561, 0.198431485327112, 0.186161000015562,
    0.166269205816994, 0.139570677926154, 0.107159220467172,
    0.070366047488108, 0.030753241996117};

struct BulkNodes {
    std::vector<double> q;         // node locations
    std::vector<double> w;         // 2 phi(q) * weight * jacobian
    std::vector<double> log2q2;    // log(2 q^2)
};

const BulkNodes& bulk_nodes() {
    static const BulkNodes nodes = [] {
        BulkNodes b;
        auto add_node = [&b](double q, double wt) {
            b.q.push_back(q);
            b.w.push_back(2.0 * norm_pdf(q) * wt);
            b.log2q2.push_back(std::log(2.0 * q * q));
        };
        auto add_panel = [&](double lo, double hi, bool logscale) {
            const double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
            for (int j = -7; j <= 7; ++j) {
                const int a = j < 0 ? -j : j;
                const double t = c + h * (j < 0 ? -kGlx[a] : kGlx[a]);
                const double wt = h * kGlw[a];
                if (logscale)
                    add_node(std::exp(t), wt * std::exp(t));
                else
                    add_node(t, wt);
            }
        };
        const double lmin = std::log(kQMin), lmax = std::log(kQSwitch);
        const int nlog = static_cast<int>(std::ceil(lmax - lmin));
        for (int i = 0; i < nlog; ++i)
            add_panel(lmin + (lmax - lmin) * i / nlog,
                      lmin + (lmax - lmin) * (i + 1) / nlog, true);
        const int nlin = static_cast<int>(std::ceil((kQMax - kQSwitch) / 0.5));
        for (int i = 0; i < nlin; ++i)
            add_panel(kQSwitch + (kQMax - kQSwitch) * i / nlin,
                      kQSwitch + (kQMax - kQSwitch) * (i + 1) / nlin, false);
        return b;
    }();
    return nodes;
}

}  // namespace

MarginalDist::MarginalDist(double alpha, QuadratureConfig cfg)
    : alpha_(alpha), cfg_(cfg) {
    if (!(alpha >= 0.0) || !std::isfinite(alpha))
        throw std::invalid_argument("MarginalDist: alpha must be >= 0");
}

double MarginalDist::mix_expectation(double x, int form) const {
    const double a = alpha_;
    auto s_of = [a](double q) { return std::exp(a * std::log(2.0 * q * q)); };
    auto integrand_log = [&](double l) {
        const double q = std::exp(l);
        return 2.0 * norm_pdf(q) * q *
               form_factor(static_cast<Form>(form), x, s_of(q));
    };
    auto integrand_lin = [&](double q) {
        return 2.0 * norm_pdf(q) *
               form_factor(static_cast<Form>(form), x, s_of(q));
    };
    // transition where x * s = 1, in log-q coordinates
    std::vector<double> bp_log, bp_lin;
    if (x > 0.0 && a > 0.0) {
        const double l0 = -(std::log(x) + M_LN2 * a) / (2.0 * a);
        const double width = 1.0 / (2.0 * a);
        for (double off : {-3.0, -1.0, 0.0, 1.0, 3.0})
            bp_log.push_back(l0 + off * width);
        const double q0 = std::exp(std::min(700.0, std::max(-700.0, l0)));
        for (double f : {0.5, 1.0, 2.0})
            if (q0 * f > kQSwitch && q0 * f < kQMax) bp_lin.push_back(q0 * f);
    }
    for (double l : {-36.0, -30.0, -24.0, -18.0, -12.0, -8.0, -5.0, -3.0})
        bp_log.push_back(l);
    for (double q : {0.5, 1.0, 1.5, 2.5, 4.0, 6.0}) bp_lin.push_back(q);

    QuadratureConfig piece = cfg_;
    piece.abs_tol = 0.5 * cfg_.abs_tol;
    const auto lo =
        integrate(integrand_log, std::log(kQMin), std::log(kQSwitch), piece,
                  bp_log);
    const auto hi = integrate(integrand_lin, kQSwitch, kQMax, piece, bp_lin);
    return lo.value + hi.value;
}

double MarginalDist::cdf(double x) const {
    if (!(x >= 0.0) || !std::isfinite(x)) {
        if (x > 0.0) return 1.0;  // +inf limit
        throw std::invalid_argument("marginal cdf: x must be >= 0");
    }
    if (x == 0.0) return 0.0;
    if (alpha_ == 0.0) return x / (1.0 + x);
    return mix_expectation(x, kCdf);
}

double MarginalDist::sf(double x) const {
    if (!(x >= 0.0) || !std::isfinite(x)) {
        if (x > 0.0) return 0.0;
        throw std::invalid_argument("marginal sf: x must be >= 0");
    }
    if (x == 0.0) return 1.0;
    if (alpha_ == 0.0) return 1.0 / (1.0 + x);
    return mix_expectation(x, kSf);
}

double MarginalDist::pdf(double x) const {
    if (!(x >= 0.0) || !std::isfinite(x))
        throw std::invalid_argument("marginal pdf: x must be >= 0");
    if (alpha_ == 0.0) return 1.0 / ((1.0 + x) * (1.0 + x));
    return mix_expectation(x, kPdf);
}

double MarginalDist::quantile(double u) const {
    if (!(u > 0.0 && u < 1.0))
        throw std::invalid_argument("marginal quantile: u in (0,1)");
    if (alpha_ == 0.0) return u / (1.0 - u);

    const bool upper = u > 0.5;
    auto residual = [&](double x) {
        return upper ? (1.0 - u) - sf(x) : cdf(x) - u;
    };
    // solved to cfg.abs_tol in u (default 1e-10)
    const double tol_u = std::max(cfg_.abs_tol, 1e-14);
    double lo = 0.0, flo = -u;
    double hi = 1.0, fhi = residual(1.0);
    while (fhi < 0.0) {
        lo = hi;
        flo = fhi;
        hi *= 8.0;
        if (hi > 1e300)
            throw NumericalError("marginal quantile: bracket overflow");
        fhi = residual(hi);
    }
    // hybrid bisection/secant
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 300; ++it) {
        double xs = hi - fhi * (hi - lo) / (fhi - flo);
        if (!(xs > lo && xs < hi)) xs = 0.5 * (lo + hi);
        const double fs = residual(xs);
        x = xs;
        if (std::fabs(fs) <= tol_u && (hi - lo) <= 1e-9 * (1.0 + hi)) break;
        if (fs < 0.0) {
            lo = xs;
            flo = fs;
        } else {
            hi = xs;
            fhi = fs;
        }
        if (hi - lo <= 1e-15 * hi) break;
    }
    return x;
}

// ---------------------------------------------------------------------------

MarginalBulk::MarginalBulk(double alpha) : alpha_(alpha) {
    if (!(alpha >= 0.0) || !std::isfinite(alpha))
        throw std::invalid_argument("MarginalBulk: alpha must be >= 0");
    const auto& nodes = bulk_nodes();
    const std::size_t n = nodes.q.size();
    s_.resize(n);
    a_ = nodes.w;
    for (std::size_t j = 0; j < n; ++j)
        s_[j] = std::exp(alpha * nodes.log2q2[j]);
}

double MarginalBulk::cdf(double x) const {
    if (x <= 0.0) return 0.0;
    if (alpha_ == 0.0) return x / (1.0 + x);
    double acc = 0.0;
    const std::size_t n = s_.size();
    for (std::size_t j = 0; j < n; ++j) {
        const double t = x * s_[j];
        acc += a_[j] * (t / (1.0 + t));
    }
    return acc;
}

double MarginalBulk::sf(double x) const {
    if (x <= 0.0) return 1.0;
    if (alpha_ == 0.0) return 1.0 / (1.0 + x);
    double acc = 0.0;
    const std::size_t n = s_.size();
    for (std::size_t j = 0; j < n; ++j) acc += a_[j] / (1.0 + x * s_[j]);
    return acc;
}

double MarginalBulk::pdf(double x) const {
    if (alpha_ == 0.0) return 1.0 / ((1.0 + x) * (1.0 + x));
    double acc = 0.0;
    const std::size_t n = s_.size();
    for (std::size_t j = 0; j < n; ++j) {
        const double d = 1.0 + x * s_[j];
        acc += a_[j] * s_[j] / (d * d);
    }
    return acc;
}

double MarginalBulk::quantile_from(double u, double lo_hint) const {
    const bool upper = u > 0.5;
    auto residual = [&](double x) {
        return upper ? (1.0 - u) - sf(x) : cdf(x) - u;
    };
    double lo = lo_hint, flo = lo > 0.0 ? residual(lo) : -u;
    if (flo > 0.0) {  // hint overshot; it still bounds the root from above
        flo = -u;
        lo = 0.0;
    }
    double hi = std::max(1.0, 4.0 * std::max(lo, 1e-300)), fhi = residual(hi);
    while (fhi < 0.0) {
        lo = hi;
        flo = fhi;
        hi *= 8.0;
        if (hi > 1e300)
            throw NumericalError("marginal quantile: bracket overflow");
        fhi = residual(hi);
    }
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        double xs = hi - fhi * (hi - lo) / (fhi - flo);
        if (!(xs > lo && xs < hi)) xs = 0.5 * (lo + hi);
        const double fs = residual(xs);
        x = xs;
        if (std::fabs(fs) <= 1e-11) break;
        if (fs < 0.0) {
            lo = xs;
            flo = fs;
        } else {
            hi = xs;
            fhi = fs;
        }
        if (hi - lo <= 1e-15 * hi) break;
    }
    return x;
}

double MarginalBulk::quantile(double u) const {
    if (!(u > 0.0 && u < 1.0))
        throw std::invalid_argument("marginal quantile: u in (0,1)");
    if (alpha_ == 0.0) return u / (1.0 - u);
    return quantile_from(u, 0.0);
}

void MarginalBulk::quantile_sweep(const std::vector<double>& u_sorted,
                                  std::vector<double>& x,
                                  std::vector<double>& logpdf) const {
    const std::size_t n = u_sorted.size();
    x.resize(n);
    logpdf.resize(n);
    if (alpha_ == 0.0) {
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = u_sorted[i] / (1.0 - u_sorted[i]);
            logpdf[i] = -2.0 * std::log1p(x[i]);
        }
        return;
    }
    // contiguous chunks, each with its own warm-started bracket
    const std::size_t chunk = 256;
    const long long nchunks = static_cast<long long>((n + chunk - 1) / chunk);
#pragma omp parallel for schedule(dynamic)
    for (long long c = 0; c < nchunks; ++c) {
        const std::size_t beg = static_cast<std::size_t>(c) * chunk;
        const std::size_t end = std::min(n, beg + chunk);
        double hint = 0.0;
        for (std::size_t i = beg; i < end; ++i) {
            x[i] = quantile_from(u_sorted[i], hint);
            hint = x[i];
            logpdf[i] = std::log(pdf(x[i]));
        }
    }
}

// ---------------------------------------------------------------------------

double h_transform(double z, double levy_r, double alpha,
                   const QuadratureConfig& cfg) {
    if (!(levy_r > 0.0)) throw std::invalid_argument("h: R must be > 0");
    if (!std::isfinite(z)) throw std::invalid_argument("h: non-finite z");
    if (alpha == 0.0) return norm_cdf(z);
    const double x = std::pow(levy_r, alpha) * pareto_g(z);
    return MarginalDist(alpha, cfg).cdf(x);
}

double h_inverse(double u, double levy_r, double alpha,
                 const QuadratureConfig& cfg) {
    if (!(levy_r > 0.0)) throw std::invalid_argument("h_inv: R must be > 0");
    if (!(u > 0.0 && u < 1.0))
        throw std::invalid_argument("h_inv: u in (0,1)");
    if (alpha == 0.0) return norm_quantile(u);
    const double x = MarginalDist(alpha, cfg).quantile(u);
    const double ra = std::pow(levy_r, alpha);
    const double cc = x / (x + ra);   // = Phi(z)
    const double ss = ra / (x + ra);  // = survival
    return norm_quantile_pair(cc, ss);
}

double jacobian_du_to_dz(double u, double levy_r, double alpha,
                         const QuadratureConfig& cfg) {
    if (!(levy_r > 0.0)) throw std::invalid_argument("jacobian: R must be > 0");
    if (!(u > 0.0 && u < 1.0))
        throw std::invalid_argument("jacobian: u in (0,1)");
    if (alpha == 0.0) {
        const double z = norm_quantile(u);
        return std::exp(-log_norm_pdf(z));
    }
    MarginalDist dist(alpha, cfg);
    const double x = dist.quantile(u);
    const double ra = std::pow(levy_r, alpha);
    const double cc = x / (x + ra);
    const double ss = ra / (x + ra);
    const double z = norm_quantile_pair(cc, ss);
    const double log_j = -log_norm_pdf(z) + std::log(ra) -
                         2.0 * std::log(x + ra) - std::log(dist.pdf(x));
    return std::exp(log_j);
}

// ---------------------------------------------------------------------------

ChiLimit chi_limit(double corr, double alpha, long n_mc, std::uint64_t seed) {
    if (!(corr >= -1.0 && corr <= 1.0))
        throw std::invalid_argument("chi_limit: corr in [-1,1]");
    if (n_mc < 10000)
        throw std::invalid_argument("chi_limit: n_mc >= 1e4 required");
    if (alpha < kLevyScale) return {0.0, 0.0};

    const double beta = kLevyScale / alpha;
    const double root = std::sqrt(std::max(0.0, 1.0 - corr * corr));
    Rng rng(Rng::derive(seed, {0xc417u}));
    double sum_m = 0.0, sum_d = 0.0;
    double sum_mm = 0.0, sum_dd = 0.0, sum_md = 0.0;
    for (long i = 0; i < n_mc; ++i) {
        const double e1 = rng.normal();
        const double e2 = rng.normal();
        const double z1 = e1;
        const double z2 = corr * e1 + root * e2;
        const double g1 = std::pow(pareto_g(z1), beta);
        const double g2 = std::pow(pareto_g(z2), beta);
        const double m = std::min(g1, g2);
        sum_m += m;
        sum_d += g1;
        sum_mm += m * m;
        sum_dd += g1 * g1;
        sum_md += m * g1;
    }
    const double n = static_cast<double>(n_mc);
    const double mbar = sum_m / n, dbar = sum_d / n;
    const double chi = mbar / dbar;
    const double var_m = sum_mm / n - mbar * mbar;
    const double var_d = sum_dd / n - dbar * dbar;
    const double cov_md = sum_md / n - mbar * dbar;
    double var_ratio =
        (var_m - 2.0 * chi * cov_md + chi * chi * var_d) / (dbar * dbar * n);
    if (var_ratio < 0.0) var_ratio = 0.0;
    return {chi, std::sqrt(var_ratio)};
}

double eta_coefficient(double corr, double alpha) {
    if (!(corr >= -1.0 && corr <= 1.0))
        throw std::invalid_argument("eta_coefficient: corr in [-1,1]");
    if (alpha >= kLevyScale) return 1.0;
    const double eta_z = 0.5 * (1.0 + corr);
    return std::max(eta_z, alpha / kLevyScale);
}

}  // namespace lrsm
