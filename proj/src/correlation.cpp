#include "lrsm/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lrsm/errors.hpp"
#include "lrsm/special.hpp"

namespace lrsm {

double matern(double h, const MaternParams& p) {
    return matern_corr(h, p.rho, p.nu);
}

double spherical_taper(double h, const TaperSpec& t) {
    if (!(t.psi > 0.0)) throw std::invalid_argument("spherical_taper: psi > 0");
    if (h < 0.0 || !std::isfinite(h))
        throw std::invalid_argument("spherical_taper: bad distance");
    if (h >= t.psi) return 0.0;
    const double r = h / t.psi;
    return (1.0 - r) * (1.0 - r) * (1.0 + 0.5 * r);
}

namespace {

// Locates the first leading minor that is not positive definite.
int failing_minor(const Eigen::MatrixXd& m) {
    const int n = static_cast<int>(m.rows());
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
    for (int j = 0; j < n; ++j) {
        double d = m(j, j) - L.row(j).head(j).squaredNorm();
        if (!(d > 0.0)) return j + 1;
        L(j, j) = std::sqrt(d);
        for (int i = j + 1; i < n; ++i)
            L(i, j) = (m(i, j) - L.row(i).head(j).dot(L.row(j).head(j))) / L(j, j);
    }
    return 0;
}

}  // namespace

Eigen::LLT<Eigen::MatrixXd> checked_llt(const Eigen::MatrixXd& m,
                                        const char* what) {
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) {
        int minor = failing_minor(m);
        throw NumericalError(std::string(what) +
                             ": matrix not positive definite (leading minor " +
                             std::to_string(minor) + ")");
    }
    return llt;
}

Eigen::MatrixXd covariance_matrix(const SiteSet& s, const MaternParams& p) {
    const int n = s.n();
    Eigen::MatrixXd c(n, n);
#pragma omp parallel for schedule(dynamic, 8)
    for (int i = 0; i < n; ++i) {
        c(i, i) = 1.0;
        for (int j = i + 1; j < n; ++j) c(i, j) = matern(dist(s[i], s[j]), p);
    }
    c.triangularView<Eigen::StrictlyLower>() =
        c.triangularView<Eigen::StrictlyUpper>().transpose();
    checked_llt(c, "covariance_matrix");
    return c;
}

namespace ref {
Eigen::MatrixXd covariance_matrix(const SiteSet& s, const MaternParams& p) {
    const int n = s.n();
    Eigen::MatrixXd c(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) c(i, j) = matern(dist(s[i], s[j]), p);
    checked_llt(c, "covariance_matrix");
    return c;
}
}  // namespace ref

Eigen::MatrixXd tapered_covariance(const SiteSet& s, const MaternParams& p,
                                   const TaperSpec& t) {
    const int n = s.n();
    Eigen::MatrixXd c(n, n);
#pragma omp parallel for schedule(dynamic, 8)
    for (int i = 0; i < n; ++i) {
        c(i, i) = 1.0;
        for (int j = i + 1; j < n; ++j) {
            const double h = dist(s[i], s[j]);
            c(i, j) = h >= t.psi ? 0.0 : matern(h, p) * spherical_taper(h, t);
        }
    }
    c.triangularView<Eigen::StrictlyLower>() =
        c.triangularView<Eigen::StrictlyUpper>().transpose();
    checked_llt(c, "tapered_covariance");
    return c;
}

double sparsity_fraction(const Eigen::MatrixXd& m) {
    const int n = static_cast<int>(m.rows());
    if (n < 2) return 0.0;
    long zeros = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j && m(i, j) == 0.0) ++zeros;
    return static_cast<double>(zeros) / (static_cast<double>(n) * (n - 1));
}

double taper_range_for_sparsity(const SiteSet& s, double target_sparsity) {
    if (s.n() < 2)
        throw std::invalid_argument("taper_range_for_sparsity: need n >= 2");
    if (!(target_sparsity > 0.0 && target_sparsity < 1.0))
        throw std::invalid_argument("taper_range_for_sparsity: target in (0,1)");
    std::vector<double> d;
    d.reserve(static_cast<std::size_t>(s.n()) * (s.n() - 1) / 2);
    for (int i = 0; i < s.n(); ++i)
        for (int j = i + 1; j < s.n(); ++j) d.push_back(dist(s[i], s[j]));
    std::sort(d.begin(), d.end());
    // entries with h >= psi vanish, so psi at the (1 - target) quantile leaves
    // about target fraction of pairs at or beyond it
    const double pos = (1.0 - target_sparsity) * (d.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(lo);
    double q = d[lo];
    if (lo + 1 < d.size()) q += frac * (d[lo + 1] - d[lo]);
    return q;
}

BasisExpansion eigenbasis(const SiteSet& s, int k, const MaternParams& reference,
                          double nugget_tau2) {
    const int n = s.n();
    if (k < 1 || k > n)
        throw std::invalid_argument("eigenbasis: need 1 <= k <= n");
    Eigen::MatrixXd c = covariance_matrix(s, reference);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
    if (es.info() != Eigen::Success)
        throw NumericalError("eigenbasis: eigen-decomposition failed");

    BasisExpansion out;
    out.k = k;
    out.nugget_tau2 = nugget_tau2;
    out.reference = reference;
    out.source_sites = s;
    out.raw_vectors.resize(n, k);
    out.eigenvalues.resize(k);
    // SelfAdjointEigenSolver returns ascending order; take the top k
    for (int j = 0; j < k; ++j) {
        Eigen::VectorXd v = es.eigenvectors().col(n - 1 - j);
        // fix sign for reproducibility: largest-magnitude entry positive
        int imax = 0;
        for (int i = 1; i < n; ++i)
            if (std::fabs(v(i)) > std::fabs(v(imax))) imax = i;
        if (v(imax) < 0.0) v = -v;
        out.raw_vectors.col(j) = v;
        out.eigenvalues(j) = es.eigenvalues()(n - 1 - j);
    }
    out.B = out.raw_vectors;
    for (int i = 0; i < n; ++i) {
        const double norm = out.B.row(i).norm();
        if (!(norm > 0.0))
            throw NumericalError("eigenbasis: zero basis row at site " +
                                 std::to_string(i));
        out.B.row(i) /= norm;
    }
    return out;
}

Eigen::MatrixXd BasisExpansion::evaluate(const SiteSet& targets) const {
    const int n = source_sites.n();
    const int nt = targets.n();
    Eigen::MatrixXd cross(nt, n);
    for (int t = 0; t < nt; ++t)
        for (int i = 0; i < n; ++i)
            cross(t, i) = matern(dist(targets[t], source_sites[i]), reference);
    Eigen::MatrixXd bt = cross * raw_vectors;   // Nystrom, unscaled
    for (int j = 0; j < k; ++j) bt.col(j) /= eigenvalues(j);
    for (int t = 0; t < nt; ++t) {
        const double norm = bt.row(t).norm();
        if (norm > 0.0) bt.row(t) /= norm;
    }
    return bt;
}

}  // namespace lrsm
