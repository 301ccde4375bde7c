#pragma once

#include <Eigen/Dense>

#include "lrsm/sites.hpp"

namespace lrsm {

struct MaternParams {
    double rho = 0.1;   // range, unit-square distance units
    double nu = 0.5;    // smoothness
};

struct TaperSpec {
    double psi = 0.2;   // taper range; weight is exactly 0 at h >= psi
};

// Matern correlation in (0,1], argument h/rho (no sqrt(2 nu) rescaling).
double matern(double h, const MaternParams& p);

// Spherical taper (1-h/psi)^2 (1+h/(2 psi)) for h < psi, else 0.
double spherical_taper(double h, const TaperSpec& t);

// Dense correlation matrix; symmetric, unit diagonal.  Throws
// NumericalError naming the failing leading minor if not positive definite
// (checked by Cholesky).  OpenMP-parallel over rows.
Eigen::MatrixXd covariance_matrix(const SiteSet& s, const MaternParams& p);

// Entry (i,j) = matern(h_ij) * spherical_taper(h_ij); exact zeros at
// h_ij >= psi.  Stored dense at desk scale.
Eigen::MatrixXd tapered_covariance(const SiteSet& s, const MaternParams& p,
                                   const TaperSpec& t);

// Fraction of off-diagonal entries that are exactly zero.
double sparsity_fraction(const Eigen::MatrixXd& m);

// psi achieving approximately the requested zero fraction: the
// (1 - target_sparsity) quantile of off-diagonal pairwise distances.
double taper_range_for_sparsity(const SiteSet& s, double target_sparsity);

// Low-rank eigenbasis.  B holds the leading-k eigenvectors of the reference
// Matern covariance, rows rescaled to unit Euclidean norm so diag(B B^T) = 1.
// The pre-normalization eigenpairs and the generating sites are retained for
// Nystrom extension to unobserved locations.
struct BasisExpansion {
    Eigen::MatrixXd B;          // n x k, row-normalized
    double nugget_tau2 = 1e-6;
    int k = 0;

    Eigen::MatrixXd raw_vectors;   // n x k eigenvectors (orthonormal columns)
    Eigen::VectorXd eigenvalues;   // leading k, descending
    MaternParams reference;
    SiteSet source_sites;

    // Row-normalized basis evaluated at new sites via the Nystrom formula.
    Eigen::MatrixXd evaluate(const SiteSet& targets) const;
};

BasisExpansion eigenbasis(const SiteSet& s, int k, const MaternParams& reference,
                          double nugget_tau2 = 1e-6);

// Serial reference kernels kept for testing the parallel paths.
namespace ref {
Eigen::MatrixXd covariance_matrix(const SiteSet& s, const MaternParams& p);
}

// Cholesky wrapper that reports the failing leading minor on breakdown.
Eigen::LLT<Eigen::MatrixXd> checked_llt(const Eigen::MatrixXd& m,
                                        const char* what);

}  // namespace lrsm
