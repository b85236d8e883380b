#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace landau {

using cd = std::complex<double>;

/**
 * @brief Eigendecomposition of a matrix that is block diagonal over index sectors.
 *
 * Entries coupling different sectors are ignored (they vanish by symmetry up to
 * rounding; see off_sector_norm). Columns of `vectors` are right eigenvectors,
 * zero outside their sector; `left` holds the rows of the inverse eigenvector
 * matrix. Near-degenerate clusters inside a sector are rebuilt by Rayleigh-Ritz
 * on the SVD null space.
 */
struct SectorEigen
{
  Eigen::VectorXcd values;
  Eigen::MatrixXcd vectors;
  Eigen::MatrixXcd left;
  std::vector<int> sector_of;

  /// Indices of the k eigenvalues with largest real part, in decreasing order.
  std::vector<int> top_real(int k) const;
};

SectorEigen sector_eigen(const Eigen::MatrixXcd& M, const std::vector<std::vector<int>>& sectors,
                         bool with_left = true);

/// Eigenvalues only, sector by sector (no cluster repair).
Eigen::VectorXcd sector_eigenvalues(const Eigen::MatrixXcd& M,
                                    const std::vector<std::vector<int>>& sectors);

/// Largest singular value.
double spectral_norm(const Eigen::MatrixXcd& A);

/// Largest entry of M coupling two different sectors.
double off_sector_norm(const Eigen::MatrixXcd& M, const std::vector<std::vector<int>>& sectors);

/// Pseudo-inverse of a real symmetric matrix, dropping eigenvalues with |mu| <= band.
Eigen::MatrixXd symmetric_pinv(const Eigen::MatrixXd& L, double band);

/// exp(M) by scaling and squaring (Pade).
Eigen::MatrixXcd expm(const Eigen::MatrixXcd& M);

/// Least-squares coefficients of y against the columns of X.
Eigen::VectorXd least_squares(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

}  // namespace landau
