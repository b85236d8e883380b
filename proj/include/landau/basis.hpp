#pragma once

#include <array>
#include <functional>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "landau/kernels.hpp"
#include "landau/params.hpp"
#include "landau/quadrature.hpp"

namespace landau {

using MultiIndex = std::array<int, 3>;

/**
 * @brief Hermite-Gaussian Galerkin basis of one species.
 *
 * phi_a(p) = P_a(p) sqrt(M(p)) with P_a the product of orthonormal probabilists'
 * Hermite polynomials in p/sqrt(s), s the species variance. Indices are ordered
 * by total degree, so the degree-N basis is a prefix of the degree-(N+1) one.
 */
class Basis
{
 public:
  Species species = Species::B;
  int degree = 0;
  double scale = 1.0;
  std::vector<MultiIndex> index;

  std::size_t size() const { return index.size(); }

  /// Position of a multi-index, or -1 when it is not in the basis.
  int find(const MultiIndex& a) const;

  /// Polynomial parts P_a(p).
  Eigen::VectorXd poly(const Vec3& p) const;

  /// Gradients of the polynomial parts, one column per basis function.
  Eigen::Matrix3Xd poly_grad(const Vec3& p) const;

  double sqrt_density(const Vec3& p) const;

  /// phi_a(p).
  Eigen::VectorXd values(const Vec3& p) const;

  /// grad phi_a(p), one column per basis function.
  Eigen::Matrix3Xd gradients(const Vec3& p) const;

  /// sum_a c_a phi_a(p).
  double evaluate(const Eigen::VectorXd& c, const Vec3& p) const;

 private:
  friend Basis build_basis_unchecked(const ModelParams&, Species, int);
  std::vector<int> lookup_;
};

/// Basis of total degree <= N; throws ConfigError for N < 2.
Basis build_basis(const ModelParams& params, Species species, int degree);

/// Basis of total degree <= N without the N >= 2 restriction (internal use).
Basis build_basis_unchecked(const ModelParams& params, Species species, int degree);

/// Number of nodes per dimension for a basis of degree N.
int quadrature_order(int degree, double oversampling);

/// Tensor rule on the basis' own scale with order >= oversampling (N + 2).
QuadratureRule quadrature(const Basis& basis, double oversampling, double prune_threshold);

/// Shared rule for two bases, built on the wider of the two scales.
QuadratureRule quadrature(const Basis& a, const Basis& b, double oversampling,
                          double prune_threshold);

/// Gram matrix of the basis under the rule (any scale).
Eigen::MatrixXd gram(const Basis& basis, const QuadratureRule& quad);

/// Coefficients <fn, phi_a>.
Eigen::VectorXd project(const std::function<double(const Vec3&)>& fn, const Basis& basis,
                        const QuadratureRule& quad);

/// L2 norm of fn minus its reconstruction from c.
double projection_residual(const std::function<double(const Vec3&)>& fn,
                           const Eigen::VectorXd& c, const Basis& basis,
                           const QuadratureRule& quad);

/**
 * @brief Coefficient form of d/dp_i, mapping the basis into the degree-(N+1) basis.
 *
 * D_i phi_a = (1/(2 sqrt s)) [sqrt(a_i) phi_{a-e_i} - sqrt(a_i+1) phi_{a+e_i}].
 */
struct DerivativeMatrices
{
  Basis super;
  std::array<Eigen::MatrixXd, 3> D;  ///< super.size() x basis.size()

  /// D_i with rows restricted to the original basis.
  Eigen::MatrixXd restricted(int i, std::size_t n) const { return D[i].topRows(long(n)); }

  /// Largest column norm of the rows dropped by the restriction.
  double restriction_loss = 0.0;

  /// Rows 3 x super.size() stacked: [D_1; D_2; D_3].
  Eigen::MatrixXd stacked() const;
};

DerivativeMatrices derivative_matrices(const ModelParams& params, const Basis& basis);

/// Galerkin matrix of multiplication by p.omega (exact three-term recurrence).
Eigen::MatrixXd transport_matrix(const Basis& basis, const Vec3& omega);

/// Orthonormal frame (omega, perp1, perp2) with perp2 = omega x perp1.
struct Frame
{
  Vec3 omega;
  Vec3 perp1;
  Vec3 perp2;
};

/// Throws ConfigError unless |omega| = 1 within 1e-12.
Frame make_frame(const Vec3& omega);

struct SpecialVectors
{
  std::array<Eigen::VectorXd, 5> chi;  ///< species B: sqrt(M), p_j sqrt(M), (|p|^2-3)/sqrt(6) sqrt(M)
  std::array<Eigen::VectorXd, 3> Psi;  ///< chi_1, chi_2, chi_3
  std::array<Eigen::VectorXd, 5> E;    ///< fluid eigenvectors at eta -> 0
  Eigen::VectorXd E_D;                 ///< species A: sqrt(M_A)
  Frame frame;
};

SpecialVectors special_vectors(const Basis& basis_B, const Basis& basis_A, const Vec3& omega);

/// chi_0..chi_4 in a species-B basis.
std::array<Eigen::VectorXd, 5> chi_vectors(const Basis& basis_B);

/// E_0..E_4 in a species-B basis for the frame of omega.
std::array<Eigen::VectorXd, 5> e_vectors(const Basis& basis_B, const Vec3& omega);

/// Matrix S with |f|^2_{sigma} = c^T S c for f = sum_a c_a phi_a.
Eigen::MatrixXd sigma_norm_matrix(const ModelParams& params, const Basis& basis,
                                  const QuadratureRule& quad, const WeightSpec& weight);

/// Weighted anisotropic norm |f|_{L^2_sigma}.
double sigma_norm(const Eigen::VectorXd& c, const ModelParams& params, const Basis& basis,
                  const QuadratureRule& quad, const WeightSpec& weight);

/**
 * @brief Index sets invariant under p_i -> -p_i for every axis with omega_i = 0.
 *
 * The mode operators are block diagonal over these sets.
 */
std::vector<std::vector<int>> symmetry_sectors(const Basis& basis, const Vec3& omega);

nlohmann::ordered_json metadata(const Basis& basis, const QuadratureRule& quad);

}  // namespace landau
