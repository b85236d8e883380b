#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <vector>

#include "landau/params.hpp"
#include "landau/quadrature.hpp"

namespace landau {

/// Species Maxwellian. M_B has unit variance, M_A has variance m_A/m_B.
double maxwellian(const ModelParams& params, Species species, const Vec3& p);

/**
 * @brief Projection kernel c |z|^{gamma+2} (I - z z^T/|z|^2), c the reduced mass.
 * @param degenerate set to true for z = 0 and gamma = -2, where the kernel has no
 *        limit; the zero matrix is returned in that case
 */
Mat3 phi_kernel(const ModelParams& params, SpeciesPair pair, const Vec3& z,
                bool* degenerate = nullptr);

struct LambdaValues
{
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double error = 0.0;  ///< quadrature error estimate (absolute)
};

/**
 * @brief Eigenvalues of sigma^{XY}(p) at |p| = r.
 *
 * After the azimuthal reduction the polar-angle integral is done in closed form
 * and the radial one by adaptive Gauss-Kronrod. lambda2 = (tr sigma - lambda1)/2.
 */
LambdaValues lambda_pair(const ModelParams& params, SpeciesPair pair, double r,
                         double abs_tol = 1e-10);

/// Limit of lambda1(r) r^{-gamma} as r grows.
double lambda1_asymptotic(const ModelParams& params, SpeciesPair pair);

/// Limit of lambda2(r) r^{-(gamma+2)} as r grows.
double lambda2_asymptotic(const ModelParams& params, SpeciesPair pair);

struct SigmaTableOptions
{
  int count = 400;
  double r_min = 1e-3;
  double r_max = 30.0;
  int order = 3;
  double abs_tol = 1e-10;
};

/// Radial table of lambda1, lambda2 with local Lagrange interpolation in r.
class SigmaTable
{
 public:
  static SigmaTable build(const ModelParams& params, SpeciesPair pair,
                          const SigmaTableOptions& opts = {});

  /// Interpolated values; power-law extrapolation beyond the last radius.
  LambdaValues at(double r) const;

  /// CSV: comment line with pair and parameters, then r,lambda1,lambda2.
  void write_csv(std::ostream& os) const;

  SpeciesPair pair{};
  ModelParams params{};
  int order = 3;
  std::vector<double> radii;  ///< radii[0] = 0, then log-spaced
  std::vector<double> lambda1;
  std::vector<double> lambda2;
};

/// lambda1 P(p) + lambda2 (I - P(p)) with P the projector onto p.
Mat3 sigma_matrix(const SigmaTable& table, const Vec3& p);

/// sigma^{XY}(p) by direct 3D quadrature in spherical coordinates (slow, accurate).
Mat3 sigma_direct(const ModelParams& params, SpeciesPair pair, const Vec3& p);

/// Polynomial weight: <p>^theta, times <p>^{|gamma| n} when gamma < 0.
struct WeightSpec
{
  double theta = 0.0;
  int n = 0;

  double operator()(const ModelParams& params, const Vec3& p) const;
};

/// A function given by value and gradient callables.
struct Field
{
  std::function<double(const Vec3&)> value;
  std::function<Vec3(const Vec3&)> gradient;
};

/**
 * @brief Weak form of Q^{XY}(F_X, G_Y) tested against psi.
 *
 * Double sum over the nodes of quad (the same node set for p and p_*) with
 * Lebesgue weights. Node pairs with |p/m_X - q/m_Y| < 1e-12 (q the second node) are skipped.
 */
double q_weak_form(const ModelParams& params, SpeciesPair pair, const Field& F_X,
                   const Field& G_Y, const Field& psi, const QuadratureRule& quad);

struct ConservationReport
{
  double mass_A = 0.0;    ///< mass of Q^AA + Q^AB
  double mass_B = 0.0;    ///< mass of Q^BB + Q^BA
  double momentum = 0.0;  ///< max component of the combined momentum moment
  double energy = 0.0;    ///< combined energy moment with 1/m_X weights
  std::array<double, 5> self_A{};  ///< {1, p1, p2, p3, |p|^2} moments of Q^AA
  std::array<double, 5> self_B{};

  double max_residual() const;
};

ConservationReport conservation_report(const ModelParams& params, const Field& F_A,
                                       const Field& F_B, const QuadratureRule& quad);

}  // namespace landau
