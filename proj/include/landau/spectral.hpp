#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "landau/assembly.hpp"
#include "landau/linalg.hpp"

namespace landau {

/// Number of fluid branches: 1 for AB, 5 for BB.
int fluid_count(SpeciesPair pair);

/// Fluid vectors at eta -> 0: {E_D} for AB, {E_0, ..., E_4} for BB.
std::vector<Eigen::VectorXd> fluid_start_vectors(const GalerkinOperatorSet& set,
                                                 const Vec3& omega);

/// Geometric grid of count points from eta_min to eta_max.
std::vector<double> geometric_grid(double eta_min, double eta_max, int count);

/**
 * @brief Eigenvalue path of L^eta with bilinearly normalized right eigenvectors
 *        (v^T v = 1, sign continued along the path).
 *
 * label is j = 0..4 for BB and 0 (the D branch) for AB.
 */
struct DispersionBranch
{
  SpeciesPair pair{};
  Vec3 omega = Vec3::UnitZ();
  int label = 0;
  std::vector<double> eta;
  std::vector<cd> value;
  std::vector<Eigen::VectorXcd> vector;
  double min_overlap = 1.0;  ///< smallest normalized overlap between consecutive vectors
};

/// Tracks the fluid branches over the grid; throws NumericalError on a branch collision.
std::vector<DispersionBranch> eigen_branches(const GalerkinOperatorSet& set,
                                             const ModelParams& params, const Vec3& omega,
                                             const std::vector<double>& eta_grid,
                                             double overlap_threshold = 0.9);

/**
 * @brief Small-eta fit of sigma(eta) = -i a1 eta - a2 eta^2 with eta^3 (imaginary)
 *        and eta^4 (real) nuisance terms.
 */
struct DispersionFit
{
  SpeciesPair pair{};
  int label = 0;
  double a1 = 0.0;
  double a2 = 0.0;
  double residual = 0.0;  ///< RMS misfit relative to max |sigma| in the window
  double window = 0.0;
  int points = 0;
  Eigen::VectorXcd E_D1;  ///< first-order eigenvector correction (AB only)
};

DispersionFit fit_dispersion(const DispersionBranch& branch, double window = 0.2,
                             double max_residual = 1e-3);

/**
 * @brief a2 = -<L^+ w, w> with w = (p.omega/m) E_D (AB) or the microscopic part of
 *        (p.omega/m_B) E_j (BB), L^+ the pseudo-inverse off the kernel band.
 */
double diffusion_coefficient_direct(const GalerkinOperatorSet& set, const ModelParams& params,
                                    const Vec3& omega, int label, double band = 1e-8);

/// |c_j(eta)| with c_j = e_j^T L_BA e_D and its log-log slope.
struct CancellationRecord
{
  int j = 0;
  std::vector<double> eta;
  std::vector<double> magnitude;
  double slope = 0.0;
  bool exact = false;  ///< all |c_j| below 1e-12: slope undefined
};

std::vector<CancellationRecord> cancellation_orders(const DispersionBranch& d_branch,
                                                    const std::vector<DispersionBranch>& b_branches,
                                                    const CrossOperator& cross, double window);

std::vector<CancellationRecord> cancellation_orders(const GalerkinOperatorSet& set_A,
                                                    const GalerkinOperatorSet& set_B,
                                                    const CrossOperator& cross,
                                                    const ModelParams& params, const Vec3& omega,
                                                    const std::vector<double>& eta_grid,
                                                    double window);

struct SpectralGapReport
{
  SpeciesPair pair{};
  double delta = 0.0;
  double tau = 0.0;        ///< min(tau_long, tau_short)
  double tau_long = 0.0;   ///< -max Re of nonfluid eigenvalues for eta < delta
  double tau_short = 0.0;  ///< -max Re of all eigenvalues for eta >= delta
  double gap_zero = 0.0;   ///< first nonzero eigenvalue magnitude at eta = 0
  bool exhaustive = true;  ///< fluid eigenvalues stay above -tau_long for eta < delta
  std::vector<double> eta;
  std::vector<double> max_re;          ///< max Re over the nonfluid (eta < delta) or all eigenvalues
  std::vector<double> min_fluid_re;    ///< NaN for eta >= delta
};

/// Throws CheckError if the resulting tau is not positive.
SpectralGapReport spectral_gap_scan(const GalerkinOperatorSet& set, const ModelParams& params,
                                    const Vec3& omega, double eta_max, int count, double delta);

struct ProjectorSet
{
  double eta = 0.0;
  Eigen::MatrixXcd Pi;       ///< fluid spectral projector
  Eigen::MatrixXcd Pi_perp;  ///< I - Pi
  Eigen::MatrixXd P1;        ///< identity minus the projector onto the eta = 0 kernel
  double idempotency_defect = 0.0;
  double commutation_defect = 0.0;
};

/// Throws NumericalError for a numerically defective fluid eigenvector.
ProjectorSet projectors(const GalerkinOperatorSet& set, const ModelParams& params,
                        const Vec3& omega, double eta);

}  // namespace landau
