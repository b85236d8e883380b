#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "landau/assembly.hpp"
#include "landau/linalg.hpp"

namespace landau {

/**
 * @brief (e^{lambda t} - e^{mu t}) / (lambda - mu), the Duhamel integral of
 *        e^{mu (t - s) + lambda s} over [0, t].
 *
 * Evaluated as t e^{nu t} phi_1(x) with nu the argument of larger real part; a
 * 6-term Taylor series replaces phi_1 when |lambda - mu| < resonance.
 */
cd divided_exp(cd mu, cd lambda, double t, double resonance = 1e-6);

/// Operators of one Fourier mode of the coupled system at a fixed eta.
struct CoupledSystem
{
  const GalerkinOperatorSet* ab = nullptr;
  const GalerkinOperatorSet* bb = nullptr;
  const CrossOperator* cross = nullptr;
  ModelParams params;
  Vec3 omega = Vec3::UnitZ();
};

struct ModeTrajectory
{
  double eta = 0.0;
  std::vector<double> times;
  std::vector<Eigen::VectorXcd> g;  ///< species A coefficients
  std::vector<Eigen::VectorXcd> h;  ///< species B coefficients
  std::vector<double> g_norm;
  std::vector<double> h_norm;
};

/**
 * @brief Direct evolution of (g, h) by the exponential of [[A_AB, 0], [L_BA, A_BB]].
 *
 * Works on the symmetry sectors touched by the data; one exponential per distinct
 * step (uniform steps reuse it). times must start at 0 and increase.
 */
ModeTrajectory evolve_pair_mode(const CoupledSystem& sys, double eta, const Eigen::VectorXcd& g0,
                                const Eigen::VectorXcd& h0, const std::vector<double>& times);

/// Wave components of the g and h modes.
enum class Component
{
  g,
  g_fluid,
  g_nonfluid,
  g_short,
  h,
  h00,
  h0perp,
  hperp0,
  hperpperp,
  h_short
};

inline constexpr int component_count = 10;

std::string to_string(Component c);

/// Throws ConfigError for unknown names.
Component parse_component(const std::string& name);

/**
 * @brief Eigen-expansion of the coupled mode with h(0) = 0.
 *
 * h(t) = sum_k U_k sum_l D(mu_k, lambda_l, t) X_kl y_l with X = U^{-1} L_BA V and
 * y = V^{-1} g(0). The fluid sets are the top 1 (AB) and top 5 (BB) eigenvalues
 * when eta < delta and empty otherwise.
 */
class ModalExpansion
{
 public:
  ModalExpansion(const CoupledSystem& sys, double eta, const Eigen::VectorXcd& g0, double delta,
                 double resonance = 1e-6);

  double eta() const { return eta_; }
  bool long_wave() const { return long_wave_; }

  /// Coefficient vectors of all components at time t (zero when not applicable).
  std::array<Eigen::VectorXcd, component_count> at(double t) const;

  /// Active basis indices (the sectors reached by the data).
  const std::vector<int>& active() const { return active_; }

  /// Eigenvalues of the fluid branches (AB first, then BB).
  std::vector<cd> fluid_values() const;

 private:
  double eta_;
  bool long_wave_;
  double resonance_;
  std::vector<int> active_;
  std::vector<int> l_idx_, k_idx_;
  std::vector<char> l_fluid_, k_fluid_;
  Eigen::VectorXcd lam_, mu_, y_;
  Eigen::MatrixXcd V_, U_, X_;
};

struct HSplit
{
  double eta = 0.0;
  std::vector<double> times;
  std::vector<Eigen::VectorXcd> h00, h0perp, hperp0, hperpperp;
  std::vector<Eigen::VectorXcd> direct;
  double max_relative_defect = 0.0;
  double worst_time = 0.0;
};

/// Four-part split of h for g(0) = g0, h(0) = 0; throws NumericalError on a defect > tol.
HSplit h_component_split(const CoupledSystem& sys, double eta, const Eigen::VectorXcd& g0,
                         const std::vector<double>& times, double delta, double tol = 1e-8);

/**
 * @brief Jump of h00 across the resonance switch, relative to |h00|.
 *
 * For the r-th closest BB fluid value, eta_switch is where its distance to the AB
 * value crosses the threshold; there h00 is evaluated with the series and with the
 * closed form for that pair.
 */
struct ResonanceProbe
{
  int branch = 0;
  double eta_switch = 0.0;
  double jump = 0.0;
};

std::vector<ResonanceProbe> resonance_continuity(const CoupledSystem& sys,
                                                 const std::vector<double>& times, double delta,
                                                 double resonance = 1e-6);

/// Composite Gauss-Legendre grid in |eta| with its weights.
struct RadialGrid
{
  std::vector<double> eta;
  std::vector<double> weight;
};

/**
 * @brief Panels of width 1e-3 up to 0.06, geometric panels (ratio 1.15) up to delta,
 *        then two 16-point panels on [delta, eta_max].
 */
RadialGrid radial_grid(double delta, double eta_max = 5.0);

/// Smooth bump with phi(0) = 1 and support |eta| < 4.
double bump_profile(double eta);

/// log-spaced grid preceded by t = 0.
std::vector<double> log_time_grid(double t_min, double t_max, int count);

/// Per-mode norms |D_p^l u(t, eta)| of every component, l = 0, 1.
struct RadialStudy
{
  RadialGrid grid;
  std::vector<double> times;
  double delta = 0.0;
  /// norms[c][l][i][t]
  std::array<std::array<std::vector<std::vector<double>>, 2>, component_count> norms;
  double max_direct_defect = 0.0;  ///< modal vs direct h at the check time
};

/**
 * @brief Modal evolution of g(0) = phi(|eta|) g_p, h(0) = 0 on the radial grid.
 *
 * g_p must be isotropic (ConfigError otherwise). Every eta is cross-checked against
 * the direct exponential at check_time; a defect above 1e-8 throws NumericalError.
 */
RadialStudy radial_study(const CoupledSystem& sys, const RadialGrid& grid,
                         const std::vector<double>& times, double delta,
                         const Eigen::VectorXcd& g_p, const std::function<double(double)>& phi,
                         int threads = 1, double check_time = 10.0);

/// True when the coefficients are invariant under axis permutations and reflections.
bool is_isotropic(const Basis& basis, const Eigen::VectorXcd& c, double tol = 1e-14);

struct NormSeries
{
  Component component = Component::g;
  int k = 0;
  int l = 0;
  std::vector<double> times;
  std::vector<double> l2;    ///< sqrt((2pi)^3 int 4 pi eta^2 eta^{2k} |D^l u|^2)
  std::vector<double> linf;  ///< int 4 pi eta^2 eta^k |D^l u|
};

NormSeries synthesize_norms(const RadialStudy& study, Component c, int k, int l);

struct DecayFit
{
  std::string label;
  double t1 = 0.0;
  double t2 = 0.0;
  bool log_linear = false;  ///< slope is d log u / dt instead of d log u / d log(1+t)
  double slope = 0.0;
  double half_width = 0.0;  ///< two standard errors
  double residual = 0.0;    ///< RMS of the log residuals (over the log range if log-linear)
  int points = 0;
  bool monotone = true;
  bool valid = false;
};

/**
 * @brief Least-squares slope of log u against log(1+t) (or t) over [t1, t2].
 *
 * Samples below 1e-280 are dropped. Log-log fits need t1 >= 10 and 12 samples,
 * log-linear fits 4 samples; otherwise ConfigError.
 */
DecayFit fit_decay(const std::vector<double>& times, const std::vector<double>& values,
                   double t1, double t2, bool log_linear = false, double max_residual = 0.05);

struct PicardDecomposition
{
  double eta = 0.0;
  int k = 0;
  std::vector<double> times;
  std::vector<std::vector<Eigen::VectorXcd>> f;  ///< f[j][t], j = 0..2k
  std::vector<Eigen::VectorXcd> remainder;
  std::vector<Eigen::VectorXcd> full;
  std::vector<double> residual_t;  ///< |sum f^(j) + R - f| / |f0| per time
  double residual = 0.0;
  double kappa = 0.0;          ///< |K|_2, at most varpi
  double duhamel_ratio = 0.0;  ///< max |f^(j)(t)| j! / ((kappa t)^j |f0|)
};

/**
 * @brief Picard split of the AB mode f = f^(0) + ... + f^(2k) + R^(k).
 *
 * Uses L = -i (eta/m_A) T - Lambda and K = varpi chi_R; all parts come from one
 * block-bidiagonal exponential per step. times must be uniform from 0. Throws
 * NumericalError when the telescoping residual exceeds tol.
 */
PicardDecomposition picard_decompose(const GalerkinOperatorSet& ab, const ModelParams& params,
                                     const LambdaKSplit& split, double eta,
                                     const Eigen::VectorXcd& f0, int k,
                                     const std::vector<double>& times, double tol = 1e-8);

struct SmoothingRecord
{
  std::vector<double> eta;
  std::vector<double> times;
  std::vector<std::vector<double>> p_norm;  ///< [t][eta] |D_p e^{tM}|_{m1 -> L2}
  std::vector<double> p_sup;                ///< sup over eta
  DecayFit p_fit;                           ///< log-log slope over the t grid
  double x_surface = 0.0;                   ///< sup t^{3/2} eta |e^{tM}|_{m1 -> L2}
};

/// Operator norms from the m_1-weighted ball; times within (0, 1].
SmoothingRecord smoothing_probe(const GalerkinOperatorSet& ab, const ModelParams& params,
                                const std::vector<double>& eta, const std::vector<double>& times,
                                int threads = 1);

/// Runs fn(i) for i in [0, count) on up to `threads` workers; rethrows the first error.
void parallel_for(int count, int threads, const std::function<void(int)>& fn);

}  // namespace landau
