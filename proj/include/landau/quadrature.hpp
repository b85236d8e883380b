#pragma once

#include <cstddef>
#include <vector>

#include "landau/params.hpp"

namespace landau {

/// Neumaier compensated accumulator. Summation order is the call order.
class CompensatedSum
{
 public:
  void add(double v)
  {
    const double t = s_ + v;
    if (std::abs(s_) >= std::abs(v))
      c_ += (s_ - t) + v;
    else
      c_ += (v - t) + s_;
    s_ = t;
  }
  double value() const { return s_ + c_; }

 private:
  double s_ = 0.0;
  double c_ = 0.0;
};

/// One-dimensional rule: nodes x and weights w.
struct Rule1D
{
  std::vector<double> x;
  std::vector<double> w;
};

/**
 * @brief Gauss-Hermite rule for the standard normal density exp(-x^2/2)/sqrt(2 pi).
 *        Golub-Welsch followed by Newton polishing; weights sum to one.
 */
Rule1D gauss_hermite(int n);

/// Gauss-Legendre rule on [a, b].
Rule1D gauss_legendre(int n, double a, double b);

/// Composite Gauss-Legendre rule over consecutive panels [breaks[i], breaks[i+1]].
Rule1D composite_gauss_legendre(const std::vector<double>& breaks, int per_panel);

/**
 * @brief Tensor Gauss-Hermite rule for the Gaussian measure N(0, s I) on R^3.
 *
 * Weights are probability weights: sum_i w_i f(x_i) approximates the integral
 * of f against the density (2 pi s)^{-3/2} exp(-|p|^2/(2s)).
 */
struct QuadratureRule
{
  double scale = 1.0;
  int order = 0;
  double prune_threshold = 0.0;
  double discarded_weight = 0.0;
  std::vector<Vec3> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }

  /// Value of the Gaussian density at node i.
  double density(std::size_t i) const;

  /// Weight for integrating against Lebesgue measure: w_i / density(x_i).
  double lebesgue_weight(std::size_t i) const { return weights[i] / density(i); }
};

/**
 * @brief Build the tensor rule of the given order per dimension.
 * @param prune_threshold the smallest weights are dropped while their total stays
 *        at or below this budget
 */
QuadratureRule tensor_gauss_hermite(double scale, int order, double prune_threshold);

}  // namespace landau
