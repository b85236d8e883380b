#include "landau/quadrature.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <set>
#include <cmath>
#include <numeric>

#include "landau/error.hpp"

namespace landau {

namespace {

// Orthonormal probabilists' Hermite values psi_0..psi_{n} at x.
void hermite_values(int n, double x, std::vector<double>& psi)
{
  psi.assign(n + 1, 0.0);
  psi[0] = 1.0;
  if (n >= 1) psi[1] = x;
  for (int k = 1; k < n; ++k)
    psi[k + 1] = (x * psi[k] - std::sqrt(double(k)) * psi[k - 1]) / std::sqrt(double(k + 1));
}

// Symmetric tridiagonal Golub-Welsch with zero diagonal; returns sorted nodes and
// first-component weights scaled by mu0.
Rule1D golub_welsch(const std::vector<double>& offdiag, double mu0)
{
  const int n = int(offdiag.size()) + 1;
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k + 1 < n; ++k) J(k, k + 1) = J(k + 1, k) = offdiag[k];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  Rule1D r;
  r.x.resize(n);
  r.w.resize(n);
  for (int i = 0; i < n; ++i) {
    r.x[i] = es.eigenvalues()(i);
    r.w[i] = mu0 * es.eigenvectors()(0, i) * es.eigenvectors()(0, i);
  }
  return r;
}

}  // namespace

Rule1D gauss_hermite(int n)
{
  if (n < 1) throw ConfigError("gauss_hermite: order must be >= 1");
  std::vector<double> off(n - 1);
  for (int k = 1; k < n; ++k) off[k - 1] = std::sqrt(double(k));
  Rule1D r = golub_welsch(off, 1.0);

  std::vector<double> psi;
  for (int i = 0; i < n; ++i) {
    double x = r.x[i];
    for (int it = 0; it < 8; ++it) {
      hermite_values(n, x, psi);
      const double d = std::sqrt(double(n)) * psi[n - 1];
      if (d == 0.0) break;
      const double dx = psi[n] / d;
      x -= dx;
      if (std::abs(dx) < 1e-16 * std::max(1.0, std::abs(x))) break;
    }
    hermite_values(n - 1, x, psi);
    double s = 0.0;
    for (int k = 0; k < n; ++k) s += psi[k] * psi[k];
    r.x[i] = x;
    r.w[i] = 1.0 / s;
  }
  // enforce exact reflection symmetry
  for (int i = 0; i < n / 2; ++i) {
    const int j = n - 1 - i;
    const double x = 0.5 * (r.x[j] - r.x[i]);
    const double w = 0.5 * (r.w[i] + r.w[j]);
    r.x[i] = -x;
    r.x[j] = x;
    r.w[i] = r.w[j] = w;
  }
  if (n % 2 == 1) r.x[n / 2] = 0.0;
  const double total = std::accumulate(r.w.begin(), r.w.end(), 0.0);
  for (double& w : r.w) w /= total;
  return r;
}

Rule1D gauss_legendre(int n, double a, double b)
{
  if (n < 1) throw ConfigError("gauss_legendre: order must be >= 1");
  if (!(b > a)) throw ConfigError("gauss_legendre: empty interval");
  std::vector<double> off(n - 1);
  for (int k = 1; k < n; ++k) off[k - 1] = k / std::sqrt(4.0 * k * k - 1.0);
  Rule1D r = golub_welsch(off, 2.0);
  for (int i = 0; i < n; ++i) {
    double x = r.x[i], dp = 0.0;
    for (int it = 0; it < 8; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 1; k < n; ++k) {
        const double p2 = ((2 * k + 1) * x * p1 - k * p0) / (k + 1);
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0, p1 = x;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    r.x[i] = x;
    r.w[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  for (int i = 0; i < n / 2; ++i) {
    const int j = n - 1 - i;
    const double x = 0.5 * (r.x[j] - r.x[i]);
    const double w = 0.5 * (r.w[i] + r.w[j]);
    r.x[i] = -x;
    r.x[j] = x;
    r.w[i] = r.w[j] = w;
  }
  if (n % 2 == 1) r.x[n / 2] = 0.0;
  const double h = 0.5 * (b - a), c = 0.5 * (b + a);
  for (int i = 0; i < n; ++i) {
    r.x[i] = c + h * r.x[i];
    r.w[i] *= h;
  }
  return r;
}

Rule1D composite_gauss_legendre(const std::vector<double>& breaks, int per_panel)
{
  Rule1D out;
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    const Rule1D r = gauss_legendre(per_panel, breaks[k], breaks[k + 1]);
    out.x.insert(out.x.end(), r.x.begin(), r.x.end());
    out.w.insert(out.w.end(), r.w.begin(), r.w.end());
  }
  return out;
}

double QuadratureRule::density(std::size_t i) const
{
  const double norm = std::pow(2.0 * M_PI * scale, -1.5);
  return norm * std::exp(-nodes[i].squaredNorm() / (2.0 * scale));
}

QuadratureRule tensor_gauss_hermite(double scale, int order, double prune_threshold)
{
  if (!(scale > 0.0)) throw ConfigError("tensor_gauss_hermite: scale must be positive");
  const Rule1D r = gauss_hermite(order);
  const double sq = std::sqrt(scale);
  const int n = order;
  // Nodes related by reflections/permutations form an orbit; the weight is the
  // product taken in canonical order so that it is bitwise equal on the orbit.
  auto fold = [n](int i) { return std::min(i, n - 1 - i); };
  std::vector<Vec3> nodes;
  std::vector<double> weights;
  std::vector<int> orbit;
  nodes.reserve(std::size_t(n) * n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        std::array<int, 3> key{fold(i), fold(j), fold(k)};
        std::sort(key.begin(), key.end());
        nodes.emplace_back(sq * r.x[i], sq * r.x[j], sq * r.x[k]);
        weights.push_back(r.w[key[0]] * r.w[key[1]] * r.w[key[2]]);
        orbit.push_back((key[0] * n + key[1]) * n + key[2]);
      }

  // orbit weights, pruned smallest first while the dropped total fits the budget
  std::map<int, std::pair<double, double>> orbits;  // key -> (node weight, total)
  for (std::size_t i = 0; i < weights.size(); ++i) {
    auto& o = orbits[orbit[i]];
    o.first = weights[i];
    o.second += weights[i];
  }
  std::vector<std::pair<double, int>> order_w;
  for (const auto& [key, o] : orbits) order_w.emplace_back(o.first, key);
  std::sort(order_w.begin(), order_w.end());
  std::set<int> dropped_orbits;
  double dropped = 0.0;
  for (const auto& [w, key] : order_w) {
    const double total = orbits[key].second;
    if (dropped + total > prune_threshold) break;
    dropped += total;
    dropped_orbits.insert(key);
  }
  std::vector<char> keep(weights.size(), 1);
  for (std::size_t i = 0; i < weights.size(); ++i)
    if (dropped_orbits.count(orbit[i])) keep[i] = 0;

  QuadratureRule q;
  q.scale = scale;
  q.order = order;
  q.prune_threshold = prune_threshold;
  q.discarded_weight = dropped;
  for (std::size_t i = 0; i < weights.size(); ++i)
    if (keep[i]) {
      q.nodes.push_back(nodes[i]);
      q.weights.push_back(weights[i]);
    }
  return q;
}

}  // namespace landau
