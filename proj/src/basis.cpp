#include "landau/basis.hpp"

#include <cmath>
#include <map>

#include "landau/error.hpp"

namespace landau {

namespace {

void hermite_row(int n, double x, double* psi)
{
  psi[0] = 1.0;
  if (n >= 1) psi[1] = x;
  for (int k = 1; k < n; ++k)
    psi[k + 1] = (x * psi[k] - std::sqrt(double(k)) * psi[k - 1]) / std::sqrt(double(k + 1));
}

// Weight turning quad.weights into integration against phi_a phi_b = P_a P_b M.
std::vector<double> basis_weights(const Basis& basis, const QuadratureRule& quad)
{
  std::vector<double> w(quad.size());
  for (std::size_t i = 0; i < quad.size(); ++i) {
    if (quad.scale == basis.scale) {
      w[i] = quad.weights[i];
    } else {
      const double s = basis.sqrt_density(quad.nodes[i]);
      w[i] = quad.lebesgue_weight(i) * s * s;
    }
  }
  return w;
}

}  // namespace

int Basis::find(const MultiIndex& a) const
{
  for (int k : a)
    if (k < 0 || k > degree) return -1;
  if (a[0] + a[1] + a[2] > degree) return -1;
  const int n = degree + 1;
  return lookup_[(a[0] * n + a[1]) * n + a[2]];
}

Eigen::VectorXd Basis::poly(const Vec3& p) const
{
  const double is = 1.0 / std::sqrt(scale);
  std::vector<double> h(3 * (degree + 1));
  for (int i = 0; i < 3; ++i) hermite_row(degree, p[i] * is, &h[i * (degree + 1)]);
  Eigen::VectorXd out(size());
  for (std::size_t k = 0; k < size(); ++k) {
    const auto& a = index[k];
    out[k] = h[a[0]] * h[(degree + 1) + a[1]] * h[2 * (degree + 1) + a[2]];
  }
  return out;
}

Eigen::Matrix3Xd Basis::poly_grad(const Vec3& p) const
{
  const double is = 1.0 / std::sqrt(scale);
  const int m = degree + 1;
  std::vector<double> h(3 * m);
  for (int i = 0; i < 3; ++i) hermite_row(degree, p[i] * is, &h[i * m]);
  Eigen::Matrix3Xd out(3, size());
  for (std::size_t k = 0; k < size(); ++k) {
    const auto& a = index[k];
    const double v[3] = {h[a[0]], h[m + a[1]], h[2 * m + a[2]]};
    for (int i = 0; i < 3; ++i) {
      const double d = a[i] > 0 ? is * std::sqrt(double(a[i])) * h[i * m + a[i] - 1] : 0.0;
      double g = d;
      for (int j = 0; j < 3; ++j)
        if (j != i) g *= v[j];
      out(i, k) = g;
    }
  }
  return out;
}

double Basis::sqrt_density(const Vec3& p) const
{
  return std::pow(2.0 * M_PI * scale, -0.75) * std::exp(-p.squaredNorm() / (4.0 * scale));
}

Eigen::VectorXd Basis::values(const Vec3& p) const { return poly(p) * sqrt_density(p); }

Eigen::Matrix3Xd Basis::gradients(const Vec3& p) const
{
  const Eigen::VectorXd P = poly(p);
  Eigen::Matrix3Xd G = poly_grad(p);
  G -= (p / (2.0 * scale)) * P.transpose();
  return G * sqrt_density(p);
}

double Basis::evaluate(const Eigen::VectorXd& c, const Vec3& p) const { return c.dot(values(p)); }

Basis build_basis_unchecked(const ModelParams& params, Species species, int degree)
{
  if (degree < 0) throw ConfigError("build_basis: negative degree");
  Basis b;
  b.species = species;
  b.degree = degree;
  b.scale = params.variance(species);
  const int n = degree + 1;
  b.lookup_.assign(std::size_t(n) * n * n, -1);
  for (int d = 0; d <= degree; ++d)
    for (int a1 = d; a1 >= 0; --a1)
      for (int a2 = d - a1; a2 >= 0; --a2) {
        const int a3 = d - a1 - a2;
        b.lookup_[(a1 * n + a2) * n + a3] = int(b.index.size());
        b.index.push_back({a1, a2, a3});
      }
  return b;
}

Basis build_basis(const ModelParams& params, Species species, int degree)
{
  params.validate();
  if (degree < 2)
    throw ConfigError("build_basis: degree N must be >= 2 so that the collision invariants "
                      "are representable, got " + std::to_string(degree));
  return build_basis_unchecked(params, species, degree);
}

int quadrature_order(int degree, double oversampling)
{
  if (!(oversampling >= 1.0)) throw ConfigError("quadrature: oversampling must be >= 1");
  return int(std::ceil(oversampling * (degree + 2) - 1e-12));
}

QuadratureRule quadrature(const Basis& basis, double oversampling, double prune_threshold)
{
  return tensor_gauss_hermite(basis.scale, quadrature_order(basis.degree, oversampling),
                              prune_threshold);
}

QuadratureRule quadrature(const Basis& a, const Basis& b, double oversampling,
                          double prune_threshold)
{
  const int deg = std::max(a.degree, b.degree);
  return tensor_gauss_hermite(std::max(a.scale, b.scale), quadrature_order(deg, oversampling),
                              prune_threshold);
}

Eigen::MatrixXd gram(const Basis& basis, const QuadratureRule& quad)
{
  const std::vector<double> w = basis_weights(basis, quad);
  Eigen::MatrixXd V(quad.size(), basis.size());
  for (std::size_t i = 0; i < quad.size(); ++i)
    V.row(long(i)) = std::sqrt(w[i]) * basis.poly(quad.nodes[i]).transpose();
  return V.transpose() * V;
}

Eigen::VectorXd project(const std::function<double(const Vec3&)>& fn, const Basis& basis,
                        const QuadratureRule& quad)
{
  Eigen::VectorXd c = Eigen::VectorXd::Zero(long(basis.size()));
  for (std::size_t i = 0; i < quad.size(); ++i)
    c += quad.lebesgue_weight(i) * fn(quad.nodes[i]) * basis.values(quad.nodes[i]);
  return c;
}

double projection_residual(const std::function<double(const Vec3&)>& fn,
                           const Eigen::VectorXd& c, const Basis& basis,
                           const QuadratureRule& quad)
{
  CompensatedSum acc;
  for (std::size_t i = 0; i < quad.size(); ++i) {
    const double d = fn(quad.nodes[i]) - basis.evaluate(c, quad.nodes[i]);
    acc.add(quad.lebesgue_weight(i) * d * d);
  }
  return std::sqrt(std::max(0.0, acc.value()));
}

Eigen::MatrixXd DerivativeMatrices::stacked() const
{
  const long r = D[0].rows(), c = D[0].cols();
  Eigen::MatrixXd S(3 * r, c);
  for (int i = 0; i < 3; ++i) S.middleRows(i * r, r) = D[i];
  return S;
}

DerivativeMatrices derivative_matrices(const ModelParams& params, const Basis& basis)
{
  DerivativeMatrices out;
  out.super = build_basis_unchecked(params, basis.species, basis.degree + 1);
  const double f = 1.0 / (2.0 * std::sqrt(basis.scale));
  for (int i = 0; i < 3; ++i) {
    Eigen::MatrixXd& D = out.D[i];
    D = Eigen::MatrixXd::Zero(long(out.super.size()), long(basis.size()));
    for (std::size_t k = 0; k < basis.size(); ++k) {
      MultiIndex a = basis.index[k];
      if (a[i] > 0) {
        MultiIndex m = a;
        --m[i];
        D(out.super.find(m), long(k)) = f * std::sqrt(double(a[i]));
      }
      MultiIndex u = a;
      ++u[i];
      D(out.super.find(u), long(k)) = -f * std::sqrt(double(a[i] + 1));
    }
    const long n = long(basis.size());
    const Eigen::MatrixXd dropped = D.bottomRows(D.rows() - n);
    for (long k = 0; k < n; ++k)
      out.restriction_loss = std::max(out.restriction_loss, dropped.col(k).norm());
  }
  return out;
}

Eigen::MatrixXd transport_matrix(const Basis& basis, const Vec3& omega)
{
  const long n = long(basis.size());
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(n, n);
  const double sq = std::sqrt(basis.scale);
  for (long k = 0; k < n; ++k) {
    for (int i = 0; i < 3; ++i) {
      if (omega[i] == 0.0) continue;
      MultiIndex u = basis.index[k];
      ++u[i];
      const int j = basis.find(u);
      if (j < 0) continue;
      const double v = omega[i] * sq * std::sqrt(double(basis.index[k][i] + 1));
      T(j, k) += v;
      T(k, j) += v;
    }
  }
  return T;
}

Frame make_frame(const Vec3& omega)
{
  if (!(std::abs(omega.norm() - 1.0) <= 1e-12))
    throw ConfigError("omega must be a unit vector");
  Frame f;
  f.omega = omega;
  int k = 0;
  for (int i = 1; i < 3; ++i)
    if (std::abs(omega[i]) < std::abs(omega[k])) k = i;
  const Vec3 a = Vec3::Unit(k);
  f.perp1 = (a - a.dot(omega) * omega).normalized();
  f.perp2 = omega.cross(f.perp1);
  return f;
}

std::array<Eigen::VectorXd, 5> chi_vectors(const Basis& B)
{
  if (B.species != Species::B || B.degree < 2)
    throw ConfigError("chi_vectors: expected a species B basis of degree >= 2");
  const long n = long(B.size());
  auto unit = [&](const MultiIndex& a) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
    v[B.find(a)] = 1.0;
    return v;
  };
  std::array<Eigen::VectorXd, 5> chi;
  chi[0] = unit({0, 0, 0});
  chi[1] = unit({1, 0, 0});
  chi[2] = unit({0, 1, 0});
  chi[3] = unit({0, 0, 1});
  chi[4] = (unit({2, 0, 0}) + unit({0, 2, 0}) + unit({0, 0, 2})) / std::sqrt(3.0);
  return chi;
}

std::array<Eigen::VectorXd, 5> e_vectors(const Basis& B, const Vec3& omega)
{
  const Frame f = make_frame(omega);
  const auto chi = chi_vectors(B);
  auto dot_psi = [&](const Vec3& v) {
    return Eigen::VectorXd(v[0] * chi[1] + v[1] * chi[2] + v[2] * chi[3]);
  };
  const Eigen::VectorXd wpsi = dot_psi(f.omega);
  std::array<Eigen::VectorXd, 5> E;
  E[0] = std::sqrt(0.3) * chi[0] + std::sqrt(0.5) * wpsi + std::sqrt(0.2) * chi[4];
  E[1] = std::sqrt(0.3) * chi[0] - std::sqrt(0.5) * wpsi + std::sqrt(0.2) * chi[4];
  E[2] = -std::sqrt(0.4) * chi[0] + std::sqrt(0.6) * chi[4];
  E[3] = dot_psi(f.perp1);
  E[4] = dot_psi(f.perp2);
  return E;
}

SpecialVectors special_vectors(const Basis& B, const Basis& A, const Vec3& omega)
{
  if (B.species != Species::B || A.species != Species::A)
    throw ConfigError("special_vectors: expected (species B basis, species A basis)");
  SpecialVectors sv;
  sv.frame = make_frame(omega);
  sv.chi = chi_vectors(B);
  for (int i = 0; i < 3; ++i) sv.Psi[i] = sv.chi[1 + i];
  sv.E = e_vectors(B, omega);
  sv.E_D = Eigen::VectorXd::Zero(long(A.size()));
  sv.E_D[A.find({0, 0, 0})] = 1.0;
  return sv;
}

Eigen::MatrixXd sigma_norm_matrix(const ModelParams& params, const Basis& basis,
                                  const QuadratureRule& quad, const WeightSpec& weight)
{
  const std::vector<double> w = basis_weights(basis, quad);
  const long n = long(basis.size());
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(n, n);
  const double g = params.gamma;
  for (std::size_t i = 0; i < quad.size(); ++i) {
    const Vec3& p = quad.nodes[i];
    const double b = bracket(p);
    const double W = weight(params, p);
    const double f = w[i] * W * W;
    const Eigen::VectorXd P = basis.poly(p);
    Eigen::Matrix3Xd G = basis.poly_grad(p);
    G -= (p / (2.0 * basis.scale)) * P.transpose();
    Mat3 proj = Mat3::Zero();
    const double r = p.norm();
    if (r > 0.0) proj = (p / r) * (p / r).transpose();
    const Mat3 Q = std::pow(b, g) * proj + std::pow(b, g + 2.0) * (Mat3::Identity() - proj);
    S.noalias() += (f * std::pow(b, g + 2.0)) * P * P.transpose();
    S.noalias() += f * G.transpose() * Q * G;
  }
  return 0.5 * (S + S.transpose());
}

double sigma_norm(const Eigen::VectorXd& c, const ModelParams& params, const Basis& basis,
                  const QuadratureRule& quad, const WeightSpec& weight)
{
  const Eigen::MatrixXd S = sigma_norm_matrix(params, basis, quad, weight);
  return std::sqrt(std::max(0.0, c.dot(S * c)));
}

std::vector<std::vector<int>> symmetry_sectors(const Basis& basis, const Vec3& omega)
{
  std::map<int, std::vector<int>> groups;
  for (std::size_t k = 0; k < basis.size(); ++k) {
    int key = 0;
    for (int i = 0; i < 3; ++i)
      if (omega[i] == 0.0) key |= (basis.index[k][i] & 1) << i;
    groups[key].push_back(int(k));
  }
  std::vector<std::vector<int>> out;
  for (auto& [key, v] : groups) out.push_back(std::move(v));
  return out;
}

nlohmann::ordered_json metadata(const Basis& basis, const QuadratureRule& quad)
{
  nlohmann::ordered_json j;
  j["species"] = to_string(basis.species);
  j["degree"] = basis.degree;
  j["size"] = basis.size();
  j["scale"] = basis.scale;
  j["quadrature"] = {{"scale", quad.scale},
                     {"order", quad.order},
                     {"nodes", quad.size()},
                     {"prune_threshold", quad.prune_threshold},
                     {"discarded_weight", quad.discarded_weight}};
  return j;
}

}  // namespace landau
