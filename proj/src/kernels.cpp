#include "landau/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "landau/error.hpp"

namespace landau {

double maxwellian(const ModelParams& params, Species species, const Vec3& p)
{
  const double s = params.variance(species);
  return std::pow(2.0 * M_PI * s, -1.5) * std::exp(-p.squaredNorm() / (2.0 * s));
}

Mat3 phi_kernel(const ModelParams& params, SpeciesPair pair, const Vec3& z, bool* degenerate)
{
  if (degenerate) *degenerate = false;
  const double c = params.reduced_mass(pair);
  const double r2 = z.squaredNorm();
  if (r2 == 0.0) {
    if (params.gamma + 2.0 <= 0.0 && degenerate) *degenerate = true;
    return Mat3::Zero();
  }
  if (params.gamma == 0.0) return c * (r2 * Mat3::Identity() - z * z.transpose());
  const double f = c * std::pow(r2, 0.5 * params.gamma);
  return f * (r2 * Mat3::Identity() - z * z.transpose());
}

namespace {

// E_n(kappa) = int_0^2 t^n exp(-kappa t) dt for n = 0, 1, 2.
std::array<double, 3> exp_moments(double kappa)
{
  std::array<double, 3> e{};
  if (kappa < 1.0) {
    for (int n = 0; n < 3; ++n) {
      double term = 1.0, sum = 0.0;  // term = (-kappa)^k / k!
      double pow2 = std::pow(2.0, n + 1);
      for (int k = 0; k < 60; ++k) {
        const double add = term * pow2 / (n + k + 1);
        sum += add;
        if (std::abs(add) < 1e-18 * std::abs(sum)) break;
        term *= -kappa / (k + 1);
        pow2 *= 2.0;
      }
      e[n] = sum;
    }
    return e;
  }
  const double x = 2.0 * kappa, ex = std::exp(-x);
  double partial = 0.0, term = 1.0, fact = 1.0;
  for (int n = 0; n < 3; ++n) {
    partial += term;  // sum_{j<=n} x^j/j!
    if (n > 0) fact *= n;
    e[n] = fact / std::pow(kappa, n + 1) * (1.0 - ex * partial);
    term *= x / (n + 1);
  }
  return e;
}

double integrate_radial(const std::function<double(double)>& f, double a, double b,
                        double* err)
{
  using boost::math::quadrature::gauss_kronrod;
  double e = 0.0;
  const double v = gauss_kronrod<double, 61>::integrate(f, a, b, 10, 1e-11, &e);
  *err = e;
  return v;
}

}  // namespace

LambdaValues lambda_pair(const ModelParams& params, SpeciesPair pair, double r, double abs_tol)
{
  if (r < 0.0) throw ConfigError("lambda_pair: r must be nonnegative");
  const double mx = params.mass(pair.X), my = params.mass(pair.Y);
  const double s = params.variance(pair.Y);
  const double g = params.gamma;
  const double alpha = (my / mx) * r;
  const double norm = std::pow(2.0 * M_PI * s, -1.5);
  const double pref = params.reduced_mass(pair) * std::pow(my, -g - 2.0) * 2.0 * M_PI * norm;

  auto radial = [&](double rho, int which) {
    if (rho <= 0.0) return 0.0;
    const auto e = exp_moments(alpha * rho / s);
    const double ang = which == 0 ? 2.0 * e[1] - e[2] : 2.0 * e[0];
    const double d = alpha - rho;
    return std::exp(-d * d / (2.0 * s)) * std::pow(rho, g + 4.0) * ang;
  };

  const double w = 14.0 * std::sqrt(s);
  const double lo = std::max(0.0, alpha - w), hi = alpha + w;
  double vals[2], errs[2];
  for (int which = 0; which < 2; ++which) {
    auto f = [&](double rho) { return radial(rho, which); };
    double e1 = 0.0, e2 = 0.0;
    double v = 0.0;
    if (alpha > lo) {
      v = integrate_radial(f, lo, alpha, &e1) + integrate_radial(f, alpha, hi, &e2);
    } else {
      v = integrate_radial(f, lo, hi, &e1);
    }
    vals[which] = pref * v;
    errs[which] = pref * (e1 + e2);
  }
  LambdaValues out;
  out.lambda1 = vals[0];
  out.lambda2 = 0.5 * (vals[1] - vals[0]);
  out.error = std::max(errs[0], errs[1]);
  if (!(out.error <= std::max(abs_tol, 1e-10 * std::abs(vals[1])))) {
    std::ostringstream os;
    os << "lambda_pair: radial quadrature did not converge at r=" << r
       << " (error estimate " << out.error << ")";
    throw NumericalError(os.str());
  }
  return out;
}

double lambda1_asymptotic(const ModelParams& params, SpeciesPair pair)
{
  const double mx = params.mass(pair.X), my = params.mass(pair.Y), g = params.gamma;
  return 2.0 * params.reduced_mass(pair) * params.variance(pair.Y) * std::pow(my, -g - 2.0) *
         std::pow(my / mx, g);
}

double lambda2_asymptotic(const ModelParams& params, SpeciesPair pair)
{
  return params.reduced_mass(pair) * std::pow(params.mass(pair.X), -params.gamma - 2.0);
}

SigmaTable SigmaTable::build(const ModelParams& params, SpeciesPair pair,
                             const SigmaTableOptions& opts)
{
  params.validate();
  if (opts.count < 2 || !(opts.r_min > 0.0) || !(opts.r_max > opts.r_min))
    throw ConfigError("SigmaTable: invalid radial grid");
  if (opts.order < 1 || opts.order >= opts.count)
    throw ConfigError("SigmaTable: interpolation order out of range");
  SigmaTable t;
  t.pair = pair;
  t.params = params;
  t.order = opts.order;
  t.radii.push_back(0.0);
  const double q = std::log(opts.r_max / opts.r_min) / (opts.count - 1);
  for (int i = 0; i < opts.count; ++i)
    t.radii.push_back(i + 1 == opts.count ? opts.r_max : opts.r_min * std::exp(q * i));
  for (double r : t.radii) {
    const LambdaValues v = lambda_pair(params, pair, r, opts.abs_tol);
    if (!(v.lambda1 > 0.0 && v.lambda2 > 0.0))
      throw NumericalError("SigmaTable: nonpositive lambda at r=" + std::to_string(r));
    t.lambda1.push_back(v.lambda1);
    t.lambda2.push_back(v.lambda2);
  }
  return t;
}

LambdaValues SigmaTable::at(double r) const
{
  const std::size_t n = radii.size();
  LambdaValues out;
  if (r >= radii.back()) {
    const double ratio = r / radii.back();
    out.lambda1 = lambda1.back() * std::pow(ratio, params.gamma);
    out.lambda2 = lambda2.back() * std::pow(ratio, params.gamma + 2.0);
    return out;
  }
  const std::size_t j = std::size_t(std::upper_bound(radii.begin(), radii.end(), r) - radii.begin()) - 1;
  const int m = order + 1;
  long start = long(j) - (order - 1) / 2;
  start = std::clamp(start, 0L, long(n) - m);
  for (int a = 0; a < m; ++a) {
    double l = 1.0;
    const double ra = radii[start + a];
    for (int b = 0; b < m; ++b)
      if (b != a) l *= (r - radii[start + b]) / (ra - radii[start + b]);
    out.lambda1 += l * lambda1[start + a];
    out.lambda2 += l * lambda2[start + a];
  }
  return out;
}

void SigmaTable::write_csv(std::ostream& os) const
{
  char buf[128];
  std::snprintf(buf, sizeof buf, "# pair=%s,m_A=%.17g,m_B=%.17g,gamma=%.17g\n",
                to_string(pair).c_str(), params.m_A, params.m_B, params.gamma);
  os << buf << "r,lambda1,lambda2\n";
  for (std::size_t i = 0; i < radii.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", radii[i], lambda1[i], lambda2[i]);
    os << buf;
  }
}

Mat3 sigma_matrix(const SigmaTable& table, const Vec3& p)
{
  const double r = p.norm();
  const LambdaValues v = table.at(r);
  if (r == 0.0) return v.lambda1 * Mat3::Identity();
  const Vec3 u = p / r;
  const Mat3 P = u * u.transpose();
  return v.lambda1 * P + v.lambda2 * (Mat3::Identity() - P);
}

Mat3 sigma_direct(const ModelParams& params, SpeciesPair pair, const Vec3& p)
{
  const double mx = params.mass(pair.X), my = params.mass(pair.Y);
  const double s = params.variance(pair.Y), g = params.gamma;
  const Vec3 a = (my / mx) * p;
  const double alpha = a.norm();

  // local frame with the polar axis along a
  Vec3 e3 = alpha > 0.0 ? Vec3(a / alpha) : Vec3(0, 0, 1);
  Vec3 trial = std::abs(e3.x()) < 0.9 ? Vec3(1, 0, 0) : Vec3(0, 1, 0);
  Vec3 e1 = (trial - trial.dot(e3) * e3).normalized();
  Vec3 e2 = e3.cross(e1);

  const double hi = alpha + 14.0 * std::sqrt(s);
  std::vector<double> rb;
  const int panels = std::max(8, int(std::ceil(hi / (0.5 * std::sqrt(s)))));
  for (int k = 0; k <= panels; ++k) rb.push_back(hi * k / panels);
  const Rule1D rr = composite_gauss_legendre(rb, 16);
  std::vector<double> tb{0.0};
  for (int j = 12; j >= 0; --j) tb.push_back(2.0 * std::pow(4.0, -j));
  const Rule1D tr = composite_gauss_legendre(tb, 16);
  const int nphi = 8;

  Mat3 S = Mat3::Zero();
  const double norm = std::pow(2.0 * M_PI * s, -1.5);
  for (std::size_t i = 0; i < rr.x.size(); ++i) {
    const double rho = rr.x[i];
    const double d = alpha - rho;
    const double radial = rr.w[i] * norm * std::exp(-d * d / (2.0 * s)) *
                          std::pow(rho, g + 4.0);  // |w|^{g+2} rho^2 drho
    if (radial == 0.0) continue;
    for (std::size_t k = 0; k < tr.x.size(); ++k) {
      const double t = tr.x[k];
      const double mu = 1.0 - t;
      const double sn = std::sqrt(std::max(0.0, 1.0 - mu * mu));
      const double f = radial * tr.w[k] * std::exp(-alpha * rho * t / s) * (2.0 * M_PI / nphi);
      for (int l = 0; l < nphi; ++l) {
        const double ph = 2.0 * M_PI * l / nphi;
        const Vec3 u(sn * std::cos(ph), sn * std::sin(ph), mu);
        S += f * (Mat3::Identity() - u * u.transpose());
      }
    }
  }
  Mat3 R;
  R.col(0) = e1;
  R.col(1) = e2;
  R.col(2) = e3;
  return params.reduced_mass(pair) * std::pow(my, -g - 2.0) * (R * S * R.transpose());
}

double WeightSpec::operator()(const ModelParams& params, const Vec3& p) const
{
  const double b = bracket(p);
  double w = std::pow(b, theta);
  if (params.gamma < 0.0 && n != 0) w *= std::pow(b, std::abs(params.gamma) * n);
  return w;
}

namespace {

struct NodalField
{
  std::vector<double> v;
  std::vector<Vec3> g;
};

NodalField sample(const Field& f, const QuadratureRule& quad, const char* what)
{
  if (!f.value || !f.gradient) throw ConfigError(std::string(what) + ": missing callable");
  NodalField out;
  out.v.resize(quad.size());
  out.g.resize(quad.size());
  for (std::size_t i = 0; i < quad.size(); ++i) {
    out.v[i] = f.value(quad.nodes[i]);
    out.g[i] = f.gradient(quad.nodes[i]);
    if (!std::isfinite(out.v[i]) || !out.g[i].allFinite())
      throw ConfigError(std::string(what) + ": non-finite sample at a quadrature node");
  }
  return out;
}

// J(p_i) = sum_j w_j Phi(p_i/m_X - p_j/m_Y) [G(p_j) grad F(p_i) - F(p_i) grad G(p_j)]
std::vector<Vec3> collision_flux(const ModelParams& params, SpeciesPair pair,
                                 const NodalField& F, const NodalField& G,
                                 const QuadratureRule& quad)
{
  const double mx = params.mass(pair.X), my = params.mass(pair.Y);
  const std::size_t n = quad.size();
  std::vector<double> lw(n);
  for (std::size_t j = 0; j < n; ++j) lw[j] = quad.lebesgue_weight(j);
  std::vector<Vec3> J(n);
  for (std::size_t i = 0; i < n; ++i) {
    CompensatedSum acc[3];
    const Vec3 pi = quad.nodes[i] / mx;
    for (std::size_t j = 0; j < n; ++j) {
      const Vec3 z = pi - quad.nodes[j] / my;
      if (z.norm() < 1e-12) continue;
      const Vec3 v = G.v[j] * F.g[i] - F.v[i] * G.g[j];
      const Vec3 phv = phi_kernel(params, pair, z) * v;
      for (int k = 0; k < 3; ++k) acc[k].add(lw[j] * phv[k]);
    }
    J[i] = Vec3(acc[0].value(), acc[1].value(), acc[2].value());
  }
  return J;
}

double test_against(const std::vector<Vec3>& J, const std::vector<Vec3>& grad_psi,
                    const QuadratureRule& quad)
{
  CompensatedSum acc;
  for (std::size_t i = 0; i < quad.size(); ++i)
    acc.add(-quad.lebesgue_weight(i) * grad_psi[i].dot(J[i]));
  return acc.value();
}

}  // namespace

double q_weak_form(const ModelParams& params, SpeciesPair pair, const Field& F_X,
                   const Field& G_Y, const Field& psi, const QuadratureRule& quad)
{
  const NodalField F = sample(F_X, quad, "q_weak_form F_X");
  const NodalField G = sample(G_Y, quad, "q_weak_form G_Y");
  const NodalField P = sample(psi, quad, "q_weak_form psi");
  return test_against(collision_flux(params, pair, F, G, quad), P.g, quad);
}

double ConservationReport::max_residual() const
{
  double m = std::max({std::abs(mass_A), std::abs(mass_B), std::abs(momentum), std::abs(energy)});
  for (double v : self_A) m = std::max(m, std::abs(v));
  for (double v : self_B) m = std::max(m, std::abs(v));
  return m;
}

ConservationReport conservation_report(const ModelParams& params, const Field& F_A,
                                       const Field& F_B, const QuadratureRule& quad)
{
  const NodalField A = sample(F_A, quad, "conservation_report F_A");
  const NodalField B = sample(F_B, quad, "conservation_report F_B");
  const auto J_AA = collision_flux(params, SpeciesPair::AA(), A, A, quad);
  const auto J_AB = collision_flux(params, SpeciesPair::AB(), A, B, quad);
  const auto J_BB = collision_flux(params, SpeciesPair::BB(), B, B, quad);
  const auto J_BA = collision_flux(params, SpeciesPair::BA(), B, A, quad);

  const std::size_t n = quad.size();
  std::vector<Vec3> zero(n, Vec3::Zero()), sq(n);
  std::array<std::vector<Vec3>, 3> lin;
  for (int k = 0; k < 3; ++k) lin[k].assign(n, Vec3::Unit(k));
  for (std::size_t i = 0; i < n; ++i) sq[i] = 2.0 * quad.nodes[i];

  ConservationReport r;
  r.mass_A = test_against(J_AA, zero, quad) + test_against(J_AB, zero, quad);
  r.mass_B = test_against(J_BB, zero, quad) + test_against(J_BA, zero, quad);
  for (int k = 0; k < 3; ++k) {
    const double m = test_against(J_AB, lin[k], quad) + test_against(J_BA, lin[k], quad);
    r.momentum = std::max(r.momentum, std::abs(m));
  }
  // psi = |p|^2 / (2 m_X): gradient p / m_X
  r.energy = 0.5 * (test_against(J_AB, sq, quad) / params.m_A +
                    test_against(J_BA, sq, quad) / params.m_B);
  r.self_A[0] = test_against(J_AA, zero, quad);
  r.self_B[0] = test_against(J_BB, zero, quad);
  for (int k = 0; k < 3; ++k) {
    r.self_A[1 + k] = test_against(J_AA, lin[k], quad);
    r.self_B[1 + k] = test_against(J_BB, lin[k], quad);
  }
  r.self_A[4] = test_against(J_AA, sq, quad);
  r.self_B[4] = test_against(J_BB, sq, quad);
  return r;
}

}  // namespace landau
