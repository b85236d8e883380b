#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "landau/basis.hpp"
#include "landau/error.hpp"
#include "landau/kernels.hpp"

using namespace landau;

namespace {

ModelParams params(double gamma = 0.0, double m_A = 1.5, double m_B = 1.0)
{
  ModelParams p;
  p.m_A = m_A;
  p.m_B = m_B;
  p.gamma = gamma;
  return p;
}

// sigma at gamma = 0 in closed form: c[(|a|^2 + 2v) I - a a^T] with a = p/m_X and
// v = s_Y/m_Y^2 the per-component variance of p_*/m_Y.
void gamma0_lambdas(const ModelParams& P, SpeciesPair pair, double r, double& l1, double& l2)
{
  const double c = P.reduced_mass(pair);
  const double v = P.variance(pair.Y) / (P.mass(pair.Y) * P.mass(pair.Y));
  const double a = r / P.mass(pair.X);
  l1 = 2.0 * c * v;
  l2 = c * (a * a + 2.0 * v);
}

const SpeciesPair kPairs[] = {SpeciesPair::AA(), SpeciesPair::AB(), SpeciesPair::BB(),
                              SpeciesPair::BA()};

}  // namespace

TEST_CASE("maxwellian values and normalization")
{
  const ModelParams P = params();
  CHECK(maxwellian(P, Species::B, Vec3::Zero()) == doctest::Approx(0.063493635934240969).epsilon(1e-15));
  CHECK(maxwellian(P, Species::A, Vec3::Zero()) ==
        doctest::Approx(std::pow(2.0 * M_PI * 1.5, -1.5)).epsilon(1e-15));
  const ModelParams Q = params(0.0, 1.0, 1.0);
  const Vec3 p(0.3, -1.2, 0.7);
  CHECK(maxwellian(Q, Species::A, p) == maxwellian(Q, Species::B, p));

  // trapezoid rule on a cube (spectrally accurate for Gaussians)
  for (Species s : {Species::A, Species::B}) {
    const double h = 0.25, L = 12.0;
    const int n = int(2 * L / h);
    double sum = 0.0;
    for (int i = 0; i <= n; ++i)
      for (int j = 0; j <= n; ++j)
        for (int k = 0; k <= n; ++k)
          sum += maxwellian(P, s, Vec3(-L + i * h, -L + j * h, -L + k * h));
    CHECK(sum * h * h * h == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("phi kernel projects out z")
{
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  for (double g : {-2.0, -1.0, 0.0, 1.0}) {
    const ModelParams P = params(g);
    for (int i = 0; i < 20; ++i) {
      const Vec3 z(nd(rng), nd(rng), nd(rng));
      for (const SpeciesPair& pair : kPairs) {
        const Mat3 K = phi_kernel(P, pair, z);
        CHECK((K * z).norm() <= 1e-14 * K.norm() * z.norm());
        CHECK((K - K.transpose()).norm() == 0.0);
        CHECK(K.trace() == doctest::Approx(2.0 * P.reduced_mass(pair) * std::pow(z.norm(), g + 2.0))
                               .epsilon(1e-13));
      }
    }
  }
  const ModelParams Q = params(0.0, 1.0, 1.0);
  const Mat3 K = phi_kernel(Q, SpeciesPair::AB(), Vec3(1, 0, 0));
  Mat3 expect = Mat3::Zero();
  expect(1, 1) = expect(2, 2) = 0.5;
  CHECK((K - expect).norm() == 0.0);

  bool degenerate = false;
  CHECK(phi_kernel(params(-2.0), SpeciesPair::BB(), Vec3::Zero(), &degenerate).norm() == 0.0);
  CHECK(degenerate);
  phi_kernel(params(-1.0), SpeciesPair::BB(), Vec3::Zero(), &degenerate);
  CHECK_FALSE(degenerate);
}

TEST_CASE("lambda_pair against closed forms")
{
  const ModelParams P = params();
  for (const SpeciesPair& pair : kPairs)
    for (double r : {0.0, 0.01, 0.5, 1.0, 3.0, 10.0, 25.0}) {
      double l1 = 0, l2 = 0;
      gamma0_lambdas(P, pair, r, l1, l2);
      const LambdaValues v = lambda_pair(P, pair, r);
      CHECK(v.lambda1 == doctest::Approx(l1).epsilon(1e-10));
      CHECK(v.lambda2 == doctest::Approx(l2).epsilon(1e-10));
    }
  const ModelParams Q = params(0.0, 1.0, 1.0);
  CHECK(lambda_pair(Q, SpeciesPair::BB(), 0.0).lambda1 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(lambda_pair(Q, SpeciesPair::BB(), 0.0).lambda2 == doctest::Approx(1.0).epsilon(1e-12));
  const ModelParams R = params(-2.0, 1.0, 1.0);
  CHECK(lambda_pair(R, SpeciesPair::BB(), 0.0).lambda1 == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
  CHECK(lambda_pair(R, SpeciesPair::BB(), 0.0).lambda2 == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("lambda asymptotics")
{
  for (double g : {-2.0, -1.0, 0.5, 1.0}) {
    const ModelParams P = params(g);
    for (const SpeciesPair& pair : {SpeciesPair::AB(), SpeciesPair::BB()}) {
      const double mx = P.mass(pair.X), my = P.mass(pair.Y);
      const double stated = 2.0 * P.reduced_mass(pair) * std::pow(my, -g - 2.0) * std::pow(my / mx, g);
      CHECK(lambda1_asymptotic(P, pair) == doctest::Approx(stated).epsilon(1e-14));
      const double r = 25.0;
      const LambdaValues v = lambda_pair(P, pair, r);
      CHECK(v.lambda1 * std::pow(r, -g) == doctest::Approx(stated).epsilon(0.01));
      CHECK(v.lambda2 * std::pow(r, -g - 2.0) ==
            doctest::Approx(lambda2_asymptotic(P, pair)).epsilon(0.02));
    }
  }
}

TEST_CASE("trace identity against the direct 3D quadrature")
{
  for (double g : {-2.0, -1.0, 1.0}) {
    const ModelParams P = params(g);
    for (const SpeciesPair& pair : kPairs)
      for (double r : {0.05, 0.7, 2.0, 6.0, 20.0}) {
        const LambdaValues v = lambda_pair(P, pair, r);
        const Mat3 S = sigma_direct(P, pair, Vec3(0.0, r, 0.0));
        CHECK(v.lambda1 + 2.0 * v.lambda2 == doctest::Approx(S.trace()).epsilon(1e-6));
        CHECK(S(1, 1) == doctest::Approx(v.lambda1).epsilon(1e-6));
      }
  }
}

TEST_CASE("divergence identity by finite differences")
{
  const double h = 1e-4;
  for (double g : {-1.0, 0.5}) {
    const ModelParams P = params(g);
    for (const SpeciesPair& pair : kPairs) {
      auto sigma_at = [&](const Vec3& p) {
        const LambdaValues v = lambda_pair(P, pair, p.norm());
        const Vec3 e = p.normalized();
        const Mat3 Pp = e * e.transpose();
        return Mat3(v.lambda1 * Pp + v.lambda2 * (Mat3::Identity() - Pp));
      };
      const Vec3 p(0.4, -1.1, 0.8);
      Vec3 div = Vec3::Zero();
      for (int i = 0; i < 3; ++i) {
        const Vec3 d = h * Vec3::Unit(i);
        div += ((sigma_at(p + d) - sigma_at(p - d)) / (2.0 * h)).row(i).transpose();
      }
      // integration by parts against M_Y with variance m_Y/m_B
      const double mx = P.mass(pair.X), my = P.mass(pair.Y);
      const Vec3 expect = -(my * P.m_B / (mx * mx)) * lambda_pair(P, pair, p.norm()).lambda1 * p;
      CHECK((div - expect).norm() <= 1e-4 * expect.norm());
    }
  }
}

TEST_CASE("sigma table")
{
  const ModelParams P = params(-1.0);
  const SigmaTable t = SigmaTable::build(P, SpeciesPair::AB());
  for (std::size_t i = 0; i < t.radii.size(); ++i) {
    CHECK(t.lambda1[i] > 0.0);
    CHECK(t.lambda2[i] > 0.0);
  }
  for (double r : {0.0, 0.0123, 0.77, 3.3, 17.1, 29.0}) {
    const LambdaValues a = t.at(r), b = lambda_pair(P, SpeciesPair::AB(), r);
    CHECK(a.lambda1 == doctest::Approx(b.lambda1).epsilon(1e-6));
    CHECK(a.lambda2 == doctest::Approx(b.lambda2).epsilon(1e-6));
  }
  // power-law extrapolation
  const LambdaValues far = t.at(60.0);
  CHECK(far.lambda1 * 60.0 == doctest::Approx(lambda1_asymptotic(P, SpeciesPair::AB())).epsilon(0.01));

  const Mat3 S = sigma_matrix(t, Vec3(2, 0, 0));
  const LambdaValues v = t.at(2.0);
  CHECK(S(0, 0) == doctest::Approx(v.lambda1));
  CHECK(S(1, 1) == doctest::Approx(v.lambda2));
  CHECK(S(2, 2) == doctest::Approx(v.lambda2));
  CHECK(std::abs(S(0, 1)) + std::abs(S(0, 2)) + std::abs(S(1, 2)) == 0.0);
  CHECK((sigma_matrix(t, Vec3::Zero()) - t.at(0.0).lambda1 * Mat3::Identity()).norm() <= 1e-14);

  std::ostringstream os;
  t.write_csv(os);
  const std::string s = os.str();
  CHECK(s.rfind("# ", 0) == 0);
  CHECK(s.find("r,lambda1,lambda2\n") != std::string::npos);
  CHECK(s.find('\r') == std::string::npos);
}

TEST_CASE("weight spec")
{
  const Vec3 p(1.0, 2.0, 2.0);  // <p> = sqrt(10)
  CHECK(WeightSpec{2.0, 0}(params(0.0), p) == doctest::Approx(10.0));
  CHECK(WeightSpec{0.0, 3}(params(0.5), p) == doctest::Approx(1.0));
  CHECK(WeightSpec{2.0, 2}(params(-1.0), p) == doctest::Approx(100.0));
}

TEST_CASE("weak form and conservation")
{
  const ModelParams P = params();
  const Basis A = build_basis(P, Species::A, 6), B = build_basis(P, Species::B, 6);
  const QuadratureRule rule = quadrature(A, B, 1.0, 1e-16);
  auto gaussian = [](double s, Vec3 u) {
    return Field{[=](const Vec3& p) { return std::pow(2 * M_PI * s, -1.5) * std::exp(-(p - u).squaredNorm() / (2 * s)); },
                 [=](const Vec3& p) {
                   return Vec3(-std::pow(2 * M_PI * s, -1.5) * std::exp(-(p - u).squaredNorm() / (2 * s)) *
                               (p - u) / s);
                 }};
  };
  const Field one{[](const Vec3&) { return 1.0; }, [](const Vec3&) { return Vec3::Zero(); }};
  const Field cubic{[](const Vec3& p) { return p.x() * p.x() * p.x(); },
                    [](const Vec3& p) { return Vec3(3 * p.x() * p.x(), 0, 0); }};
  const Field FA = gaussian(1.3, Vec3(0.2, 0.0, -0.1)), FB = gaussian(0.9, Vec3(-0.1, 0.3, 0.0));
  CHECK(q_weak_form(P, SpeciesPair::AB(), FA, FB, one, rule) == 0.0);

  // Q^{AB}(M_A, M_B) = 0 pointwise
  const Field MA = gaussian(P.variance(Species::A), Vec3::Zero());
  const Field MB = gaussian(P.variance(Species::B), Vec3::Zero());
  CHECK(std::abs(q_weak_form(P, SpeciesPair::AB(), MA, MB, cubic, rule)) <= 1e-12);

  const ConservationReport m = conservation_report(P, MA, MB, rule);
  CHECK(m.max_residual() <= 1e-12);
  const ConservationReport r = conservation_report(P, FA, FB, rule);
  CHECK(r.max_residual() <= 1e-12);
  // non-invariant moments are not zero
  CHECK(std::abs(q_weak_form(P, SpeciesPair::AB(), FA, FB, cubic, rule)) > 1e-4);
}

TEST_CASE("params validation")
{
  ModelParams P;
  P.gamma = -3.0;
  CHECK_THROWS_AS(P.validate(), ConfigError);
  P.gamma = 0.0;
  P.m_A = 0.0;
  CHECK_THROWS_AS(P.validate(), ConfigError);
  CHECK(parse_pair("BA") == SpeciesPair::BA());
  CHECK_THROWS_AS(parse_pair("AC"), ConfigError);
}
