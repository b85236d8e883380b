#include <doctest.h>

#include <atomic>
#include <cmath>
#include <random>
#include <stdexcept>

#include "landau/dynamics.hpp"
#include "landau/error.hpp"

using namespace landau;

namespace {

struct Fixture
{
  ModelParams P;
  Basis A, B;
  GalerkinOperatorSet ab, bb;
  CrossOperator X;
  CoupledSystem sys;
  Eigen::VectorXcd E_D;

  Fixture()
  {
    A = build_basis(P, Species::A, 4);
    B = build_basis(P, Species::B, 4);
    const QuadratureRule qa = quadrature(A, 1.0, 1e-16), qb = quadrature(B, 1.0, 1e-16);
    ab = assemble_operator_set(P, SpeciesPair::AB(), A, qa, SigmaTable::build(P, SpeciesPair::AB()),
                               Vec3::UnitZ());
    bb = assemble_operator_set(P, SpeciesPair::BB(), B, qb, SigmaTable::build(P, SpeciesPair::BB()),
                               Vec3::UnitZ());
    X = assemble_l_ba(P, A, B, qa, qb);
    sys = CoupledSystem{&ab, &bb, &X, P, Vec3::UnitZ()};
    E_D = special_vectors(B, A, Vec3::UnitZ()).E_D.cast<cd>();
  }
};

const Fixture& fx()
{
  static const Fixture f;
  return f;
}

// composite Simpson on [0, t]
cd duhamel_simpson(cd mu, cd lambda, double t, int n = 20000)
{
  const double h = t / n;
  cd s = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double x = i * h;
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    s += w * std::exp(mu * (t - x) + lambda * x);
  }
  return s * h / 3.0;
}

Eigen::VectorXcd random_vector(long n, std::mt19937_64& rng)
{
  std::normal_distribution<double> nd;
  Eigen::VectorXcd v(n);
  for (long i = 0; i < n; ++i) v[i] = cd(nd(rng), nd(rng));
  return v;
}

}  // namespace

TEST_CASE("divided exponential")
{
  const double t = 2.0;
  const cd mu(-1.3, 0.7), lam(-0.2, -2.1);
  CHECK(std::abs(divided_exp(mu, lam, t) - duhamel_simpson(mu, lam, t)) <= 1e-12);
  // resonant pair: series branch
  const cd close = mu + cd(3e-7, -2e-7);
  CHECK(std::abs(divided_exp(mu, close, t) - duhamel_simpson(mu, close, t)) <= 1e-12);
  CHECK(std::abs(divided_exp(mu, mu, t) - t * std::exp(mu * t)) <= 1e-15);
  // both sides of the series switch
  for (double d : {0.999e-6, 1.001e-6}) {
    const cd l = mu + cd(d, 0.0);
    CHECK(std::abs(divided_exp(mu, l, t) - duhamel_simpson(mu, l, t)) <= 1e-9);
  }
  // large negative real parts do not overflow
  CHECK(std::isfinite(std::abs(divided_exp(cd(-800.0, 0.0), cd(-1.0, 0.0), 5.0))));
}

TEST_CASE("decay fits on heat kernels")
{
  const auto times = log_time_grid(1e-2, 1e5, 200);
  for (int k = 0; k <= 2; ++k) {
    std::vector<double> l2, linf;
    for (double t : times) {
      const double a = 1.5 + k;  // int eta^{2+2k} e^{-2 t eta^2}
      l2.push_back(std::sqrt(std::tgamma(a) / (2.0 * std::pow(2.0 * t + 1e-300, a))));
      const double b = 1.5 + 0.5 * k;  // int eta^{2+k} e^{-t eta^2}
      linf.push_back(std::tgamma(b) / (2.0 * std::pow(t + 1e-300, b)));
    }
    const DecayFit f2 = fit_decay(times, l2, 100.0, 1e4);
    const DecayFit fi = fit_decay(times, linf, 100.0, 1e4);
    CHECK(f2.valid);
    CHECK(f2.monotone);
    CHECK(f2.slope == doctest::Approx(-(3.0 + 2 * k) / 4.0).epsilon(0.01));
    CHECK(fi.slope == doctest::Approx(-(3.0 + k) / 2.0).epsilon(0.01));
    CHECK(f2.points >= 12);
  }
  std::vector<double> ex;
  for (double t : times) ex.push_back(3.0 * std::exp(-0.25 * t));
  const DecayFit fl = fit_decay(times, ex, 1.0, 100.0, true);
  CHECK(fl.log_linear);
  CHECK(fl.slope == doctest::Approx(-0.25).epsilon(1e-10));

  CHECK_THROWS_AS(fit_decay(times, ex, 5.0, 100.0), ConfigError);
  CHECK_THROWS_AS(fit_decay(times, ex, 1e4, 1.2e4), ConfigError);
  CHECK_THROWS_AS(fit_decay(times, ex, 50.0, 50.5, true), ConfigError);
}

TEST_CASE("grids and profiles")
{
  const auto t = log_time_grid(1.0, 100.0, 3);
  REQUIRE(t.size() == 4);
  CHECK(t[0] == 0.0);
  CHECK(t[2] == doctest::Approx(10.0));
  CHECK(t[3] == doctest::Approx(100.0));
  CHECK(bump_profile(0.0) == 1.0);
  CHECK(bump_profile(4.0) == 0.0);
  CHECK(bump_profile(5.0) == 0.0);
  CHECK(bump_profile(2.0) > 0.0);
  CHECK(bump_profile(2.0) < 1.0);

  const RadialGrid g = radial_grid(0.5);
  double vol = 0.0;  // int_0^5 eta^2 = 125/3
  for (std::size_t i = 0; i < g.eta.size(); ++i) vol += g.weight[i] * g.eta[i] * g.eta[i];
  CHECK(vol == doctest::Approx(125.0 / 3.0).epsilon(1e-12));
  for (std::size_t i = 1; i < g.eta.size(); ++i) CHECK(g.eta[i] > g.eta[i - 1]);
}

TEST_CASE("components")
{
  for (int i = 0; i < component_count; ++i) {
    const auto c = Component(i);
    CHECK(parse_component(to_string(c)) == c);
  }
  CHECK_THROWS_AS(parse_component("h-long"), ConfigError);
}

TEST_CASE("parallel_for")
{
  std::atomic<long> sum{0};
  parallel_for(100, 4, [&](int i) { sum += i; });
  CHECK(sum == 4950);
  CHECK_THROWS_AS(parallel_for(10, 3, [](int i) {
                    if (i == 7) throw std::runtime_error("boom");
                  }),
                  std::runtime_error);
}

TEST_CASE("direct evolution")
{
  const Fixture& f = fx();
  std::mt19937_64 rng(4);
  const long nb = long(f.B.size()), na = long(f.A.size());
  const double eta = 0.4;
  const std::vector<double> times{0.0, 0.5, 1.0, 1.5, 2.0};

  // g = 0: h follows the BB mode operator alone
  const Eigen::VectorXcd h0 = random_vector(nb, rng);
  const ModeTrajectory tr = evolve_pair_mode(f.sys, eta, Eigen::VectorXcd::Zero(na), h0, times);
  const ModeOperator Lb = build_l_eta(f.bb, f.P, eta, Vec3::UnitZ());
  for (std::size_t i = 0; i < times.size(); ++i) {
    const Eigen::VectorXcd ref = expm(times[i] * Lb.matrix) * h0;
    CHECK((tr.h[i] - ref).norm() <= 1e-10 * h0.norm());
    CHECK(tr.g[i].norm() == 0.0);
  }
  // contraction in L2
  for (std::size_t i = 1; i < times.size(); ++i) CHECK(tr.h_norm[i] <= tr.h_norm[i - 1] + 1e-12);

  // chi_0 is stationary at eta = 0
  const Eigen::VectorXcd chi0 = chi_vectors(f.B)[0].cast<cd>();
  const ModeTrajectory st = evolve_pair_mode(f.sys, 0.0, Eigen::VectorXcd::Zero(na), chi0, times);
  CHECK((st.h.back() - chi0).norm() <= 1e-8);

  // semigroup
  const Eigen::VectorXcd g0 = random_vector(na, rng);
  const ModeTrajectory a = evolve_pair_mode(f.sys, eta, g0, h0, {0.0, 1.3, 5.0});
  const ModeTrajectory b = evolve_pair_mode(f.sys, eta, a.g[1], a.h[1], {0.0, 3.7});
  CHECK((a.g[2] - b.g[1]).norm() <= 1e-10 * g0.norm());
  CHECK((a.h[2] - b.h[1]).norm() <= 1e-10 * (g0.norm() + h0.norm()));

  CHECK_THROWS_AS(evolve_pair_mode(f.sys, eta, g0, h0, {0.5, 1.0}), ConfigError);
}

TEST_CASE("modal split of h")
{
  const Fixture& f = fx();
  const std::vector<double> times{0.0, 0.3, 1.0, 4.0, 20.0};
  for (double eta : {0.05, 0.3}) {
    const HSplit s = h_component_split(f.sys, eta, f.E_D, times, 0.5);
    CHECK(s.max_relative_defect <= 1e-8);
    for (std::size_t i = 0; i < times.size(); ++i) {
      const Eigen::VectorXcd sum = s.h00[i] + s.h0perp[i] + s.hperp0[i] + s.hperpperp[i];
      CHECK((sum - s.direct[i]).norm() <= 1e-8 * std::max(1.0, s.direct[i].norm()));
    }
    CHECK(s.direct.front().norm() == 0.0);
  }
  CHECK_THROWS_AS(h_component_split(f.sys, 2.0, f.E_D, times, 0.5), ConfigError);
  for (const ResonanceProbe& r : resonance_continuity(f.sys, times, 0.5)) CHECK(r.jump <= 1e-6);
}

TEST_CASE("radial study and norm synthesis")
{
  const Fixture& f = fx();
  CHECK(is_isotropic(f.A, f.E_D));
  Eigen::VectorXcd px = Eigen::VectorXcd::Zero(long(f.A.size()));
  px[f.A.find({1, 0, 0})] = 1.0;
  CHECK_FALSE(is_isotropic(f.A, px));

  // Gauss-Legendre panels are produced by the library; the reference below is Simpson
  RadialGrid grid;
  const int n = 40;
  for (int i = 0; i < n; ++i) {
    const double lo = 4.0 * i / n, hi = 4.0 * (i + 1) / n;
    for (double x : {-std::sqrt(3.0 / 5.0), 0.0, std::sqrt(3.0 / 5.0)}) {
      grid.eta.push_back(0.5 * (lo + hi) + 0.5 * (hi - lo) * x);
      grid.weight.push_back(0.5 * (hi - lo) * (x == 0.0 ? 8.0 / 9.0 : 5.0 / 9.0));
    }
  }
  const std::vector<double> times{0.0, 1.0, 10.0};
  const RadialStudy st = radial_study(f.sys, grid, times, 0.5, f.E_D, bump_profile);
  CHECK(st.max_direct_defect <= 1e-8);

  double linf = 0.0, l2 = 0.0;
  const int m = 40000;
  for (int i = 0; i <= m; ++i) {
    const double e = 4.0 * i / m, w = (i == 0 || i == m) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    const double phi = bump_profile(e);
    linf += w * 4.0 * M_PI * e * e * phi;
    l2 += w * 4.0 * M_PI * e * e * phi * phi;
  }
  linf *= 4.0 / m / 3.0;
  l2 = std::sqrt(std::pow(2.0 * M_PI, 3) * l2 * 4.0 / m / 3.0);
  const NormSeries g = synthesize_norms(st, Component::g, 0, 0);
  CHECK(g.linf[0] == doctest::Approx(linf).epsilon(1e-6));
  CHECK(g.l2[0] == doctest::Approx(l2).epsilon(1e-6));
  CHECK(synthesize_norms(st, Component::h, 0, 0).l2[0] == 0.0);
  // fluid and nonfluid parts of g recombine
  const NormSeries gf = synthesize_norms(st, Component::g_fluid, 0, 0);
  CHECK(gf.l2[2] <= g.l2[2] * (1.0 + 1e-12) + synthesize_norms(st, Component::g_nonfluid, 0, 0).l2[2]);

  CHECK_THROWS_AS(radial_study(f.sys, grid, times, 0.5, px, bump_profile), ConfigError);
}

TEST_CASE("Picard decomposition")
{
  const Fixture& f = fx();
  const Eigen::MatrixXd S = sigma_norm_matrix(f.P, f.A, quadrature(f.A, 1.0, 1e-16), WeightSpec{});
  const LambdaKSplit split = split_lambda_k(f.ab, f.P, 10.0, 5.0, S);
  std::vector<double> times;
  for (int i = 0; i <= 20; ++i) times.push_back(0.1 * i);
  for (int k : {0, 1}) {
    const PicardDecomposition pd = picard_decompose(f.ab, f.P, split, 0.3, f.E_D, k, times);
    REQUIRE(pd.f.size() == std::size_t(2 * k + 1));
    CHECK(pd.residual <= 1e-8);
    CHECK(pd.kappa <= 10.0 + 1e-12);
    CHECK(pd.remainder.front().norm() == 0.0);
    CHECK((pd.f[0].front() - f.E_D).norm() <= 1e-14);
    for (std::size_t j = 1; j < pd.f.size(); ++j) CHECK(pd.f[j].front().norm() == 0.0);
    CHECK(pd.duhamel_ratio <= 1.0 + 1e-8);
  }
  CHECK_THROWS_AS(picard_decompose(f.ab, f.P, split, 0.3, f.E_D, 0, {0.0, 0.1, 0.3}), ConfigError);
}
