#include <doctest.h>

#include <cmath>
#include <random>

#include <unsupported/Eigen/MatrixFunctions>

#include "landau/error.hpp"
#include "landau/spectral.hpp"

using namespace landau;

namespace {

struct Fixture
{
  ModelParams P;
  Basis A, B;
  QuadratureRule qa, qb;
  GalerkinOperatorSet ab, bb;
  CrossOperator X;
  std::vector<double> grid;

  Fixture()
  {
    A = build_basis(P, Species::A, 6);
    B = build_basis(P, Species::B, 6);
    qa = quadrature(A, 1.0, 1e-16);
    qb = quadrature(B, 1.0, 1e-16);
    ab = assemble_operator_set(P, SpeciesPair::AB(), A, qa, SigmaTable::build(P, SpeciesPair::AB()),
                               Vec3::UnitZ());
    bb = assemble_operator_set(P, SpeciesPair::BB(), B, qb, SigmaTable::build(P, SpeciesPair::BB()),
                               Vec3::UnitZ());
    X = assemble_l_ba(P, A, B, qa, qb);
    grid = geometric_grid(1e-3, 0.5, 40);
  }
};

const Fixture& fx()
{
  static const Fixture f;
  return f;
}

Eigen::MatrixXcd random_complex(int n, std::mt19937_64& rng)
{
  std::normal_distribution<double> nd;
  Eigen::MatrixXcd M(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) M(i, j) = cd(nd(rng), nd(rng));
  return M;
}

}  // namespace

TEST_CASE("geometric grid")
{
  const auto g = geometric_grid(1e-3, 10.0, 5);
  REQUIRE(g.size() == 5);
  CHECK(g.front() == doctest::Approx(1e-3));
  CHECK(g.back() == doctest::Approx(10.0));
  for (std::size_t i = 1; i + 1 < g.size(); ++i)
    CHECK(g[i] * g[i] == doctest::Approx(g[i - 1] * g[i + 1]));
}

TEST_CASE("sector eigensolver matches a dense solver")
{
  std::mt19937_64 rng(1);
  const std::vector<std::vector<int>> sectors{{0, 2, 4}, {1, 3}, {5}};
  Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(6, 6);
  const Eigen::MatrixXcd R = random_complex(6, rng);
  for (const auto& s : sectors)
    for (int i : s)
      for (int j : s) M(i, j) = R(i, j);
  const SectorEigen se = sector_eigen(M, sectors);
  for (long k = 0; k < se.values.size(); ++k) {
    const Eigen::VectorXcd v = se.vectors.col(k);
    CHECK((M * v - se.values[k] * v).norm() <= 1e-10 * v.norm());
  }
  CHECK((se.left * se.vectors - Eigen::MatrixXcd::Identity(6, 6)).norm() <= 1e-10);

  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> ces(M);
  auto sorted = [](Eigen::VectorXcd v) {
    std::sort(v.data(), v.data() + v.size(),
              [](cd a, cd b) { return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag(); });
    return v;
  };
  CHECK((sorted(se.values) - sorted(ces.eigenvalues())).norm() <= 1e-10);
  CHECK((sorted(sector_eigenvalues(M, sectors)) - sorted(ces.eigenvalues())).norm() <= 1e-10);

  const auto top = se.top_real(2);
  CHECK(se.values[top[0]].real() >= se.values[top[1]].real());
  CHECK(off_sector_norm(M, sectors) == 0.0);
}

TEST_CASE("dense linear algebra helpers")
{
  std::mt19937_64 rng(2);
  const Eigen::MatrixXcd A = random_complex(7, rng);
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(A);
  CHECK(spectral_norm(A) == doctest::Approx(svd.singularValues()[0]).epsilon(1e-12));

  // nilpotent: exp(N) = I + N + N^2/2
  Eigen::MatrixXcd N = Eigen::MatrixXcd::Zero(3, 3);
  N(0, 1) = 2.0;
  N(1, 2) = 3.0;
  const Eigen::MatrixXcd eN = Eigen::MatrixXcd::Identity(3, 3) + N + 0.5 * N * N;
  CHECK((expm(N) - eN).norm() <= 1e-14);
  // diagonalizable with a large norm
  const Eigen::MatrixXcd S = random_complex(5, rng);
  Eigen::VectorXcd d(5);
  d << cd(-30, 2), cd(-1, 0), cd(0, 5), cd(1.5, -1), cd(-8, 0);
  const Eigen::MatrixXcd M = S * d.asDiagonal() * S.inverse();
  const Eigen::MatrixXcd ref = S * d.array().exp().matrix().asDiagonal() * S.inverse();
  CHECK((expm(M) - ref).norm() <= 1e-10 * ref.norm());
  CHECK((expm(M) - M.exp()).norm() <= 1e-10 * ref.norm());

  Eigen::MatrixXd Q = Eigen::MatrixXd::Random(5, 5);
  Q = Eigen::HouseholderQR<Eigen::MatrixXd>(Q).householderQ();
  Eigen::VectorXd mu(5);
  mu << -2.0, -1e-12, 0.5, 3.0, 0.0;
  const Eigen::MatrixXd L = Q * mu.asDiagonal() * Q.transpose();
  Eigen::VectorXd inv(5);
  inv << -0.5, 0.0, 2.0, 1.0 / 3.0, 0.0;
  CHECK((symmetric_pinv(L, 1e-8) - Q * inv.asDiagonal() * Q.transpose()).norm() <= 1e-12);

  Eigen::MatrixXd Xm(6, 2);
  Xm << 1, 0, 1, 1, 1, 2, 1, 3, 1, 4, 1, 5;
  Eigen::VectorXd y = Xm * Eigen::Vector2d(0.7, -1.3);
  CHECK((least_squares(Xm, y) - Eigen::Vector2d(0.7, -1.3)).norm() <= 1e-12);
}

TEST_CASE("fluid branches and diffusion coefficients")
{
  const Fixture& f = fx();
  const double a01 = std::sqrt(5.0 / 3.0) / f.P.m_B;

  const auto d = eigen_branches(f.ab, f.P, Vec3::UnitZ(), f.grid);
  REQUIRE(d.size() == 1);
  double max_im = 0.0;
  for (const cd& v : d.front().value) max_im = std::max(max_im, std::abs(v.imag()));
  CHECK(max_im <= 1e-8);
  const DispersionFit fd = fit_dispersion(d.front());
  const double dd = diffusion_coefficient_direct(f.ab, f.P, Vec3::UnitZ(), 0);
  CHECK(fd.a2 > 0.0);
  CHECK(std::abs(fd.a2 - dd) <= 0.02 * dd);
  CHECK(std::abs(fd.a1) <= 1e-6);

  const auto b = eigen_branches(f.bb, f.P, Vec3::UnitZ(), f.grid);
  REQUIRE(b.size() == 5);
  for (const DispersionBranch& br : b) {
    CHECK(br.min_overlap >= 0.9);
    for (const cd& v : br.value) CHECK(v.real() <= 1e-8);
    const DispersionFit fit = fit_dispersion(br);
    const double direct = diffusion_coefficient_direct(f.bb, f.P, Vec3::UnitZ(), br.label);
    CHECK(fit.a2 > 0.0);
    CHECK(std::abs(fit.a2 - direct) <= 0.02 * direct);
    if (br.label == 0) CHECK(fit.a1 == doctest::Approx(a01).epsilon(0.02));
    else if (br.label == 1) CHECK(fit.a1 == doctest::Approx(-a01).epsilon(0.02));
    else CHECK(std::abs(fit.a1) <= 1e-4);
  }
  // acoustic pair and transverse shear pair are degenerate in a2
  CHECK(fit_dispersion(b[0]).a2 == doctest::Approx(fit_dispersion(b[1]).a2).epsilon(1e-8));
  CHECK(fit_dispersion(b[3]).a2 == doctest::Approx(fit_dispersion(b[4]).a2).epsilon(1e-8));
}

TEST_CASE("conjugation symmetry of the mode operator")
{
  const Fixture& f = fx();
  const auto sectors = symmetry_sectors(f.B, Vec3::UnitZ());
  const ModeOperator plus = build_l_eta(f.bb, f.P, 0.7, Vec3::UnitZ());
  const Eigen::MatrixXcd minus = plus.matrix.conjugate();
  auto key = [](Eigen::VectorXcd v) {
    std::sort(v.data(), v.data() + v.size(),
              [](cd a, cd b) { return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag(); });
    return v;
  };
  const Eigen::VectorXcd ep = key(sector_eigenvalues(plus.matrix, sectors));
  const Eigen::VectorXcd em = key(sector_eigenvalues(minus, sectors).conjugate());
  CHECK((ep - em).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("spectral projectors")
{
  const Fixture& f = fx();
  for (double eta : {0.01, 0.1, 0.3}) {
    const ProjectorSet ps = projectors(f.bb, f.P, Vec3::UnitZ(), eta);
    CHECK(ps.idempotency_defect <= 1e-9);
    CHECK(ps.commutation_defect <= 1e-8);
    CHECK((ps.Pi * ps.Pi - ps.Pi).norm() <= 1e-9);
    CHECK((ps.Pi + ps.Pi_perp - Eigen::MatrixXcd::Identity(ps.Pi.rows(), ps.Pi.cols())).norm() <= 1e-14);
    CHECK(std::abs(ps.Pi.trace() - cd(5.0, 0.0)) <= 1e-8);
  }
  // eta -> 0: the fluid projector approaches the orthogonal projector onto span(chi)
  const auto chi = chi_vectors(f.B);
  Eigen::MatrixXd P0 = Eigen::MatrixXd::Zero(long(f.B.size()), long(f.B.size()));
  for (const auto& c : chi) P0 += c * c.transpose();
  const ProjectorSet small = projectors(f.bb, f.P, Vec3::UnitZ(), 1e-4);
  CHECK((small.Pi - P0.cast<cd>()).norm() <= 1e-2);
  CHECK((small.P1 - (Eigen::MatrixXd::Identity(P0.rows(), P0.cols()) - P0)).norm() <= 1e-12);

  const ProjectorSet pab = projectors(f.ab, f.P, Vec3::UnitZ(), 0.1);
  CHECK(std::abs(pab.Pi.trace() - cd(1.0, 0.0)) <= 1e-8);
}

TEST_CASE("spectral gap scan")
{
  const Fixture& f = fx();
  const SpectralGapReport r = spectral_gap_scan(f.bb, f.P, Vec3::UnitZ(), 5.0, 41, 0.5);
  CHECK(r.tau > 0.0);
  CHECK(r.tau == std::min(r.tau_long, r.tau_short));
  CHECK(r.exhaustive);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(f.bb.l_full);
  const Eigen::VectorXd mu = es.eigenvalues();
  double first = INFINITY;
  for (long i = 0; i < mu.size(); ++i)
    if (std::abs(mu[i]) > 1e-8) first = std::min(first, std::abs(mu[i]));
  CHECK(r.gap_zero == doctest::Approx(first).epsilon(1e-10));
  // nonfluid eigenvalues at small eta sit below the first nonzero eigenvalue of L
  CHECK(r.tau_long <= first * 1.001);

  const SpectralGapReport wide = spectral_gap_scan(f.bb, f.P, Vec3::UnitZ(), 5.0, 41, 1.0);
  const SpectralGapReport narrow = spectral_gap_scan(f.bb, f.P, Vec3::UnitZ(), 5.0, 41, 0.25);
  // a larger delta moves small-eta fluid values out of the short range
  CHECK(wide.tau_short >= narrow.tau_short - 1e-12);
  CHECK(wide.tau_long <= narrow.tau_long + 1e-12);
  CHECK(spectral_gap_scan(f.ab, f.P, Vec3::UnitZ(), 5.0, 41, 0.5).tau > 0.0);
}

TEST_CASE("microscopic cancellation orders")
{
  const Fixture& f = fx();
  const auto recs = cancellation_orders(f.ab, f.bb, f.X, f.P, Vec3::UnitZ(), f.grid, 0.2);
  REQUIRE(recs.size() == 5);
  for (const CancellationRecord& r : recs) {
    const double target = r.j <= 1 ? 1.0 : 2.0;
    if (r.exact) {
      for (double m : r.magnitude) CHECK(m <= 1e-12);
    } else {
      CHECK(r.slope == doctest::Approx(target).epsilon(0.075));
    }
  }
  CHECK_FALSE(recs[0].exact);
  CHECK_FALSE(recs[1].exact);
}
