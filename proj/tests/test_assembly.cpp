#include <doctest.h>

#include <cmath>

#include "landau/assembly.hpp"
#include "landau/error.hpp"
#include "landau/linalg.hpp"

using namespace landau;

namespace {

struct Fixture
{
  ModelParams P;
  Basis A, B;
  QuadratureRule qa, qb;
  SigmaTable tab, tbb;
  GalerkinOperatorSet ab, bb;
  CrossOperator X;

  explicit Fixture(double gamma = 0.0, int degree = 8)
  {
    P.gamma = gamma;
    A = build_basis(P, Species::A, degree);
    B = build_basis(P, Species::B, degree);
    qa = quadrature(A, 1.0, 1e-16);
    qb = quadrature(B, 1.0, 1e-16);
    tab = SigmaTable::build(P, SpeciesPair::AB());
    tbb = SigmaTable::build(P, SpeciesPair::BB());
    ab = assemble_operator_set(P, SpeciesPair::AB(), A, qa, tab, Vec3::UnitZ());
    bb = assemble_operator_set(P, SpeciesPair::BB(), B, qb, tbb, Vec3::UnitZ());
    X = assemble_l_ba(P, A, B, qa, qb);
  }
};

const Fixture& fx()
{
  static const Fixture f;
  return f;
}

}  // namespace

TEST_CASE("cutoff transition")
{
  CHECK(cutoff_chi(0.0) == 1.0);
  CHECK(cutoff_chi(1.0) == 1.0);
  CHECK(cutoff_chi(2.0) == 0.0);
  CHECK(cutoff_chi(7.0) == 0.0);
  CHECK(cutoff_chi(1.5) == doctest::Approx(0.5).epsilon(1e-15));
  double prev = 1.0;
  for (int i = 0; i <= 1000; ++i) {
    const double v = cutoff_chi(1.0 + i / 1000.0);
    CHECK(v <= prev);
    prev = v;
  }
}

TEST_CASE("single-species operators are symmetric and nonpositive")
{
  const Fixture& f = fx();
  for (const GalerkinOperatorSet* s : {&f.ab, &f.bb}) {
    CHECK((s->l_full - s->l_full.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s->l_full);
    CHECK(es.eigenvalues().maxCoeff() <= 1e-8);
  }
  CHECK(f.ab.k_tilde.norm() == 0.0);
}

TEST_CASE("null spaces and microscopic cancellation")
{
  const Fixture& f = fx();
  const SpecialVectors sv = special_vectors(f.B, f.A, Vec3::UnitZ());
  for (int i = 0; i < 5; ++i) CHECK((f.bb.l_full * sv.chi[i]).norm() <= 1e-8);
  CHECK((f.ab.l_full * sv.E_D).norm() <= 1e-8);
  CHECK((f.X.matrix * sv.E_D).norm() <= 1e-8);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eb(f.bb.l_full), ea(f.ab.l_full);
  auto count = [](const Eigen::VectorXd& ev) { return (ev.array().abs() <= 1e-8).count(); };
  CHECK(count(eb.eigenvalues()) == 5);
  CHECK(count(ea.eigenvalues()) == 1);
  // the next eigenvalue is bounded away from zero
  CHECK(eb.eigenvalues()[eb.eigenvalues().size() - 6] < -0.1);
}

TEST_CASE("potential and gradient forms agree")
{
  const Fixture& f = fx();
  const Eigen::MatrixXd Lp = assemble_lambda_tilde(f.P, SpeciesPair::BB(), f.B, f.tbb, f.qb, LambdaForm::potential);
  CHECK((Lp - f.bb.lambda_tilde).cwiseAbs().maxCoeff() <= 1e-8);
  const Eigen::MatrixXd La = assemble_lambda_tilde(f.P, SpeciesPair::AB(), f.A, f.tab, f.qa, LambdaForm::potential);
  CHECK((La - f.ab.lambda_tilde).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("doubling the quadrature order leaves the matrices unchanged")
{
  ModelParams P;
  const Basis B = build_basis(P, Species::B, 5), A = build_basis(P, Species::A, 5);
  const SigmaTable t = SigmaTable::build(P, SpeciesPair::BB());
  const QuadratureRule q1 = quadrature(B, 1.0, 1e-16), q2 = quadrature(B, 2.0, 1e-16);
  const auto s1 = assemble_operator_set(P, SpeciesPair::BB(), B, q1, t, Vec3::UnitZ());
  const auto s2 = assemble_operator_set(P, SpeciesPair::BB(), B, q2, t, Vec3::UnitZ());
  CHECK((s1.lambda_tilde - s2.lambda_tilde).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK((s1.k_tilde - s2.k_tilde).cwiseAbs().maxCoeff() <= 1e-8);
  const auto x1 = assemble_l_ba(P, A, B, quadrature(A, 1.0, 1e-16), q1);
  const auto x2 = assemble_l_ba(P, A, B, quadrature(A, 2.0, 1e-16), q2);
  CHECK((x1.matrix - x2.matrix).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("non-polynomial kernels converge under refinement")
{
  ModelParams P;
  P.gamma = -1.0;
  const Basis B = build_basis(P, Species::B, 5);
  const SigmaTable t = SigmaTable::build(P, SpeciesPair::BB());
  auto lam = [&](double os) {
    return assemble_operator_set(P, SpeciesPair::BB(), B, quadrature(B, os, 1e-16), t, Vec3::UnitZ())
        .lambda_tilde;
  };
  const Eigen::MatrixXd l2 = lam(2.0), l3 = lam(3.0), l4 = lam(4.0);
  const double d23 = (l2 - l3).cwiseAbs().maxCoeff(), d34 = (l3 - l4).cwiseAbs().maxCoeff();
  CHECK(d34 < d23);
  CHECK(d34 <= 1e-7);
}

TEST_CASE("Lambda/K split")
{
  const Fixture& f = fx();
  const Eigen::MatrixXd S = sigma_norm_matrix(f.P, f.B, f.qb, WeightSpec{});
  const LambdaKSplit s = split_lambda_k(f.bb, f.P, 10.0, 5.0, S);
  CHECK(s.c0 > 0.0);
  CHECK(((s.K - s.Lambda) - f.bb.l_full).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK_THROWS_AS(split_lambda_k(f.bb, f.P, 0.0, 5.0, S), ConfigError);
}

TEST_CASE("mode operator")
{
  const Fixture& f = fx();
  for (double eta : {0.0, 0.3, 2.0}) {
    const ModeOperator m = build_l_eta(f.bb, f.P, eta, Vec3::UnitZ());
    // the Hermitian part is L itself
    const Eigen::MatrixXcd H = 0.5 * (m.matrix + m.matrix.adjoint());
    CHECK((H.real() - f.bb.l_full).cwiseAbs().maxCoeff() <= 1e-14);
    // complex symmetric in the real basis
    CHECK((m.matrix - m.matrix.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    const Eigen::VectorXcd ev = sector_eigenvalues(m.matrix, symmetry_sectors(f.B, Vec3::UnitZ()));
    CHECK(ev.real().maxCoeff() <= 1e-8);
  }
  CHECK_THROWS_AS(build_l_eta(f.bb, f.P, -1.0, Vec3::UnitZ()), ConfigError);
}

TEST_CASE("operator set rejects other pairs")
{
  const Fixture& f = fx();
  CHECK_THROWS_AS(assemble_operator_set(f.P, SpeciesPair::BA(), f.B, f.qb, f.tbb, Vec3::UnitZ()), ConfigError);
  CHECK_THROWS_AS(assemble_operator_set(f.P, SpeciesPair::AB(), f.B, f.qb, f.tab, Vec3::UnitZ()), ConfigError);
}
