#include "landau/assembly.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "landau/error.hpp"

namespace landau {

double cutoff_chi(double s)
{
  if (s <= 1.0) return 1.0;
  if (s >= 2.0) return 0.0;
  const double a = std::exp(-1.0 / (2.0 - s));
  const double b = std::exp(-1.0 / (s - 1.0));
  return a / (a + b);
}

double lambda_potential(const ModelParams& params, SpeciesPair pair, double lambda1,
                        double lambda2, double r)
{
  const double s = params.variance(pair.X);
  const double q = params.mass(pair.Y) / params.mass(pair.X);
  const double kappa = q * q;
  const double r2 = r * r;
  return lambda1 * r2 / (4.0 * s * s) + kappa * lambda1 * r2 / (2.0 * s) -
         lambda1 / (2.0 * s) - lambda2 / s;
}

namespace {

void require_scale(const Basis& basis, const QuadratureRule& quad, const char* what)
{
  if (quad.scale != basis.scale)
    throw ConfigError(std::string(what) + ": quadrature rule must be on the basis scale");
}

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& M) { return 0.5 * (M + M.transpose()); }

// sum_{i,j} Gi^T Phi(p_i/m_X - q_j/m_Y) Gj with Gi, Gj the weighted gradient blocks.
Eigen::MatrixXd double_quadrature(const ModelParams& params, SpeciesPair pair,
                                  const std::vector<Vec3>& p, const Eigen::MatrixXd& Gp,
                                  const std::vector<Vec3>& q, const Eigen::MatrixXd& Gq)
{
  const double mx = params.mass(pair.X), my = params.mass(pair.Y);
  const long np = long(p.size()), nq = long(q.size());
  const long chunk = 64;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(Gp.cols(), Gq.cols());
  Eigen::MatrixXd Phi(3 * chunk, 3 * nq);
  for (long i0 = 0; i0 < np; i0 += chunk) {
    const long m = std::min(chunk, np - i0);
    for (long a = 0; a < m; ++a) {
      const Vec3 pa = p[i0 + a] / mx;
      for (long j = 0; j < nq; ++j) {
        const Vec3 z = pa - q[j] / my;
        const Mat3 K = z.norm() < 1e-12 ? Mat3::Zero() : phi_kernel(params, pair, z);
        Phi.block<3, 3>(3 * a, 3 * j) = K;
      }
    }
    const Eigen::MatrixXd tmp = Phi.topRows(3 * m) * Gq;
    out.noalias() += Gp.middleRows(3 * i0, 3 * m).transpose() * tmp;
  }
  return out;
}

Eigen::MatrixXd weighted_gradients(const Basis& basis, const QuadratureRule& quad)
{
  Eigen::MatrixXd G(3 * long(quad.size()), long(basis.size()));
  for (std::size_t i = 0; i < quad.size(); ++i)
    G.middleRows(3 * long(i), 3) = quad.weights[i] * basis.poly_grad(quad.nodes[i]);
  return G;
}

}  // namespace

Eigen::MatrixXd assemble_lambda_tilde(const ModelParams& params, SpeciesPair pair,
                                      const Basis& basis, const SigmaTable& table,
                                      const QuadratureRule& quad, LambdaForm form)
{
  require_scale(basis, quad, "assemble_lambda_tilde");
  if (!(table.pair == pair)) throw ConfigError("assemble_lambda_tilde: table pair mismatch");
  const long n = long(basis.size()), nq = long(quad.size());
  Eigen::MatrixXd X(3 * nq, n), Y(3 * nq, n);
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  for (long i = 0; i < nq; ++i) {
    const Vec3& p = quad.nodes[i];
    const Mat3 sigma = sigma_matrix(table, p);
    Eigen::Matrix3Xd G = basis.poly_grad(p);
    if (form == LambdaForm::potential) {
      const Eigen::VectorXd P = basis.poly(p);
      G -= (p / (2.0 * basis.scale)) * P.transpose();
      const LambdaValues lv = table.at(p.norm());
      const double V = lambda_potential(params, pair, lv.lambda1, lv.lambda2, p.norm());
      M.noalias() += (quad.weights[i] * V) * P * P.transpose();
    }
    X.middleRows(3 * i, 3) = G;
    Y.middleRows(3 * i, 3) = quad.weights[i] * sigma * G;
  }
  M.noalias() += X.transpose() * Y;
  M = symmetrized(M);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  if (lo < -1e-8 * scale) {
    std::ostringstream os;
    os << "assemble_lambda_tilde: indefinite matrix for pair " << to_string(pair)
       << " (min eigenvalue " << lo << "); quadrature or sigma table inconsistent";
    throw NumericalError(os.str());
  }
  return M;
}

Eigen::MatrixXd assemble_k_bb(const ModelParams& params, const Basis& basis,
                              const QuadratureRule& quad)
{
  if (basis.species != Species::B) throw ConfigError("assemble_k_bb: expected a species B basis");
  require_scale(basis, quad, "assemble_k_bb");
  const Eigen::MatrixXd G = weighted_gradients(basis, quad);
  return symmetrized(double_quadrature(params, SpeciesPair::BB(), quad.nodes, G, quad.nodes, G));
}

CrossOperator assemble_l_ba(const ModelParams& params, const Basis& basis_A,
                            const Basis& basis_B, const QuadratureRule& quad_A,
                            const QuadratureRule& quad_B)
{
  if (basis_A.species != Species::A || basis_B.species != Species::B)
    throw ConfigError("assemble_l_ba: expected (species A basis, species B basis)");
  require_scale(basis_A, quad_A, "assemble_l_ba");
  require_scale(basis_B, quad_B, "assemble_l_ba");
  const Eigen::MatrixXd GB = weighted_gradients(basis_B, quad_B);
  const Eigen::MatrixXd GA = weighted_gradients(basis_A, quad_A);
  CrossOperator c;
  c.matrix = double_quadrature(params, SpeciesPair::BA(), quad_B.nodes, GB, quad_A.nodes, GA);
  return c;
}

Eigen::MatrixXd assemble_cutoff(const Basis& basis, const QuadratureRule& quad, double R)
{
  require_scale(basis, quad, "assemble_cutoff");
  if (!(R > 0.0)) throw ConfigError("cutoff radius R must be positive");
  Eigen::MatrixXd V(long(quad.size()), long(basis.size()));
  Eigen::VectorXd w(long(quad.size()));
  for (std::size_t i = 0; i < quad.size(); ++i) {
    V.row(long(i)) = basis.poly(quad.nodes[i]).transpose();
    w[long(i)] = quad.weights[i] * cutoff_chi(quad.nodes[i].norm() / R);
  }
  return symmetrized(V.transpose() * w.asDiagonal() * V);
}

GalerkinOperatorSet assemble_operator_set(const ModelParams& params, SpeciesPair pair,
                                          const Basis& basis, const QuadratureRule& quad,
                                          const SigmaTable& table, const Vec3& omega,
                                          const CutoffSpec& cut, LambdaForm form)
{
  const bool ab = pair == SpeciesPair::AB(), bb = pair == SpeciesPair::BB();
  if (!ab && !bb) throw ConfigError("assemble_operator_set: pair must be AB or BB");
  if (basis.species != pair.X) throw ConfigError("assemble_operator_set: basis species mismatch");
  GalerkinOperatorSet s;
  s.pair = pair;
  s.basis = basis;
  s.quad = quad;
  s.omega = make_frame(omega).omega;
  s.cut = cut;
  s.lambda_tilde = assemble_lambda_tilde(params, pair, basis, table, quad, form);
  const long n = long(basis.size());
  s.k_tilde = bb ? assemble_k_bb(params, basis, quad) : Eigen::MatrixXd::Zero(n, n);
  s.l_full = s.k_tilde - s.lambda_tilde;
  s.t_omega = transport_matrix(basis, s.omega);
  s.cutoff = assemble_cutoff(basis, quad, cut.R);
  return s;
}

LambdaKSplit split_lambda_k(const GalerkinOperatorSet& set, const ModelParams& params,
                            double varpi, double R, const Eigen::MatrixXd& sigma_gram)
{
  (void)params;
  if (!(varpi > 0.0) || !(R > 0.0)) throw ConfigError("split_lambda_k: varpi and R must be positive");
  const Eigen::MatrixXd C = R == set.cut.R ? set.cutoff : assemble_cutoff(set.basis, set.quad, R);
  LambdaKSplit out;
  out.Lambda = set.lambda_tilde + varpi * C;
  out.K = set.k_tilde + varpi * C;
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(out.Lambda, sigma_gram,
                                                                 Eigen::EigenvaluesOnly);
  out.c0 = ges.eigenvalues().minCoeff();
  if (!(out.c0 > 0.0)) {
    std::ostringstream os;
    os << "split_lambda_k: Lambda is not coercive for (varpi, R) = (" << varpi << ", " << R
       << "), c0 = " << out.c0 << "; increase varpi or R";
    throw CheckError(os.str());
  }
  return out;
}

ModeOperator build_l_eta(const GalerkinOperatorSet& set, const ModelParams& params, double eta,
                         const Vec3& omega)
{
  if (!(eta >= 0.0)) throw ConfigError("build_l_eta: eta must be nonnegative");
  ModeOperator m;
  m.eta = eta;
  m.omega = make_frame(omega).omega;
  const Eigen::MatrixXd T = (m.omega - set.omega).norm() == 0.0
                                ? set.t_omega
                                : transport_matrix(set.basis, m.omega);
  const double f = eta / params.mass(set.pair.X);
  m.matrix = set.l_full.cast<std::complex<double>>();
  m.matrix -= std::complex<double>(0.0, f) * T.cast<std::complex<double>>();
  return m;
}

}  // namespace landau
