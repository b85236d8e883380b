#pragma once

#include <complex>

#include <Eigen/Dense>

#include "landau/basis.hpp"
#include "landau/kernels.hpp"

namespace landau {

/// Smooth non-increasing transition: 1 on [0, 1], 0 on [2, inf).
double cutoff_chi(double s);

struct CutoffSpec
{
  double varpi = 10.0;
  double R = 5.0;
};

/// Which weak form is used for the elliptic part.
enum class LambdaForm
{
  gradient,  ///< int M_X grad P_a . sigma grad P_b
  potential  ///< int grad phi_a . sigma grad phi_b + V phi_a phi_b
};

/// Potential V of the symmetric form of Lambda-tilde at |p| = r.
double lambda_potential(const ModelParams& params, SpeciesPair pair, double lambda1,
                        double lambda2, double r);

/**
 * @brief Galerkin matrix of Lambda-tilde^{XY} in the species-X basis.
 *
 * The rule must be on the basis scale. Throws NumericalError if the matrix has an
 * eigenvalue below -1e-8 relative to its norm.
 */
Eigen::MatrixXd assemble_lambda_tilde(const ModelParams& params, SpeciesPair pair,
                                      const Basis& basis, const SigmaTable& table,
                                      const QuadratureRule& quad,
                                      LambdaForm form = LambdaForm::gradient);

/// K-tilde^{BB} by the doubly integrated weak form on the B-scale rule.
Eigen::MatrixXd assemble_k_bb(const ModelParams& params, const Basis& basis,
                              const QuadratureRule& quad);

/// Galerkin form of L_BA, mapping species-A coefficients to species-B coefficients.
struct CrossOperator
{
  Eigen::MatrixXd matrix;
};

/// Product rule: quad_B for p, quad_A for p_*.
CrossOperator assemble_l_ba(const ModelParams& params, const Basis& basis_A,
                            const Basis& basis_B, const QuadratureRule& quad_A,
                            const QuadratureRule& quad_B);

/// Galerkin matrix of multiplication by chi(|p|/R).
Eigen::MatrixXd assemble_cutoff(const Basis& basis, const QuadratureRule& quad, double R);

struct GalerkinOperatorSet
{
  SpeciesPair pair{};
  Basis basis;
  QuadratureRule quad;
  Eigen::MatrixXd lambda_tilde;
  Eigen::MatrixXd k_tilde;  ///< zero for the pair AB
  Eigen::MatrixXd l_full;   ///< -lambda_tilde + k_tilde
  Eigen::MatrixXd t_omega;  ///< multiplication by p.omega
  Eigen::MatrixXd cutoff;   ///< multiplication by chi_R (without the factor varpi)
  Vec3 omega = Vec3::UnitZ();
  CutoffSpec cut;
};

/// Assemble the operator set of the pair AB (species A basis) or BB (species B basis).
GalerkinOperatorSet assemble_operator_set(const ModelParams& params, SpeciesPair pair,
                                          const Basis& basis, const QuadratureRule& quad,
                                          const SigmaTable& table, const Vec3& omega,
                                          const CutoffSpec& cut = {},
                                          LambdaForm form = LambdaForm::gradient);

struct LambdaKSplit
{
  Eigen::MatrixXd Lambda;  ///< lambda_tilde + varpi chi_R
  Eigen::MatrixXd K;       ///< k_tilde + varpi chi_R
  double c0 = 0.0;         ///< min of <Lambda f, f> / |f|_sigma^2 (generalized eigenvalue)
};

/// Throws CheckError advising larger (varpi, R) when Lambda is not coercive.
LambdaKSplit split_lambda_k(const GalerkinOperatorSet& set, const ModelParams& params,
                            double varpi, double R, const Eigen::MatrixXd& sigma_gram);

struct ModeOperator
{
  double eta = 0.0;
  Vec3 omega = Vec3::UnitZ();
  Eigen::MatrixXcd matrix;  ///< -i (eta/m_X) T_omega + L_full
};

ModeOperator build_l_eta(const GalerkinOperatorSet& set, const ModelParams& params,
                         double eta, const Vec3& omega);

}  // namespace landau
