#include "landau/linalg.hpp"

#include <algorithm>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

namespace landau {

std::vector<int> SectorEigen::top_real(int k) const
{
  std::vector<int> idx(std::size_t(values.size()));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int a, int b) { return values[a].real() > values[b].real(); });
  idx.resize(std::size_t(std::min<long>(k, values.size())));
  return idx;
}

namespace {

// Replace eigenvectors of clusters (relative spread <= tol) by Ritz vectors of the
// cluster's invariant subspace.
void repair_clusters(const Eigen::MatrixXcd& A, Eigen::VectorXcd& lam, Eigen::MatrixXcd& V)
{
  const long n = lam.size();
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  const double tol = 1e-9 * scale;
  std::vector<char> used(std::size_t(n), 0);
  for (long i = 0; i < n; ++i) {
    if (used[i]) continue;
    std::vector<long> cl{i};
    for (long j = i + 1; j < n; ++j)
      if (!used[j] && std::abs(lam[j] - lam[i]) <= tol) cl.push_back(j);
    for (long j : cl) used[j] = 1;
    if (cl.size() < 2) continue;
    const long m = long(cl.size());
    cd mean = 0.0;
    for (long j : cl) mean += lam[j];
    mean /= double(m);
    const Eigen::MatrixXcd S = A - mean * Eigen::MatrixXcd::Identity(n, n);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(S, Eigen::ComputeFullV);
    const Eigen::MatrixXcd Q = svd.matrixV().rightCols(m);
    const Eigen::MatrixXcd C = Q.adjoint() * A * Q;
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> ces(C);
    for (long a = 0; a < m; ++a) {
      lam[cl[a]] = ces.eigenvalues()[a];
      V.col(cl[a]) = (Q * ces.eigenvectors().col(a)).normalized();
    }
  }
}

}  // namespace

SectorEigen sector_eigen(const Eigen::MatrixXcd& M, const std::vector<std::vector<int>>& sectors,
                         bool with_left)
{
  const long n = M.rows();
  SectorEigen out;
  out.values.resize(n);
  out.vectors = Eigen::MatrixXcd::Zero(n, n);
  if (with_left) out.left = Eigen::MatrixXcd::Zero(n, n);
  out.sector_of.assign(std::size_t(n), 0);
  long pos = 0;
  for (std::size_t s = 0; s < sectors.size(); ++s) {
    const auto& idx = sectors[s];
    const long m = long(idx.size());
    Eigen::MatrixXcd A(m, m);
    for (long a = 0; a < m; ++a)
      for (long b = 0; b < m; ++b) A(a, b) = M(idx[a], idx[b]);
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> ces(A);
    Eigen::VectorXcd lam = ces.eigenvalues();
    Eigen::MatrixXcd V = ces.eigenvectors();
    repair_clusters(A, lam, V);
    Eigen::MatrixXcd W;
    if (with_left) W = V.partialPivLu().inverse();
    for (long a = 0; a < m; ++a) {
      out.values[pos + a] = lam[a];
      out.sector_of[std::size_t(pos + a)] = int(s);
      for (long b = 0; b < m; ++b) {
        out.vectors(idx[b], pos + a) = V(b, a);
        if (with_left) out.left(pos + a, idx[b]) = W(a, b);
      }
    }
    pos += m;
  }
  return out;
}

Eigen::VectorXcd sector_eigenvalues(const Eigen::MatrixXcd& M,
                                    const std::vector<std::vector<int>>& sectors)
{
  Eigen::VectorXcd out(M.rows());
  long pos = 0;
  for (const auto& idx : sectors) {
    const long m = long(idx.size());
    Eigen::MatrixXcd A(m, m);
    for (long a = 0; a < m; ++a)
      for (long b = 0; b < m; ++b) A(a, b) = M(idx[a], idx[b]);
    out.segment(pos, m) = Eigen::ComplexEigenSolver<Eigen::MatrixXcd>(A, false).eigenvalues();
    pos += m;
  }
  return out;
}

double spectral_norm(const Eigen::MatrixXcd& A)
{
  const Eigen::MatrixXcd G = A.cols() <= A.rows() ? Eigen::MatrixXcd(A.adjoint() * A)
                                                  : Eigen::MatrixXcd(A * A.adjoint());
  const double top = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(G, Eigen::EigenvaluesOnly)
                         .eigenvalues()
                         .maxCoeff();
  return std::sqrt(std::max(0.0, top));
}

double off_sector_norm(const Eigen::MatrixXcd& M, const std::vector<std::vector<int>>& sectors)
{
  std::vector<int> id(std::size_t(M.rows()), -1);
  for (std::size_t s = 0; s < sectors.size(); ++s)
    for (int k : sectors[s]) id[std::size_t(k)] = int(s);
  double m = 0.0;
  for (long i = 0; i < M.rows(); ++i)
    for (long j = 0; j < M.cols(); ++j)
      if (id[std::size_t(i)] != id[std::size_t(j)]) m = std::max(m, std::abs(M(i, j)));
  return m;
}

Eigen::MatrixXd symmetric_pinv(const Eigen::MatrixXd& L, double band)
{
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(L);
  Eigen::VectorXd inv = es.eigenvalues();
  for (long i = 0; i < inv.size(); ++i) inv[i] = std::abs(inv[i]) > band ? 1.0 / inv[i] : 0.0;
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

Eigen::MatrixXcd expm(const Eigen::MatrixXcd& M) { return M.exp(); }

Eigen::VectorXd least_squares(const Eigen::MatrixXd& X, const Eigen::VectorXd& y)
{
  // column scaling keeps the normal problem well conditioned for monomial bases
  Eigen::VectorXd s(X.cols());
  for (long j = 0; j < X.cols(); ++j) s[j] = std::max(X.col(j).norm(), 1e-300);
  const Eigen::MatrixXd Xs = X * s.cwiseInverse().asDiagonal();
  const Eigen::VectorXd c = Xs.colPivHouseholderQr().solve(y);
  return c.cwiseQuotient(s);
}

}  // namespace landau
