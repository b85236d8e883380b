#include "landau/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "landau/error.hpp"

namespace landau {

int fluid_count(SpeciesPair pair) { return pair == SpeciesPair::BB() ? 5 : 1; }

std::vector<Eigen::VectorXd> fluid_start_vectors(const GalerkinOperatorSet& set,
                                                 const Vec3& omega)
{
  if (set.pair == SpeciesPair::BB()) {
    const auto E = e_vectors(set.basis, omega);
    return {E.begin(), E.end()};
  }
  Eigen::VectorXd ed = Eigen::VectorXd::Zero(long(set.basis.size()));
  ed[set.basis.find({0, 0, 0})] = 1.0;
  return {ed};
}

std::vector<double> geometric_grid(double eta_min, double eta_max, int count)
{
  if (!(eta_min > 0.0) || !(eta_max > eta_min) || count < 2)
    throw ConfigError("geometric_grid: need 0 < eta_min < eta_max and count >= 2");
  std::vector<double> g(static_cast<std::size_t>(count));
  const double q = std::log(eta_max / eta_min) / (count - 1);
  for (int i = 0; i < count; ++i) g[std::size_t(i)] = eta_min * std::exp(q * i);
  g.back() = eta_max;
  return g;
}

namespace {

double herm_overlap(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b)
{
  return std::abs(a.dot(b)) / (a.norm() * b.norm());
}

cd bilinear(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) { return (a.transpose() * b)(0); }

Eigen::VectorXcd bilinear_normalize(const Eigen::VectorXcd& v)
{
  const cd s = std::sqrt(bilinear(v, v));
  if (std::abs(s) * std::abs(s) < 1e-8 * v.squaredNorm())
    throw NumericalError("bilinear normalization of a quasi-null eigenvector (defective cluster)");
  return v / s;
}

}  // namespace

std::vector<DispersionBranch> eigen_branches(const GalerkinOperatorSet& set,
                                             const ModelParams& params, const Vec3& omega,
                                             const std::vector<double>& eta_grid,
                                             double overlap_threshold)
{
  const int nb = fluid_count(set.pair);
  const auto sectors = symmetry_sectors(set.basis, omega);
  std::vector<Eigen::VectorXcd> prev;
  for (const auto& v : fluid_start_vectors(set, omega)) prev.push_back(v.cast<cd>());

  std::vector<DispersionBranch> out(static_cast<std::size_t>(nb));
  for (int l = 0; l < nb; ++l) {
    out[l].pair = set.pair;
    out[l].omega = omega;
    out[l].label = l;
  }

  for (double eta : eta_grid) {
    const ModeOperator M = build_l_eta(set, params, eta, omega);
    const SectorEigen se = sector_eigen(M.matrix, sectors, false);
    const std::vector<int> cand = se.top_real(nb);

    // greedy assignment by overlap with the previous vectors
    std::vector<int> assign(std::size_t(nb), -1);
    std::vector<char> taken(cand.size(), 0);
    for (int round = 0; round < nb; ++round) {
      double best = -1.0;
      int bl = -1, bc = -1;
      for (int l = 0; l < nb; ++l) {
        if (assign[l] >= 0) continue;
        for (std::size_t c = 0; c < cand.size(); ++c) {
          if (taken[c]) continue;
          const double o = herm_overlap(prev[l], se.vectors.col(cand[c]));
          if (o > best) best = o, bl = l, bc = int(c);
        }
      }
      assign[bl] = bc;
      taken[std::size_t(bc)] = 1;
    }

    // clusters of equal eigenvalues: project the previous vectors onto the span
    std::vector<Eigen::VectorXcd> next(static_cast<std::size_t>(nb));
    std::vector<cd> val(static_cast<std::size_t>(nb));
    std::vector<char> done(std::size_t(nb), 0);
    for (int l = 0; l < nb; ++l) {
      if (done[l]) continue;
      const cd lam = se.values[cand[assign[l]]];
      std::vector<int> group;
      for (int k = 0; k < nb; ++k)
        if (!done[k] && std::abs(se.values[cand[assign[k]]] - lam) <= 1e-9 * (1.0 + std::abs(lam)))
          group.push_back(k);
      Eigen::MatrixXcd S(se.vectors.rows(), long(group.size()));
      for (std::size_t a = 0; a < group.size(); ++a) S.col(long(a)) = se.vectors.col(cand[assign[group[a]]]);
      std::vector<Eigen::VectorXcd> built;
      for (int k : group) {
        Eigen::VectorXcd v;
        if (group.size() == 1) {
          v = S.col(0);
        } else {
          const Eigen::MatrixXcd G = S.transpose() * S;
          const Eigen::VectorXcd x = G.fullPivLu().solve(S.transpose() * prev[k]);
          v = S * x;
          for (const auto& u : built) v -= bilinear(u, v) * u;
        }
        v = bilinear_normalize(v);
        if (bilinear(prev[k], v).real() < 0.0) v = -v;
        built.push_back(v);
        next[k] = v;
        val[k] = bilinear(v, M.matrix * v);
        if (group.size() == 1) val[k] = se.values[cand[assign[k]]];
        done[k] = 1;
      }
    }

    for (int l = 0; l < nb; ++l) {
      const double o = herm_overlap(prev[l], next[l]);
      if (o < overlap_threshold) {
        std::ostringstream os;
        os << "eigen_branches: branch " << l << " of " << to_string(set.pair)
           << " lost continuity at eta = " << eta << " (overlap " << o << ")";
        throw NumericalError(os.str());
      }
      out[l].min_overlap = std::min(out[l].min_overlap, o);
      out[l].eta.push_back(eta);
      out[l].value.push_back(val[l]);
      out[l].vector.push_back(next[l]);
    }
    prev = next;
  }
  return out;
}

DispersionFit fit_dispersion(const DispersionBranch& branch, double window, double max_residual)
{
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < branch.eta.size(); ++i)
    if (branch.eta[i] <= window) idx.push_back(i);
  if (idx.size() < 8)
    throw ConfigError("fit_dispersion: need at least 8 grid points with eta <= " +
                      std::to_string(window));
  const long n = long(idx.size());
  Eigen::MatrixXd Xi(n, 2), Xr(n, 2);
  Eigen::VectorXd yi(n), yr(n);
  double scale = 0.0;
  for (long k = 0; k < n; ++k) {
    const double e = branch.eta[idx[k]];
    const cd s = branch.value[idx[k]];
    Xi(k, 0) = e;
    Xi(k, 1) = e * e * e;
    Xr(k, 0) = e * e;
    Xr(k, 1) = e * e * e * e;
    yi[k] = s.imag();
    yr[k] = s.real();
    scale = std::max(scale, std::abs(s));
  }
  const Eigen::VectorXd ci = least_squares(Xi, yi), cr = least_squares(Xr, yr);
  DispersionFit f;
  f.pair = branch.pair;
  f.label = branch.label;
  f.a1 = -ci[0];
  f.a2 = -cr[0];
  f.window = window;
  f.points = int(n);
  const double ss = (Xi * ci - yi).squaredNorm() + (Xr * cr - yr).squaredNorm();
  f.residual = std::sqrt(ss / double(n)) / std::max(scale, 1e-300);
  if (f.residual > max_residual) {
    std::ostringstream os;
    os << "fit_dispersion: residual " << f.residual << " above " << max_residual
       << " for branch " << branch.label << "; use a smaller window";
    throw NumericalError(os.str());
  }
  if (branch.pair == SpeciesPair::AB()) {
    // v(eta) = v0 + eta E_D1 over the first four points
    const long m = std::min<long>(4, long(branch.eta.size()));
    Eigen::MatrixXd X(m, 2);
    for (long k = 0; k < m; ++k) X(k, 0) = 1.0, X(k, 1) = branch.eta[std::size_t(k)];
    const long dim = branch.vector[0].size();
    f.E_D1.resize(dim);
    for (long c = 0; c < dim; ++c) {
      Eigen::VectorXd re(m), im(m);
      for (long k = 0; k < m; ++k) {
        re[k] = branch.vector[std::size_t(k)][c].real();
        im[k] = branch.vector[std::size_t(k)][c].imag();
      }
      f.E_D1[c] = cd(least_squares(X, re)[1], least_squares(X, im)[1]);
    }
  }
  return f;
}

double diffusion_coefficient_direct(const GalerkinOperatorSet& set, const ModelParams& params,
                                    const Vec3& omega, int label, double band)
{
  const Eigen::MatrixXd T = transport_matrix(set.basis, omega) / params.mass(set.pair.X);
  const auto start = fluid_start_vectors(set, omega);
  if (label < 0 || label >= int(start.size()))
    throw ConfigError("diffusion_coefficient_direct: branch label out of range");
  Eigen::VectorXd w = T * start[std::size_t(label)];
  if (set.pair == SpeciesPair::BB()) {
    for (const auto& c : chi_vectors(set.basis)) w -= c.dot(w) * c;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(set.l_full);
  double resid = 0.0;
  for (long i = 0; i < es.eigenvalues().size(); ++i)
    if (std::abs(es.eigenvalues()[i]) <= band)
      resid = std::max(resid, std::abs(es.eigenvectors().col(i).dot(w)));
  if (resid > 1e-8) {
    std::ostringstream os;
    os << "diffusion_coefficient_direct: right-hand side not orthogonal to the kernel ("
       << resid << ")";
    throw NumericalError(os.str());
  }
  return -w.dot(symmetric_pinv(set.l_full, band) * w);
}

std::vector<CancellationRecord> cancellation_orders(const DispersionBranch& d,
                                                    const std::vector<DispersionBranch>& bb,
                                                    const CrossOperator& cross, double window)
{
  std::vector<CancellationRecord> out;
  for (const auto& b : bb) {
    if (b.eta != d.eta) throw ConfigError("cancellation_orders: branches use different eta grids");
    CancellationRecord r;
    r.j = b.label;
    r.eta = b.eta;
    for (std::size_t i = 0; i < b.eta.size(); ++i) {
      const Eigen::VectorXcd Xe = cross.matrix.cast<cd>() * d.vector[i];
      r.magnitude.push_back(std::abs(bilinear(b.vector[i], Xe)));
    }
    std::vector<double> lx, ly;
    double mx = 0.0;
    for (std::size_t i = 0; i < r.eta.size(); ++i) {
      if (r.eta[i] > window) continue;
      mx = std::max(mx, r.magnitude[i]);
      if (r.magnitude[i] > 0.0) {
        lx.push_back(std::log(r.eta[i]));
        ly.push_back(std::log(r.magnitude[i]));
      }
    }
    if (mx < 1e-12 || lx.size() < 2) {
      r.exact = true;
      r.slope = std::numeric_limits<double>::quiet_NaN();
    } else {
      Eigen::MatrixXd X(long(lx.size()), 2);
      Eigen::VectorXd y(long(ly.size()));
      for (std::size_t i = 0; i < lx.size(); ++i) X(long(i), 0) = 1.0, X(long(i), 1) = lx[i], y[long(i)] = ly[i];
      r.slope = least_squares(X, y)[1];
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<CancellationRecord> cancellation_orders(const GalerkinOperatorSet& set_A,
                                                    const GalerkinOperatorSet& set_B,
                                                    const CrossOperator& cross,
                                                    const ModelParams& params, const Vec3& omega,
                                                    const std::vector<double>& eta_grid,
                                                    double window)
{
  const auto d = eigen_branches(set_A, params, omega, eta_grid);
  const auto b = eigen_branches(set_B, params, omega, eta_grid);
  return cancellation_orders(d[0], b, cross, window);
}

SpectralGapReport spectral_gap_scan(const GalerkinOperatorSet& set, const ModelParams& params,
                                    const Vec3& omega, double eta_max, int count, double delta)
{
  if (!(delta > 0.0) || !(eta_max > delta) || count < 2)
    throw ConfigError("spectral_gap_scan: need 0 < delta < eta_max and count >= 2");
  const int nb = fluid_count(set.pair);
  const auto sectors = symmetry_sectors(set.basis, omega);
  std::vector<double> grid;
  for (int i = 0; i < count; ++i) grid.push_back(eta_max * i / (count - 1));
  grid.push_back(delta);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  SpectralGapReport r;
  r.pair = set.pair;
  r.delta = delta;
  double worst_long = -std::numeric_limits<double>::infinity();
  double worst_short = -std::numeric_limits<double>::infinity();
  double min_fluid = std::numeric_limits<double>::infinity();
  for (double eta : grid) {
    const ModeOperator M = build_l_eta(set, params, eta, omega);
    const Eigen::VectorXcd ev = sector_eigenvalues(M.matrix, sectors);
    std::vector<double> re(std::size_t(ev.size()));
    for (long i = 0; i < ev.size(); ++i) re[std::size_t(i)] = ev[i].real();
    std::sort(re.begin(), re.end(), std::greater<>());
    r.eta.push_back(eta);
    if (eta < delta) {
      r.max_re.push_back(re[std::size_t(nb)]);
      r.min_fluid_re.push_back(re[std::size_t(nb - 1)]);
      worst_long = std::max(worst_long, re[std::size_t(nb)]);
      min_fluid = std::min(min_fluid, re[std::size_t(nb - 1)]);
      if (eta == 0.0) r.gap_zero = -re[std::size_t(nb)];
    } else {
      r.max_re.push_back(re[0]);
      r.min_fluid_re.push_back(std::numeric_limits<double>::quiet_NaN());
      worst_short = std::max(worst_short, re[0]);
    }
  }
  r.tau_long = -worst_long;
  r.tau_short = -worst_short;
  r.tau = std::min(r.tau_long, r.tau_short);
  r.exhaustive = min_fluid > worst_long;
  if (!(r.tau > 0.0)) {
    std::ostringstream os;
    os << "spectral_gap_scan: nonpositive gap " << r.tau << " for " << to_string(set.pair)
       << " at delta = " << delta << " (grid too coarse or delta too large)";
    throw CheckError(os.str());
  }
  return r;
}

ProjectorSet projectors(const GalerkinOperatorSet& set, const ModelParams& params,
                        const Vec3& omega, double eta)
{
  const int nb = fluid_count(set.pair);
  const auto sectors = symmetry_sectors(set.basis, omega);
  const ModeOperator M = build_l_eta(set, params, eta, omega);
  const SectorEigen se = sector_eigen(M.matrix, sectors, false);
  const std::vector<int> top = se.top_real(nb);
  const long n = M.matrix.rows();

  std::vector<Eigen::VectorXcd> vs;
  for (int k : top) {
    Eigen::VectorXcd v = se.vectors.col(k);
    for (std::size_t a = 0; a < vs.size(); ++a) {
      const int ka = top[a];
      if (std::abs(se.values[ka] - se.values[k]) <= 1e-9 * (1.0 + std::abs(se.values[k])))
        v -= bilinear(vs[a], v) * vs[a];
    }
    vs.push_back(bilinear_normalize(v));
  }
  ProjectorSet p;
  p.eta = eta;
  p.Pi = Eigen::MatrixXcd::Zero(n, n);
  for (const auto& v : vs) p.Pi += v * v.transpose();
  p.Pi_perp = Eigen::MatrixXcd::Identity(n, n) - p.Pi;
  p.P1 = Eigen::MatrixXd::Identity(n, n);
  for (const auto& k : fluid_start_vectors(set, omega)) p.P1 -= k * k.transpose();
  p.idempotency_defect = (p.Pi * p.Pi - p.Pi).cwiseAbs().maxCoeff();
  p.commutation_defect = (p.Pi * M.matrix - M.matrix * p.Pi).cwiseAbs().maxCoeff();
  return p;
}

}  // namespace landau
