#include "landau/dynamics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include <Eigen/Eigenvalues>

#include "landau/error.hpp"
#include "landau/quadrature.hpp"
#include "landau/spectral.hpp"

namespace landau {

namespace {

cd expm1c(cd x)
{
  const double a = x.real(), b = x.imag();
  const double s = std::sin(0.5 * b);
  return {std::expm1(a) * std::cos(b) - 2.0 * s * s, std::exp(a) * std::sin(b)};
}

std::vector<int> touched_indices(const std::vector<std::vector<int>>& sectors,
                                 const Eigen::VectorXcd& a, const Eigen::VectorXcd& b)
{
  std::vector<int> idx;
  for (const auto& s : sectors) {
    bool hit = false;
    for (int i : s) hit = hit || a[i] != cd(0.0) || (b.size() && b[i] != cd(0.0));
    if (hit) idx.insert(idx.end(), s.begin(), s.end());
  }
  return idx;
}

Eigen::MatrixXcd gather(const Eigen::MatrixXcd& M, const std::vector<int>& r,
                        const std::vector<int>& c)
{
  Eigen::MatrixXcd out(long(r.size()), long(c.size()));
  for (std::size_t a = 0; a < r.size(); ++a)
    for (std::size_t b = 0; b < c.size(); ++b) out(long(a), long(b)) = M(r[a], c[b]);
  return out;
}

void check_times(const std::vector<double>& times)
{
  if (times.empty() || times[0] != 0.0)
    throw ConfigError("time grid must start at t = 0");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1])) throw ConfigError("time grid must be strictly increasing");
}

void check_system(const CoupledSystem& sys)
{
  if (!sys.ab || !sys.bb || !sys.cross) throw ConfigError("coupled system is incomplete");
  if (sys.ab->basis.size() != sys.bb->basis.size() || sys.ab->basis.degree != sys.bb->basis.degree)
    throw ConfigError("species bases must share the degree");
}

}  // namespace

cd divided_exp(cd mu, cd lambda, double t, double resonance)
{
  if (t == 0.0) return 0.0;
  const bool mu_leads = mu.real() >= lambda.real();
  const cd nu = mu_leads ? mu : lambda;
  const cd other = mu_leads ? lambda : mu;
  const cd x = (other - nu) * t;
  cd phi1;
  if (std::abs(lambda - mu) < resonance && std::abs(x) < 0.5) {
    // 1 + x/2 + x^2/6 + ... + x^5/720
    phi1 = 1.0 / 720.0;
    for (int n = 5; n >= 1; --n) phi1 = 1.0 / std::tgamma(n + 1.0) + x * phi1;
  } else if (x == cd(0.0)) {
    phi1 = 1.0;
  } else {
    phi1 = expm1c(x) / x;
  }
  return t * std::exp(nu * t) * phi1;
}

ModeTrajectory evolve_pair_mode(const CoupledSystem& sys, double eta, const Eigen::VectorXcd& g0,
                                const Eigen::VectorXcd& h0, const std::vector<double>& times)
{
  check_system(sys);
  check_times(times);
  const long n = long(sys.ab->basis.size());
  if (g0.size() != n || h0.size() != n) throw ConfigError("initial data size mismatch");

  const auto sectors = symmetry_sectors(sys.ab->basis, sys.omega);
  const std::vector<int> idx = touched_indices(sectors, g0, h0);
  const long m = long(idx.size());

  ModeTrajectory tr;
  tr.eta = eta;
  tr.times = times;
  Eigen::MatrixXcd B = Eigen::MatrixXcd::Zero(2 * m, 2 * m);
  Eigen::VectorXcd x(2 * m);
  if (m > 0) {
    const Eigen::MatrixXcd MA = build_l_eta(*sys.ab, sys.params, eta, sys.omega).matrix;
    const Eigen::MatrixXcd MB = build_l_eta(*sys.bb, sys.params, eta, sys.omega).matrix;
    B.topLeftCorner(m, m) = gather(MA, idx, idx);
    B.bottomLeftCorner(m, m) = gather(sys.cross->matrix.cast<cd>(), idx, idx);
    B.bottomRightCorner(m, m) = gather(MB, idx, idx);
    for (long a = 0; a < m; ++a) x[a] = g0[idx[a]], x[m + a] = h0[idx[a]];
  }

  Eigen::MatrixXcd E;
  double dt_cached = -1.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (i > 0 && m > 0) {
      const double dt = times[i] - times[i - 1];
      if (std::abs(dt - dt_cached) > 1e-13 * times[i]) {
        E = expm(dt * B);
        dt_cached = dt;
      }
      x = E * x;
    }
    Eigen::VectorXcd g = Eigen::VectorXcd::Zero(n), h = Eigen::VectorXcd::Zero(n);
    for (long a = 0; a < m; ++a) g[idx[a]] = x[a], h[idx[a]] = x[m + a];
    tr.g_norm.push_back(g.norm());
    tr.h_norm.push_back(h.norm());
    tr.g.push_back(std::move(g));
    tr.h.push_back(std::move(h));
  }
  return tr;
}

std::string to_string(Component c)
{
  switch (c) {
    case Component::g: return "g";
    case Component::g_fluid: return "g-fluid";
    case Component::g_nonfluid: return "g-nonfluid";
    case Component::g_short: return "g-short";
    case Component::h: return "h";
    case Component::h00: return "h00";
    case Component::h0perp: return "h0perp";
    case Component::hperp0: return "hperp0";
    case Component::hperpperp: return "hperpperp";
    case Component::h_short: return "h-short";
  }
  return "?";
}

Component parse_component(const std::string& name)
{
  for (int i = 0; i < component_count; ++i)
    if (to_string(Component(i)) == name) return Component(i);
  throw ConfigError("unknown component '" + name +
                    "' (g, g-fluid, g-nonfluid, g-short, h, h00, h0perp, hperp0, hperpperp, "
                    "h-short)");
}

ModalExpansion::ModalExpansion(const CoupledSystem& sys, double eta, const Eigen::VectorXcd& g0,
                               double delta, double resonance)
    : eta_(eta), long_wave_(eta < delta), resonance_(resonance)
{
  check_system(sys);
  const long n = long(sys.ab->basis.size());
  if (g0.size() != n) throw ConfigError("initial data size mismatch");
  const auto sectors = symmetry_sectors(sys.ab->basis, sys.omega);
  const Eigen::MatrixXcd MA = build_l_eta(*sys.ab, sys.params, eta, sys.omega).matrix;
  const Eigen::MatrixXcd MB = build_l_eta(*sys.bb, sys.params, eta, sys.omega).matrix;
  const SectorEigen eA = sector_eigen(MA, sectors, true);
  const SectorEigen eB = sector_eigen(MB, sectors, true);

  std::vector<char> sector_on(sectors.size(), 0);
  for (std::size_t s = 0; s < sectors.size(); ++s)
    for (int i : sectors[s]) sector_on[s] = sector_on[s] || g0[i] != cd(0.0);
  for (std::size_t s = 0; s < sectors.size(); ++s)
    if (sector_on[s]) active_.insert(active_.end(), sectors[s].begin(), sectors[s].end());

  std::vector<char> fa(std::size_t(n), 0), fb(std::size_t(n), 0);
  if (long_wave_) {
    for (int i : eA.top_real(fluid_count(SpeciesPair::AB()))) fa[std::size_t(i)] = 1;
    for (int i : eB.top_real(fluid_count(SpeciesPair::BB()))) fb[std::size_t(i)] = 1;
  }
  for (long i = 0; i < n; ++i) {
    if (sector_on[std::size_t(eA.sector_of[std::size_t(i)])]) l_idx_.push_back(int(i)), l_fluid_.push_back(fa[i]);
    if (sector_on[std::size_t(eB.sector_of[std::size_t(i)])]) k_idx_.push_back(int(i)), k_fluid_.push_back(fb[i]);
  }
  const long nl = long(l_idx_.size()), nk = long(k_idx_.size());
  lam_.resize(nl);
  mu_.resize(nk);
  V_.resize(n, nl);
  U_.resize(n, nk);
  for (long a = 0; a < nl; ++a) lam_[a] = eA.values[l_idx_[a]], V_.col(a) = eA.vectors.col(l_idx_[a]);
  for (long a = 0; a < nk; ++a) mu_[a] = eB.values[k_idx_[a]], U_.col(a) = eB.vectors.col(k_idx_[a]);
  y_.resize(nl);
  for (long a = 0; a < nl; ++a) y_[a] = (eA.left.row(l_idx_[a]) * g0)(0);
  Eigen::MatrixXcd Wb(nk, n);
  for (long a = 0; a < nk; ++a) Wb.row(a) = eB.left.row(k_idx_[a]);
  X_ = Wb * sys.cross->matrix.cast<cd>() * V_;
}

std::array<Eigen::VectorXcd, component_count> ModalExpansion::at(double t) const
{
  const long n = V_.rows(), nl = lam_.size(), nk = mu_.size();
  std::array<Eigen::VectorXcd, component_count> out;
  for (auto& v : out) v = Eigen::VectorXcd::Zero(n);

  Eigen::VectorXcd cf = Eigen::VectorXcd::Zero(nl), cn = Eigen::VectorXcd::Zero(nl);
  for (long l = 0; l < nl; ++l) (l_fluid_[l] ? cf : cn)[l] = std::exp(lam_[l] * t) * y_[l];
  // z[a][b]: B-side fluid (a = 0) or not, A-side fluid (b = 0) or not
  Eigen::VectorXcd z[2][2];
  for (auto& r : z)
    for (auto& v : r) v = Eigen::VectorXcd::Zero(nk);
  for (long k = 0; k < nk; ++k) {
    cd acc[2] = {0.0, 0.0};
    for (long l = 0; l < nl; ++l) {
      const cd xy = X_(k, l) * y_[l];
      if (xy == cd(0.0)) continue;
      acc[l_fluid_[l] ? 0 : 1] += divided_exp(mu_[k], lam_[l], t, resonance_) * xy;
    }
    const int a = k_fluid_[k] ? 0 : 1;
    z[a][0][k] = acc[0];
    z[a][1][k] = acc[1];
  }
  const Eigen::VectorXcd g = V_ * (cf + cn);
  Eigen::VectorXcd parts[2][2];
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) parts[a][b] = U_ * z[a][b];
  const Eigen::VectorXcd h = parts[0][0] + parts[0][1] + parts[1][0] + parts[1][1];

  out[int(Component::g)] = g;
  out[int(Component::h)] = h;
  if (long_wave_) {
    out[int(Component::g_fluid)] = V_ * cf;
    out[int(Component::g_nonfluid)] = V_ * cn;
    out[int(Component::h00)] = parts[0][0];
    out[int(Component::h0perp)] = parts[0][1];
    out[int(Component::hperp0)] = parts[1][0];
    out[int(Component::hperpperp)] = parts[1][1];
  } else {
    out[int(Component::g_short)] = g;
    out[int(Component::h_short)] = h;
  }
  return out;
}

std::vector<cd> ModalExpansion::fluid_values() const
{
  std::vector<cd> v;
  for (long l = 0; l < lam_.size(); ++l)
    if (l_fluid_[l]) v.push_back(lam_[l]);
  for (long k = 0; k < mu_.size(); ++k)
    if (k_fluid_[k]) v.push_back(mu_[k]);
  return v;
}

HSplit h_component_split(const CoupledSystem& sys, double eta, const Eigen::VectorXcd& g0,
                         const std::vector<double>& times, double delta, double tol)
{
  if (!(eta < delta)) throw ConfigError("h_component_split needs eta < delta");
  const ModalExpansion me(sys, eta, g0, delta);
  const ModeTrajectory tr =
      evolve_pair_mode(sys, eta, g0, Eigen::VectorXcd::Zero(g0.size()), times);
  HSplit s;
  s.eta = eta;
  s.times = times;
  for (std::size_t i = 0; i < times.size(); ++i) {
    auto c = me.at(times[i]);
    const Eigen::VectorXcd sum = c[int(Component::h00)] + c[int(Component::h0perp)] +
                                 c[int(Component::hperp0)] + c[int(Component::hperpperp)];
    const double ref = tr.h[i].norm();
    if (ref > 1e-300) {
      const double d = (sum - tr.h[i]).norm() / ref;
      if (d > s.max_relative_defect) s.max_relative_defect = d, s.worst_time = times[i];
    }
    s.h00.push_back(std::move(c[int(Component::h00)]));
    s.h0perp.push_back(std::move(c[int(Component::h0perp)]));
    s.hperp0.push_back(std::move(c[int(Component::hperp0)]));
    s.hperpperp.push_back(std::move(c[int(Component::hperpperp)]));
    s.direct.push_back(tr.h[i]);
  }
  if (s.max_relative_defect > tol) {
    std::ostringstream os;
    os << "h_component_split: parts differ from the direct evolution by "
       << s.max_relative_defect << " (relative) at t = " << s.worst_time << ", eta = " << eta;
    throw NumericalError(os.str());
  }
  return s;
}

std::vector<ResonanceProbe> resonance_continuity(const CoupledSystem& sys,
                                                 const std::vector<double>& times, double delta,
                                                 double resonance)
{
  check_system(sys);
  const auto sectors = symmetry_sectors(sys.ab->basis, sys.omega);
  const int nb = fluid_count(SpeciesPair::BB());
  // sorted distances |lambda - sigma_j| of the BB fluid values to the AB one
  auto top = [](const Eigen::VectorXcd& v, int k) {
    std::vector<cd> s(v.data(), v.data() + v.size());
    std::stable_sort(s.begin(), s.end(), [](cd a, cd b) { return a.real() > b.real(); });
    s.resize(std::size_t(k));
    return s;
  };
  auto distances = [&](double eta) {
    const auto a = top(sector_eigenvalues(build_l_eta(*sys.ab, sys.params, eta, sys.omega).matrix, sectors), 1);
    const auto b = top(sector_eigenvalues(build_l_eta(*sys.bb, sys.params, eta, sys.omega).matrix, sectors), nb);
    std::vector<double> d;
    for (cd s : b) d.push_back(std::abs(s - a[0]));
    std::sort(d.begin(), d.end());
    return d;
  };
  Eigen::VectorXcd g0 = Eigen::VectorXcd::Zero(long(sys.ab->basis.size()));
  g0[sys.ab->basis.find({0, 0, 0})] = 1.0;

  std::vector<ResonanceProbe> out;
  for (int r = 0; r < nb; ++r) {
    double lo = 1e-9, hi = 0.5 * delta;
    if (!(distances(lo)[std::size_t(r)] < resonance && distances(hi)[std::size_t(r)] > resonance))
      continue;
    for (int it = 0; it < 32; ++it) {
      const double mid = std::sqrt(lo * hi);
      (distances(mid)[std::size_t(r)] < resonance ? lo : hi) = mid;
    }
    ResonanceProbe p;
    p.branch = r;
    p.eta_switch = std::sqrt(lo * hi);
    // same eta, once with every pair on the series side and once on the closed-form side
    const double d = distances(p.eta_switch)[std::size_t(r)];
    const ModalExpansion below(sys, p.eta_switch, g0, delta, 0.5 * d);
    const ModalExpansion above(sys, p.eta_switch, g0, delta, 2.0 * d);
    for (double t : times) {
      const Eigen::VectorXcd a = below.at(t)[int(Component::h00)];
      const Eigen::VectorXcd b = above.at(t)[int(Component::h00)];
      const double ref = std::max(a.norm(), b.norm());
      if (ref > 1e-300) p.jump = std::max(p.jump, (a - b).norm() / ref);
    }
    out.push_back(p);
  }
  return out;
}

RadialGrid radial_grid(double delta, double eta_max)
{
  if (!(delta > 0.0) || !(eta_max > delta))
    throw ConfigError("radial_grid: need 0 < delta < eta_max");
  std::vector<double> br{0.0};
  const double u = std::min(0.06, delta);
  const int nu = std::max(1, int(std::ceil(u / 1e-3 - 1e-9)));
  for (int i = 1; i <= nu; ++i) br.push_back(u * i / nu);
  if (delta > u) {
    double b = u;
    while (b * 1.15 < delta) br.push_back(b *= 1.15);
    if (br.size() > 2 && delta - br.back() < 0.3 * (br.back() - br[br.size() - 2]))
      br.back() = delta;
    else
      br.push_back(delta);
  }
  const Rule1D inner = composite_gauss_legendre(br, 8);
  const Rule1D outer = composite_gauss_legendre({delta, 0.5 * (delta + eta_max), eta_max}, 16);
  RadialGrid g;
  g.eta = inner.x;
  g.weight = inner.w;
  g.eta.insert(g.eta.end(), outer.x.begin(), outer.x.end());
  g.weight.insert(g.weight.end(), outer.w.begin(), outer.w.end());
  return g;
}

double bump_profile(double eta)
{
  const double s = eta / 4.0;
  if (std::abs(s) >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - s * s));
}

std::vector<double> log_time_grid(double t_min, double t_max, int count)
{
  std::vector<double> t{0.0};
  const auto g = geometric_grid(t_min, t_max, count);
  t.insert(t.end(), g.begin(), g.end());
  return t;
}

bool is_isotropic(const Basis& basis, const Eigen::VectorXcd& c, double tol)
{
  const double scale = std::max(c.norm(), 1e-300);
  for (std::size_t a = 0; a < basis.size(); ++a) {
    if (std::abs(c[long(a)]) <= tol * scale) continue;
    MultiIndex m = basis.index[a];
    if (m[0] % 2 || m[1] % 2 || m[2] % 2) return false;
    std::sort(m.begin(), m.end());
    do {
      const int j = basis.find(m);
      if (j < 0 || std::abs(c[j] - c[long(a)]) > tol * scale) return false;
    } while (std::next_permutation(m.begin(), m.end()));
  }
  return true;
}

void parallel_for(int count, int threads, const std::function<void(int)>& fn)
{
  threads = std::max(1, std::min(threads, count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr err;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (int w = 0; w < threads; ++w)
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!err) err = std::current_exception();
          next = count;
        }
      }
    });
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

RadialStudy radial_study(const CoupledSystem& sys, const RadialGrid& grid,
                         const std::vector<double>& times, double delta,
                         const Eigen::VectorXcd& g_p, const std::function<double(double)>& phi,
                         int threads, double check_time)
{
  check_system(sys);
  check_times(times);
  if (!is_isotropic(sys.ab->basis, g_p))
    throw ConfigError("initial p-profile is not isotropic; only the e_3 mode representative "
                      "is supported");
  const DerivativeMatrices dm = derivative_matrices(sys.params, sys.ab->basis);
  const Eigen::MatrixXd S = dm.stacked();
  const Eigen::MatrixXd GD = S.transpose() * S;

  RadialStudy st;
  st.grid = grid;
  st.times = times;
  st.delta = delta;
  const std::size_t ne = grid.eta.size(), nt = times.size();
  for (auto& c : st.norms)
    for (auto& l : c) l.assign(ne, std::vector<double>(nt, 0.0));
  std::vector<double> defect(ne, 0.0);

  parallel_for(int(ne), threads, [&](int i) {
    const double eta = grid.eta[std::size_t(i)];
    const Eigen::VectorXcd g0 = phi(eta) * g_p;
    if (g0.norm() == 0.0) return;
    const ModalExpansion me(sys, eta, g0, delta);
    const auto& act = me.active();
    Eigen::MatrixXd GDa(long(act.size()), long(act.size()));
    for (std::size_t a = 0; a < act.size(); ++a)
      for (std::size_t b = 0; b < act.size(); ++b) GDa(long(a), long(b)) = GD(act[a], act[b]);
    for (std::size_t t = 0; t < nt; ++t) {
      const auto comps = me.at(times[t]);
      for (int c = 0; c < component_count; ++c) {
        Eigen::VectorXcd v(long(act.size()));
        for (std::size_t a = 0; a < act.size(); ++a) v[long(a)] = comps[c][act[a]];
        st.norms[c][0][std::size_t(i)][t] = v.norm();
        st.norms[c][1][std::size_t(i)][t] = std::sqrt(std::max(0.0, (v.adjoint() * GDa * v)(0).real()));
      }
    }
    if (check_time > 0.0) {
      const ModeTrajectory tr = evolve_pair_mode(sys, eta, g0, Eigen::VectorXcd::Zero(g0.size()),
                                                 {0.0, check_time});
      const auto c = me.at(check_time);
      const double dg = (c[int(Component::g)] - tr.g[1]).norm() / std::max(tr.g[1].norm(), 1e-300);
      const double dh = (c[int(Component::h)] - tr.h[1]).norm() / std::max(tr.h[1].norm(), 1e-300);
      defect[std::size_t(i)] = std::max(dg, dh);
    }
  });
  for (std::size_t i = 0; i < ne; ++i) {
    st.max_direct_defect = std::max(st.max_direct_defect, defect[i]);
    if (defect[i] > 1e-8) {
      std::ostringstream os;
      os << "radial_study: modal and direct evolution differ by " << defect[i]
         << " at eta = " << grid.eta[i] << ", t = " << check_time;
      throw NumericalError(os.str());
    }
  }
  return st;
}

NormSeries synthesize_norms(const RadialStudy& study, Component c, int k, int l)
{
  if (k < 0 || l < 0 || l > 1) throw ConfigError("synthesize_norms: need k >= 0 and l in {0, 1}");
  NormSeries s;
  s.component = c;
  s.k = k;
  s.l = l;
  s.times = study.times;
  const auto& N = study.norms[int(c)][l];
  const double two_pi3 = std::pow(2.0 * std::numbers::pi, 3);
  for (std::size_t t = 0; t < study.times.size(); ++t) {
    CompensatedSum l2, li;
    for (std::size_t i = 0; i < study.grid.eta.size(); ++i) {
      const double e = study.grid.eta[i];
      const double w = study.grid.weight[i] * 4.0 * std::numbers::pi * e * e;
      const double v = N[i][t];
      l2.add(w * std::pow(e, 2 * k) * v * v);
      li.add(w * std::pow(e, k) * v);
    }
    s.l2.push_back(std::sqrt(two_pi3 * std::max(0.0, l2.value())));
    s.linf.push_back(li.value());
  }
  return s;
}

DecayFit fit_decay(const std::vector<double>& times, const std::vector<double>& values, double t1,
                   double t2, bool log_linear, double max_residual)
{
  if (times.size() != values.size()) throw ConfigError("fit_decay: size mismatch");
  if (!(t2 > t1)) throw ConfigError("fit_decay: empty window");
  if (!log_linear && t1 < 10.0) throw ConfigError("fit_decay: log-log fits need t1 >= 10");
  std::vector<double> x, y;
  DecayFit f;
  f.t1 = t1;
  f.t2 = t2;
  f.log_linear = log_linear;
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < t1 || times[i] > t2) continue;
    if (!(values[i] > 1e-280) || !std::isfinite(values[i])) continue;
    if (values[i] > prev * (1.0 + 1e-12)) f.monotone = false;
    prev = values[i];
    x.push_back(log_linear ? times[i] : std::log1p(times[i]));
    y.push_back(std::log(values[i]));
  }
  const std::size_t need = log_linear ? 4 : 12;
  if (x.size() < need) {
    std::ostringstream os;
    os << "fit_decay: " << x.size() << " usable samples in [" << t1 << ", " << t2 << "], need "
       << need;
    throw ConfigError(os.str());
  }
  const double n = double(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) sxx += (x[i] - mx) * (x[i] - mx), sxy += (x[i] - mx) * (y[i] - my);
  f.slope = sxy / sxx;
  double ssr = 0.0, ymin = y[0], ymax = y[0];
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (my + f.slope * (x[i] - mx));
    ssr += r * r;
    ymin = std::min(ymin, y[i]);
    ymax = std::max(ymax, y[i]);
  }
  f.points = int(x.size());
  f.half_width = 2.0 * std::sqrt(ssr / (n - 2.0) / sxx);
  f.residual = std::sqrt(ssr / n);
  if (log_linear) f.residual /= std::max(ymax - ymin, 1e-300);
  f.valid = f.residual <= max_residual;
  return f;
}

PicardDecomposition picard_decompose(const GalerkinOperatorSet& ab, const ModelParams& params,
                                     const LambdaKSplit& split, double eta,
                                     const Eigen::VectorXcd& f0, int k,
                                     const std::vector<double>& times, double tol)
{
  if (ab.pair != SpeciesPair::AB()) throw ConfigError("picard_decompose needs the pair AB");
  if (k < 0) throw ConfigError("picard_decompose: order must be nonnegative");
  check_times(times);
  const long n = long(ab.basis.size());
  if (f0.size() != n) throw ConfigError("picard_decompose: data size mismatch");
  const double dt = times.size() > 1 ? times[1] : 0.0;
  for (std::size_t i = 1; i < times.size(); ++i)
    if (std::abs(times[i] - times[i - 1] - dt) > 1e-12 * times.back())
      throw ConfigError("picard_decompose: time grid must be uniform");

  const auto sectors = symmetry_sectors(ab.basis, ab.omega);
  const std::vector<int> idx = touched_indices(sectors, f0, Eigen::VectorXcd());
  const long m = long(idx.size());
  const cd I(0.0, 1.0);
  const Eigen::MatrixXcd L =
      gather((-I * (eta / params.m_A)) * ab.t_omega.cast<cd>() - split.Lambda.cast<cd>(), idx, idx);
  const Eigen::MatrixXcd K = gather(split.K.cast<cd>(), idx, idx);
  const Eigen::MatrixXcd M = L + K;

  const int parts = 2 * k + 2;
  Eigen::MatrixXcd big = Eigen::MatrixXcd::Zero(parts * m, parts * m);
  for (int j = 0; j < parts; ++j) {
    big.block(j * m, j * m, m, m) = j + 1 < parts ? L : M;
    if (j > 0) big.block(j * m, (j - 1) * m, m, m) = K;
  }
  Eigen::VectorXcd x = Eigen::VectorXcd::Zero(parts * m), xf(m);
  for (long a = 0; a < m; ++a) x[a] = f0[idx[a]], xf[a] = f0[idx[a]];
  const Eigen::MatrixXcd Eb = expm(dt * big), Ef = expm(dt * M);

  PicardDecomposition pd;
  pd.eta = eta;
  pd.k = k;
  pd.times = times;
  pd.f.resize(std::size_t(parts - 1));
  pd.kappa = spectral_norm(K);
  const double n0 = f0.norm();
  auto scatter = [&](const Eigen::VectorXcd& v) {
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(n);
    for (long a = 0; a < m; ++a) out[idx[a]] = v[a];
    return out;
  };
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (i > 0) {
      x = Eb * x;
      xf = Ef * xf;
    }
    Eigen::VectorXcd sum = Eigen::VectorXcd::Zero(m);
    double jf = 1.0;
    for (int j = 0; j < parts; ++j) {
      const Eigen::VectorXcd part = x.segment(j * m, m);
      sum += part;
      if (j + 1 < parts) {
        if (j > 0) jf *= j;
        const double bound = std::pow(pd.kappa * times[i], j) / jf * n0;
        if (times[i] > 0.0 && bound > 0.0)
          pd.duhamel_ratio = std::max(pd.duhamel_ratio, part.norm() / bound);
        pd.f[std::size_t(j)].push_back(scatter(part));
      } else {
        pd.remainder.push_back(scatter(part));
      }
    }
    const double r = (sum - xf).norm() / std::max(n0, 1e-300);
    pd.residual_t.push_back(r);
    pd.residual = std::max(pd.residual, r);
    pd.full.push_back(scatter(xf));
  }
  if (pd.residual > tol) {
    std::ostringstream os;
    os << "picard_decompose: telescoping residual " << pd.residual << " at order 2k = " << 2 * k
       << ", eta = " << eta;
    throw NumericalError(os.str());
  }
  return pd;
}

SmoothingRecord smoothing_probe(const GalerkinOperatorSet& ab, const ModelParams& params,
                                const std::vector<double>& eta, const std::vector<double>& times,
                                int threads)
{
  if (ab.pair != SpeciesPair::AB()) throw ConfigError("smoothing_probe needs the pair AB");
  if (times.size() < 2) throw ConfigError("smoothing_probe: need at least two times");
  for (double t : times)
    if (!(t > 0.0 && t <= 1.0)) throw ConfigError("smoothing_probe: times must lie in (0, 1]");

  const long n = long(ab.basis.size());
  const WeightSpec m1{1.0, 0};
  Eigen::MatrixXd Vq(long(ab.quad.size()), n);
  for (std::size_t q = 0; q < ab.quad.size(); ++q) {
    const Vec3& p = ab.quad.nodes[q];
    Vq.row(long(q)) =
        std::sqrt(ab.quad.lebesgue_weight(q) * m1(params, p)) * ab.basis.values(p).transpose();
  }
  const Eigen::MatrixXd Gm = Vq.transpose() * Vq;
  const Eigen::MatrixXd S = derivative_matrices(params, ab.basis).stacked();
  const Eigen::MatrixXd SS = S.transpose() * S;

  // the weight is radial and D_i maps sectors to distinct sectors, so both norms are
  // maxima over the symmetry sectors
  const auto sectors = symmetry_sectors(ab.basis, ab.omega);
  std::vector<Eigen::MatrixXcd> ginv, ss;
  for (const auto& idx : sectors) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gather(Gm.cast<cd>(), idx, idx).real());
    ginv.push_back((es.eigenvectors() * es.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() *
                    es.eigenvectors().transpose())
                       .cast<cd>());
    ss.push_back(gather(SS.cast<cd>(), idx, idx));
  }

  SmoothingRecord r;
  r.eta = eta;
  r.times = times;
  r.p_norm.assign(times.size(), std::vector<double>(eta.size(), 0.0));
  std::vector<std::vector<double>> xs(times.size(), std::vector<double>(eta.size(), 0.0));
  parallel_for(int(eta.size()), threads, [&](int e) {
    const Eigen::MatrixXcd M = build_l_eta(ab, params, eta[std::size_t(e)], ab.omega).matrix;
    for (std::size_t s = 0; s < sectors.size(); ++s) {
      const Eigen::MatrixXcd Ms = gather(M, sectors[s], sectors[s]);
      for (std::size_t t = 0; t < times.size(); ++t) {
        const Eigen::MatrixXcd E = expm(times[t] * Ms) * ginv[s];
        const Eigen::MatrixXcd P = E.adjoint() * ss[s] * E;
        const double pn = std::sqrt(std::max(
            0.0, Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(P, Eigen::EigenvaluesOnly)
                     .eigenvalues()
                     .maxCoeff()));
        const double xn =
            std::pow(times[t], 1.5) * eta[std::size_t(e)] * spectral_norm(E);
        r.p_norm[t][std::size_t(e)] = std::max(r.p_norm[t][std::size_t(e)], pn);
        xs[t][std::size_t(e)] = std::max(xs[t][std::size_t(e)], xn);
      }
    }
  });
  for (std::size_t t = 0; t < times.size(); ++t) {
    r.p_sup.push_back(*std::max_element(r.p_norm[t].begin(), r.p_norm[t].end()));
    r.x_surface = std::max(r.x_surface, *std::max_element(xs[t].begin(), xs[t].end()));
  }
  // log-log slope in t (not 1 + t) of the small-time bound
  const double nn = double(times.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t t = 0; t < times.size(); ++t) mx += std::log(times[t]), my += std::log(r.p_sup[t]);
  mx /= nn;
  my /= nn;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t t = 0; t < times.size(); ++t) {
    const double dx = std::log(times[t]) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(r.p_sup[t]) - my);
  }
  double ssr = 0.0;
  r.p_fit.slope = sxy / sxx;
  for (std::size_t t = 0; t < times.size(); ++t) {
    const double res = std::log(r.p_sup[t]) - (my + r.p_fit.slope * (std::log(times[t]) - mx));
    ssr += res * res;
  }
  r.p_fit.label = "p-gradient";
  r.p_fit.t1 = times.front();
  r.p_fit.t2 = times.back();
  r.p_fit.points = int(times.size());
  r.p_fit.residual = std::sqrt(ssr / nn);
  r.p_fit.half_width = times.size() > 2 ? 2.0 * std::sqrt(ssr / (nn - 2.0) / sxx) : 0.0;
  r.p_fit.valid = true;
  return r;
}

}  // namespace landau
