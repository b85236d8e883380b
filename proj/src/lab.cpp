#include "landau/lab.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <random>
#include <sstream>

#include "landau/error.hpp"

namespace landau {

namespace {

const Vec3 kOmega = Vec3::UnitZ();

std::string key(SpeciesPair p) { return to_string(p); }

std::string num(double v, int digits = 4)
{
  std::ostringstream os;
  os << std::setprecision(digits) << v;
  return os.str();
}

CheckRecord make_check(std::string id, int criterion, std::string description, bool pass,
                       double value, std::string target, std::string note = {})
{
  CheckRecord r;
  r.id = std::move(id);
  r.criterion = criterion;
  r.description = std::move(description);
  r.pass = pass;
  r.value = value;
  r.target = std::move(target);
  r.note = std::move(note);
  return r;
}

ojson fit_json(const DecayFit& f)
{
  ojson j;
  j["label"] = f.label;
  j["window"] = {f.t1, f.t2};
  j["log_linear"] = f.log_linear;
  j["slope"] = f.slope;
  j["half_width"] = f.half_width;
  j["residual"] = f.residual;
  j["points"] = f.points;
  j["monotone"] = f.monotone;
  j["valid"] = f.valid;
  return j;
}

/// Positive mixture of Gaussians with analytic gradient.
struct Mixture
{
  std::vector<Vec3> center;
  std::vector<double> variance;
  std::vector<double> weight;

  double value(const Vec3& p) const
  {
    double v = 0.0;
    for (std::size_t k = 0; k < center.size(); ++k) {
      const double s = variance[k];
      v += weight[k] * std::pow(2.0 * M_PI * s, -1.5) *
           std::exp(-(p - center[k]).squaredNorm() / (2.0 * s));
    }
    return v;
  }
  Vec3 gradient(const Vec3& p) const
  {
    Vec3 g = Vec3::Zero();
    for (std::size_t k = 0; k < center.size(); ++k) {
      const double s = variance[k];
      const double v = weight[k] * std::pow(2.0 * M_PI * s, -1.5) *
                       std::exp(-(p - center[k]).squaredNorm() / (2.0 * s));
      g -= v * (p - center[k]) / s;
    }
    return g;
  }
  Field field() const
  {
    return Field{[m = *this](const Vec3& p) { return m.value(p); },
                 [m = *this](const Vec3& p) { return m.gradient(p); }};
  }
};

Mixture random_mixture(std::mt19937_64& rng, double base_variance)
{
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Mixture m;
  const double sd = std::sqrt(base_variance);
  for (int k = 0; k < 3; ++k) {
    m.center.push_back(Vec3(u(rng) - 0.5, u(rng) - 0.5, u(rng) - 0.5) * 0.6 * sd);
    m.variance.push_back(base_variance * (0.8 + 0.4 * u(rng)));
    m.weight.push_back(0.5 + u(rng));
  }
  return m;
}

Mixture maxwellian_mixture(double variance) { return Mixture{{Vec3::Zero()}, {variance}, {1.0}}; }

Eigen::VectorXcd unit_vector(const Basis& b, const MultiIndex& a)
{
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(long(b.size()));
  v[b.find(a)] = 1.0;
  return v;
}

struct Ctx
{
  Lab& lab;
  ArtifactWriter& aw;
  const CommandOptions& opts;
  std::vector<CheckRecord>& checks;
  ojson summary = ojson::object();

  const RunConfig& cfg() const { return lab.config(); }
  const ModelParams& params() const { return lab.config().params; }

  CsvWriter csv(const std::string& name, const std::vector<std::string>& header)
  {
    aw.add(name);
    return CsvWriter(aw.path(name), header);
  }
  void json(const std::string& name, const ojson& j)
  {
    write_json(aw.path(name), j);
    aw.add(name);
  }
  void add(CheckRecord r) { checks.push_back(std::move(r)); }

  /// Pairs AB and BB, or the one selected by --pair.
  std::vector<SpeciesPair> pairs() const
  {
    if (opts.pair) {
      const SpeciesPair p = parse_pair(*opts.pair);
      if (!(p == SpeciesPair::AB()) && !(p == SpeciesPair::BB()))
        throw ConfigError("--pair must be AB or BB for this command");
      return {p};
    }
    return {SpeciesPair::AB(), SpeciesPair::BB()};
  }
};

// ---------------------------------------------------------------------------
// coeffs

void cmd_coeffs(Ctx& c)
{
  const ModelParams& P = c.params();
  std::mt19937_64 rng(c.cfg().seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<SpeciesPair> pairs{SpeciesPair::AA(), SpeciesPair::AB(), SpeciesPair::BB(),
                                 SpeciesPair::BA()};
  if (c.opts.pair) pairs = {parse_pair(*c.opts.pair)};
  ojson out = ojson::array();

  for (const SpeciesPair& pair : pairs) {
    const std::string pk = key(pair);
    const SigmaTable& table = c.lab.table(pair);
    const std::string name = "sigma_" + pk + ".csv";
    {
      std::ofstream os(c.aw.path(name), std::ios::binary);
      table.write_csv(os);
      c.aw.add(name);
    }
    const bool counted_pair = pair == SpeciesPair::AB() || pair == SpeciesPair::BB();
    const int crit = counted_pair ? 3 : 0;

    double min_lambda = INFINITY;
    for (std::size_t i = 0; i < table.radii.size(); ++i)
      min_lambda = std::min({min_lambda, table.lambda1[i], table.lambda2[i]});
    c.add(make_check("sigma.positive." + pk, 0, "lambda1, lambda2 > 0 on every table radius",
                     min_lambda > 0.0, min_lambda, "> 0"));

    // trace identity against the direct 3D quadrature
    double trace_err = 0.0;
    const std::vector<double> radii = geometric_grid(1e-2, 25.0, 20);
    for (double r : radii) {
      const LambdaValues lv = lambda_pair(P, pair, r);
      const Mat3 S = sigma_direct(P, pair, Vec3(0.0, 0.0, r));
      const double tr = S.trace();
      trace_err = std::max(trace_err, std::abs(lv.lambda1 + 2.0 * lv.lambda2 - tr) / tr);
    }
    c.add(make_check("3.trace." + pk, crit, "lambda1 + 2 lambda2 = tr sigma on 20 radii",
                     trace_err <= 1e-6, trace_err, "<= 1e-6 relative"));

    // (p, sigma p) = lambda1 |p|^2 on random p
    double psp_err = 0.0;
    std::vector<Vec3> samples;
    for (int i = 0; i < 10; ++i) {
      Vec3 d;
      do {
        d = Vec3(2.0 * u(rng) - 1.0, 2.0 * u(rng) - 1.0, 2.0 * u(rng) - 1.0);
      } while (d.norm() < 0.1 || d.norm() > 1.0);
      samples.push_back(d.normalized() * (0.1 + 7.9 * u(rng)));
    }
    for (const Vec3& p : samples) {
      const Mat3 S = sigma_direct(P, pair, p);
      const double l1 = lambda_pair(P, pair, p.norm()).lambda1;
      const double ref = l1 * p.squaredNorm();
      psp_err = std::max(psp_err, std::abs(p.dot(S * p) - ref) / ref);
    }
    c.add(make_check("3.psp." + pk, crit, "(p, sigma p) = lambda1 |p|^2 on 10 random p",
                     psp_err <= 1e-8, psp_err, "<= 1e-8 relative"));

    // divergence by central differences of lambda1 P + lambda2 (I - P)
    auto sigma_at = [&](const Vec3& p) {
      const LambdaValues lv = lambda_pair(P, pair, p.norm());
      const Vec3 e = p.normalized();
      const Mat3 Pp = e * e.transpose();
      return Mat3(lv.lambda1 * Pp + lv.lambda2 * (Mat3::Identity() - Pp));
    };
    const double mx = P.mass(pair.X), my = P.mass(pair.Y);
    // the identity as stated holds when M_Y has variance m_Y/m_B with m_Y = m_B
    const double factor = counted_pair ? (my * my) / (mx * mx) : my * P.m_B / (mx * mx);
    const double h = 1e-4;
    double div_err = 0.0;
    for (int s = 0; s < 4; ++s) {
      const Vec3& p = samples[std::size_t(s)];
      Vec3 div = Vec3::Zero();
      for (int i = 0; i < 3; ++i) {
        const Vec3 dp = h * Vec3::Unit(i);
        const Mat3 d = (sigma_at(p + dp) - sigma_at(p - dp)) / (2.0 * h);
        div += d.row(i).transpose();
      }
      const Vec3 ref = -factor * lambda_pair(P, pair, p.norm()).lambda1 * p;
      div_err = std::max(div_err, (div - ref).norm() / ref.norm());
    }
    c.add(make_check("3.div." + pk, crit,
                     counted_pair ? "div sigma = -(m_Y/m_X)^2 lambda1 p (step 1e-4)"
                                : "div sigma = -(m_Y m_B/m_X^2) lambda1 p (step 1e-4)",
                     div_err <= 1e-4, div_err, "<= 1e-4 relative"));

    const double r_big = 25.0;
    const double l1 = lambda_pair(P, pair, r_big).lambda1 * std::pow(r_big, -P.gamma);
    const double l1_ref = lambda1_asymptotic(P, pair);
    const double asym_err = std::abs(l1 - l1_ref) / l1_ref;
    c.add(make_check("3.asym." + pk, crit, "lambda1(25) 25^-gamma against the asymptotic prefactor",
                     asym_err <= 0.01, asym_err, "<= 1%"));

    ojson e;
    e["pair"] = pk;
    e["trace_error"] = trace_err;
    e["psp_error"] = psp_err;
    e["divergence_error"] = div_err;
    e["divergence_factor"] = factor;
    e["lambda1_25_scaled"] = l1;
    e["lambda1_asymptotic"] = l1_ref;
    e["lambda2_asymptotic"] = lambda2_asymptotic(P, pair);
    out.push_back(e);
  }
  for (Species s : {Species::A, Species::B}) {
    const std::string name = "basis_" + to_string(s) + ".json";
    c.json(name, metadata(c.lab.basis(s), c.lab.quad(s)));
  }
  c.json("coeffs.json", out);
}

// ---------------------------------------------------------------------------
// conserve

void cmd_conserve(Ctx& c)
{
  const ModelParams& P = c.params();
  const RunConfig& cfg = c.cfg();
  const QuadratureRule rule =
      quadrature(c.lab.basis(Species::A), c.lab.basis(Species::B), cfg.oversampling, cfg.prune);
  std::mt19937_64 rng(cfg.seed + 5);
  auto csv = c.csv("conservation.csv", {"sample", "mass_A", "mass_B", "momentum", "energy",
                                        "self_A_max", "self_B_max", "max_residual"});
  ojson samples = ojson::array();
  double worst = 0.0;
  for (int i = 0; i <= cfg.conservation_samples; ++i) {
    // sample 0: the Maxwellian pair
    const Mixture ma = i == 0 ? maxwellian_mixture(P.variance(Species::A))
                              : random_mixture(rng, P.variance(Species::A));
    const Mixture mb = i == 0 ? maxwellian_mixture(P.variance(Species::B))
                              : random_mixture(rng, P.variance(Species::B));
    const ConservationReport r = conservation_report(P, ma.field(), mb.field(), rule);
    double sa = 0.0, sb = 0.0;
    for (double v : r.self_A) sa = std::max(sa, std::abs(v));
    for (double v : r.self_B) sb = std::max(sb, std::abs(v));
    csv.row({fmt(i), fmt(r.mass_A), fmt(r.mass_B), fmt(r.momentum), fmt(r.energy), fmt(sa),
             fmt(sb), fmt(r.max_residual())});
    ojson e;
    e["sample"] = i;
    e["maxwellian"] = i == 0;
    e["mass_A"] = r.mass_A;
    e["mass_B"] = r.mass_B;
    e["momentum"] = r.momentum;
    e["energy"] = r.energy;
    e["self_A"] = r.self_A;
    e["self_B"] = r.self_B;
    samples.push_back(e);
    worst = std::max(worst, r.max_residual());
    c.add(make_check(i == 0 ? "5.maxwellian" : "5.sample" + std::to_string(i), 5,
                     "moments of Q vanish for " +
                         std::string(i == 0 ? "the Maxwellians" : "a random Gaussian mixture"),
                     r.max_residual() <= 1e-9, r.max_residual(), "<= 1e-9"));
  }
  csv.close();
  ojson j;
  j["nodes"] = rule.nodes.size();
  j["max_residual"] = worst;
  j["samples"] = samples;
  c.json("conservation.json", j);
}

// ---------------------------------------------------------------------------
// nullspace

void write_eigenvalues(Ctx& c, const std::string& name, const Eigen::VectorXd& ev)
{
  auto csv = c.csv(name, {"index", "eigenvalue"});
  for (long i = 0; i < ev.size(); ++i) csv.row({fmt(long(i)), fmt(ev[ev.size() - 1 - i])});
}

void cmd_nullspace(Ctx& c)
{
  const GalerkinOperatorSet& ab = c.lab.set(SpeciesPair::AB());
  const GalerkinOperatorSet& bb = c.lab.set(SpeciesPair::BB());
  const CrossOperator& X = c.lab.cross();
  const SpecialVectors sv = special_vectors(c.lab.basis(Species::B), c.lab.basis(Species::A), kOmega);
  const double band = 1e-8;

  auto csv = c.csv("nullspace.csv", {"operator", "vector", "residual"});
  ojson j;
  for (int i = 0; i < 5; ++i) {
    const double r = (bb.l_full * sv.chi[std::size_t(i)]).norm();
    csv.row({"L_BB", "chi" + std::to_string(i), fmt(r)});
    j["L_BB_chi"].push_back(r);
    c.add(make_check("1.chi" + std::to_string(i), 1, "|L_BB chi_" + std::to_string(i) + "|",
                     r <= band, r, "<= 1e-8"));
  }
  const double r_ab = (ab.l_full * sv.E_D).norm();
  csv.row({"L_AB", "E_D", fmt(r_ab)});
  c.add(make_check("1.ED", 1, "|L_AB E_D|", r_ab <= band, r_ab, "<= 1e-8"));
  const double r_ba = (X.matrix * sv.E_D).norm();
  csv.row({"L_BA", "E_D", fmt(r_ba)});
  c.add(make_check("2.LBA_ED", 2, "|L_BA E_D|", r_ba <= band, r_ba, "<= 1e-8"));
  csv.close();
  j["L_AB_ED"] = r_ab;
  j["L_BA_ED"] = r_ba;

  for (const GalerkinOperatorSet* s : {&ab, &bb}) {
    const std::string pk = key(s->pair);
    const double sym = (s->l_full - s->l_full.transpose()).cwiseAbs().maxCoeff();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s->l_full, Eigen::EigenvaluesOnly);
    const Eigen::VectorXd ev = es.eigenvalues();
    int count = 0;
    double next = -INFINITY;
    for (long i = 0; i < ev.size(); ++i) {
      if (std::abs(ev[i]) <= band) ++count;
      else if (ev[i] < -band) next = std::max(next, ev[i]);
    }
    const int expect = s->pair == SpeciesPair::BB() ? 5 : 1;
    c.add(make_check("1.count." + pk, 1, "eigenvalues of L_" + pk + " in [-1e-8, 1e-8]",
                     count == expect, count, "== " + std::to_string(expect)));
    c.add(make_check("nullspace.symmetric." + pk, 0, "L_" + pk + " symmetric", sym <= 1e-12, sym,
                     "<= 1e-12"));
    c.add(make_check("nullspace.nonpositive." + pk, 0, "max eigenvalue of L_" + pk,
                     ev.maxCoeff() <= band, ev.maxCoeff(), "<= 1e-8"));
    write_eigenvalues(c, "eigenvalues_" + pk + ".csv", ev);
    ojson e;
    e["kernel_count"] = count;
    e["max_eigenvalue"] = ev.maxCoeff();
    e["gap_at_zero"] = -next;
    e["symmetry_defect"] = sym;
    j[pk] = e;
    ojson meta;
    meta["operator"] = "L_" + pk;
    meta["pair"] = pk;
    meta["degree"] = s->basis.degree;
    c.summary["gap_at_zero_" + pk] = -next;
    write_matrix(c.aw.path("L_" + pk), s->l_full, meta);
    c.aw.add("L_" + pk + ".bin");
    c.aw.add("L_" + pk + ".json");
  }
  ojson meta;
  meta["operator"] = "L_BA";
  meta["maps"] = "species A coefficients to species B coefficients";
  write_matrix(c.aw.path("L_BA"), X.matrix, meta);
  c.aw.add("L_BA.bin");
  c.aw.add("L_BA.json");
  c.json("nullspace.json", j);
}

// ---------------------------------------------------------------------------
// coercivity

void cmd_coercivity(Ctx& c)
{
  const RunConfig& cfg = c.cfg();
  std::mt19937_64 rng(cfg.seed + 4);
  std::normal_distribution<double> nd(0.0, 1.0);
  auto csv = c.csv("coercivity.csv", {"pair", "sample", "lambda_ratio", "k_excess"});
  ojson j;
  for (const SpeciesPair& pair : c.pairs()) {
    const std::string pk = key(pair);
    const LambdaKSplit& split = c.lab.split(pair);
    const Eigen::MatrixXd& S = c.lab.sigma_gram(pair);
    const long n = split.Lambda.rows();
    double min_ratio = INFINITY, max_excess = -INFINITY;
    for (int s = 0; s < cfg.coercivity_samples; ++s) {
      Eigen::VectorXd f(n);
      for (long i = 0; i < n; ++i) f[i] = nd(rng);
      f.normalize();
      const double ratio = f.dot(split.Lambda * f) / f.dot(S * f);
      const double excess = f.dot(split.K * f) - f.squaredNorm();
      min_ratio = std::min(min_ratio, ratio);
      max_excess = std::max(max_excess, excess);
      csv.row({pk, fmt(s), fmt(ratio), fmt(excess)});
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ek(split.K, Eigen::EigenvaluesOnly);
    const double k_top = ek.eigenvalues().maxCoeff();
    c.add(make_check("4a." + pk, 4,
                     "min <Lambda f,f>/|f|_sigma^2 over random f >= c0 > 0 (" + pk + ")",
                     split.c0 > 0.0 && min_ratio >= split.c0 * (1.0 - 1e-10), min_ratio,
                     ">= c0 = " + num(split.c0, 6)));
    c.add(make_check("4b." + pk, 4, "<K f,f> <= |f|^2 + 1e-10 over random f (" + pk + ")",
                     max_excess <= 1e-10, max_excess, "<= 1e-10",
                     "largest eigenvalue of K is " + num(k_top, 6) + " with varpi = " +
                         num(cfg.cutoff.varpi)));
    ojson e;
    e["varpi"] = cfg.cutoff.varpi;
    e["R"] = cfg.cutoff.R;
    e["c0"] = split.c0;
    e["min_lambda_ratio"] = min_ratio;
    e["max_k_excess"] = max_excess;
    e["k_max_eigenvalue"] = k_top;
    j[pk] = e;
  }
  csv.close();
  c.json("coercivity.json", j);
}

// ---------------------------------------------------------------------------
// spectrum

void cmd_spectrum(Ctx& c)
{
  const ModelParams& P = c.params();
  auto csv = c.csv("spectrum.csv", {"pair", "eta", "index", "re", "im"});
  ojson j = ojson::array();
  for (const SpeciesPair& pair : c.pairs()) {
    const GalerkinOperatorSet& set = c.lab.set(pair);
    const auto sectors = symmetry_sectors(set.basis, kOmega);
    for (double eta : c.cfg().spectrum_eta) {
      const ModeOperator M = build_l_eta(set, P, eta, kOmega);
      const Eigen::VectorXcd ev = sector_eigenvalues(M.matrix, sectors);
      std::vector<cd> v(ev.data(), ev.data() + ev.size());
      std::sort(v.begin(), v.end(), [](cd a, cd b) {
        return a.real() != b.real() ? a.real() > b.real() : a.imag() > b.imag();
      });
      for (std::size_t i = 0; i < v.size(); ++i)
        csv.row({key(pair), fmt(eta), fmt(i), fmt(v[i].real()), fmt(v[i].imag())});
      const double top = v.front().real();
      c.add(make_check("spectrum.re." + key(pair) + ".eta" + num(eta), 0,
                       "max Re of the L^eta spectrum", top <= 1e-8, top, "<= 1e-8"));
      ojson e;
      e["pair"] = key(pair);
      e["eta"] = eta;
      e["max_re"] = top;
      j.push_back(e);
    }
  }
  csv.close();
  c.json("spectrum.json", j);
}

// ---------------------------------------------------------------------------
// dispersion

void cmd_dispersion(Ctx& c)
{
  const ModelParams& P = c.params();
  const RunConfig& cfg = c.cfg();
  auto bcsv = c.csv("branches.csv", {"pair", "j", "eta", "re", "im"});
  auto fcsv = c.csv("fits.csv", {"pair", "j", "a1", "a2", "a2_direct", "residual"});
  ojson j = ojson::array();
  const double a01 = std::sqrt(5.0 / 3.0) / P.m_B;

  for (const SpeciesPair& pair : c.pairs()) {
    const std::string pk = key(pair);
    const GalerkinOperatorSet& set = c.lab.set(pair);
    const auto& branches = c.lab.branches(pair);
    for (const DispersionBranch& b : branches) {
      double max_re = -INFINITY, max_im = 0.0;
      for (std::size_t i = 0; i < b.eta.size(); ++i) {
        bcsv.row({pk, fmt(b.label), fmt(b.eta[i]), fmt(b.value[i].real()), fmt(b.value[i].imag())});
        max_re = std::max(max_re, b.value[i].real());
        max_im = std::max(max_im, std::abs(b.value[i].imag()));
      }
      const std::string tag = pk + "." + std::to_string(b.label);
      c.add(make_check("dispersion.re." + tag, 0, "Re of the branch along the path", max_re <= 1e-8,
                       max_re, "<= 1e-8"));
      c.add(make_check("dispersion.overlap." + tag, 0, "consecutive eigenvector overlap",
                       b.min_overlap >= 0.9, b.min_overlap, ">= 0.9"));

      ojson e;
      e["pair"] = pk;
      e["j"] = b.label;
      e["min_overlap"] = b.min_overlap;
      e["max_abs_im"] = max_im;
      DispersionFit fit;
      try {
        fit = fit_dispersion(b, cfg.dispersion_window);
      } catch (const NumericalError& err) {
        c.add(make_check("6.fit." + tag, 6, "dispersion fit", false, NAN, "residual <= 1e-3",
                         err.what()));
        j.push_back(e);
        continue;
      }
      const double direct = diffusion_coefficient_direct(set, P, kOmega, b.label);
      const double rel = std::abs(fit.a2 - direct) / std::abs(direct);
      fcsv.row({pk, fmt(b.label), fmt(fit.a1), fmt(fit.a2), fmt(direct), fmt(fit.residual)});
      e["a1"] = fit.a1;
      e["a2"] = fit.a2;
      e["a2_direct"] = direct;
      e["residual"] = fit.residual;
      e["window"] = fit.window;
      e["points"] = fit.points;
      if (pair == SpeciesPair::AB()) {
        std::vector<double> ed1(fit.E_D1.size());
        for (long i = 0; i < fit.E_D1.size(); ++i) ed1[std::size_t(i)] = std::abs(fit.E_D1[i]);
        e["E_D1_abs"] = ed1;
      }
      j.push_back(e);

      const std::string a2name = pair == SpeciesPair::AB() ? "a2" : "a" + std::to_string(b.label) + "2";
      c.add(make_check("6." + a2name + "." + pk, 6, a2name + " positive and equal to the direct formula",
                       fit.a2 > 0.0 && direct > 0.0 && rel <= 0.02, rel,
                       "<= 2% (fit " + num(fit.a2, 6) + ", direct " + num(direct, 6) + ")"));
      if (pair == SpeciesPair::BB()) {
        const std::string a1name = "a" + std::to_string(b.label) + "1";
        if (b.label <= 1) {
          const double ref = b.label == 0 ? a01 : -a01;
          const double err = std::abs(fit.a1 - ref) / a01;
          c.add(make_check("6." + a1name, 6, a1name + " = " + std::string(b.label == 0 ? "+" : "-") +
                                                "sqrt(5/3)/m_B",
                           err <= 0.02, fit.a1, num(ref, 6) + " within 2%"));
        } else {
          c.add(make_check("6." + a1name, 6, "|" + a1name + "| vanishes", std::abs(fit.a1) <= 1e-4,
                           fit.a1, "|a1| <= 1e-4"));
        }
      }
    }
  }
  bcsv.close();
  fcsv.close();
  c.json("dispersion.json", j);
}

// ---------------------------------------------------------------------------
// cancellation

void cmd_cancellation(Ctx& c)
{
  const auto& d = c.lab.branches(SpeciesPair::AB());
  const auto& b = c.lab.branches(SpeciesPair::BB());
  const auto records = cancellation_orders(d.front(), b, c.lab.cross(), c.cfg().cancellation_window);
  auto csv = c.csv("cancellation.csv", {"j", "eta", "magnitude"});
  ojson j = ojson::array();
  for (const CancellationRecord& r : records) {
    for (std::size_t i = 0; i < r.eta.size(); ++i)
      csv.row({fmt(r.j), fmt(r.eta[i]), fmt(r.magnitude[i])});
    const double target = r.j <= 1 ? 1.0 : 2.0;
    double peak = 0.0;
    for (double m : r.magnitude) peak = std::max(peak, m);
    ojson e;
    e["j"] = r.j;
    e["slope"] = r.exact ? ojson(nullptr) : ojson(r.slope);
    e["exact"] = r.exact;
    e["max_magnitude"] = peak;
    e["target_order"] = target;
    j.push_back(e);
    const std::string desc = "log-log slope of |<e_" + std::to_string(r.j) + "(-eta), L_BA e_D(eta)>|";
    if (r.exact) {
      c.add(make_check("7.c" + std::to_string(r.j), 7, desc, true, peak,
                       num(target) + " +- 0.15",
                       "exact cancellation: pairing below 1e-12 on the whole window"));
    } else {
      c.add(make_check("7.c" + std::to_string(r.j), 7, desc, std::abs(r.slope - target) <= 0.15,
                       r.slope, num(target) + " +- 0.15"));
    }
  }
  csv.close();
  c.json("cancellation.json", j);
}

// ---------------------------------------------------------------------------
// gap

void cmd_gap(Ctx& c)
{
  const double delta = c.lab.delta();
  const bool kept = delta == c.cfg().delta;
  c.add(make_check("8.delta", 8, "delta accepted without halving", kept, delta,
                   "== " + num(c.cfg().delta)));
  auto csv = c.csv("gap.csv", {"pair", "eta", "max_re", "min_fluid_re"});
  ojson j;
  j["delta"] = delta;
  for (const SpeciesPair& pair : c.pairs()) {
    const std::string pk = key(pair);
    const SpectralGapReport& g = c.lab.gap(pair);
    for (std::size_t i = 0; i < g.eta.size(); ++i)
      csv.row({pk, fmt(g.eta[i]), fmt(g.max_re[i]), fmt(g.min_fluid_re[i])});
    c.add(make_check("8.tau." + pk, 8, "spectral gap tau for " + pk, g.tau > 0.0, g.tau, "> 0"));
    c.add(make_check("8.exhaustive." + pk, 8, "fluid branches exhaust Re > -tau_long for eta < delta",
                     g.exhaustive, g.exhaustive ? 1.0 : 0.0, "true"));
    ojson e;
    e["tau"] = g.tau;
    e["tau_long"] = g.tau_long;
    e["tau_short"] = g.tau_short;
    e["gap_zero"] = g.gap_zero;
    e["exhaustive"] = g.exhaustive;
    j[pk] = e;
    c.summary["tau_" + pk] = g.tau;
  }
  csv.close();
  c.json("gap.json", j);
}

// ---------------------------------------------------------------------------
// evolve

void cmd_evolve(Ctx& c)
{
  const CoupledSystem sys = c.lab.system();
  const Basis& A = c.lab.basis(Species::A);
  const Basis& B = c.lab.basis(Species::B);
  const std::vector<double>& times = c.lab.times();
  const Eigen::VectorXcd ed = unit_vector(A, {0, 0, 0});
  std::mt19937_64 rng(c.cfg().seed + 7);
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::VectorXcd h_rand(long(B.size()));
  for (long i = 0; i < h_rand.size(); ++i) h_rand[i] = nd(rng);
  h_rand.normalize();
  const Eigen::VectorXcd zA = Eigen::VectorXcd::Zero(long(A.size()));
  const Eigen::VectorXcd zB = Eigen::VectorXcd::Zero(long(B.size()));

  auto csv = c.csv("trajectories.csv", {"case", "eta", "t", "g_norm", "h_norm"});
  ojson j = ojson::array();
  auto increase = [](const std::vector<double>& v) {
    double worst = 0.0;
    for (std::size_t i = 1; i < v.size(); ++i)
      worst = std::max(worst, (v[i] - v[i - 1]) / std::max(v[0], 1e-300));
    return worst;
  };
  for (double eta : c.cfg().evolve_eta) {
    const ModeTrajectory driven = evolve_pair_mode(sys, eta, ed, zB, times);
    const ModeTrajectory free = evolve_pair_mode(sys, eta, zA, h_rand, times);
    for (std::size_t i = 0; i < times.size(); ++i) {
      csv.row({"driven", fmt(eta), fmt(times[i]), fmt(driven.g_norm[i]), fmt(driven.h_norm[i])});
    }
    for (std::size_t i = 0; i < times.size(); ++i)
      csv.row({"free", fmt(eta), fmt(times[i]), fmt(free.g_norm[i]), fmt(free.h_norm[i])});
    const std::string tag = ".eta" + num(eta);
    const double g_inc = increase(driven.g_norm);
    double h_exc = 0.0;
    for (double v : free.h_norm) h_exc = std::max(h_exc, v / free.h_norm[0] - 1.0);
    c.add(make_check("evolve.contraction.g" + tag, 0, "|g(t)| non-increasing", g_inc <= 1e-12, g_inc,
                     "<= 1e-12"));
    c.add(make_check("evolve.contraction.h" + tag, 0, "|h(t)| <= |h(0)| when g(0) = 0",
                     h_exc <= 1e-12, h_exc, "<= 1e-12"));

    const double t1 = 1.3, t2 = 3.7;
    const ModeTrajectory two = evolve_pair_mode(sys, eta, ed, h_rand, {0.0, t1, t2});
    const ModeTrajectory one = evolve_pair_mode(sys, eta, ed, h_rand, {0.0, t2});
    const double scale = std::sqrt(one.g.back().squaredNorm() + one.h.back().squaredNorm());
    const double semi =
        std::sqrt((two.g.back() - one.g.back()).squaredNorm() + (two.h.back() - one.h.back()).squaredNorm()) /
        scale;
    c.add(make_check("evolve.semigroup" + tag, 0, "evolving to t1 then t2 - t1 equals evolving to t2",
                     semi <= 1e-10, semi, "<= 1e-10 relative"));
    ojson e;
    e["eta"] = eta;
    e["g_increase"] = g_inc;
    e["h_excess"] = h_exc;
    e["semigroup_defect"] = semi;
    j.push_back(e);
  }
  // eta = 0: chi_0 is stationary
  const Eigen::VectorXcd chi0 = unit_vector(B, {0, 0, 0});
  const ModeTrajectory st = evolve_pair_mode(sys, 0.0, zA, chi0, times);
  double drift = 0.0;
  for (const auto& h : st.h) drift = std::max(drift, (h - chi0).norm());
  c.add(make_check("evolve.stationary", 0, "h(t) = chi_0 at eta = 0 for h(0) = chi_0", drift <= 1e-8,
                   drift, "<= 1e-8"));
  csv.close();
  ojson out;
  out["cases"] = j;
  out["stationary_drift"] = drift;
  c.json("evolve.json", out);
}

// ---------------------------------------------------------------------------
// hsplit

void cmd_hsplit(Ctx& c)
{
  const CoupledSystem sys = c.lab.system();
  const double delta = c.lab.delta();
  const std::vector<double>& times = c.lab.times();
  const Eigen::VectorXcd ed = unit_vector(c.lab.basis(Species::A), {0, 0, 0});
  auto csv = c.csv("hsplit.csv", {"eta", "t", "h00", "h0perp", "hperp0", "hperpperp", "direct"});
  ojson j;
  ojson splits = ojson::array();
  for (double eta : c.cfg().hsplit_eta) {
    if (!(eta < delta)) {
      c.add(make_check("10.sum.eta" + num(eta), 10, "h split requires eta < delta", false, eta,
                       "< " + num(delta)));
      continue;
    }
    const HSplit hs = h_component_split(sys, eta, ed, times, delta, INFINITY);
    for (std::size_t i = 0; i < hs.times.size(); ++i)
      csv.row({fmt(eta), fmt(hs.times[i]), fmt(hs.h00[i].norm()), fmt(hs.h0perp[i].norm()),
               fmt(hs.hperp0[i].norm()), fmt(hs.hperpperp[i].norm()), fmt(hs.direct[i].norm())});
    c.add(make_check("10.sum.eta" + num(eta), 10, "four-part h split equals the direct evolution",
                     hs.max_relative_defect <= 1e-8, hs.max_relative_defect, "<= 1e-8 relative",
                     "worst t = " + num(hs.worst_time)));
    ojson e;
    e["eta"] = eta;
    e["max_relative_defect"] = hs.max_relative_defect;
    e["worst_time"] = hs.worst_time;
    splits.push_back(e);
  }
  csv.close();
  j["splits"] = splits;

  const auto probes = resonance_continuity(sys, times, delta);
  auto rcsv = c.csv("resonance.csv", {"branch", "eta_switch", "jump"});
  ojson rj = ojson::array();
  for (const ResonanceProbe& p : probes) {
    rcsv.row({fmt(p.branch), fmt(p.eta_switch), fmt(p.jump)});
    c.add(make_check("10.resonance.r" + std::to_string(p.branch), 10,
                     "h00 continuous across the resonance switch", p.jump <= 1e-6, p.jump,
                     "<= 1e-6 relative", "eta_switch = " + num(p.eta_switch, 6)));
    ojson e;
    e["branch"] = p.branch;
    e["eta_switch"] = p.eta_switch;
    e["jump"] = p.jump;
    rj.push_back(e);
  }
  rcsv.close();
  j["resonance"] = rj;
  c.json("hsplit.json", j);
}

// ---------------------------------------------------------------------------
// decay

struct DecayTarget
{
  Component component;
  int k = 0;
  int l = 0;
  int criterion = 0;
  bool log_linear = false;
  double slope = 0.0;      ///< log-log target
  double tolerance = 0.0;  ///< log-log tolerance
};

std::vector<DecayTarget> default_targets()
{
  std::vector<DecayTarget> t;
  for (int k = 0; k <= 2; ++k) t.push_back({Component::g_fluid, k, 0, 9, false, -(3.0 + k) / 2.0, 0.1});
  for (int k = 0; k <= 1; ++k) t.push_back({Component::h00, k, 0, 9, false, -(3.0 + k) / 2.0, 0.1});
  t.push_back({Component::hperp0, 0, 0, 9, false, -2.0, 0.15});
  t.push_back({Component::hperpperp, 0, 0, 9, true});
  t.push_back({Component::h_short, 0, 0, 9, true});
  t.push_back({Component::g_short, 0, 0, 9, true});
  t.push_back({Component::h0perp, 0, 0, 0, false});
  t.push_back({Component::g, 0, 0, 0, false});
  t.push_back({Component::g, 0, 1, 0, false});
  t.push_back({Component::h, 0, 0, 0, false});
  t.push_back({Component::g_nonfluid, 0, 0, 0, true});
  return t;
}

DecayTarget selected_target(const CommandOptions& o)
{
  DecayTarget t;
  t.component = parse_component(o.component.value_or("g-fluid"));
  t.k = o.k.value_or(0);
  t.l = o.l.value_or(0);
  if (t.k < 0 || t.k > 4) throw ConfigError("--k must be in [0, 4]");
  if (t.l < 0 || t.l > 1) throw ConfigError("--l must be 0 or 1");
  for (const DecayTarget& d : default_targets())
    if (d.component == t.component && d.k == t.k && d.l == t.l) return d;
  const bool exp_part = t.component == Component::hperpperp || t.component == Component::h_short ||
                        t.component == Component::g_short;
  if (t.l == 0 && (t.component == Component::g_fluid || t.component == Component::h00)) {
    t.criterion = 9;
    t.slope = -(3.0 + t.k) / 2.0;
    t.tolerance = 0.1;
  } else if (t.l == 0 && t.component == Component::hperp0) {
    t.criterion = 9;
    t.slope = -(4.0 + t.k) / 2.0;
    t.tolerance = 0.15;
  } else if (exp_part) {
    t.criterion = t.l == 0 ? 9 : 0;
    t.log_linear = true;
  } else {
    t.log_linear = t.component == Component::g_nonfluid;
  }
  return t;
}

void cmd_decay(Ctx& c)
{
  const RunConfig& cfg = c.cfg();
  const RadialStudy& study = c.lab.radial();
  const bool selected = c.opts.component || c.opts.k || c.opts.l;
  const double t1 = c.opts.window ? c.opts.window->first : cfg.decay_t1;
  const double t2 = c.opts.window ? c.opts.window->second : cfg.decay_t2;

  {
    auto linf = c.csv("norms.csv", {"component", "k", "l", "t", "value"});
    auto l2 = c.csv("norms_l2.csv", {"component", "k", "l", "t", "value"});
    for (int ci = 0; ci < component_count; ++ci) {
      const Component comp = Component(ci);
      for (int k = 0; k <= 2; ++k)
        for (int l = 0; l <= 1; ++l) {
          const NormSeries s = synthesize_norms(study, comp, k, l);
          for (std::size_t i = 0; i < s.times.size(); ++i) {
            linf.row({to_string(comp), fmt(k), fmt(l), fmt(s.times[i]), fmt(s.linf[i])});
            l2.row({to_string(comp), fmt(k), fmt(l), fmt(s.times[i]), fmt(s.l2[i])});
          }
        }
    }
  }

  const double tau_g = c.lab.gap(SpeciesPair::AB()).tau;
  const double tau_h = c.lab.tau_h();
  c.add(make_check("decay.direct", 0, "modal evolution matches the direct exponential",
                   study.max_direct_defect <= 1e-8, study.max_direct_defect, "<= 1e-8 relative"));

  std::vector<DecayTarget> targets = selected ? std::vector<DecayTarget>{selected_target(c.opts)}
                                              : default_targets();
  ojson fits = ojson::array();
  for (const DecayTarget& t : targets) {
    const std::string label = to_string(t.component) + ".k" + std::to_string(t.k) +
                              (t.l ? ".l" + std::to_string(t.l) : "");
    const NormSeries s = synthesize_norms(study, t.component, t.k, t.l);
    ojson rec;
    rec["label"] = label;
    DecayFit fit, fit_l2;
    std::string err;
    try {
      fit = fit_decay(s.times, s.linf, t1, t2, t.log_linear);
      fit.label = label + ".linf";
      fit_l2 = fit_decay(s.times, s.l2, t1, t2, t.log_linear);
      fit_l2.label = label + ".l2";
    } catch (const Error& e) {
      err = e.what();
    }
    const std::string id = "9." + label;
    const int crit = t.criterion;
    if (!err.empty()) {
      rec["error"] = err;
      fits.push_back(rec);
      c.add(make_check(crit ? id : "decay." + label, crit, "decay fit of " + label, false, NAN,
                       "fit available", err));
      continue;
    }
    rec["linf"] = fit_json(fit);
    rec["l2"] = fit_json(fit_l2);
    if (t.log_linear) {
      const bool h_part = t.component != Component::g_short && t.component != Component::g_nonfluid;
      const double tau = h_part ? tau_h : tau_g;
      rec["tau_hat"] = tau;
      const double bound = -tau / 2.0;
      rec["rate_bound"] = bound;
      c.add(make_check(crit ? id : "decay." + label, crit,
                       "log-linear rate of the " + to_string(t.component) + " L-inf proxy",
                       fit.valid && fit.slope <= bound, fit.slope,
                       "<= -tau/2 = " + num(bound, 4),
                       "residual " + num(fit.residual, 3) + " over " + std::to_string(fit.points) +
                           " points"));
    } else if (crit) {
      rec["target"] = t.slope;
      rec["tolerance"] = t.tolerance;
      c.add(make_check(id, crit, "L-inf proxy slope of " + label,
                       fit.valid && std::abs(fit.slope - t.slope) <= t.tolerance, fit.slope,
                       num(t.slope) + " +- " + num(t.tolerance),
                       "L2 slope " + num(fit_l2.slope, 4) + "; residual " + num(fit.residual, 3)));
    } else {
      c.add(make_check("decay." + label, 0, "decay fit of " + label + " (reported)", fit.valid,
                       fit.slope, "valid fit", "L2 slope " + num(fit_l2.slope, 4)));
    }
    fits.push_back(rec);
  }
  ojson j;
  j["delta"] = study.delta;
  j["radial_points"] = study.grid.eta.size();
  j["tau_AB"] = tau_g;
  j["tau_h"] = tau_h;
  j["max_direct_defect"] = study.max_direct_defect;
  j["fits"] = fits;
  c.json("decay_fits.json", j);
}

// ---------------------------------------------------------------------------
// picard

void cmd_picard(Ctx& c)
{
  const RunConfig& cfg = c.cfg();
  const GalerkinOperatorSet& ab = c.lab.set(SpeciesPair::AB());
  const LambdaKSplit& split = c.lab.split(SpeciesPair::AB());
  const Eigen::VectorXcd f0 = unit_vector(c.lab.basis(Species::A), {0, 0, 0});
  std::vector<double> times;
  for (int i = 0; i <= cfg.picard_steps; ++i) times.push_back(cfg.picard_t_max * i / cfg.picard_steps);
  auto csv = c.csv("picard.csv", {"eta", "k", "t", "part", "norm"});
  ojson j = ojson::array();
  for (double eta : cfg.picard_eta)
    for (int k : cfg.picard_k) {
      const PicardDecomposition pd =
          picard_decompose(ab, c.params(), split, eta, f0, k, times, INFINITY);
      for (std::size_t t = 0; t < times.size(); ++t) {
        for (std::size_t q = 0; q < pd.f.size(); ++q)
          csv.row({fmt(eta), fmt(k), fmt(times[t]), "f" + std::to_string(q), fmt(pd.f[q][t].norm())});
        csv.row({fmt(eta), fmt(k), fmt(times[t]), "R", fmt(pd.remainder[t].norm())});
        csv.row({fmt(eta), fmt(k), fmt(times[t]), "full", fmt(pd.full[t].norm())});
        csv.row({fmt(eta), fmt(k), fmt(times[t]), "residual", fmt(pd.residual_t[t])});
      }
      const std::string tag = ".eta" + num(eta) + ".k" + std::to_string(k);
      c.add(make_check("11" + tag, 11, "Picard telescoping residual", pd.residual <= 1e-8, pd.residual,
                       "<= 1e-8"));
      c.add(make_check("picard.duhamel" + tag, 0, "|f^(j)(t)| <= (kappa t)^j / j! |f0|",
                       pd.duhamel_ratio <= 1.0 + 1e-9, pd.duhamel_ratio, "<= 1",
                       "kappa = " + num(pd.kappa, 6)));
      ojson e;
      e["eta"] = eta;
      e["k"] = k;
      e["residual"] = pd.residual;
      e["kappa"] = pd.kappa;
      e["duhamel_ratio"] = pd.duhamel_ratio;
      e["remainder_at_zero"] = pd.remainder.front().norm();
      j.push_back(e);
    }
  csv.close();
  c.json("picard.json", j);
}

// ---------------------------------------------------------------------------
// smooth

void cmd_smooth(Ctx& c)
{
  const RunConfig& cfg = c.cfg();
  const GalerkinOperatorSet& ab = c.lab.set(SpeciesPair::AB());
  const std::vector<double> times = geometric_grid(cfg.smooth_t_min, cfg.smooth_t_max, cfg.smooth_t_count);
  auto linear = [&](int n) {
    std::vector<double> e;
    for (int i = 0; i < n; ++i) e.push_back(cfg.smooth_eta_max * i / (n - 1));
    return e;
  };
  const SmoothingRecord coarse = smoothing_probe(ab, c.params(), linear(cfg.smooth_eta_count), times,
                                                 c.lab.threads());
  const SmoothingRecord fine = smoothing_probe(ab, c.params(), linear(2 * cfg.smooth_eta_count), times,
                                               c.lab.threads());
  auto csv = c.csv("smoothing.csv", {"t", "eta", "p_norm"});
  for (std::size_t t = 0; t < coarse.times.size(); ++t)
    for (std::size_t e = 0; e < coarse.eta.size(); ++e)
      csv.row({fmt(coarse.times[t]), fmt(coarse.eta[e]), fmt(coarse.p_norm[t][e])});
  csv.close();
  auto scsv = c.csv("smoothing_sup.csv", {"t", "p_sup"});
  for (std::size_t t = 0; t < coarse.times.size(); ++t) scsv.row({fmt(coarse.times[t]), fmt(coarse.p_sup[t])});
  scsv.close();

  const DecayFit& f = coarse.p_fit;
  c.add(make_check("12.p-exponent", 12, "small-t exponent of sup_eta |D_p e^{tM}|_{m1 -> L2}",
                   std::abs(f.slope + 0.5) <= 0.2, f.slope, "-0.5 +- 0.2",
                   "half width " + num(f.half_width, 3)));
  const double change = std::abs(fine.x_surface - coarse.x_surface) / coarse.x_surface;
  c.add(make_check("12.x-surface", 12, "x-smoothing surface sup finite and stable under eta refinement",
                   std::isfinite(coarse.x_surface) && std::isfinite(fine.x_surface) && change <= 0.05,
                   change, "<= 5% change",
                   "sup " + num(coarse.x_surface, 6) + " -> " + num(fine.x_surface, 6)));
  ojson j;
  j["p_fit"] = fit_json(f);
  j["p_fit_fine"] = fit_json(fine.p_fit);
  j["x_surface"] = coarse.x_surface;
  j["x_surface_fine"] = fine.x_surface;
  j["eta_count"] = coarse.eta.size();
  j["eta_count_fine"] = fine.eta.size();
  c.json("smoothing.json", j);
}

using CommandFn = void (*)(Ctx&);

struct CommandInfo
{
  const char* name;
  CommandFn fn;
  int criterion;  ///< criterion of the checks, for error records
  bool pair;
  bool decay;
};

const std::vector<CommandInfo>& commands()
{
  static const std::vector<CommandInfo> list{
      {"coeffs", cmd_coeffs, 3, true, false},
      {"conserve", cmd_conserve, 5, false, false},
      {"nullspace", cmd_nullspace, 1, false, false},
      {"coercivity", cmd_coercivity, 4, true, false},
      {"spectrum", cmd_spectrum, 0, true, false},
      {"dispersion", cmd_dispersion, 6, true, false},
      {"cancellation", cmd_cancellation, 7, false, false},
      {"gap", cmd_gap, 8, true, false},
      {"evolve", cmd_evolve, 0, false, false},
      {"hsplit", cmd_hsplit, 10, false, false},
      {"decay", cmd_decay, 9, false, true},
      {"picard", cmd_picard, 11, false, false},
      {"smooth", cmd_smooth, 12, false, false},
  };
  return list;
}

ojson checks_json(const std::vector<CheckRecord>& checks)
{
  ojson a = ojson::array();
  for (const auto& r : checks) a.push_back(to_json(r));
  return a;
}

/// Runs one command into w; config.json and checks.json are added, the manifest is not written.
void run_into(Lab& lab, const CommandInfo& info, const CommandOptions& opts, ArtifactWriter& w,
              std::vector<CheckRecord>& checks, ojson& summary)
{
  write_json(w.path("config.json"), to_json(lab.config()));
  w.add("config.json");
  Ctx ctx{lab, w, opts, checks};
  Stopwatch sw;
  info.fn(ctx);
  w.timing(info.name, sw.seconds());
  write_json(w.path("checks.json"), checks_json(checks));
  w.add("checks.json");
  summary = ctx.summary;
}

}  // namespace

ojson to_json(const CheckRecord& r)
{
  ojson j;
  j["id"] = r.id;
  j["criterion"] = r.criterion;
  j["description"] = r.description;
  j["pass"] = r.pass;
  j["value"] = r.value;
  j["target"] = r.target;
  j["note"] = r.note;
  return j;
}

// ---------------------------------------------------------------------------
// Lab

Lab::Lab(RunConfig cfg, int threads) : cfg_(std::move(cfg)), threads_(std::max(1, threads))
{
  cfg_.validate();
  if (cfg_.params.gamma != 0.0 && cfg_.oversampling < 3.0)
    notes_.push_back("gamma != 0 with oversampling " + num(cfg_.oversampling) +
                     ": matrix entries are not quadrature-converged (use >= 3)");
}

const Basis& Lab::basis(Species s)
{
  auto& p = basis_[s];
  if (!p) p = std::make_unique<Basis>(build_basis(cfg_.params, s, cfg_.degree));
  return *p;
}

const QuadratureRule& Lab::quad(Species s)
{
  auto& p = quad_[s];
  if (!p) p = std::make_unique<QuadratureRule>(quadrature(basis(s), cfg_.oversampling, cfg_.prune));
  return *p;
}

const SigmaTable& Lab::table(SpeciesPair pair)
{
  auto& p = table_[key(pair)];
  if (!p) p = std::make_unique<SigmaTable>(SigmaTable::build(cfg_.params, pair, cfg_.sigma));
  return *p;
}

const GalerkinOperatorSet& Lab::set(SpeciesPair pair)
{
  if (!(pair == SpeciesPair::AB()) && !(pair == SpeciesPair::BB()))
    throw ConfigError("operator sets exist for the pairs AB and BB only");
  auto& p = set_[key(pair)];
  if (!p)
    p = std::make_unique<GalerkinOperatorSet>(assemble_operator_set(
        cfg_.params, pair, basis(pair.X), quad(pair.X), table(pair), kOmega, cfg_.cutoff,
        cfg_.lambda_form));
  return *p;
}

const CrossOperator& Lab::cross()
{
  if (!cross_)
    cross_ = std::make_unique<CrossOperator>(assemble_l_ba(cfg_.params, basis(Species::A),
                                                           basis(Species::B), quad(Species::A),
                                                           quad(Species::B)));
  return *cross_;
}

const Eigen::MatrixXd& Lab::sigma_gram(SpeciesPair pair)
{
  const std::string k = key(pair);
  auto it = sigma_gram_.find(k);
  if (it == sigma_gram_.end())
    it = sigma_gram_
             .emplace(k, sigma_norm_matrix(cfg_.params, basis(pair.X), quad(pair.X), WeightSpec{}))
             .first;
  return it->second;
}

const LambdaKSplit& Lab::split(SpeciesPair pair)
{
  auto& p = split_[key(pair)];
  if (!p)
    p = std::make_unique<LambdaKSplit>(
        split_lambda_k(set(pair), cfg_.params, cfg_.cutoff.varpi, cfg_.cutoff.R, sigma_gram(pair)));
  return *p;
}

CoupledSystem Lab::system()
{
  return CoupledSystem{&set(SpeciesPair::AB()), &set(SpeciesPair::BB()), &cross(), cfg_.params, kOmega};
}

const std::vector<double>& Lab::dispersion_grid()
{
  if (dispersion_grid_.empty())
    dispersion_grid_ = geometric_grid(cfg_.dispersion_eta_min,
                                      std::min(cfg_.dispersion_eta_max, delta()), cfg_.dispersion_count);
  return dispersion_grid_;
}

const std::vector<DispersionBranch>& Lab::branches(SpeciesPair pair)
{
  const std::string k = key(pair);
  auto it = branches_.find(k);
  if (it == branches_.end())
    it = branches_.emplace(k, eigen_branches(set(pair), cfg_.params, kOmega, dispersion_grid())).first;
  return it->second;
}

double Lab::delta()
{
  if (delta_) return *delta_;
  double d = cfg_.delta;
  for (int attempt = 0; attempt < 8; ++attempt) {
    try {
      SpectralGapReport ab = spectral_gap_scan(set(SpeciesPair::AB()), cfg_.params, kOmega,
                                               cfg_.gap_eta_max, cfg_.gap_count, d);
      SpectralGapReport bb = spectral_gap_scan(set(SpeciesPair::BB()), cfg_.params, kOmega,
                                               cfg_.gap_eta_max, cfg_.gap_count, d);
      if (ab.exhaustive && bb.exhaustive) {
        gap_[key(SpeciesPair::AB())] = std::move(ab);
        gap_[key(SpeciesPair::BB())] = std::move(bb);
        delta_ = d;
        return d;
      }
      notes_.push_back("delta = " + num(d) + ": fluid branches not separated; halving");
    } catch (const CheckError& e) {
      notes_.push_back("delta = " + num(d) + ": " + e.what() + "; halving");
    }
    d /= 2.0;
  }
  throw CheckError("no delta down to " + num(2.0 * d) + " separates the fluid branches");
}

const SpectralGapReport& Lab::gap(SpeciesPair pair)
{
  delta();
  auto it = gap_.find(key(pair));
  if (it == gap_.end()) throw ConfigError("gap scans exist for the pairs AB and BB only");
  return it->second;
}

double Lab::tau_h()
{
  return std::min(gap(SpeciesPair::AB()).tau, gap(SpeciesPair::BB()).tau);
}

const std::vector<double>& Lab::times()
{
  if (times_.empty()) times_ = log_time_grid(cfg_.t_min, cfg_.t_max, cfg_.t_count);
  return times_;
}

const RadialStudy& Lab::radial()
{
  if (!radial_) {
    const double d = delta();
    const Eigen::VectorXcd gp = unit_vector(basis(Species::A), {0, 0, 0});
    radial_ = std::make_unique<RadialStudy>(radial_study(
        system(), radial_grid(d, cfg_.radial_eta_max), times(), d, gp, bump_profile, threads_));
  }
  return *radial_;
}

// ---------------------------------------------------------------------------
// commands

std::pair<double, double> parse_window(const std::string& text)
{
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw ConfigError("--window expects t1:t2, got '" + text + "'");
  try {
    std::size_t a = 0, b = 0;
    const std::string s1 = text.substr(0, colon), s2 = text.substr(colon + 1);
    const double t1 = std::stod(s1, &a), t2 = std::stod(s2, &b);
    if (a != s1.size() || b != s2.size()) throw std::invalid_argument("trailing characters");
    if (!(t1 > 0.0) || !(t2 > t1)) throw ConfigError("--window needs 0 < t1 < t2, got '" + text + "'");
    return {t1, t2};
  } catch (const std::logic_error&) {
    throw ConfigError("--window expects numbers t1:t2, got '" + text + "'");
  }
}

const std::vector<std::string>& command_names()
{
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& c : commands()) n.push_back(c.name);
    n.push_back("all");
    return n;
  }();
  return names;
}

bool CommandResult::ok() const
{
  return std::all_of(checks.begin(), checks.end(), [](const CheckRecord& r) { return r.pass; });
}

CommandResult run_command(Lab& lab, const std::string& command, const CommandOptions& opts,
                          const fs::path& out_dir)
{
  const bool all = command == "all";
  const CommandInfo* info = nullptr;
  for (const auto& c : commands())
    if (command == c.name) info = &c;
  if (!all && !info)
    throw ConfigError("unknown command '" + command + "'; expected one of coeffs, conserve, "
                      "nullspace, coercivity, spectrum, dispersion, cancellation, gap, evolve, "
                      "hsplit, decay, picard, smooth, all");
  const bool has_decay = opts.k || opts.l || opts.component || opts.window;
  if (opts.pair && (all || !info->pair))
    throw ConfigError("--pair does not apply to '" + command + "'");
  if (has_decay && (all || !info->decay))
    throw ConfigError("--k, --l, --component and --window apply to 'decay' only");
  if (opts.pair) parse_pair(*opts.pair);
  if (opts.component) parse_component(*opts.component);

  const std::string hash = config_hash(lab.config());
  CommandResult result;
  if (!all) {
    ArtifactWriter w(out_dir, command, hash);
    ojson summary;
    run_into(lab, *info, opts, w, result.checks, summary);
    summary["checks"] = result.checks.size();
    summary["failed"] = std::count_if(result.checks.begin(), result.checks.end(),
                                      [](const CheckRecord& r) { return !r.pass; });
    result.manifest = w.finalize(summary);
    return result;
  }

  ArtifactWriter top(out_dir, "all", hash);
  ojson stages = ojson::object();
  for (const auto& c : commands()) {
    ArtifactWriter w(out_dir / c.name, c.name, hash);
    std::vector<CheckRecord> checks;
    ojson summary;
    Stopwatch sw;
    try {
      run_into(lab, c, CommandOptions{}, w, checks, summary);
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      checks.push_back(make_check(std::string(c.name) + ".error", c.criterion,
                                  "command " + std::string(c.name) + " completed", false, NAN,
                                  "no error", e.what()));
      write_json(w.path("checks.json"), checks_json(checks));
      w.add("checks.json");
    }
    top.timing(c.name, sw.seconds());
    w.finalize(summary);
    for (const auto& f : w.files()) top.add(std::string(c.name) + "/" + f);
    top.add(std::string(c.name) + "/manifest.json");
    stages[c.name] = summary;
    result.checks.insert(result.checks.end(), checks.begin(), checks.end());
  }

  {
    CsvWriter csv(top.path("summary.csv"),
                  {"id", "criterion", "pass", "value", "target", "note", "description"});
    for (const auto& r : result.checks)
      csv.row({r.id, fmt(r.criterion), r.pass ? "1" : "0", fmt(r.value), r.target, r.note,
               r.description});
    csv.close();
    top.add("summary.csv");
  }
  ojson crit = ojson::object();
  for (const auto& [n, recs] : by_criterion(result.checks)) {
    bool pass = true;
    for (const auto& r : recs) pass = pass && r.pass;
    crit[std::to_string(n)] = pass;
  }
  ojson sj;
  sj["criteria"] = crit;
  sj["notes"] = lab.notes();
  sj["stages"] = stages;
  sj["checks"] = checks_json(result.checks);
  write_json(top.path("summary.json"), sj);
  top.add("summary.json");
  write_json(top.path("config.json"), to_json(lab.config()));
  top.add("config.json");
  ojson s;
  s["checks"] = result.checks.size();
  s["failed"] = std::count_if(result.checks.begin(), result.checks.end(),
                              [](const CheckRecord& r) { return !r.pass; });
  result.manifest = top.finalize(s);
  return result;
}

std::map<int, std::vector<CheckRecord>> by_criterion(const std::vector<CheckRecord>& records)
{
  std::map<int, std::vector<CheckRecord>> m;
  for (const auto& r : records)
    if (r.criterion > 0) m[r.criterion].push_back(r);
  return m;
}

const std::vector<std::string>& known_unattainable()
{
  static const std::vector<std::string> ids{"4b", "9.hperp0", "12.p-exponent"};
  return ids;
}

bool is_known_unattainable(const std::string& id)
{
  for (const auto& k : known_unattainable())
    if (id == k || (id.size() > k.size() && id.compare(0, k.size(), k) == 0 && id[k.size()] == '.'))
      return true;
  return false;
}

}  // namespace landau
