#include "landau/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "landau/error.hpp"

namespace landau {

namespace {

// Reads known keys of one JSON object and rejects the rest.
class ObjectReader
{
 public:
  ObjectReader(const ojson& j, std::string path) : j_(j), path_(std::move(path))
  {
    if (!j_.is_object()) throw ConfigError(where() + "expected an object");
  }

  template <class T>
  void get(const char* key, T& out)
  {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    const ojson& v = j_.at(key);
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw ConfigError("");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw ConfigError("");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigError("");
      } else {
        if (!v.is_array()) throw ConfigError("");
        for (const auto& e : v)
          if (!e.is_number() ||
              (std::is_integral_v<typename T::value_type> && !e.is_number_integer()))
            throw ConfigError("");
      }
      out = v.get<T>();
    } catch (const std::exception&) {
      throw ConfigError("config field '" + field(key) + "': wrong type (" + v.type_name() + ")");
    }
  }

  ObjectReader child(const char* key)
  {
    seen_.insert(key);
    static const ojson empty = ojson::object();
    return ObjectReader(j_.contains(key) ? j_.at(key) : empty, field(key));
  }

  void finish() const
  {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ConfigError("config field '" + field(k.c_str()) + "': unknown key");
  }

  std::string field(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  std::string where() const { return path_.empty() ? "config: " : "config field '" + path_ + "': "; }
  const ojson& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& field, const std::string& what)
{
  if (!ok) throw ConfigError("config field '" + field + "': " + what);
}

std::pair<int, int> line_col(const std::string& text, std::size_t byte)
{
  int line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n')
      ++line, col = 1;
    else
      ++col;
  }
  return {line, col};
}

}  // namespace

void RunConfig::validate() const
{
  require(params.m_A > 0.0, "params.m_A", "must be positive");
  require(params.m_B > 0.0, "params.m_B", "must be positive");
  require(params.gamma >= -2.0 && params.gamma <= 1.0, "params.gamma", "must lie in [-2, 1]");
  require(degree >= 2, "degree",
          "must be at least 2 (the basis must contain the collision invariants)");
  require(degree <= 16, "degree", "must be at most 16");
  require(oversampling >= 1.0, "quadrature.oversampling", "must be at least 1");
  require(prune >= 0.0 && prune < 1e-6, "quadrature.prune", "must lie in [0, 1e-6)");
  require(sigma.count >= 8, "sigma_table.count", "must be at least 8");
  require(sigma.r_min > 0.0 && sigma.r_max > sigma.r_min, "sigma_table.r_max",
          "need 0 < r_min < r_max");
  require(sigma.order >= 1 && sigma.order <= 7, "sigma_table.order", "must lie in [1, 7]");
  require(cutoff.varpi > 0.0, "cutoff.varpi", "must be positive");
  require(cutoff.R > 0.0, "cutoff.R", "must be positive");
  require(delta > 0.0 && delta < gap_eta_max, "delta", "need 0 < delta < gap.eta_max");
  require(coercivity_samples >= 1, "coercivity.samples", "must be positive");
  require(conservation_samples >= 1, "conservation.samples", "must be positive");
  for (double e : spectrum_eta) require(e >= 0.0, "spectrum.eta", "entries must be nonnegative");
  require(dispersion_eta_min > 0.0 && dispersion_eta_max > dispersion_eta_min,
          "dispersion.eta_max", "need 0 < eta_min < eta_max");
  require(dispersion_count >= 8, "dispersion.count", "must be at least 8");
  require(dispersion_window > dispersion_eta_min, "dispersion.window", "must exceed eta_min");
  require(cancellation_window > dispersion_eta_min, "cancellation.window",
          "must exceed dispersion.eta_min");
  require(gap_count >= 2, "gap.count", "must be at least 2");
  require(radial_eta_max > delta, "time.radial_eta_max", "must exceed delta");
  require(t_min > 0.0 && t_max > t_min, "time.t_max", "need 0 < t_min < t_max");
  require(t_count >= 12, "time.count", "must be at least 12");
  require(decay_t1 >= 10.0 && decay_t2 > decay_t1, "decay.window",
          "need 10 <= t1 < t2 (asymptotic regime)");
  for (double e : evolve_eta) require(e >= 0.0, "evolve.eta", "entries must be nonnegative");
  for (double e : hsplit_eta)
    require(e > 0.0 && e < delta, "hsplit.eta", "entries must lie in (0, delta)");
  for (double e : picard_eta) require(e >= 0.0, "picard.eta", "entries must be nonnegative");
  for (int k : picard_k) require(k >= 0 && k <= 4, "picard.k", "entries must lie in [0, 4]");
  require(picard_t_max > 0.0 && picard_steps >= 1, "picard.t_max", "need t_max > 0, steps >= 1");
  require(smooth_t_min > 0.0 && smooth_t_max <= 1.0 && smooth_t_max > smooth_t_min,
          "smoothing.t_max", "need 0 < t_min < t_max <= 1");
  require(smooth_t_count >= 3, "smoothing.t_count", "must be at least 3");
  require(smooth_eta_max > 0.0 && smooth_eta_count >= 2, "smoothing.eta_count",
          "need eta_max > 0 and at least 2 points");
  require(!output.empty(), "output", "must not be empty");
}

RunConfig validate_config(const std::string& text)
{
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const ojson::parse_error& e) {
    const auto [line, col] = line_col(text, e.byte == 0 ? 0 : e.byte - 1);
    std::ostringstream os;
    os << "config parse error at line " << line << ", column " << col << ": " << e.what();
    throw ConfigError(os.str());
  }
  RunConfig c;
  ObjectReader root(j, "");
  {
    auto r = root.child("params");
    r.get("m_A", c.params.m_A);
    r.get("m_B", c.params.m_B);
    r.get("gamma", c.params.gamma);
    r.finish();
  }
  root.get("degree", c.degree);
  {
    auto r = root.child("quadrature");
    r.get("oversampling", c.oversampling);
    r.get("prune", c.prune);
    std::string form = c.lambda_form == LambdaForm::gradient ? "gradient" : "potential";
    r.get("lambda_form", form);
    if (form == "gradient")
      c.lambda_form = LambdaForm::gradient;
    else if (form == "potential")
      c.lambda_form = LambdaForm::potential;
    else
      throw ConfigError("config field 'quadrature.lambda_form': expected gradient or potential");
    r.finish();
  }
  {
    auto r = root.child("sigma_table");
    r.get("count", c.sigma.count);
    r.get("r_min", c.sigma.r_min);
    r.get("r_max", c.sigma.r_max);
    r.get("order", c.sigma.order);
    r.get("abs_tol", c.sigma.abs_tol);
    r.finish();
  }
  {
    auto r = root.child("cutoff");
    r.get("varpi", c.cutoff.varpi);
    r.get("R", c.cutoff.R);
    r.finish();
  }
  root.get("delta", c.delta);
  root.get("seed", c.seed);
  {
    auto r = root.child("coercivity");
    r.get("samples", c.coercivity_samples);
    r.finish();
  }
  {
    auto r = root.child("conservation");
    r.get("samples", c.conservation_samples);
    r.finish();
  }
  {
    auto r = root.child("spectrum");
    r.get("eta", c.spectrum_eta);
    r.finish();
  }
  {
    auto r = root.child("dispersion");
    r.get("eta_min", c.dispersion_eta_min);
    r.get("eta_max", c.dispersion_eta_max);
    r.get("count", c.dispersion_count);
    r.get("window", c.dispersion_window);
    r.finish();
  }
  {
    auto r = root.child("cancellation");
    r.get("window", c.cancellation_window);
    r.finish();
  }
  {
    auto r = root.child("gap");
    r.get("eta_max", c.gap_eta_max);
    r.get("count", c.gap_count);
    r.finish();
  }
  {
    auto r = root.child("time");
    r.get("t_min", c.t_min);
    r.get("t_max", c.t_max);
    r.get("count", c.t_count);
    r.get("radial_eta_max", c.radial_eta_max);
    r.finish();
  }
  {
    auto r = root.child("decay");
    std::vector<double> w{c.decay_t1, c.decay_t2};
    r.get("window", w);
    if (w.size() != 2) throw ConfigError("config field 'decay.window': expected [t1, t2]");
    c.decay_t1 = w[0];
    c.decay_t2 = w[1];
    r.finish();
  }
  {
    auto r = root.child("evolve");
    r.get("eta", c.evolve_eta);
    r.finish();
  }
  {
    auto r = root.child("hsplit");
    r.get("eta", c.hsplit_eta);
    r.finish();
  }
  {
    auto r = root.child("picard");
    r.get("eta", c.picard_eta);
    r.get("k", c.picard_k);
    r.get("t_max", c.picard_t_max);
    r.get("steps", c.picard_steps);
    r.finish();
  }
  {
    auto r = root.child("smoothing");
    r.get("t_min", c.smooth_t_min);
    r.get("t_max", c.smooth_t_max);
    r.get("t_count", c.smooth_t_count);
    r.get("eta_max", c.smooth_eta_max);
    r.get("eta_count", c.smooth_eta_count);
    r.finish();
  }
  root.get("output", c.output);
  root.finish();
  c.validate();
  return c;
}

RunConfig load_config(const fs::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return validate_config(ss.str());
}

ojson to_json(const RunConfig& c)
{
  ojson j;
  j["params"] = {{"m_A", c.params.m_A}, {"m_B", c.params.m_B}, {"gamma", c.params.gamma}};
  j["degree"] = c.degree;
  j["quadrature"] = {{"oversampling", c.oversampling},
                     {"prune", c.prune},
                     {"lambda_form", c.lambda_form == LambdaForm::gradient ? "gradient" : "potential"}};
  j["sigma_table"] = {{"count", c.sigma.count},
                      {"r_min", c.sigma.r_min},
                      {"r_max", c.sigma.r_max},
                      {"order", c.sigma.order},
                      {"abs_tol", c.sigma.abs_tol}};
  j["cutoff"] = {{"varpi", c.cutoff.varpi}, {"R", c.cutoff.R}};
  j["delta"] = c.delta;
  j["seed"] = c.seed;
  j["coercivity"] = {{"samples", c.coercivity_samples}};
  j["conservation"] = {{"samples", c.conservation_samples}};
  j["spectrum"] = {{"eta", c.spectrum_eta}};
  j["dispersion"] = {{"eta_min", c.dispersion_eta_min},
                     {"eta_max", c.dispersion_eta_max},
                     {"count", c.dispersion_count},
                     {"window", c.dispersion_window}};
  j["cancellation"] = {{"window", c.cancellation_window}};
  j["gap"] = {{"eta_max", c.gap_eta_max}, {"count", c.gap_count}};
  j["time"] = {{"t_min", c.t_min},
               {"t_max", c.t_max},
               {"count", c.t_count},
               {"radial_eta_max", c.radial_eta_max}};
  j["decay"] = {{"window", {c.decay_t1, c.decay_t2}}};
  j["evolve"] = {{"eta", c.evolve_eta}};
  j["hsplit"] = {{"eta", c.hsplit_eta}};
  j["picard"] = {{"eta", c.picard_eta},
                 {"k", c.picard_k},
                 {"t_max", c.picard_t_max},
                 {"steps", c.picard_steps}};
  j["smoothing"] = {{"t_min", c.smooth_t_min},
                    {"t_max", c.smooth_t_max},
                    {"t_count", c.smooth_t_count},
                    {"eta_max", c.smooth_eta_max},
                    {"eta_count", c.smooth_eta_count}};
  j["output"] = c.output;
  return j;
}

std::string config_hash(const RunConfig& c) { return sha256_string(to_json(c).dump()); }

}  // namespace landau
