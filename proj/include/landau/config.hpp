#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "landau/assembly.hpp"
#include "landau/io.hpp"
#include "landau/kernels.hpp"

namespace landau {

/**
 * @brief Validated run configuration. Every field has a default; see README for
 *        the JSON schema.
 */
struct RunConfig
{
  ModelParams params;
  int degree = 8;
  double oversampling = 1.0;
  double prune = 1e-16;
  LambdaForm lambda_form = LambdaForm::gradient;
  SigmaTableOptions sigma;
  CutoffSpec cutoff;
  double delta = 0.5;
  std::uint64_t seed = 20240611;

  int coercivity_samples = 1000;
  int conservation_samples = 8;

  std::vector<double> spectrum_eta{0.0, 0.5, 1.0, 2.0, 5.0};

  double dispersion_eta_min = 1e-3;
  double dispersion_eta_max = 0.5;
  int dispersion_count = 40;
  double dispersion_window = 0.2;
  double cancellation_window = 0.1;

  double gap_eta_max = 5.0;
  int gap_count = 101;

  double radial_eta_max = 5.0;
  double t_min = 1e-2;
  double t_max = 1e4;
  int t_count = 60;
  double decay_t1 = 100.0;
  double decay_t2 = 1e4;

  std::vector<double> evolve_eta{0.1, 1.0, 3.0};
  std::vector<double> hsplit_eta{1e-3, 2e-3, 0.01, 0.05, 0.1, 0.2, 0.3, 0.45};

  std::vector<double> picard_eta{0.1, 1.0, 3.0};
  std::vector<int> picard_k{0, 1, 2};
  double picard_t_max = 5.0;
  int picard_steps = 50;

  double smooth_t_min = 1e-2;
  double smooth_t_max = 1.0;
  int smooth_t_count = 12;
  double smooth_eta_max = 5.0;
  int smooth_eta_count = 16;

  std::string output = "out";

  /// Throws ConfigError naming the violated precondition.
  void validate() const;
};

/**
 * @brief Parses JSON text into a RunConfig with defaults for missing keys.
 *
 * Throws ConfigError with the line/column of syntax errors and the dotted path of
 * unknown keys, type errors and domain errors.
 */
RunConfig validate_config(const std::string& text);

RunConfig load_config(const fs::path& path);

/// Full configuration including defaults, in schema order.
ojson to_json(const RunConfig& c);

/// SHA-256 of the canonical JSON dump.
std::string config_hash(const RunConfig& c);

}  // namespace landau
