#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stdlm/types.hpp"

namespace stdlm {

// Stations file: header `id,x,y` (planar km, Euclidean distances) or
// `id,lat,lon` (degrees, great-circle distances), one site per row.
StationSet read_stations(const std::filesystem::path& path);

// Observations file: optional preamble `#unit=ppb|sqrt-ppb`, then a header
// `time,<site-id>,...` and one row per hour. Empty cells are missing. Raw
// ppb values are square-root transformed on ingest.
ObservationPanel read_observations(const std::filesystem::path& path,
                                   const StationSet& stations);

std::pair<StationSet, ObservationPanel> ingest(
    const std::filesystem::path& stations_path,
    const std::filesystem::path& observations_path);

enum class StudyKind { Single, Weekly, FullSpan, FixedLambda, TauScaled };

std::string study_name(StudyKind kind);
StudyKind parse_study(const std::string& name);

// Run configuration mirroring the key=value config file.
struct RunConfig {
  std::filesystem::path stations_file;
  std::filesystem::path observations_file;
  std::filesystem::path output_dir;

  StudyKind study = StudyKind::Single;
  std::vector<double> fixed_lambdas;   // fixed-lambda / tau-scaled studies
  std::optional<int> t_weeks;          // tau-scaled denominator override

  std::vector<std::string> ungauged;   // held-out site ids
  std::vector<double> levels{0.8, 0.95};
  int chains = 1;

  // Model settings; m0/C0 are stored in block form and expanded once the
  // site count is known.
  Gamma gamma{0.02, 0.0002, 25.0, 0.0004, 25.0};
  InverseGammaPrior lambda_prior{1.0, 5.0};
  InverseGammaPrior sigma2_prior{2.0, 0.01};
  Eigen::Vector2d a_prior_mean{2.5, 9.8};
  Eigen::Vector2d a_prior_var{0.5, 0.5};
  double m0_beta = 2.85;
  double m0_alpha1 = -0.75;
  double m0_alpha2 = -0.08;
  double c0_beta = 1.0;
  double c0_alpha = 0.01;
  double mh_tau2 = 0.1;
  std::uint64_t seed = 1;
  int iterations = 2000;
  int burn_in = 1000;
  int thin = 10;

  ModelConfig model_config(int n) const;
  void validate() const;
};

RunConfig parse_run_config(const std::filesystem::path& path);

// FNV-1a hash of the canonical serialization of the semantic fields; changes
// exactly when a field changes, not when the file is reformatted.
std::uint64_t config_hash(const RunConfig& cfg);

// Round-trip-safe formatting used by every writer (%.17g).
std::string format_double(double v);

void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace stdlm
