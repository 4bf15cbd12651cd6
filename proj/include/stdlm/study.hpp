#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "stdlm/interpolate.hpp"
#include "stdlm/io.hpp"

namespace stdlm {

struct StudyOptions {
  // Skip draws/diagnostics serialization and emit prediction artifacts only
  // (the `interpolate` subcommand).
  bool prediction_only = false;
};

struct UnitSummary {
  std::string label;         // "all" or "week01", ...
  int chain = 0;
  double acceptance_rate = 0.0;
  double seconds = 0.0;
  double seconds_per_iteration = 0.0;
};

struct StudyResult {
  std::filesystem::path output_dir;
  std::vector<UnitSummary> units;
  CoverageReport coverage;
  Gamma gamma_used;
};

// Runs the configured study end to end: ingest, per-unit chains (weekly
// slicing where the study asks for it), interpolation at the held-out sites,
// and serialization of draws, diagnostics, predictive series, coverage and a
// reproducibility manifest under cfg.output_dir. Everything except
// timing.csv is a deterministic function of the config.
StudyResult run_study(const RunConfig& cfg, const StudyOptions& opts = {});

}  // namespace stdlm
