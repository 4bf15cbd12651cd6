#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stdlm/diagnostics.hpp"
#include "stdlm/io.hpp"
#include "stdlm/linalg.hpp"
#include "stdlm/polydlm.hpp"
#include "stdlm/study.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIngest = 3;
constexpr int kExitNumerical = 4;

struct GridSpec {
  std::string param;
  double lo = 0.0;
  double hi = 0.0;
  int steps = 1;
};

GridSpec parse_grid(const std::string& s) {
  // param=lo:hi:steps
  const auto eq = s.find('=');
  if (eq == std::string::npos) throw stdlm::ConfigError("grid must be param=lo:hi:steps");
  GridSpec g;
  g.param = s.substr(0, eq);
  const std::string rest = s.substr(eq + 1);
  std::stringstream ss(rest);
  std::string item;
  std::vector<double> v;
  while (std::getline(ss, item, ':')) v.push_back(std::stod(item));
  if (v.size() != 3 || v[2] < 1) throw stdlm::ConfigError("grid must be param=lo:hi:steps");
  g.lo = v[0];
  g.hi = v[1];
  g.steps = static_cast<int>(v[2]);
  return g;
}

int cmd_ingest_check(const std::string& stations_path, const std::string& obs_path) {
  auto [stations, panel] = stdlm::ingest(stations_path, obs_path);
  long observed = 0;
  for (int c = 0; c < panel.T(); ++c) {
    observed += panel.mask.col(c).count();
  }
  const double total = static_cast<double>(panel.n()) * panel.T();
  std::printf("sites: %d\n", stations.n());
  std::printf("hours: %d (t = %d .. %d)\n", panel.T(), panel.t_index.front(),
              panel.t_index.back());
  std::printf("metric: %s\n",
              stations.metric() == stdlm::DistanceMetric::Planar ? "planar"
                                                                 : "great-circle");
  std::printf("observed: %ld of %.0f cells (%.2f%% missing)\n", observed, total,
              100.0 * (1.0 - observed / total));
  for (int i = 0; i < panel.n(); ++i) {
    long cnt = 0;
    for (int c = 0; c < panel.T(); ++c) cnt += panel.mask(i, c) ? 1 : 0;
    std::printf("  %-12s %ld observed\n", stations.site(i).id.c_str(), cnt);
  }
  return 0;
}

int cmd_analytic(double sigma_beta2, double sigma_delta2, double sigma_eps2,
                 double lambda, double d01, const std::string& grid_arg,
                 const std::string& out_path) {
  stdlm::PolyDlmParams base{sigma_beta2, sigma_delta2, sigma_eps2, lambda, d01};
  std::vector<stdlm::PolyDlmParams> grid;
  std::string grid_param = "none";
  if (grid_arg.empty()) {
    grid.push_back(base);
  } else {
    const GridSpec g = parse_grid(grid_arg);
    grid_param = g.param;
    for (int k = 0; k < g.steps; ++k) {
      const double v =
          g.steps == 1 ? g.lo : g.lo + (g.hi - g.lo) * k / (g.steps - 1.0);
      stdlm::PolyDlmParams p = base;
      if (g.param == "d01") p.d01 = v;
      else if (g.param == "lambda") p.lambda = v;
      else if (g.param == "sigma_eps2") p.sigma_eps2 = v;
      else if (g.param == "sigma_beta2") p.sigma_beta2 = v;
      else if (g.param == "sigma_delta2") p.sigma_delta2 = v;
      else throw stdlm::ConfigError("unknown grid parameter '" + g.param + "'");
      grid.push_back(p);
    }
  }

  std::ostringstream out;
  out << "sigma_beta2,sigma_delta2,sigma_eps2,lambda,d01,"
         "var_y01_y11,var_y02_y12,var_y01_y11_y12,var_y02_y11_y12,"
         "time_gap_t1,time_gap_t2,space_gap_cond,space_gap_marg,"
         "margin_time,margin_cond,paradox\n";
  for (const auto& p : grid) {
    const auto t1 = stdlm::theorem1(p);
    const auto t2 = stdlm::theorem2_gaps(p);
    out << stdlm::format_double(p.sigma_beta2) << ','
        << stdlm::format_double(p.sigma_delta2) << ','
        << stdlm::format_double(p.sigma_eps2) << ','
        << stdlm::format_double(p.lambda) << ',' << stdlm::format_double(p.d01) << ','
        << stdlm::format_double(t1.var_y01_y11) << ','
        << stdlm::format_double(t1.var_y02_y12) << ','
        << stdlm::format_double(t1.var_y01_y11_y12) << ','
        << stdlm::format_double(t1.var_y02_y11_y12) << ','
        << stdlm::format_double(t2.time_gap_t1) << ','
        << stdlm::format_double(t2.time_gap_t2) << ','
        << stdlm::format_double(t2.space_gap_cond) << ','
        << stdlm::format_double(t2.space_gap_marg) << ','
        << stdlm::format_double(t2.margin_time) << ','
        << stdlm::format_double(t2.margin_cond) << ','
        << (stdlm::corollary2_paradox(p) ? 1 : 0) << '\n';
  }
  if (out_path.empty()) {
    std::cout << out.str();
  } else {
    stdlm::write_text_file(out_path, out.str());
  }
  return 0;
}

int cmd_diagnostics(const std::string& draws_path, int burn_in, int max_lag,
                    const std::string& out_dir) {
  std::ifstream in(draws_path);
  if (!in) throw stdlm::ConfigError("cannot open draws file: " + draws_path);
  std::string line;
  if (!std::getline(in, line)) throw stdlm::ConfigError("draws file is empty");
  if (line.rfind("iter,lambda,sigma2,a1,a2", 0) != 0) {
    throw stdlm::ConfigError("draws file must start with 'iter,lambda,sigma2,a1,a2'");
  }
  std::vector<std::vector<double>> chains(4);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 5) throw stdlm::ConfigError("bad draws row: " + line);
    for (int p = 0; p < 4; ++p) chains[p].push_back(std::stod(cells[p + 1]));
  }
  const long total = static_cast<long>(chains[0].size());
  if (burn_in < 0 || burn_in >= total) {
    throw stdlm::ConfigError("burn_in must lie in [0, draws)");
  }

  std::filesystem::create_directories(out_dir);
  const char* names[4] = {"lambda", "sigma2", "a1", "a2"};
  std::ostringstream summary, acf, pacf;
  summary << "param,q025,q500,q975,degenerate\n";
  std::vector<stdlm::Diagnostics> diag;
  for (int p = 0; p < 4; ++p) {
    std::vector<double> post(chains[p].begin() + burn_in, chains[p].end());
    diag.push_back(stdlm::diagnostics(post, max_lag));
    summary << names[p] << ',' << stdlm::format_double(diag[p].q025) << ','
            << stdlm::format_double(diag[p].q500) << ','
            << stdlm::format_double(diag[p].q975) << ','
            << (diag[p].degenerate ? 1 : 0) << '\n';
  }
  acf << "lag,lambda,sigma2,a1,a2\n";
  for (int h = 0; h <= diag[0].max_lag; ++h) {
    acf << h;
    for (int p = 0; p < 4; ++p) acf << ',' << stdlm::format_double(diag[p].acf[h]);
    acf << '\n';
  }
  pacf << "lag,lambda,sigma2,a1,a2\n";
  for (int h = 1; h <= diag[0].max_lag; ++h) {
    pacf << h;
    for (int p = 0; p < 4; ++p) pacf << ',' << stdlm::format_double(diag[p].pacf[h]);
    pacf << '\n';
  }
  const std::filesystem::path dir(out_dir);
  stdlm::write_text_file(dir / "diagnostics.csv", summary.str());
  stdlm::write_text_file(dir / "acf.csv", acf.str());
  stdlm::write_text_file(dir / "pacf.csv", pacf.str());
  std::printf("wrote diagnostics for %ld post-burn-in draws to %s\n", total - burn_in,
              out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatio-temporal dynamic linear model for hourly pollutant fields"};
  app.require_subcommand(1);

  // ingest-check
  auto* ingest_cmd = app.add_subcommand("ingest-check", "Validate input files");
  std::string stations_path, obs_path;
  ingest_cmd->add_option("--stations", stations_path, "Stations CSV")->required();
  ingest_cmd->add_option("--observations", obs_path, "Observations CSV")->required();

  // run / interpolate
  std::string config_path, out_override, mode_override;
  std::optional<std::uint64_t> seed_override;
  auto add_run_flags = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "Run configuration file")->required();
    cmd->add_option("--seed", seed_override, "Override the config seed");
    cmd->add_option("--out", out_override, "Override the output directory");
    cmd->add_option("--mode", mode_override,
                    "Override the study mode (single|weekly|full-span|fixed-lambda|tau-scaled)");
  };
  auto* run_cmd = app.add_subcommand("run", "Run the configured study");
  add_run_flags(run_cmd);
  auto* interp_cmd =
      app.add_subcommand("interpolate", "Run the study, emit prediction artifacts only");
  add_run_flags(interp_cmd);

  // analytic
  auto* analytic_cmd =
      app.add_subcommand("analytic", "Closed-form predictive variance tables");
  double sb2 = 0.01, sd2 = 0.0002, se2 = 1.2, lam = 70.0, d01 = 20.0;
  std::string grid_arg, analytic_out;
  analytic_cmd->add_option("--sigma-beta2", sb2, "Prior variance of the level");
  analytic_cmd->add_option("--sigma-delta2", sd2, "Random-walk increment variance");
  analytic_cmd->add_option("--sigma-eps2", se2, "Observation noise variance");
  analytic_cmd->add_option("--lambda", lam, "Correlation range (km)");
  analytic_cmd->add_option("--d01", d01, "Intersite distance (km)");
  analytic_cmd->add_option("--grid", grid_arg, "Sweep: param=lo:hi:steps");
  analytic_cmd->add_option("--out", analytic_out, "Output CSV (stdout if omitted)");

  // diagnostics
  auto* diag_cmd = app.add_subcommand("diagnostics", "ACF/PACF/quantiles from draws.csv");
  std::string draws_path, diag_out = ".";
  int burn_in = 0, max_lag = 50;
  diag_cmd->add_option("--draws", draws_path, "draws.csv from a run")->required();
  diag_cmd->add_option("--burn-in", burn_in, "Draws to discard");
  diag_cmd->add_option("--max-lag", max_lag, "Largest ACF/PACF lag");
  diag_cmd->add_option("--out", diag_out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*ingest_cmd) return cmd_ingest_check(stations_path, obs_path);
    if (*run_cmd || *interp_cmd) {
      stdlm::RunConfig cfg = stdlm::parse_run_config(config_path);
      if (seed_override) cfg.seed = *seed_override;
      if (!out_override.empty()) cfg.output_dir = out_override;
      if (!mode_override.empty()) cfg.study = stdlm::parse_study(mode_override);
      if (cfg.output_dir.empty()) {
        throw stdlm::ConfigError("no output directory (config 'output' or --out)");
      }
      stdlm::StudyOptions opts;
      opts.prediction_only = static_cast<bool>(*interp_cmd);
      const stdlm::StudyResult res = stdlm::run_study(cfg, opts);
      for (const auto& u : res.units) {
        std::printf("%-10s acceptance %.3f  %.1fs (%.3fs/iter)\n", u.label.c_str(),
                    u.acceptance_rate, u.seconds, u.seconds_per_iteration);
      }
      std::printf("artifacts in %s\n", res.output_dir.string().c_str());
      return 0;
    }
    if (*analytic_cmd) {
      return cmd_analytic(sb2, sd2, se2, lam, d01, grid_arg, analytic_out);
    }
    if (*diag_cmd) return cmd_diagnostics(draws_path, burn_in, max_lag, diag_out);
  } catch (const stdlm::IngestError& e) {
    std::fprintf(stderr, "ingest error: %s\n", e.what());
    return kExitIngest;
  } catch (const stdlm::NumericalError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return kExitNumerical;
  } catch (const stdlm::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
