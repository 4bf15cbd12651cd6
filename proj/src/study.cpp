#include "stdlm/study.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "stdlm/diagnostics.hpp"
#include "stdlm/model.hpp"

namespace stdlm {

namespace {

struct Unit {
  std::string label;
  int first_col;
  int n_cols;
  ChainMode mode;
};

std::string week_label(int wk) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "week%02d", wk + 1);
  return buf;
}

// Column ranges of consecutive 168-hour blocks from the panel start.
std::vector<std::pair<int, int>> week_slices(const std::vector<int>& t_index) {
  std::vector<std::pair<int, int>> out;
  int first = 0;
  for (int c = 0; c < static_cast<int>(t_index.size()); ++c) {
    const int wk = (t_index[c] - t_index.front()) / 168;
    const int wk_first = (t_index[first] - t_index.front()) / 168;
    if (wk != wk_first) {
      out.emplace_back(first, c - first);
      first = c;
    }
  }
  out.emplace_back(first, static_cast<int>(t_index.size()) - first);
  return out;
}

void write_draws_csv(const std::filesystem::path& path, const PosteriorDraws& d) {
  std::ostringstream out;
  out << "iter,lambda,sigma2,a1,a2\n";
  for (std::size_t i = 0; i < d.lambda.size(); ++i) {
    out << (i + 1) << ',' << format_double(d.lambda[i]) << ','
        << format_double(d.sigma2[i]) << ',' << format_double(d.a1[i]) << ','
        << format_double(d.a2[i]) << '\n';
  }
  write_text_file(path, out.str());
}

void write_diagnostics_csv(const std::filesystem::path& dir, const PosteriorDraws& d,
                           int max_lag) {
  const char* names[4] = {"lambda", "sigma2", "a1", "a2"};
  const std::vector<double>* chains[4] = {&d.lambda, &d.sigma2, &d.a1, &d.a2};
  std::vector<Diagnostics> diag;
  for (int p = 0; p < 4; ++p) {
    diag.push_back(
        diagnostics(d.post_burn_in(*chains[p]), max_lag, d.acceptance_rate()));
  }

  std::ostringstream summary;
  summary << "param,acceptance,q025,q500,q975,degenerate\n";
  for (int p = 0; p < 4; ++p) {
    summary << names[p] << ',' << format_double(diag[p].acceptance_rate) << ','
            << format_double(diag[p].q025) << ',' << format_double(diag[p].q500) << ','
            << format_double(diag[p].q975) << ',' << (diag[p].degenerate ? 1 : 0)
            << '\n';
  }
  write_text_file(dir / "diagnostics.csv", summary.str());

  std::ostringstream acf;
  acf << "lag,lambda,sigma2,a1,a2\n";
  for (int h = 0; h <= diag[0].max_lag; ++h) {
    acf << h;
    for (int p = 0; p < 4; ++p) acf << ',' << format_double(diag[p].acf[h]);
    acf << '\n';
  }
  write_text_file(dir / "acf.csv", acf.str());

  std::ostringstream pacf;
  pacf << "lag,lambda,sigma2,a1,a2\n";
  for (int h = 1; h <= diag[0].max_lag; ++h) {
    pacf << h;
    for (int p = 0; p < 4; ++p) pacf << ',' << format_double(diag[p].pacf[h]);
    pacf << '\n';
  }
  write_text_file(dir / "pacf.csv", pacf.str());
}

}  // namespace

StudyResult run_study(const RunConfig& cfg, const StudyOptions& opts) {
  cfg.validate();
  auto [all_stations, all_panel] = ingest(cfg.stations_file, cfg.observations_file);

  // Partition into gauged and held-out sites.
  std::vector<int> gauged_idx;
  std::vector<int> held_idx;
  for (int i = 0; i < all_stations.n(); ++i) {
    const auto& id = all_stations.site(i).id;
    const bool held =
        std::find(cfg.ungauged.begin(), cfg.ungauged.end(), id) != cfg.ungauged.end();
    (held ? held_idx : gauged_idx).push_back(i);
  }
  for (const auto& id : cfg.ungauged) {
    if (all_stations.find(id) < 0) {
      throw ConfigError("ungauged site '" + id + "' is not in the stations file");
    }
  }
  if (gauged_idx.empty()) throw ConfigError("no gauged sites left after hold-out");

  const StationSet stations = all_stations.subset(gauged_idx);
  ObservationPanel panel;
  panel.y.resize(stations.n(), all_panel.T());
  panel.mask.resize(stations.n(), all_panel.T());
  panel.t_index = all_panel.t_index;
  for (int k = 0; k < stations.n(); ++k) {
    panel.y.row(k) = all_panel.y.row(gauged_idx[k]);
    panel.mask.row(k) = all_panel.mask.row(gauged_idx[k]);
  }

  const auto weeks = week_slices(panel.t_index);
  const int n_weeks = static_cast<int>(weeks.size());

  Gamma gamma_used = cfg.gamma;
  if (cfg.study == StudyKind::TauScaled) {
    gamma_used = scale_gamma_for_span(cfg.gamma, cfg.t_weeks.value_or(n_weeks));
  }

  if ((cfg.study == StudyKind::FixedLambda || cfg.study == StudyKind::TauScaled) &&
      !cfg.fixed_lambdas.empty() &&
      static_cast<int>(cfg.fixed_lambdas.size()) != n_weeks) {
    throw ConfigError("fixed_lambdas has " + std::to_string(cfg.fixed_lambdas.size()) +
                      " entries but the panel spans " + std::to_string(n_weeks) +
                      " weeks");
  }

  std::vector<Unit> units;
  switch (cfg.study) {
    case StudyKind::Weekly:
      for (int wk = 0; wk < n_weeks; ++wk) {
        units.push_back(Unit{week_label(wk), weeks[wk].first, weeks[wk].second,
                             ChainMode::full_mh()});
      }
      break;
    case StudyKind::FixedLambda:
      units.push_back(Unit{"all", 0, panel.T(), ChainMode::fixed(cfg.fixed_lambdas)});
      break;
    case StudyKind::TauScaled:
      units.push_back(Unit{"all", 0, panel.T(),
                           cfg.fixed_lambdas.empty()
                               ? ChainMode::full_mh()
                               : ChainMode::fixed(cfg.fixed_lambdas)});
      break;
    case StudyKind::Single:
    case StudyKind::FullSpan:
      units.push_back(Unit{"all", 0, panel.T(), ChainMode::full_mh()});
      break;
  }

  std::filesystem::create_directories(cfg.output_dir);

  struct Task {
    int unit;
    int chain;
    PosteriorDraws draws;
    double seconds = 0.0;
  };
  std::vector<Task> tasks;
  for (int u = 0; u < static_cast<int>(units.size()); ++u) {
    for (int c = 0; c < cfg.chains; ++c) tasks.push_back(Task{u, c, {}, 0.0});
  }

  // Independent runs go to a small worker pool; each task owns its seed and
  // writes only to its own slot.
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex err_mu;
  auto worker = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= tasks.size()) return;
      try {
        Task& task = tasks[k];
        const Unit& unit = units[task.unit];
        ObservationPanel sub = panel.slice(unit.first_col, unit.n_cols);
        ModelConfig mc = cfg.model_config(stations.n());
        mc.gamma = gamma_used;
        mc.seed = child_seed(cfg.seed, 977ULL * task.unit + task.chain);
        const auto t0 = std::chrono::steady_clock::now();
        task.draws = run_chain(sub, stations, mc, unit.mode);
        task.seconds = std::chrono::duration<double>(
                           std::chrono::steady_clock::now() - t0)
                           .count();
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned n_threads = std::min<std::size_t>(hw, tasks.size());
  {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (first_error) {
    write_text_file(cfg.output_dir / "PARTIAL", "study aborted before completion\n");
    std::rethrow_exception(first_error);
  }

  StudyResult result;
  result.output_dir = cfg.output_dir;
  result.gamma_used = gamma_used;

  for (const Task& task : tasks) {
    const Unit& unit = units[task.unit];
    std::string label = unit.label;
    if (cfg.chains > 1) label += "_c" + std::to_string(task.chain);
    UnitSummary s;
    s.label = label;
    s.chain = task.chain;
    s.acceptance_rate = task.draws.acceptance_rate();
    s.seconds = task.seconds;
    s.seconds_per_iteration = task.seconds / std::max(1, task.draws.iterations);
    result.units.push_back(s);

    if (!opts.prediction_only) {
      const auto dir = cfg.output_dir / ("run_" + label);
      std::filesystem::create_directories(dir);
      write_draws_csv(dir / "draws.csv", task.draws);
      const int max_lag =
          std::min(50, std::max(1, (task.draws.iterations - task.draws.burn_in) / 4));
      write_diagnostics_csv(dir, task.draws, max_lag);
    }
  }

  // Interpolation at the held-out sites. Chains of the same unit are merged
  // read-only; weekly units produce one series per week that are then
  // concatenated per site.
  std::ostringstream cov_csv;
  cov_csv << "site,week,level,inside,evaluated,rate\n";
  for (std::size_t h = 0; h < held_idx.size(); ++h) {
    const int site_row = held_idx[h];
    const auto& site_meta = all_stations.site(site_row);
    const UngaugedSite site = make_ungauged(stations, site_meta.id, site_meta.coord);

    std::vector<PredictiveSeries> pieces;
    for (int u = 0; u < static_cast<int>(units.size()); ++u) {
      PosteriorDraws merged;
      for (const Task& task : tasks) {
        if (task.unit != u) continue;
        if (merged.snapshots.empty()) {
          merged = task.draws;
        } else {
          merged.snapshots.insert(merged.snapshots.end(), task.draws.snapshots.begin(),
                                  task.draws.snapshots.end());
        }
      }
      const Unit& unit = units[u];
      std::vector<int> t_sub(panel.t_index.begin() + unit.first_col,
                             panel.t_index.begin() + unit.first_col + unit.n_cols);
      ModelConfig mc = cfg.model_config(stations.n());
      mc.gamma = gamma_used;
      RngStream rng = RngStream::child(cfg.seed, 0x70000000ULL + 512 * h + u);
      pieces.push_back(
          predict_series(merged, stations, site, t_sub, mc, cfg.levels, rng));
    }

    // Stitch unit series into one site-level table and evaluate coverage on
    // the full span (weekly studies evaluate per week automatically since
    // week slices align with units).
    std::ostringstream pred;
    pred << "t,truth,median";
    for (double l : pieces.front().levels) {
      pred << ",lo" << format_double(l) << ",hi" << format_double(l);
    }
    pred << '\n';
    for (const auto& piece : pieces) {
      for (std::size_t c = 0; c < piece.t_index.size(); ++c) {
        const int col = static_cast<int>(
            std::find(panel.t_index.begin(), panel.t_index.end(), piece.t_index[c]) -
            panel.t_index.begin());
        pred << piece.t_index[c] << ',';
        if (all_panel.mask(site_row, col)) {
          pred << format_double(all_panel.y(site_row, col));
        }
        pred << ',' << format_double(piece.median[c]);
        for (std::size_t l = 0; l < piece.levels.size(); ++l) {
          pred << ',' << format_double(piece.lower(l, c)) << ','
               << format_double(piece.upper(l, c));
        }
        pred << '\n';
      }
    }
    write_text_file(cfg.output_dir / ("predictive_" + site_meta.id + ".csv"),
                    pred.str());

    for (std::size_t u = 0; u < pieces.size(); ++u) {
      const Unit& unit = units[u];
      Eigen::VectorXd truth(unit.n_cols);
      std::vector<bool> tmask(unit.n_cols);
      for (int c = 0; c < unit.n_cols; ++c) {
        truth[c] = all_panel.y(site_row, unit.first_col + c);
        tmask[c] = all_panel.mask(site_row, unit.first_col + c);
      }
      long evaluable = 0;
      for (bool b : tmask) evaluable += b ? 1 : 0;
      if (evaluable == 0) continue;  // nothing to score in this unit
      const bool slice_weeks = units.size() == 1 && n_weeks > 1;
      CoverageReport rep = coverage(pieces[u], truth, tmask, cfg.levels, slice_weeks);
      for (auto row : rep.rows) {
        int week = row.week;
        if (units.size() > 1) week = static_cast<int>(u);  // weekly study: unit = week
        if (units.size() > 1 && row.week >= 0) continue;   // only the unit total
        result.coverage.rows.push_back(
            CoverageRow{row.site, week, row.level, row.inside, row.evaluated});
      }
    }
  }
  for (const auto& row : result.coverage.rows) {
    cov_csv << row.site << ',' << row.week << ',' << format_double(row.level)
            << ',' << row.inside << ',' << row.evaluated << ','
            << format_double(row.rate()) << '\n';
  }
  if (!held_idx.empty()) {
    write_text_file(cfg.output_dir / "coverage.csv", cov_csv.str());
  }

  // Reproducibility manifest (deterministic) and timing telemetry (not).
  nlohmann::json manifest;
  manifest["config_hash"] = config_hash(cfg);
  manifest["seed"] = cfg.seed;
  manifest["study"] = study_name(cfg.study);
  manifest["metric"] =
      stations.metric() == DistanceMetric::Planar ? "planar" : "great-circle";
  manifest["n_gauged"] = stations.n();
  manifest["n_ungauged"] = held_idx.size();
  manifest["T"] = panel.T();
  manifest["weeks"] = n_weeks;
  manifest["iterations"] = cfg.iterations;
  manifest["burn_in"] = cfg.burn_in;
  manifest["thin"] = cfg.thin;
  manifest["chains"] = cfg.chains;
  manifest["gamma"] = {{"tau_y2", gamma_used.tau_y2}, {"tau1_2", gamma_used.tau1_2},
                       {"lambda1", gamma_used.lambda1}, {"tau2_2", gamma_used.tau2_2},
                       {"lambda2", gamma_used.lambda2}};
  nlohmann::json accept = nlohmann::json::object();
  for (const auto& u : result.units) accept[u.label] = u.acceptance_rate;
  manifest["acceptance_rate"] = accept;
  write_text_file(cfg.output_dir / "manifest.json", manifest.dump(2) + "\n");

  std::ostringstream timing;
  timing << "unit,chain,seconds,seconds_per_iteration\n";
  for (const auto& u : result.units) {
    timing << u.label << ',' << u.chain << ',' << format_double(u.seconds) << ','
           << format_double(u.seconds_per_iteration) << '\n';
  }
  write_text_file(cfg.output_dir / "timing.csv", timing.str());

  return result;
}

}  // namespace stdlm
