#include "stdlm/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace stdlm {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string strip(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& s, const std::string& where, long line) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw IngestError(where + ": not a number '" + s + "' (line " +
                      std::to_string(line) + ")");
  }
}

long parse_long(const std::string& s, const std::string& where, long line) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw IngestError(where + ": not an integer '" + s + "' (line " +
                      std::to_string(line) + ")");
  }
}

}  // namespace

StationSet read_stations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open stations file: " + path.string());
  std::string line;
  long line_no = 0;
  if (!std::getline(in, line)) throw IngestError("stations file is empty");
  ++line_no;
  const std::string header = strip(line);
  bool latlon;
  if (header == "id,x,y") {
    latlon = false;
  } else if (header == "id,lat,lon") {
    latlon = true;
  } else {
    throw IngestError("stations header must be 'id,x,y' or 'id,lat,lon' (line 1)");
  }

  std::vector<Station> sites;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string row = strip(line);
    if (row.empty()) continue;
    const auto cells = split(row, ',');
    if (cells.size() != 3) {
      throw IngestError("stations row needs 3 cells (line " +
                        std::to_string(line_no) + ")");
    }
    const std::string id = strip(cells[0]);
    if (id.empty()) {
      throw IngestError("empty site id (line " + std::to_string(line_no) + ")");
    }
    for (const auto& s : sites) {
      if (s.id == id) {
        throw IngestError("duplicate site id '" + id + "' (line " +
                          std::to_string(line_no) + ")");
      }
    }
    const double a = parse_double(strip(cells[1]), "stations", line_no);
    const double b = parse_double(strip(cells[2]), "stations", line_no);
    sites.push_back(Station{id, Eigen::Vector2d(a, b)});
  }
  if (sites.empty()) throw IngestError("stations file has no data rows");
  try {
    return latlon ? StationSet::from_latlon(std::move(sites))
                  : StationSet::from_planar(std::move(sites));
  } catch (const ConfigError& e) {
    throw IngestError(std::string("invalid station set: ") + e.what());
  }
}

ObservationPanel read_observations(const std::filesystem::path& path,
                                   const StationSet& stations) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open observations file: " + path.string());
  std::string line;
  long line_no = 0;
  bool sqrt_transform = false;
  bool have_unit = false;

  // Preamble lines start with '#'.
  std::string header;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string row = strip(line);
    if (row.empty()) continue;
    if (row[0] == '#') {
      if (row.rfind("#unit=", 0) == 0) {
        const std::string unit = row.substr(6);
        if (unit == "ppb") {
          sqrt_transform = true;
        } else if (unit == "sqrt-ppb") {
          sqrt_transform = false;
        } else {
          throw IngestError("unknown unit '" + unit + "' (line " +
                            std::to_string(line_no) + ")");
        }
        have_unit = true;
      }
      continue;
    }
    header = row;
    break;
  }
  if (header.empty()) throw IngestError("observations file has no header");
  if (!have_unit) {
    throw IngestError("observations file must declare '#unit=ppb' or '#unit=sqrt-ppb'");
  }

  const auto cols = split(header, ',');
  if (cols.size() < 2 || strip(cols[0]) != "time") {
    throw IngestError("observations header must be 'time,<site-id>,...' (line " +
                      std::to_string(line_no) + ")");
  }
  std::vector<int> site_of_col(cols.size() - 1);
  for (std::size_t c = 1; c < cols.size(); ++c) {
    const int idx = stations.find(strip(cols[c]));
    if (idx < 0) {
      throw IngestError("unknown site id '" + strip(cols[c]) + "' in header (line " +
                        std::to_string(line_no) + ")");
    }
    site_of_col[c - 1] = idx;
  }
  if (static_cast<int>(site_of_col.size()) != stations.n()) {
    throw IngestError("observations header must list every station exactly once");
  }

  std::vector<int> t_index;
  std::vector<std::vector<double>> values;   // per row
  std::vector<std::vector<bool>> observed;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string row = strip(line);
    if (row.empty() || row[0] == '#') continue;
    const auto cells = split(row, ',');
    if (cells.size() != cols.size()) {
      throw IngestError("row has " + std::to_string(cells.size()) + " cells, expected " +
                        std::to_string(cols.size()) + " (line " +
                        std::to_string(line_no) + ")");
    }
    const long t = parse_long(strip(cells[0]), "observations", line_no);
    if (t < 1) {
      throw IngestError("time index must be >= 1 (line " + std::to_string(line_no) + ")");
    }
    if (!t_index.empty() && t <= t_index.back()) {
      throw IngestError("time index must be strictly increasing (line " +
                        std::to_string(line_no) + ")");
    }
    t_index.push_back(static_cast<int>(t));
    std::vector<double> v(site_of_col.size(), 0.0);
    std::vector<bool> m(site_of_col.size(), false);
    for (std::size_t c = 1; c < cells.size(); ++c) {
      const std::string cell = strip(cells[c]);
      if (cell.empty()) continue;
      double val = parse_double(cell, "observations", line_no);
      if (!std::isfinite(val)) {
        throw IngestError("non-finite observation (line " + std::to_string(line_no) + ")");
      }
      if (sqrt_transform) {
        if (val < 0.0) {
          throw IngestError("negative ppb value (line " + std::to_string(line_no) + ")");
        }
        val = std::sqrt(val);
      }
      v[c - 1] = val;
      m[c - 1] = true;
    }
    values.push_back(std::move(v));
    observed.push_back(std::move(m));
  }
  if (values.empty()) throw IngestError("observations file has no data rows");

  const int n = stations.n();
  const int T = static_cast<int>(values.size());
  ObservationPanel panel;
  panel.y = Eigen::MatrixXd::Zero(n, T);
  panel.mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(n, T, false);
  panel.t_index = t_index;
  for (int r = 0; r < T; ++r) {
    for (std::size_t c = 0; c < site_of_col.size(); ++c) {
      panel.y(site_of_col[c], r) = values[r][c];
      panel.mask(site_of_col[c], r) = observed[r][c];
    }
  }
  panel.validate();
  return panel;
}

std::pair<StationSet, ObservationPanel> ingest(
    const std::filesystem::path& stations_path,
    const std::filesystem::path& observations_path) {
  StationSet stations = read_stations(stations_path);
  ObservationPanel panel = read_observations(observations_path, stations);
  return {std::move(stations), std::move(panel)};
}

std::string study_name(StudyKind kind) {
  switch (kind) {
    case StudyKind::Single: return "single";
    case StudyKind::Weekly: return "weekly";
    case StudyKind::FullSpan: return "full-span";
    case StudyKind::FixedLambda: return "fixed-lambda";
    case StudyKind::TauScaled: return "tau-scaled";
  }
  return "single";
}

StudyKind parse_study(const std::string& name) {
  if (name == "single") return StudyKind::Single;
  if (name == "weekly") return StudyKind::Weekly;
  if (name == "full-span") return StudyKind::FullSpan;
  if (name == "fixed-lambda") return StudyKind::FixedLambda;
  if (name == "tau-scaled") return StudyKind::TauScaled;
  throw ConfigError("unknown study '" + name + "'");
}

ModelConfig RunConfig::model_config(int n) const {
  ModelConfig mc;
  mc.gamma = gamma;
  mc.lambda_prior = lambda_prior;
  mc.sigma2_prior = sigma2_prior;
  mc.a_prior.mean = a_prior_mean;
  mc.a_prior.cov = a_prior_var.asDiagonal();
  mc.m0.resize(state_dim(n));
  mc.m0[0] = m0_beta;
  mc.m0.segment(1, n).setConstant(m0_alpha1);
  mc.m0.segment(1 + n, n).setConstant(m0_alpha2);
  mc.C0 = Eigen::MatrixXd::Zero(state_dim(n), state_dim(n));
  mc.C0(0, 0) = c0_beta;
  mc.C0.block(1, 1, 2 * n, 2 * n).diagonal().setConstant(c0_alpha);
  mc.mh_tau2 = mh_tau2;
  mc.seed = seed;
  mc.iterations = iterations;
  mc.burn_in = burn_in;
  mc.thin = thin;
  return mc;
}

void RunConfig::validate() const {
  if (stations_file.empty() || observations_file.empty()) {
    throw ConfigError("stations and observations paths are required");
  }
  if (!std::filesystem::exists(stations_file)) {
    throw ConfigError("stations file does not exist: " + stations_file.string());
  }
  if (!std::filesystem::exists(observations_file)) {
    throw ConfigError("observations file does not exist: " + observations_file.string());
  }
  for (double l : levels) {
    if (!(l > 0.0 && l < 1.0)) throw ConfigError("levels must lie in (0,1)");
  }
  if (levels.empty()) throw ConfigError("at least one nominal level is required");
  if (chains < 1) throw ConfigError("chains must be >= 1");
  if (t_weeks && *t_weeks < 1) throw ConfigError("t_weeks must be >= 1");
  if ((study == StudyKind::FixedLambda) && fixed_lambdas.empty()) {
    throw ConfigError("fixed-lambda study needs fixed_lambdas");
  }
  // Model-level checks that do not need the site count.
  gamma.validate();
  if (!(mh_tau2 > 0.0)) throw ConfigError("mh_tau2 must be positive");
  if (iterations <= 0 || burn_in < 0 || burn_in >= iterations) {
    throw ConfigError("need 0 <= burn_in < iterations");
  }
  if (thin <= 0) throw ConfigError("thin must be positive");
  if (!(c0_beta > 0.0 && c0_alpha > 0.0)) throw ConfigError("C0 entries must be positive");
  if (!(a_prior_var.minCoeff() > 0.0)) throw ConfigError("a prior variances must be positive");
}

namespace {

std::vector<double> parse_double_list(const std::string& value, const std::string& key) {
  std::vector<double> out;
  std::string item;
  std::stringstream ss(value);
  while (std::getline(ss, item, ',')) {
    const std::string v = strip(item);
    if (v.empty()) continue;
    try {
      out.push_back(std::stod(v));
    } catch (const std::exception&) {
      throw ConfigError("bad number '" + v + "' for key " + key);
    }
  }
  return out;
}

std::vector<std::string> parse_string_list(const std::string& value) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss(value);
  while (std::getline(ss, item, ',')) {
    const std::string v = strip(item);
    if (!v.empty()) out.push_back(v);
  }
  return out;
}

}  // namespace

RunConfig parse_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  RunConfig cfg;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string row = strip(line);
    if (row.empty() || row[0] == '#') continue;
    const auto eq = row.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("expected key = value (line " + std::to_string(line_no) + ")");
    }
    const std::string key = strip(row.substr(0, eq));
    const std::string value = strip(row.substr(eq + 1));
    auto num = [&](const char* name) {
      try {
        return std::stod(value);
      } catch (const std::exception&) {
        throw ConfigError("bad number '" + value + "' for key " + name);
      }
    };
    if (key == "stations") cfg.stations_file = value;
    else if (key == "observations") cfg.observations_file = value;
    else if (key == "output") cfg.output_dir = value;
    else if (key == "study") cfg.study = parse_study(value);
    else if (key == "fixed_lambdas") cfg.fixed_lambdas = parse_double_list(value, key);
    else if (key == "t_weeks") cfg.t_weeks = static_cast<int>(num("t_weeks"));
    else if (key == "ungauged") cfg.ungauged = parse_string_list(value);
    else if (key == "levels") cfg.levels = parse_double_list(value, key);
    else if (key == "chains") cfg.chains = static_cast<int>(num("chains"));
    else if (key == "tau_y2") cfg.gamma.tau_y2 = num("tau_y2");
    else if (key == "tau1_2") cfg.gamma.tau1_2 = num("tau1_2");
    else if (key == "lambda1") cfg.gamma.lambda1 = num("lambda1");
    else if (key == "tau2_2") cfg.gamma.tau2_2 = num("tau2_2");
    else if (key == "lambda2") cfg.gamma.lambda2 = num("lambda2");
    else if (key == "lambda_prior") {
      const auto v = parse_double_list(value, key);
      if (v.size() != 2) throw ConfigError("lambda_prior needs two numbers");
      cfg.lambda_prior = {v[0], v[1]};
    } else if (key == "sigma2_prior") {
      const auto v = parse_double_list(value, key);
      if (v.size() != 2) throw ConfigError("sigma2_prior needs two numbers");
      cfg.sigma2_prior = {v[0], v[1]};
    } else if (key == "a_prior_mean") {
      const auto v = parse_double_list(value, key);
      if (v.size() != 2) throw ConfigError("a_prior_mean needs two numbers");
      cfg.a_prior_mean = {v[0], v[1]};
    } else if (key == "a_prior_var") {
      const auto v = parse_double_list(value, key);
      if (v.size() != 2) throw ConfigError("a_prior_var needs two numbers");
      cfg.a_prior_var = {v[0], v[1]};
    }
    else if (key == "m0_beta") cfg.m0_beta = num("m0_beta");
    else if (key == "m0_alpha1") cfg.m0_alpha1 = num("m0_alpha1");
    else if (key == "m0_alpha2") cfg.m0_alpha2 = num("m0_alpha2");
    else if (key == "c0_beta") cfg.c0_beta = num("c0_beta");
    else if (key == "c0_alpha") cfg.c0_alpha = num("c0_alpha");
    else if (key == "mh_tau2") cfg.mh_tau2 = num("mh_tau2");
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(std::stoull(value));
    else if (key == "iterations") cfg.iterations = static_cast<int>(num("iterations"));
    else if (key == "burn_in") cfg.burn_in = static_cast<int>(num("burn_in"));
    else if (key == "thin") cfg.thin = static_cast<int>(num("thin"));
    else {
      throw ConfigError("unknown config key '" + key + "' (line " +
                        std::to_string(line_no) + ")");
    }
  }
  return cfg;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

void hash_in(std::uint64_t& h, const std::string& s) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  h ^= '\n';
  h *= 0x100000001b3ULL;
}

}  // namespace

std::uint64_t config_hash(const RunConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  hash_in(h, "stations=" + cfg.stations_file.string());
  hash_in(h, "observations=" + cfg.observations_file.string());
  hash_in(h, "study=" + study_name(cfg.study));
  std::string fl = "fixed_lambdas=";
  for (double v : cfg.fixed_lambdas) fl += format_double(v) + ",";
  hash_in(h, fl);
  hash_in(h, "t_weeks=" + (cfg.t_weeks ? std::to_string(*cfg.t_weeks) : "auto"));
  std::string ug = "ungauged=";
  for (const auto& s : cfg.ungauged) ug += s + ",";
  hash_in(h, ug);
  std::string lv = "levels=";
  for (double v : cfg.levels) lv += format_double(v) + ",";
  hash_in(h, lv);
  hash_in(h, "chains=" + std::to_string(cfg.chains));
  hash_in(h, "gamma=" + format_double(cfg.gamma.tau_y2) + "," +
                 format_double(cfg.gamma.tau1_2) + "," + format_double(cfg.gamma.lambda1) +
                 "," + format_double(cfg.gamma.tau2_2) + "," +
                 format_double(cfg.gamma.lambda2));
  hash_in(h, "lambda_prior=" + format_double(cfg.lambda_prior.shape) + "," +
                 format_double(cfg.lambda_prior.scale));
  hash_in(h, "sigma2_prior=" + format_double(cfg.sigma2_prior.shape) + "," +
                 format_double(cfg.sigma2_prior.scale));
  hash_in(h, "a_prior=" + format_double(cfg.a_prior_mean[0]) + "," +
                 format_double(cfg.a_prior_mean[1]) + "," +
                 format_double(cfg.a_prior_var[0]) + "," +
                 format_double(cfg.a_prior_var[1]));
  hash_in(h, "init=" + format_double(cfg.m0_beta) + "," + format_double(cfg.m0_alpha1) +
                 "," + format_double(cfg.m0_alpha2) + "," + format_double(cfg.c0_beta) +
                 "," + format_double(cfg.c0_alpha));
  hash_in(h, "mh_tau2=" + format_double(cfg.mh_tau2));
  hash_in(h, "seed=" + std::to_string(cfg.seed));
  hash_in(h, "iterations=" + std::to_string(cfg.iterations));
  hash_in(h, "burn_in=" + std::to_string(cfg.burn_in));
  hash_in(h, "thin=" + std::to_string(cfg.thin));
  return h;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write file: " + path.string());
  out << content;
}

}  // namespace stdlm
