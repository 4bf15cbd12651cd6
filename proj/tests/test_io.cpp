#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "stdlm/io.hpp"
#include "stdlm/model.hpp"
#include "stdlm/study.hpp"

using namespace stdlm;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  static int counter = 0;
  fs::path dir = fs::temp_directory_path() /
                 ("stdlm_io_test_" + std::to_string(++counter));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write(const fs::path& p, const std::string& s) {
  std::ofstream out(p);
  out << s;
}

// Serializes a simulated panel (and its station set) into the CLI formats.
void write_fixture(const fs::path& dir, const StationSet& stations,
                   const ObservationPanel& panel) {
  std::ostringstream st;
  st << "id,x,y\n";
  for (const auto& s : stations.sites()) {
    st << s.id << ',' << format_double(s.coord[0]) << ',' << format_double(s.coord[1])
       << '\n';
  }
  write(dir / "stations.csv", st.str());

  std::ostringstream obs;
  obs << "#unit=sqrt-ppb\ntime";
  for (const auto& s : stations.sites()) obs << ',' << s.id;
  obs << '\n';
  for (int c = 0; c < panel.T(); ++c) {
    obs << panel.t_index[c];
    for (int i = 0; i < panel.n(); ++i) {
      obs << ',';
      if (panel.mask(i, c)) obs << format_double(panel.y(i, c));
    }
    obs << '\n';
  }
  write(dir / "obs.csv", obs.str());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("stations ingestion") {
  const fs::path dir = temp_dir();

  SUBCASE("planar header gives Euclidean km") {
    write(dir / "s.csv", "id,x,y\nA,0,0\nB,3,4\n");
    const StationSet s = read_stations(dir / "s.csv");
    CHECK(s.metric() == DistanceMetric::Planar);
    CHECK(s.distances()(0, 1) == 5.0);
  }
  SUBCASE("lat/lon header gives great-circle km") {
    write(dir / "s.csv", "id,lat,lon\nA,40.0,-80.0\nB,41.0,-80.0\n");
    const StationSet s = read_stations(dir / "s.csv");
    CHECK(s.metric() == DistanceMetric::GreatCircle);
    // one degree of latitude is ~111.2 km
    CHECK(s.distances()(0, 1) == doctest::Approx(111.19).epsilon(0.01));
  }
  SUBCASE("bad header") {
    write(dir / "s.csv", "id,east,north\nA,0,0\n");
    CHECK_THROWS_AS(read_stations(dir / "s.csv"), IngestError);
  }
  SUBCASE("duplicate id carries the line number") {
    write(dir / "s.csv", "id,x,y\nA,0,0\nA,1,1\n");
    CHECK_THROWS_WITH_AS(read_stations(dir / "s.csv"),
                         doctest::Contains("line 3"), IngestError);
  }
  SUBCASE("bad cell count carries the line number") {
    write(dir / "s.csv", "id,x,y\nA,0,0\nB,1\n");
    CHECK_THROWS_WITH_AS(read_stations(dir / "s.csv"),
                         doctest::Contains("line 3"), IngestError);
  }
}

TEST_CASE("observations ingestion") {
  const fs::path dir = temp_dir();
  write(dir / "s.csv", "id,x,y\nA,0,0\nB,10,0\n");
  const StationSet s = read_stations(dir / "s.csv");

  SUBCASE("raw ppb is square-root transformed") {
    write(dir / "o.csv", "#unit=ppb\ntime,A,B\n1,81,4\n2,,9\n");
    const ObservationPanel p = read_observations(dir / "o.csv", s);
    CHECK(p.y(0, 0) == 9.0);
    CHECK(p.y(1, 0) == 2.0);
    CHECK(p.y(1, 1) == 3.0);
    CHECK_FALSE(p.mask(0, 1));
    CHECK(p.t_index == std::vector<int>{1, 2});
  }
  SUBCASE("sqrt-ppb passes through") {
    write(dir / "o.csv", "#unit=sqrt-ppb\ntime,A,B\n1,9.0,2.0\n");
    const ObservationPanel p = read_observations(dir / "o.csv", s);
    CHECK(p.y(0, 0) == 9.0);
  }
  SUBCASE("no data rows") {
    write(dir / "o.csv", "#unit=ppb\ntime,A,B\n");
    CHECK_THROWS_WITH_AS(read_observations(dir / "o.csv", s),
                         doctest::Contains("no data rows"), IngestError);
  }
  SUBCASE("missing unit preamble") {
    write(dir / "o.csv", "time,A,B\n1,1,1\n");
    CHECK_THROWS_AS(read_observations(dir / "o.csv", s), IngestError);
  }
  SUBCASE("non-monotone time index carries the line number") {
    write(dir / "o.csv", "#unit=ppb\ntime,A,B\n5,1,1\n5,2,2\n");
    CHECK_THROWS_WITH_AS(read_observations(dir / "o.csv", s),
                         doctest::Contains("line 4"), IngestError);
  }
  SUBCASE("negative ppb rejected") {
    write(dir / "o.csv", "#unit=ppb\ntime,A,B\n1,-4,1\n");
    CHECK_THROWS_AS(read_observations(dir / "o.csv", s), IngestError);
  }
  SUBCASE("unknown site in header") {
    write(dir / "o.csv", "#unit=ppb\ntime,A,Z\n1,1,1\n");
    CHECK_THROWS_AS(read_observations(dir / "o.csv", s), IngestError);
  }
  SUBCASE("non-numeric cell carries the line number") {
    write(dir / "o.csv", "#unit=ppb\ntime,A,B\n1,1,1\n2,x,1\n");
    CHECK_THROWS_WITH_AS(read_observations(dir / "o.csv", s),
                         doctest::Contains("line 4"), IngestError);
  }
}

TEST_CASE("a generated fixture round-trips with the declared mask density") {
  const fs::path dir = temp_dir();
  std::vector<Station> sites;
  RngStream coord_rng(97);
  for (int i = 0; i < 10; ++i) {
    sites.push_back(Station{"s" + std::to_string(i),
                            Eigen::Vector2d(150.0 * coord_rng.uniform(),
                                            150.0 * coord_rng.uniform())});
  }
  const StationSet stations = StationSet::from_planar(std::move(sites));
  Eigen::VectorXd m0(21);
  m0.setConstant(0.5);
  Eigen::MatrixXd c0 = Eigen::MatrixXd::Identity(21, 21) * 0.01;
  RngStream rng(99);
  auto sim = oracle::simulate_panel(stations, Gamma{0.02, 0.0002, 25, 0.0004, 25},
                                    70.0, 1.2, Phase{2.5, 9.8}, m0, c0, 2880, rng,
                                    0.08);
  long expected_observed = 0;
  for (int c = 0; c < sim.panel.T(); ++c) expected_observed += sim.panel.mask.col(c).count();

  write_fixture(dir, stations, sim.panel);
  auto [s2, p2] = ingest(dir / "stations.csv", dir / "obs.csv");
  CHECK(p2.n() == 10);
  CHECK(p2.T() == 2880);
  long observed = 0;
  for (int c = 0; c < p2.T(); ++c) observed += p2.mask.col(c).count();
  CHECK(observed == expected_observed);
  CHECK((p2.y - sim.panel.y.cwiseProduct(sim.panel.mask.cast<double>().matrix()))
            .cwiseAbs()
            .maxCoeff() == 0.0);
}

TEST_CASE("config parsing and hashing") {
  const fs::path dir = temp_dir();
  write(dir / "s.csv", "id,x,y\nA,0,0\nB,10,0\nC,4,9\n");
  write(dir / "o.csv", "#unit=sqrt-ppb\ntime,A,B,C\n1,1,2,1.5\n2,1,2,1.5\n");
  const std::string base = "stations = " + (dir / "s.csv").string() +
                           "\nobservations = " + (dir / "o.csv").string() + "\n";

  SUBCASE("defaults and overrides") {
    write(dir / "cfg.txt", base + "seed = 42\niterations = 50\nburn_in = 10\n");
    const RunConfig cfg = parse_run_config(dir / "cfg.txt");
    CHECK(cfg.seed == 42);
    CHECK(cfg.iterations == 50);
    CHECK(cfg.gamma.tau_y2 == 0.02);  // §-defaults
    cfg.validate();
  }
  SUBCASE("unknown key is rejected with its line") {
    write(dir / "cfg.txt", base + "bogus = 1\n");
    CHECK_THROWS_WITH_AS(parse_run_config(dir / "cfg.txt"),
                         doctest::Contains("bogus"), ConfigError);
  }
  SUBCASE("bad study name") {
    write(dir / "cfg.txt", base + "study = sometimes\n");
    CHECK_THROWS_AS(parse_run_config(dir / "cfg.txt"), ConfigError);
  }
  SUBCASE("hash tracks semantic fields only") {
    write(dir / "cfg1.txt", base + "seed = 7\niterations = 40\nburn_in = 10\n");
    write(dir / "cfg2.txt",
          "# a comment\n" + base + "\niterations=40\n  seed   =   7\nburn_in =10\n");
    write(dir / "cfg3.txt", base + "seed = 8\niterations = 40\nburn_in = 10\n");
    const auto h1 = config_hash(parse_run_config(dir / "cfg1.txt"));
    const auto h2 = config_hash(parse_run_config(dir / "cfg2.txt"));
    const auto h3 = config_hash(parse_run_config(dir / "cfg3.txt"));
    CHECK(h1 == h2);
    CHECK(h1 != h3);
    RunConfig c4 = parse_run_config(dir / "cfg1.txt");
    c4.levels = {0.5, 0.8};
    CHECK(config_hash(c4) != h1);
  }
  SUBCASE("validation catches broken settings") {
    write(dir / "cfg.txt", base + "iterations = 10\nburn_in = 10\n");
    CHECK_THROWS_AS(parse_run_config(dir / "cfg.txt").validate(), ConfigError);
    write(dir / "cfg2.txt", base + "levels = 1.5\n");
    CHECK_THROWS_AS(parse_run_config(dir / "cfg2.txt").validate(), ConfigError);
    write(dir / "cfg3.txt", base + "study = fixed-lambda\n");
    CHECK_THROWS_AS(parse_run_config(dir / "cfg3.txt").validate(), ConfigError);
  }
}

TEST_CASE("weekly study: slicing, per-week chains, coverage rows") {
  const fs::path dir = temp_dir();
  std::vector<Station> sites{{"g0", {0, 0}}, {"g1", {22, 0}}, {"g2", {8, 18}},
                             {"u0", {11, 7}}};
  const StationSet all = StationSet::from_planar(std::move(sites));
  Eigen::VectorXd m0(9);
  m0[0] = 2.85;
  m0.segment(1, 4).setConstant(-0.75);
  m0.segment(5, 4).setConstant(-0.08);
  Eigen::MatrixXd c0 = Eigen::MatrixXd::Identity(9, 9) * 0.01;
  c0(0, 0) = 1.0;
  RngStream rng(111);
  auto sim = oracle::simulate_panel(all, Gamma{0.02, 0.0002, 25, 0.0004, 25}, 60.0,
                                    1.0, Phase{2.5, 9.8}, m0, c0, 336, rng, 0.05);
  write_fixture(dir, all, sim.panel);
  write(dir / "cfg.txt",
        "stations = " + (dir / "stations.csv").string() +
            "\nobservations = " + (dir / "obs.csv").string() +
            "\noutput = " + (dir / "out").string() +
            "\nstudy = weekly\nungauged = u0\nlevels = 0.8,0.95\n"
            "iterations = 40\nburn_in = 10\nthin = 5\nseed = 5\nmh_tau2 = 6\n");
  const RunConfig cfg = parse_run_config(dir / "cfg.txt");
  const StudyResult res = run_study(cfg);

  CHECK(res.units.size() == 2);  // two week-slices => two chain runs
  // exactly 2 coverage rows per (site, level): one per week
  int rows_80 = 0, rows_95 = 0;
  for (const auto& row : res.coverage.rows) {
    CHECK(row.site == "u0");
    if (row.level == 0.8) ++rows_80;
    if (row.level == 0.95) ++rows_95;
  }
  CHECK(rows_80 == 2);
  CHECK(rows_95 == 2);
  CHECK(fs::exists(dir / "out" / "run_week01" / "draws.csv"));
  CHECK(fs::exists(dir / "out" / "run_week02" / "acf.csv"));
  CHECK(fs::exists(dir / "out" / "predictive_u0.csv"));
  CHECK(fs::exists(dir / "out" / "coverage.csv"));
  CHECK(fs::exists(dir / "out" / "manifest.json"));
}

TEST_CASE("fixed-lambda and tau-scaled studies") {
  const fs::path dir = temp_dir();
  std::vector<Station> sites{{"g0", {0, 0}}, {"g1", {25, 0}}, {"u0", {9, 5}}};
  const StationSet all = StationSet::from_planar(std::move(sites));
  Eigen::VectorXd m0(5);
  m0[0] = 2.85;
  m0.segment(1, 2).setConstant(-0.75);
  m0.segment(3, 2).setConstant(-0.08);
  Eigen::MatrixXd c0 = Eigen::MatrixXd::Identity(5, 5) * 0.01;
  c0(0, 0) = 1.0;
  RngStream rng(113);
  auto sim = oracle::simulate_panel(all, Gamma{0.02, 0.0002, 25, 0.0004, 25}, 55.0,
                                    1.0, Phase{2.5, 9.8}, m0, c0, 336, rng);
  write_fixture(dir, all, sim.panel);
  const std::string base = "stations = " + (dir / "stations.csv").string() +
                           "\nobservations = " + (dir / "obs.csv").string() +
                           "\nungauged = u0\nlevels = 0.8\niterations = 30\n"
                           "burn_in = 10\nthin = 4\nseed = 9\n";

  SUBCASE("fixed-lambda reports acceptance 1.0 and needs matching week count") {
    write(dir / "cfg.txt", base + "output = " + (dir / "out_fl").string() +
                               "\nstudy = fixed-lambda\nfixed_lambdas = 54.2,178.5\n");
    const StudyResult res = run_study(parse_run_config(dir / "cfg.txt"));
    REQUIRE(res.units.size() == 1);
    CHECK(res.units[0].acceptance_rate == 1.0);

    write(dir / "cfg_bad.txt", base + "output = " + (dir / "out_bad").string() +
                                   "\nstudy = fixed-lambda\nfixed_lambdas = 54.2\n");
    CHECK_THROWS_AS(run_study(parse_run_config(dir / "cfg_bad.txt")), ConfigError);
  }
  SUBCASE("tau-scaled divides the tau components in the manifest gamma") {
    write(dir / "cfg.txt", base + "output = " + (dir / "out_ts").string() +
                               "\nstudy = tau-scaled\nt_weeks = 17\n"
                               "fixed_lambdas = 55.0,55.0\n");
    const StudyResult res = run_study(parse_run_config(dir / "cfg.txt"));
    CHECK(res.gamma_used.tau_y2 == 0.02 / 17);
    CHECK(res.gamma_used.tau1_2 == 0.0002 / 17);
    CHECK(res.gamma_used.tau2_2 == 0.0004 / 17);
    CHECK(res.gamma_used.lambda1 == 25.0);
    const std::string manifest = slurp(dir / "out_ts" / "manifest.json");
    CHECK(manifest.find("\"tau_y2\": 0.0011764705882352942") != std::string::npos);
  }
}

TEST_CASE("full pipeline determinism: byte-identical bundles") {
  const fs::path dir = temp_dir();
  std::vector<Station> sites{{"g0", {0, 0}}, {"g1", {20, 0}}, {"g2", {5, 15}},
                             {"u0", {8, 6}}};
  const StationSet all = StationSet::from_planar(std::move(sites));
  Eigen::VectorXd m0(9);
  m0[0] = 2.85;
  m0.segment(1, 4).setConstant(-0.75);
  m0.segment(5, 4).setConstant(-0.08);
  Eigen::MatrixXd c0 = Eigen::MatrixXd::Identity(9, 9) * 0.01;
  c0(0, 0) = 1.0;
  RngStream rng(117);
  auto sim = oracle::simulate_panel(all, Gamma{0.02, 0.0002, 25, 0.0004, 25}, 60.0,
                                    1.1, Phase{2.5, 9.8}, m0, c0, 200, rng, 0.1);
  write_fixture(dir, all, sim.panel);
  const std::string base = "stations = " + (dir / "stations.csv").string() +
                           "\nobservations = " + (dir / "obs.csv").string() +
                           "\nungauged = u0\nlevels = 0.8,0.95\niterations = 25\n"
                           "burn_in = 5\nthin = 4\nseed = 21\nstudy = full-span\n"
                           "mh_tau2 = 6\n";
  write(dir / "c1.txt", base + "output = " + (dir / "o1").string() + "\n");
  write(dir / "c2.txt", base + "output = " + (dir / "o2").string() + "\n");
  run_study(parse_run_config(dir / "c1.txt"));
  run_study(parse_run_config(dir / "c2.txt"));

  int compared = 0;
  for (const auto& entry : fs::recursive_directory_iterator(dir / "o1")) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), dir / "o1");
    if (rel.filename() == "timing.csv") continue;  // telemetry, not output
    CHECK(slurp(entry.path()) == slurp(dir / "o2" / rel));
    ++compared;
  }
  CHECK(compared >= 6);
}
