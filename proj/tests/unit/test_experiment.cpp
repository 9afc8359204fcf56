#include "support/testutil.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cdspec/experiment.hpp"

using namespace cdspec;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream is(path);
  REQUIRE(is.good());
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("cdspec_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("config parsing") {
  auto cfg = Config::parse_string(R"(
# comment
experiment = stability
instance.family = exp_toeplitz   # trailing comment
instance.radius = 8
stability.q = 0.5, 1, inf
flag = true
)");
  CHECK(cfg.require_string("experiment") == "stability");
  CHECK(cfg.get_string("instance.family", "?") == "exp_toeplitz");
  CHECK(cfg.get_double("instance.radius", 0) == 8.0);
  CHECK(cfg.get_bool("flag", false));
  auto qs = cfg.get_double_list("stability.q", {});
  REQUIRE(qs.size() == 3);
  CHECK(qs[0] == 0.5);
  CHECK(is_inf(qs[2]));
  CHECK(cfg.get_double("missing", 7.0) == 7.0);

  CHECK_THROWS_AS(Config::parse_string("no equals sign"), ConfigError);
  CHECK_THROWS_AS(cfg.require_string("absent"), ConfigError);
  CHECK_THROWS_AS(Config::parse_string("x = abc").get_double("x", 0), ConfigError);
  CHECK_THROWS_AS(Config::parse_file("/nonexistent/filezzz"), ConfigError);
}

TEST_CASE("stability experiment is byte-deterministic") {
  const std::string text = R"(
experiment = stability
seed = 42
instance.family = exp_toeplitz
instance.radius = 8
instance.amplitude = 0.05
instance.rate = 2
stability.p = 2
stability.q = 1, inf
stability.search_starts = 40
stability.search_iters = 60
)";
  auto cfg = Config::parse_string(text);
  auto d1 = fresh_dir("det1");
  auto d2 = fresh_dir("det2");
  auto o1 = run_experiment(cfg, d1.string());
  auto o2 = run_experiment(cfg, d2.string());
  CHECK(o1.exit_code == 0);
  CHECK(o2.exit_code == 0);
  CHECK(slurp((d1 / "results.csv").string()) == slurp((d2 / "results.csv").string()));
  CHECK(slurp((d1 / "certificate.json").string()) == slurp((d2 / "certificate.json").string()));
  // manifest documents every column
  const std::string manifest = slurp((d1 / "manifest.json").string());
  for (const char* col : {"\"q\"", "\"branch\"", "\"eps\"", "\"schur_budget\"", "\"constant\""})
    CHECK(manifest.find(col) != std::string::npos);
}

TEST_CASE("epsilon-search failures surface as exit code 3 with a budget trace") {
  const std::string text = R"(
experiment = stability
seed = 1
instance.family = band
instance.radius = 12
instance.amplitude = 1
instance.width = 8
stability.p = 0.5
stability.q = 0.3
stability.c0 = 0.0001
stability.eps_floor = 0.0625
stability.search_starts = 20
stability.search_iters = 40
)";
  auto dir = fresh_dir("fail");
  auto outcome = run_experiment(Config::parse_string(text), dir.string());
  CHECK(outcome.exit_code == 3);
  const std::string cert = slurp((dir / "certificate.json").string());
  CHECK(cert.find("achieved_budget") != std::string::npos);
  CHECK(cert.find("epsilon search failed") != std::string::npos);
}

TEST_CASE("gabor experiment produces the documented table") {
  const std::string text = R"(
experiment = gabor
gabor.h = 0.125
gabor.radius = 4
gabor.lattice_radius = 4
gabor.hermite_count = 2
)";
  auto dir = fresh_dir("gabor");
  auto outcome = run_experiment(Config::parse_string(text), dir.string());
  CHECK(outcome.exit_code == 0);
  const std::string csv = slurp((dir / "results.csv").string());
  CHECK(csv.find("frame_lower") != std::string::npos);
  CHECK(csv.find("tight_ratio_minus_one") != std::string::npos);
  CHECK(csv.find("reconstruction_hermite_1") != std::string::npos);
}

TEST_CASE("invert-matrix experiment writes envelope and certificate") {
  const std::string text = R"(
experiment = invert-matrix
instance.family = exp_toeplitz
instance.radius = 16
instance.amplitude = 0.1
invert.double_radius = true
)";
  auto dir = fresh_dir("invm");
  auto outcome = run_experiment(Config::parse_string(text), dir.string());
  CHECK(outcome.exit_code == 0);
  CHECK(fs::exists(dir / "envelope.csv"));
  const std::string csv = slurp((dir / "results.csv").string());
  // two radii, both passing
  size_t rows = std::count(csv.begin(), csv.end(), '\n');
  CHECK(rows == 3);
  CHECK(csv.find(",1") != std::string::npos);
}

TEST_CASE("unknown experiment or missing key is a config error") {
  auto dir = fresh_dir("bad");
  CHECK_THROWS_AS(run_experiment(Config::parse_string("experiment = nope"), dir.string()),
                  ConfigError);
  CHECK_THROWS_AS(run_experiment(Config::parse_string("x = 1"), dir.string()), ConfigError);
}

TEST_CASE("work pool preserves cell identity") {
  std::vector<int> got(37, -1);
  std::vector<std::function<void()>> cells;
  for (int i = 0; i < 37; ++i) cells.push_back([&got, i] { got[i] = i * i; });
  run_cells(4, cells);
  for (int i = 0; i < 37; ++i) CHECK(got[i] == i * i);
}
