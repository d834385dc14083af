#include "afem/config.hpp"
#include "afem/errors.hpp"
#include "afem/execute.hpp"
#include "afem/trace_io.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace afem;
namespace fs = std::filesystem;

namespace {

std::optional<RunConfig> parse(std::vector<std::string> args) {
  args.insert(args.begin(), "afem_cli");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return parse_config(int(argv.size()), argv.data());
}

ConfigError::Kind error_kind(std::vector<std::string> args, std::string& key) {
  try {
    parse(std::move(args));
  } catch (const ConfigError& e) {
    key = e.key();
    return e.kind();
  }
  FAIL("no ConfigError raised");
  return ConfigError::Kind::io;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("afem_cli_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("flags only") {
  const auto cfg = parse({"--problem", "lshape_poisson", "--theta", "0.5", "--max-elements", "100000"});
  REQUIRE(cfg);
  CHECK(cfg->problem == "lshape_poisson");
  CHECK(cfg->thetas == std::vector<double>{0.5});
  CHECK(cfg->max_elements == 100000);
  CHECK(cfg->marking == MarkingVariant::minimal);
  CHECK(cfg->checks.empty());
}

TEST_CASE("every documented flag is accepted") {
  const auto cfg = parse({"--problem", "convection_diffusion", "--theta", "0.3,0.6", "--marking", "binned",
                          "--max-elements", "500", "--eta-tol", "1e-3", "--checks", "rate,closure", "--out", "x",
                          "--seed", "7", "--uniform-baseline", "--jobs", "3", "--sequential"});
  REQUIRE(cfg);
  CHECK(cfg->thetas == std::vector<double>{0.3, 0.6});
  CHECK(cfg->marking == MarkingVariant::binned);
  CHECK(*cfg->eta_tol == 1e-3);
  CHECK(cfg->checks == std::vector<std::string>{"rate", "closure"});
  CHECK(cfg->output_dir == fs::path("x"));
  CHECK(cfg->seed == 7);
  CHECK(cfg->uniform_baseline);
  CHECK(cfg->jobs == 3);
  CHECK(cfg->sequential);
  CHECK(parse({"--checks", "all"})->checks.size() == known_checks().size());
}

TEST_CASE("config errors name the offending key") {
  std::string key;
  CHECK(error_kind({"--theta", "1.5"}, key) == ConfigError::Kind::out_of_range);
  CHECK(key == "theta");
  CHECK(error_kind({"--theta", "0"}, key) == ConfigError::Kind::out_of_range);
  CHECK(error_kind({"--problem", "heat"}, key) == ConfigError::Kind::unknown_problem);
  CHECK(key == "problem");
  CHECK(error_kind({"--colour", "blue"}, key) == ConfigError::Kind::unknown_key);
  CHECK(error_kind({"--checks", "rate,vibes"}, key) == ConfigError::Kind::bad_value);
  CHECK(key == "checks");
  CHECK(error_kind({"--max-elements", "3"}, key) == ConfigError::Kind::out_of_range);
  CHECK(key == "max_elements");
  CHECK(error_kind({"--marking", "greedy"}, key) == ConfigError::Kind::bad_value);
  CHECK(error_kind({"--theta", "half"}, key) == ConfigError::Kind::bad_value);
}

TEST_CASE("config file and flag precedence") {
  const auto dir = scratch("config");
  fs::create_directories(dir);
  const auto file = dir / "run.cfg";
  std::ofstream(file) << "# sweep settings\ntheta = 0.3\nproblem=square_smooth\n\nmax-elements = 2000\n";
  auto cfg = parse({"--config", file.string()});
  CHECK(cfg->thetas == std::vector<double>{0.3});
  CHECK(cfg->problem == "square_smooth");
  CHECK(cfg->max_elements == 2000);
  cfg = parse({"--config", file.string(), "--theta", "0.5"});
  CHECK(cfg->thetas == std::vector<double>{0.5});

  std::ofstream(file) << "frobnicate = 1\n";
  std::string key;
  CHECK(error_kind({"--config", file.string()}, key) == ConfigError::Kind::unknown_key);
  CHECK(key == "frobnicate");
  CHECK(error_kind({"--config", (dir / "missing.cfg").string()}, key) == ConfigError::Kind::io);
  fs::remove_all(dir);
}

TEST_CASE("config text parsing") {
  const auto pairs = parse_config_text("a = 1\n  # comment\nb=two words \nc-d = 3 # trailing\n");
  CHECK(pairs.at("a") == "1");
  CHECK(pairs.at("b") == "two words");
  CHECK(pairs.at("c_d") == "3");
  CHECK_THROWS_AS(parse_config_text("no equals sign\n"), ConfigError);
}

TEST_CASE("full L-shape run with all checks") {
  RunConfig cfg;
  cfg.output_dir = scratch("full");
  cfg.max_elements = 20000;
  cfg.checks.assign(known_checks().begin(), known_checks().end());
  cfg.rate_target = 0.5;
  std::ostringstream log;
  ExecuteOptions opts;
  opts.log = &log;
  CHECK(execute(cfg, opts) == 0);
  for (auto f : {"trace.csv", "report.txt", "plotdata.csv", "plot.py", "timings.csv", "meshes/initial.mesh",
                 "meshes/final.mesh", "failures.txt"})
    CHECK(fs::exists(cfg.output_dir / f));
  const auto report = slurp(cfg.output_dir / "report.txt");
  CHECK(report.find("FAIL") == std::string::npos);
  for (auto name : known_checks()) CHECK(report.find("check " + std::string(name)) != std::string::npos);
  CHECK(slurp(cfg.output_dir / "failures.txt").empty());
  const auto trace = read_trace(cfg.output_dir / "trace.csv");
  CHECK(trace.records.size() > 10);
  CHECK(std::isfinite(trace.noise_floor_sq));
  CHECK(slurp(cfg.output_dir / "plotdata.csv").rfind("series,n_elements,log_n,log_eta\n", 0) == 0);
  fs::remove_all(cfg.output_dir);
}

TEST_CASE("uniform baseline adds a second series") {
  RunConfig cfg;
  cfg.output_dir = scratch("uniform");
  cfg.max_elements = 3000;
  cfg.uniform_baseline = true;
  CHECK(execute(cfg) == 0);
  CHECK(fs::exists(cfg.output_dir / "trace_uniform.csv"));
  const auto plot = slurp(cfg.output_dir / "plotdata.csv");
  CHECK(plot.find("\nadaptive,") != std::string::npos);
  CHECK(plot.find("\nuniform,") != std::string::npos);
  fs::remove_all(cfg.output_dir);
}

TEST_CASE("tolerance met on the initial mesh") {
  RunConfig cfg;
  cfg.output_dir = scratch("tol");
  cfg.eta_tol = 1e6;
  cfg.checks.assign(known_checks().begin(), known_checks().end());
  CHECK(execute(cfg) == 0);
  CHECK(read_trace(cfg.output_dir / "trace.csv").records.size() == 1);
  fs::remove_all(cfg.output_dir);
}

TEST_CASE("a broken problem gives a nonzero exit and a failure list") {
  RunConfig cfg;
  cfg.problem = "convection_diffusion";
  cfg.output_dir = scratch("broken");
  cfg.max_elements = 2000;
  cfg.checks = {"ellipticity", "reduction", "rate"};
  cfg.rate_target = 0.5;
  auto broken = std::get<LinearProblem>(builtin_problem("convection_diffusion"));
  broken.reaction = [](const Point&) { return -1e6; };
  std::ostringstream log;
  ExecuteOptions opts;
  opts.problem_override = broken;
  opts.log = &log;
  CHECK(execute(cfg, opts) != 0);
  const auto failures = slurp(cfg.output_dir / "failures.txt");
  CHECK(failures.find("ellipticity") != std::string::npos);
  CHECK(log.str().find("ellipticity") != std::string::npos);
  CHECK(fs::exists(cfg.output_dir / "trace.csv"));
  fs::remove_all(cfg.output_dir);
}

TEST_CASE("identical configs give byte-identical traces") {
  RunConfig cfg;
  cfg.problem = "magnetostatics_nl";
  cfg.max_elements = 3000;
  cfg.sequential = true;
  cfg.seed = 11;
  cfg.output_dir = scratch("det_a");
  execute(cfg);
  const auto a = slurp(cfg.output_dir / "trace.csv");
  fs::remove_all(cfg.output_dir);
  cfg.output_dir = scratch("det_b");
  cfg.sequential = false;
  cfg.jobs = 4;
  execute(cfg);
  const auto b = slurp(cfg.output_dir / "trace.csv");
  fs::remove_all(cfg.output_dir);
  CHECK(!a.empty());
  CHECK(a == b);
}

TEST_CASE("a theta sweep writes one directory per value") {
  RunConfig cfg;
  cfg.output_dir = scratch("sweep");
  cfg.max_elements = 2000;
  cfg.thetas = {0.3, 0.7};
  cfg.jobs = 2;
  cfg.checks = {"closure"};
  const auto runs = execute_runs(cfg);
  REQUIRE(runs.size() == 2);
  for (const auto& r : runs) {
    CHECK(r.failures.empty());
    CHECK(fs::exists(r.directory / "trace.csv"));
    CHECK(r.directory.parent_path() == cfg.output_dir);
  }
  CHECK(runs[0].directory != runs[1].directory);
  CHECK(read_trace(runs[0].directory / "trace.csv").meta.theta == 0.3);
  fs::remove_all(cfg.output_dir);
}

TEST_CASE("the binary reports config errors with exit code 2") {
  const std::string cli = AFEM_CLI_PATH;
  CHECK(std::system((cli + " --theta 1.5 > /dev/null 2>&1").c_str()) != 0);
  const int status = std::system((cli + " --theta 1.5 > /dev/null 2>&1").c_str());
  CHECK(WEXITSTATUS(status) == 2);
  const auto out = scratch("binary");
  const int ok = std::system((cli + " --problem square_smooth --max-elements 500 --checks closure --out " +
                              out.string() + " > /dev/null 2>&1").c_str());
  CHECK(WEXITSTATUS(ok) == 0);
  CHECK(fs::exists(out / "report.txt"));
  fs::remove_all(out);
}
