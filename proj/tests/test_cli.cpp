#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "perco/config.hpp"
#include "perco/report.hpp"
#include "perco/runner.hpp"

using namespace perco;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string tmp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "perco_tests" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

const char* kMinimalSample = R"({
  "kind": "sample",
  "seed": 7,
  "trials": 30,
  "model": {"family": "bernoulli", "dim": 2, "p": 0.6},
  "window": {"half_side": 16}
})";

}  // namespace

TEST_CASE("config parse, resolve, and round-trip") {
  RunConfig c = parse_run_config(kMinimalSample);
  CHECK(c.kind == RunKind::sample);
  CHECK(c.master_seed == 7);
  CHECK(c.trials == 30);
  CHECK(c.model.p == 0.6);
  // parse(serialize(parse(x))) is the identity on the resolved form
  RunConfig again = parse_run_config(c.raw_json);
  CHECK(again.raw_json == c.raw_json);

  CHECK_THROWS_WITH_AS(parse_run_config(R"({"kind":"sample"})"), "config field 'seed': missing",
                       std::invalid_argument);
  CHECK_THROWS(parse_run_config(R"({"kind":"nope","seed":1})"));
  CHECK_THROWS(parse_run_config("not json"));
}

TEST_CASE("validate reports the descent hypothesis and coverage diagnostics") {
  const char* bad_ladder = R"({
    "kind": "renorm-validate",
    "seed": 1,
    "model": {"family": "bernoulli", "dim": 3, "p": 0.7},
    "ladder": {"l0": 16, "r0": 4, "L0": 10, "theta_sc": 1, "kmax": 1},
    "profile": {"eps_p": 1.0, "chi_p": 0.25, "delta_s": 0.5},
    "verify_levels": 5,
    "p0_exponent": 1e9
  })";
  RunConfig c = parse_run_config(bad_ladder);
  auto diags = validate_run_config(c);
  REQUIRE(!diags.empty());
  bool cites = false;
  for (const auto& d : diags) cites = cites || d.find("l0 > 4 r0") != std::string::npos;
  CHECK(cites);

  const char* small_window = R"({
    "kind": "stretch",
    "seed": 1,
    "trials": 40,
    "R": 32,
    "model": {"family": "bernoulli", "dim": 2, "p": 0.85},
    "window": {"half_side": 40}
  })";
  auto diags2 = validate_run_config(parse_run_config(small_window));
  REQUIRE(!diags2.empty());
  CHECK(diags2[0].find("B(0, 2R)") != std::string::npos);

  RunConfig ok = parse_run_config(kMinimalSample);
  CHECK(validate_run_config(ok).empty());
}

TEST_CASE("minimal sample run writes artifacts and a config cache") {
  std::string dir = tmp_dir("sample");
  RunConfig c = parse_run_config(kMinimalSample);
  auto outcome = execute_run(c, dir, 1, false);
  CHECK(outcome.exit_code == 0);
  CHECK(std::filesystem::exists(dir + "/run.json"));
  CHECK(std::filesystem::exists(dir + "/observables.csv"));
  CHECK(std::filesystem::exists(dir + "/config_trial0.prc"));

  std::string csv = read_file(dir + "/observables.csv");
  CHECK(csv.find("# config_hash=0x") == 0);
  CHECK(csv.find("trial_id,seed,name,value,aux") != std::string::npos);
  CHECK(csv.find("occupied_fraction") != std::string::npos);

  std::string run_json = read_file(dir + "/run.json");
  std::string hash = hash_hex(fnv1a64(c.raw_json));
  CHECK(run_json.find(hash) != std::string::npos);
}

TEST_CASE("repeat runs are byte-identical across worker counts") {
  std::string dir1 = tmp_dir("repro1");
  std::string dir2 = tmp_dir("repro2");
  RunConfig c = parse_run_config(kMinimalSample);
  CHECK(execute_run(c, dir1, 1, false).exit_code == 0);
  CHECK(execute_run(c, dir2, 4, false).exit_code == 0);
  CHECK(read_file(dir1 + "/observables.csv") == read_file(dir2 + "/observables.csv"));
  CHECK(read_file(dir1 + "/run.json") == read_file(dir2 + "/run.json"));
}

TEST_CASE("invalid config exits 2, failed checks exit 3") {
  std::string dir = tmp_dir("exits");
  const char* invalid = R"({
    "kind": "stretch",
    "seed": 1,
    "trials": 40,
    "R": 32,
    "model": {"family": "bernoulli", "dim": 2, "p": 0.85},
    "window": {"half_side": 40}
  })";
  auto bad = execute_run(parse_run_config(invalid), dir, 1, false);
  CHECK(bad.exit_code == 2);

  // renorm-validate with a failing induction condition under --check
  const char* failing = R"({
    "kind": "renorm-validate",
    "seed": 1,
    "model": {"family": "bernoulli", "dim": 3, "p": 0.7},
    "ladder": {"l0": 16, "r0": 3, "L0": 1024, "theta_sc": 1, "kmax": 1},
    "profile": {"eps_p": 1.0, "chi_p": 0.25, "delta_s": 0.5},
    "verify_levels": 5,
    "p0_exponent": 1e9
  })";
  auto fail = execute_run(parse_run_config(failing), dir, 1, true);
  CHECK(fail.exit_code == 3);
  REQUIRE(!fail.failed_checks.empty());
  CHECK(fail.failed_checks[0].find("level 1") != std::string::npos);

  auto no_check = execute_run(parse_run_config(failing), dir, 1, false);
  CHECK(no_check.exit_code == 0);
}

TEST_CASE("renorm-validate run passes for l0=128") {
  std::string dir = tmp_dir("rv128");
  const char* ok = R"({
    "kind": "renorm-validate",
    "seed": 1,
    "model": {"family": "bernoulli", "dim": 3, "p": 0.7},
    "ladder": {"l0": 128, "r0": 3, "L0": 256, "theta_sc": 1, "kmax": 1},
    "profile": {"eps_p": 1.0, "chi_p": 0.25, "delta_s": 0.5},
    "verify_levels": 30,
    "p0_exponent": 1e9
  })";
  auto outcome = execute_run(parse_run_config(ok), dir, 1, true);
  CHECK(outcome.exit_code == 0);
  std::string run_json = read_file(dir + "/run.json");
  CHECK(run_json.find("\"all_pass\": true") != std::string::npos);
}

TEST_CASE("shape run writes the svg with hull, points, and the l1 diamond") {
  std::string dir = tmp_dir("shape");
  const char* shape = R"({
    "kind": "shape",
    "seed": 5,
    "trials": 30,
    "model": {"family": "bernoulli", "dim": 2, "p": 1.0},
    "directions": [[1,0],[0,1],[1,1],[1,-1]],
    "n_grid": [2,4]
  })";
  auto outcome = execute_run(parse_run_config(shape), dir, 1, true);
  CHECK(outcome.exit_code == 0);
  std::string svg = read_file(dir + "/shape.svg");
  CHECK(svg.find("<svg") == 0);
  CHECK(svg.find("stroke-dasharray") != std::string::npos);  // the l1 diamond reference
  CHECK(svg.find("<circle") != std::string::npos);
  CHECK(svg.find("<polygon") != std::string::npos);
}

TEST_CASE("PERCO_CACHE redirects the sample cache") {
  std::string cache = tmp_dir("cache_env");
  std::string out = tmp_dir("cache_out");
  setenv("PERCO_CACHE", cache.c_str(), 1);
  RunConfig c = parse_run_config(kMinimalSample);
  auto outcome = execute_run(c, out, 1, false);
  unsetenv("PERCO_CACHE");
  CHECK(outcome.exit_code == 0);
  CHECK(std::filesystem::exists(cache + "/config_trial0.prc"));
  CHECK(!std::filesystem::exists(out + "/config_trial0.prc"));
  // the cached config reloads bit-exactly
  Config cached = Config::load_file(cache + "/config_trial0.prc");
  CHECK(cached.window().num_sites() == 33 * 33);
}
