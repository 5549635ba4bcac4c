#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "perco/estimators.hpp"
#include "perco/scales.hpp"

namespace perco {

enum class RunKind {
  sample,
  clusters,
  stretch,
  shape,
  renorm_validate,
  renorm_path,
  decorr,
  torus,
  mesoscopic,
};

std::string run_kind_name(RunKind k);

// One experiment description, parsed from a single JSON document. Scientific
// parameters have no defaults; only engineering knobs (workers, output
// directory, cache path) may be absent.
struct RunConfig {
  RunKind kind = RunKind::sample;
  std::uint64_t master_seed = 0;  // mandatory; no wall-clock seeding
  std::int64_t trials = 0;
  ModelSpec model;
  std::optional<Coord> window_half_side;
  std::optional<std::pair<Point, std::vector<Coord>>> window_box;  // anchor, sides

  // ladder / profile (renorm kinds); the ladder is built lazily so that
  // invariant violations surface as validate diagnostics, not parse errors
  struct LadderParams {
    Coord l0 = 0, r0 = 0, big_l0 = 0;
    int theta_sc = 1;
    int kmax = 0;
  };
  std::optional<LadderParams> ladder;
  RegularityProfile profile;
  int verify_levels = 30;
  double p0_exponent = 1e9;

  Coord big_r = 0;  // stretch, renorm-path

  std::vector<Point> directions;  // shape
  std::vector<std::int64_t> n_grid;

  double decorr_param_joint = 0.0;  // decorr
  double decorr_param_marginal = 0.0;
  Coord decorr_l = 0;
  Coord decorr_r = 0;
  LocalEvent decorr_event;

  std::vector<Coord> torus_n_grid;  // torus
  double meso_c = 0.0;              // mesoscopic

  double eta_hat = 0.0;          // renorm-path plug-in (two-phase protocol)
  std::int64_t eta_trials = 0;   // when > 0, estimate eta_hat first on its own seed stream

  std::string out_dir = "runs";  // engineering knob; --out overrides
  std::string raw_json;          // resolved canonical form, for hashing
};

// Parses and resolves a config; throws std::invalid_argument with a field
// path on schema violations.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

// Static diagnostics: ladder invariants, window coverage for the requested
// R/kmax, parameter ranges. Never samples.
std::vector<std::string> validate_run_config(const RunConfig& config);

struct RunOutcome {
  int exit_code = 0;  // 0 ok, 2 validation failure, 3 failed --check
  std::vector<std::string> diagnostics;
  std::vector<std::string> failed_checks;
  std::string run_json_path;
  std::string csv_path;
};

// Executes the run, writing run.json, observables.csv and (for shape runs in
// d=2) shape.svg under out_dir. Honors PERCO_CACHE for sampled-config caches.
RunOutcome execute_run(const RunConfig& config, const std::string& out_dir, int workers, bool check);

}  // namespace perco
