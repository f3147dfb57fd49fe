#pragma once

#include <string>
#include <vector>

#include "rejuv/design.hpp"
#include "rejuv/reach.hpp"
#include "rejuv/sim.hpp"

namespace rejuv {

struct ReachConfig {
  int grid_points = 64;
  double quad_dt = 2e-3;
  double settle_horizon = 10.0;
  double settle_dt = 1e-3;
  double containment_tol = 1e-9;
};

struct OutputConfig {
  std::string design_report = "design_report.json";
  std::string trace_csv = "trace.csv";
  std::string events_jsonl = "events.jsonl";
  std::string plots_dir = "plots";
  std::vector<std::pair<std::string, std::string>> plot_planes = {
      {"y", "z"}, {"phi", "theta"}, {"vy", "vz"}, {"p", "q"}};
};

// Full run configuration; every field defaults to the canonical scenario so
// a config file only needs to state deviations.
struct RunConfig {
  QuadrotorParams quad;
  Vec q_safety = Vec::Constant(12, 50.0);
  Vec r_safety = Vec::Constant(4, 100.0);
  Vec q_tracking = Vec::Constant(12, 50.0);
  Vec r_tracking = Vec::Constant(4, 100.0);
  ClampSpec clamp = {
      // TC: narrow torque authority, thrust floored above shutdown
      {2.0, 14.0, 0.0033, 0.0005},
      // SC: full authority
      {0.0, 16.0, 0.66, 0.1},
  };
  Vec constraint_half_widths = make_default_constraints();
  double eps_sc = 0.05;
  double eps_tc = 0.01;
  int volume_ascent_iters = 200;
  bool margin_shaping = true;
  TimingParams timing;
  ReachConfig reach;
  Waypoint start{1.0, 0.0, 2.0, 0.0};
  Waypoint goal{1.0, 2.0, 4.0, 0.0};
  double step_length = 0.1;
  AttackSpec attack;
  double sim_dt = 1e-3;
  double duration = 60.0;
  double settle_duration = 2.0;
  std::uint64_t seed = 1;
  SrCommandPolicy sr_policy = SrCommandPolicy::Hold;
  AuthFailPolicy auth_policy = AuthFailPolicy::ResetToCurrent;
  std::string key_hex = "6b65792d726566732d30303031";
  OutputConfig outputs;

  static Vec make_default_constraints();
  DesignInputs design_inputs() const;
  Scenario scenario() const;
  VerifyOptions verify_options(const Design& d) const;
};

// Parses and validates; unknown keys and malformed values are rejected with
// a ConfigError naming the offending path.
RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& json_text);

int state_index_from_name(const std::string& name);

}  // namespace rejuv
