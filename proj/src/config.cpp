#include "rejuv/config.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace rejuv {

using nlohmann::json;

Vec RunConfig::make_default_constraints() {
  Vec w(12);
  // position x, y, z; attitude; linear velocity; angular velocity
  w << 1.0, 1.0, 2.5, M_PI / 4.0, M_PI / 4.0, M_PI / 4.0, 2.0, 2.0, 5.0, 5.0,
      5.0, 5.0;
  return w;
}

DesignInputs RunConfig::design_inputs() const {
  DesignInputs in;
  in.quad = quad;
  in.q_safety = q_safety;
  in.r_safety = r_safety;
  in.q_tracking = q_tracking;
  in.r_tracking = r_tracking;
  in.clamp = clamp;
  in.state_bounds = Box::symmetric(Vec::Zero(12), constraint_half_widths);
  in.eps_sc = eps_sc;
  in.eps_tc = eps_tc;
  in.volume_ascent_iters = volume_ascent_iters;
  in.shape_t_uc = margin_shaping ? timing.t_uc : 0.0;
  return in;
}

Scenario RunConfig::scenario() const {
  Scenario s;
  s.quad = quad;
  s.clamp = clamp;
  s.timing = timing;
  s.eps_sc = eps_sc;
  s.eps_tc = eps_tc;
  s.start = start;
  s.goal = goal;
  s.step_length = step_length;
  s.attack = attack;
  s.dt = sim_dt;
  s.duration = duration;
  s.settle_duration = settle_duration;
  s.seed = seed;
  s.sr_policy = sr_policy;
  s.auth_policy = auth_policy;
  s.key = key_from_hex(key_hex);
  return s;
}

VerifyOptions RunConfig::verify_options(const Design& d) const {
  VerifyOptions opts;
  opts.n_grid = reach.grid_points;
  opts.containment_tol = reach.containment_tol;
  opts.quad.dt = reach.quad_dt;
  opts.a_sc = d.a - d.b * d.safety.k;
  opts.eps_sc = eps_sc;
  opts.settle_horizon = reach.settle_horizon;
  opts.settle_dt = reach.settle_dt;
  return opts;
}

int state_index_from_name(const std::string& name) {
  for (int i = 0; i < kStateDim; ++i) {
    if (name == kStateNames[i]) return i;
  }
  throw ConfigError("unknown state coordinate '" + name + "'");
}

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError("config " + path + ": " + what);
}

void require_keys(const json& obj, const std::string& path,
                  const std::set<std::string>& allowed) {
  if (!obj.is_object()) fail(path, "expected an object");
  for (const auto& item : obj.items()) {
    if (!allowed.count(item.key())) {
      fail(path + "." + item.key(), "unknown key");
    }
  }
}

double get_num(const json& obj, const std::string& path, const char* key,
               double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) fail(path + "." + key, "expected a number");
  return v.get<double>();
}

std::uint64_t get_uint(const json& obj, const std::string& path,
                       const char* key, std::uint64_t fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_unsigned()) fail(path + "." + key, "expected an unsigned integer");
  return v.get<std::uint64_t>();
}

int get_int(const json& obj, const std::string& path, const char* key,
            int fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) fail(path + "." + key, "expected an integer");
  return v.get<int>();
}

bool get_bool(const json& obj, const std::string& path, const char* key,
              bool fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_boolean()) fail(path + "." + key, "expected a boolean");
  return v.get<bool>();
}

std::string get_str(const json& obj, const std::string& path, const char* key,
                    const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_string()) fail(path + "." + key, "expected a string");
  return v.get<std::string>();
}

// A scalar broadcasts over the whole diagonal; an array gives every entry.
Vec get_diag(const json& obj, const std::string& path, const char* key,
             const Vec& fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (v.is_number()) {
    return Vec::Constant(fallback.size(), v.get<double>());
  }
  if (v.is_array()) {
    if (static_cast<Eigen::Index>(v.size()) != fallback.size()) {
      fail(path + "." + key, "expected " + std::to_string(fallback.size()) +
                                 " entries");
    }
    Vec out(fallback.size());
    for (Eigen::Index i = 0; i < fallback.size(); ++i) {
      if (!v[i].is_number()) fail(path + "." + key, "expected numbers");
      out(i) = v[i].get<double>();
    }
    return out;
  }
  fail(path + "." + key, "expected a number or an array");
}

Vec get_vec(const json& obj, const std::string& path, const char* key,
            const Vec& fallback, Eigen::Index size) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_array() || static_cast<Eigen::Index>(v.size()) != size) {
    fail(path + "." + key, "expected an array of " + std::to_string(size));
  }
  Vec out(size);
  for (Eigen::Index i = 0; i < size; ++i) {
    if (!v[i].is_number()) fail(path + "." + key, "expected numbers");
    out(i) = v[i].get<double>();
  }
  return out;
}

Waypoint get_waypoint(const json& obj, const std::string& path,
                      const char* key, const Waypoint& fallback) {
  if (!obj.contains(key)) return fallback;
  Vec fb(4);
  fb << fallback.x, fallback.y, fallback.z, fallback.yaw;
  const Vec v = get_vec(obj, path, key, fb, 4);
  return {v(0), v(1), v(2), v(3)};
}

WrenchBounds parse_bounds(const json& obj, const std::string& path,
                          const WrenchBounds& fb) {
  require_keys(obj, path,
               {"thrust_min", "thrust_max", "torque_roll_pitch", "torque_yaw"});
  WrenchBounds b;
  b.thrust_min = get_num(obj, path, "thrust_min", fb.thrust_min);
  b.thrust_max = get_num(obj, path, "thrust_max", fb.thrust_max);
  b.torque_roll_pitch =
      get_num(obj, path, "torque_roll_pitch", fb.torque_roll_pitch);
  b.torque_yaw = get_num(obj, path, "torque_yaw", fb.torque_yaw);
  return b;
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }

  RunConfig cfg;
  require_keys(root, "$",
               {"quadrotor", "constraints", "controller", "clamp", "sets",
                "timing", "reach", "mission", "sim", "attack", "auth",
                "outputs"});

  if (root.contains("quadrotor")) {
    const json& q = root["quadrotor"];
    const std::string p = "quadrotor";
    require_keys(q, p,
                 {"mass", "inertia", "arm_length", "motor_max_thrust",
                  "motor_max_torque", "gravity"});
    cfg.quad.mass = get_num(q, p, "mass", cfg.quad.mass);
    Vec inertia(3);
    inertia << cfg.quad.ixx, cfg.quad.iyy, cfg.quad.izz;
    inertia = get_vec(q, p, "inertia", inertia, 3);
    cfg.quad.ixx = inertia(0);
    cfg.quad.iyy = inertia(1);
    cfg.quad.izz = inertia(2);
    cfg.quad.arm_length = get_num(q, p, "arm_length", cfg.quad.arm_length);
    cfg.quad.motor_max_thrust =
        get_num(q, p, "motor_max_thrust", cfg.quad.motor_max_thrust);
    cfg.quad.motor_max_torque =
        get_num(q, p, "motor_max_torque", cfg.quad.motor_max_torque);
    cfg.quad.gravity = get_num(q, p, "gravity", cfg.quad.gravity);
  }

  if (root.contains("constraints")) {
    const json& c = root["constraints"];
    const std::string p = "constraints";
    require_keys(c, p,
                 {"position", "attitude", "linear_velocity",
                  "angular_velocity"});
    Vec w = cfg.constraint_half_widths;
    const Vec pos = get_vec(c, p, "position", w.segment<3>(0), 3);
    const Vec att = get_vec(c, p, "attitude", w.segment<3>(3), 3);
    const Vec lin = get_vec(c, p, "linear_velocity", w.segment<3>(6), 3);
    const Vec ang = get_vec(c, p, "angular_velocity", w.segment<3>(9), 3);
    w << pos, att, lin, ang;
    cfg.constraint_half_widths = w;
  }

  if (root.contains("controller")) {
    const json& c = root["controller"];
    const std::string p = "controller";
    require_keys(c, p, {"q", "r", "tracking"});
    cfg.q_safety = get_diag(c, p, "q", cfg.q_safety);
    cfg.r_safety = get_diag(c, p, "r", cfg.r_safety);
    cfg.q_tracking = cfg.q_safety;
    cfg.r_tracking = cfg.r_safety;
    if (c.contains("tracking")) {
      const json& tsub = c["tracking"];
      require_keys(tsub, p + ".tracking", {"q", "r"});
      cfg.q_tracking = get_diag(tsub, p + ".tracking", "q", cfg.q_tracking);
      cfg.r_tracking = get_diag(tsub, p + ".tracking", "r", cfg.r_tracking);
    }
  }

  if (root.contains("clamp")) {
    const json& c = root["clamp"];
    require_keys(c, "clamp", {"tc", "sc"});
    if (c.contains("tc")) cfg.clamp.tc = parse_bounds(c["tc"], "clamp.tc", cfg.clamp.tc);
    if (c.contains("sc")) cfg.clamp.sc = parse_bounds(c["sc"], "clamp.sc", cfg.clamp.sc);
  }

  if (root.contains("sets")) {
    const json& s = root["sets"];
    const std::string p = "sets";
    require_keys(s, p,
                 {"eps_sc", "eps_tc", "volume_ascent_iters", "margin_shaping"});
    cfg.eps_sc = get_num(s, p, "eps_sc", cfg.eps_sc);
    cfg.eps_tc = get_num(s, p, "eps_tc", cfg.eps_tc);
    cfg.volume_ascent_iters =
        get_int(s, p, "volume_ascent_iters", cfg.volume_ascent_iters);
    cfg.margin_shaping = get_bool(s, p, "margin_shaping", cfg.margin_shaping);
  }

  if (root.contains("timing")) {
    const json& t = root["timing"];
    const std::string p = "timing";
    require_keys(t, p, {"t_sr", "t_uc", "t_r", "control_period"});
    cfg.timing.t_sr = get_num(t, p, "t_sr", cfg.timing.t_sr);
    cfg.timing.t_uc = get_num(t, p, "t_uc", cfg.timing.t_uc);
    cfg.timing.t_r =
        get_num(t, p, "t_r", cfg.timing.t_uc - cfg.timing.t_sr);
    cfg.timing.control_period =
        get_num(t, p, "control_period", cfg.timing.control_period);
  }

  if (root.contains("reach")) {
    const json& r = root["reach"];
    const std::string p = "reach";
    require_keys(r, p,
                 {"grid_points", "quad_dt", "settle_horizon", "settle_dt",
                  "containment_tol"});
    cfg.reach.grid_points = get_int(r, p, "grid_points", cfg.reach.grid_points);
    cfg.reach.quad_dt = get_num(r, p, "quad_dt", cfg.reach.quad_dt);
    cfg.reach.settle_horizon =
        get_num(r, p, "settle_horizon", cfg.reach.settle_horizon);
    cfg.reach.settle_dt = get_num(r, p, "settle_dt", cfg.reach.settle_dt);
    cfg.reach.containment_tol =
        get_num(r, p, "containment_tol", cfg.reach.containment_tol);
  }

  if (root.contains("mission")) {
    const json& m = root["mission"];
    const std::string p = "mission";
    require_keys(m, p, {"start", "goal", "step_length"});
    cfg.start = get_waypoint(m, p, "start", cfg.start);
    cfg.goal = get_waypoint(m, p, "goal", cfg.goal);
    cfg.step_length = get_num(m, p, "step_length", cfg.step_length);
  }

  if (root.contains("sim")) {
    const json& s = root["sim"];
    const std::string p = "sim";
    require_keys(s, p,
                 {"dt", "duration", "settle_duration", "seed",
                  "sr_command_policy", "auth_fail_policy"});
    cfg.sim_dt = get_num(s, p, "dt", cfg.sim_dt);
    cfg.duration = get_num(s, p, "duration", cfg.duration);
    cfg.settle_duration =
        get_num(s, p, "settle_duration", cfg.settle_duration);
    cfg.seed = get_uint(s, p, "seed", cfg.seed);
    const std::string policy = get_str(s, p, "sr_command_policy", "hold");
    if (policy == "hold") cfg.sr_policy = SrCommandPolicy::Hold;
    else if (policy == "zero") cfg.sr_policy = SrCommandPolicy::Zero;
    else fail(p + ".sr_command_policy", "expected 'hold' or 'zero'");
    const std::string auth = get_str(s, p, "auth_fail_policy", "reset");
    if (auth == "reset") cfg.auth_policy = AuthFailPolicy::ResetToCurrent;
    else if (auth == "keep_prior") cfg.auth_policy = AuthFailPolicy::KeepPrior;
    else fail(p + ".auth_fail_policy", "expected 'reset' or 'keep_prior'");
  }

  if (root.contains("attack")) {
    const json& a = root["attack"];
    const std::string p = "attack";
    require_keys(a, p, {"type", "start", "end", "bypass_clamp"});
    const std::string type = get_str(a, p, "type", "none");
    if (type == "none") cfg.attack.type = AttackType::None;
    else if (type == "propeller_off") cfg.attack.type = AttackType::PropellerOff;
    else if (type == "forge_refs") cfg.attack.type = AttackType::ForgeRefs;
    else fail(p + ".type", "expected 'none', 'propeller_off' or 'forge_refs'");
    cfg.attack.start = get_num(a, p, "start", cfg.attack.start);
    cfg.attack.end = get_num(a, p, "end", cfg.attack.end);
    cfg.attack.bypass_clamp =
        get_bool(a, p, "bypass_clamp", cfg.attack.bypass_clamp);
  }

  if (root.contains("auth")) {
    const json& a = root["auth"];
    require_keys(a, "auth", {"key_hex"});
    cfg.key_hex = get_str(a, "auth", "key_hex", cfg.key_hex);
  }

  if (root.contains("outputs")) {
    const json& o = root["outputs"];
    const std::string p = "outputs";
    require_keys(o, p,
                 {"design_report", "trace_csv", "events_jsonl", "plots_dir",
                  "plot_planes"});
    cfg.outputs.design_report =
        get_str(o, p, "design_report", cfg.outputs.design_report);
    cfg.outputs.trace_csv = get_str(o, p, "trace_csv", cfg.outputs.trace_csv);
    cfg.outputs.events_jsonl =
        get_str(o, p, "events_jsonl", cfg.outputs.events_jsonl);
    cfg.outputs.plots_dir = get_str(o, p, "plots_dir", cfg.outputs.plots_dir);
    if (o.contains("plot_planes")) {
      const json& planes = o["plot_planes"];
      if (!planes.is_array()) fail(p + ".plot_planes", "expected an array");
      cfg.outputs.plot_planes.clear();
      for (const json& pl : planes) {
        if (!pl.is_array() || pl.size() != 2 || !pl[0].is_string() ||
            !pl[1].is_string()) {
          fail(p + ".plot_planes", "expected [name, name] pairs");
        }
        const std::string a = pl[0].get<std::string>();
        const std::string b = pl[1].get<std::string>();
        state_index_from_name(a);
        state_index_from_name(b);
        cfg.outputs.plot_planes.emplace_back(a, b);
      }
    }
  }

  // Surface validation errors at load time rather than first use.
  try {
    cfg.scenario().validate();
    cfg.design_inputs();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file '" + path + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace rejuv
