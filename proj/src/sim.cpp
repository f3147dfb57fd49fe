#include "rejuv/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace rejuv {

namespace {

constexpr double kTimeTol = 1e-9;

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double quad_form(const Mat& p, const State& x, const State& c) {
  const Vec d = x - c;
  return d.dot(p * d);
}

bool same_state(const State& a, const State& b) {
  return (a - b).cwiseAbs().maxCoeff() == 0.0;
}

}  // namespace

State equilibrium_state(const Waypoint& w) {
  State s = State::Zero();
  s(SX) = w.x;
  s(SY) = w.y;
  s(SZ) = w.z;
  s(SPSI) = w.yaw;
  return s;
}

std::vector<State> generate_references(const Waypoint& start,
                                       const Waypoint& goal, double step) {
  if (!(step > 0.0)) throw Error("generate_references: step must be positive");
  const double dx = goal.x - start.x;
  const double dy = goal.y - start.y;
  const double dz = goal.z - start.z;
  const double dist = std::sqrt(dx * dx + dy * dy + dz * dz);
  if (dist == 0.0 && goal.yaw == start.yaw) {
    return {equilibrium_state(goal)};
  }
  const int n_seg = std::max(1, static_cast<int>(std::ceil(dist / step)));
  std::vector<State> refs;
  refs.reserve(n_seg + 1);
  for (int k = 0; k < n_seg; ++k) {
    const double a = static_cast<double>(k) / n_seg;
    Waypoint w;
    w.x = start.x + a * dx;
    w.y = start.y + a * dy;
    w.z = start.z + a * dz;
    w.yaw = start.yaw + a * (goal.yaw - start.yaw);
    refs.push_back(equilibrium_state(w));
  }
  refs.push_back(equilibrium_state(goal));  // last element exactly the goal
  return refs;
}

void Scenario::validate() const {
  quad.validate();
  clamp.validate();
  timing.validate();
  attack.validate();
  if (!(eps_tc > 0.0) || !(eps_sc > eps_tc) || !(eps_sc < 1.0)) {
    throw ConfigError("scenario: need 0 < eps_tc < eps_sc < 1");
  }
  if (!(step_length > 0.0)) throw ConfigError("scenario: step_length must be positive");
  if (!(dt > 0.0) || dt > timing.control_period + kTimeTol) {
    throw ConfigError("scenario: need 0 < dt <= control period");
  }
  substeps();  // throws when the period is not a multiple of dt
  if (!(duration > 0.0) || settle_duration < 0.0) {
    throw ConfigError("scenario: invalid duration");
  }
  if (key.empty()) throw ConfigError("scenario: authentication key missing");
  for (double v : {start.x, start.y, start.z, start.yaw, goal.x, goal.y,
                   goal.z, goal.yaw}) {
    if (!std::isfinite(v)) throw ConfigError("scenario: waypoints must be finite");
  }
  if (initial_state && !initial_state->allFinite()) {
    throw ConfigError("scenario: initial state must be finite");
  }
}

int Scenario::substeps() const {
  const double ratio = timing.control_period / dt;
  const int n = static_cast<int>(std::llround(ratio));
  if (n < 1 || std::abs(ratio - n) > 1e-6) {
    throw ConfigError("scenario: control period must be a whole multiple of dt");
  }
  return n;
}

namespace {

// In-process honest sender: proposes the next reference once the vehicle is
// inside E_TC of the one it is currently tracking.
struct MissionSender {
  const std::vector<State>& refs;
  const Key& key;
  std::size_t next_idx = 1;

  void maybe_send(const State& x, const Mat& p, double eps_tc, bool comm_on,
                  std::vector<RefMessage>& inbox) const {
    if (!comm_on || next_idx >= refs.size()) return;
    if (quad_form(p, x, refs[next_idx - 1]) <= eps_tc) {
      RefMessage msg;
      msg.point = refs[next_idx];
      const Tag tag = ref_tag(msg.point, key);
      msg.tag.assign(tag.begin(), tag.end());
      inbox.push_back(std::move(msg));
    }
  }

  void on_switch(const State& to) {
    if (next_idx < refs.size() && same_state(to, refs[next_idx])) {
      ++next_idx;
    }
  }
};

// Adversarial sender used by the forge-refs attack: plausible hover points
// tagged under the wrong key, with an occasional malformed message.
struct ForgeSender {
  Key wrong_key;
  std::mt19937_64 rng;
  std::uniform_real_distribution<double> pos{-5.0, 5.0};
  int count = 0;

  explicit ForgeSender(const Key& honest_key, std::uint64_t seed)
      : rng(seed) {
    wrong_key = honest_key;
    for (auto& b : wrong_key) b = static_cast<std::uint8_t>(b ^ 0xff);
  }

  RefMessage next() {
    Waypoint w{pos(rng), pos(rng), pos(rng), 0.0};
    RefMessage msg;
    msg.point = equilibrium_state(w);
    if (++count % 4 == 0) {
      msg.tag.assign(5, 0xab);  // malformed: wrong tag length
    } else {
      const Tag tag = ref_tag(msg.point, wrong_key);
      msg.tag.assign(tag.begin(), tag.end());
    }
    return msg;
  }
};

int find_reference_id(const std::vector<State>& refs, const State& x) {
  for (std::size_t i = 0; i < refs.size(); ++i) {
    if (same_state(refs[i], x)) return static_cast<int>(i);
  }
  return -1;
}

}  // namespace

Trace run_scenario(const Scenario& s, const Design& d) {
  s.validate();

  Trace tr;
  tr.references = generate_references(s.start, s.goal, s.step_length);
  const State x_start = tr.references.front();
  const State goal_state = tr.references.back();

  HvContext ctx;
  ctx.timing = s.timing;
  ctx.eps_sc = s.eps_sc;
  ctx.eps_tc = s.eps_tc;
  ctx.p = d.p;
  ctx.key = s.key;
  ctx.auth_policy = s.auth_policy;

  HypervisorState hv = hv_init(x_start, s.settle_duration);
  MissionSender mission{tr.references, s.key};
  ForgeSender forger(s.key, s.seed);

  State x = s.initial_state.value_or(x_start);
  MotorCommands held = wrench_to_commands(d.safety.u_ff, s.quad).commands;

  const int n_sub = s.substeps();
  const double period = s.timing.control_period;
  const int n_steps = static_cast<int>(std::ceil(s.duration / period));
  const bool bypass_attack =
      s.attack.type == AttackType::PropellerOff && s.attack.bypass_clamp;
  const bool wrench_attack =
      s.attack.type == AttackType::PropellerOff && !s.attack.bypass_clamp;

  bool prev_attack_active = false;
  int current_ref_id = 0;
  bool goal_phase = false;
  double phase_v_max = 0.0;

  const VectorField plant = [&](const Vec& xs, const Vec& uv) -> Vec {
    return quad_derivative(State(xs), Wrench::from_vec(Vec4(uv)), s.quad);
  };

  for (int k = 0; k < n_steps; ++k) {
    const double t = k * period;

    std::vector<RefMessage> inbox;
    if (s.attack.type == AttackType::ForgeRefs && s.attack.active(t)) {
      inbox.push_back(forger.next());
    }
    mission.maybe_send(x, d.p, s.eps_tc, hv.comm_on, inbox);

    HvStepResult res = hv_step(hv, ctx, x, t, inbox);
    for (const State& pt : res.authenticated) tr.authenticated.push_back(pt);
    tr.auth_failures = hv.auth_failures;
    tr.dropped_messages = hv.dropped_messages;

    TraceRecord rec;
    rec.t = t;
    rec.x = x;
    rec.mode = res.mode;
    rec.comm = res.comm_on;
    rec.events = res.events;

    if (res.ref_switched) {
      tr.switches.push_back({t, res.ref_before, res.reference});
      mission.on_switch(res.reference);
      current_ref_id = find_reference_id(tr.references, res.reference);
      // Design guarantee: a switch must land inside E_C of the new center.
      if (quad_form(d.p, x, res.reference) > 1.0 + 1e-9) {
        rec.events.push_back({t, EventKind::SwitchOutsideSafeSet, ""});
      }
    }
    rec.ref_id = current_ref_id;
    rec.v = quad_form(d.p, x, res.reference);

    // Active controller and hypervisor clamp.
    Wrench u_pre, u_post;
    MotorCommands cmds;
    bool saturated = false;
    switch (res.mode) {
      case Mode::SR: {
        cmds = s.sr_policy == SrCommandPolicy::Hold ? held
                                                    : MotorCommands{0, 0, 0, 0};
        u_pre = u_post = commands_to_wrench(cmds, s.quad);
        break;
      }
      case Mode::SC: {
        u_pre = control_law(d.safety, x, res.reference);
        u_post = clamp_controls(s.clamp, Mode::SC, u_pre);
        const MixerResult mr = wrench_to_commands(u_post, s.quad);
        cmds = mr.commands;
        saturated = mr.saturated;
        break;
      }
      case Mode::TC: {
        u_pre = control_law(d.tracking, x, res.reference);
        if (wrench_attack && s.attack.active(t)) {
          // The compromised partition requests a shutdown; the hypervisor
          // clamp floors the thrust at the TC lower bound.
          u_pre = Wrench{0.0, 0.0, 0.0, 0.0};
        }
        u_post = clamp_controls(s.clamp, Mode::TC, u_pre);
        const MixerResult mr = wrench_to_commands(u_post, s.quad);
        cmds = mr.commands;
        saturated = mr.saturated;
        break;
      }
    }
    if (bypass_attack) cmds = apply_attack(s.attack, cmds, t);
    if (res.mode != Mode::SR) held = cmds;

    const bool attack_now =
        s.attack.active(t) && (bypass_attack || (wrench_attack && res.mode == Mode::TC) ||
                               s.attack.type == AttackType::ForgeRefs);
    if (attack_now && !prev_attack_active) {
      rec.events.push_back({t, EventKind::AttackOn, ""});
    } else if (!attack_now && prev_attack_active) {
      rec.events.push_back({t, EventKind::AttackOff, ""});
    }
    prev_attack_active = attack_now;

    rec.u_pre = u_pre;
    rec.u_post = u_post;
    rec.cmds = cmds;
    rec.saturated = saturated;
    rec.attack_active = attack_now;

    // Mission success accounting: one whole tracking phase at the goal with
    // the Lyapunov value below eps_tc throughout, ended by the event.
    bool tc_entered = false, tc_completed = false;
    for (const Event& e : rec.events) {
      if (e.kind == EventKind::ModeSwitch && e.detail == "SC->TC") tc_entered = true;
      if (e.kind == EventKind::TcCompleted) tc_completed = true;
    }
    if (tc_entered) {
      goal_phase = same_state(res.reference, goal_state);
      phase_v_max = rec.v;
    } else if (res.mode == Mode::TC || tc_completed) {
      phase_v_max = std::max(phase_v_max, rec.v);
    }

    tr.records.push_back(std::move(rec));

    if (tc_completed && goal_phase && phase_v_max <= s.eps_tc) {
      tr.completed = true;
      tr.completion_time = t;
      tr.final_state = x;
      tr.final_time = t;
      return tr;
    }

    // Plant integration over the control period (zero-order hold).
    const Vec4 u_applied = commands_to_wrench(cmds, s.quad).to_vec();
    try {
      for (int j = 0; j < n_sub; ++j) {
        x = rk4_step(plant, x, u_applied, s.dt);
      }
    } catch (const SimFault& fault) {
      tr.faulted = true;
      tr.fault_detail = fault.what();
      tr.records.back().events.push_back({t, EventKind::Fault, fault.what()});
      break;
    }
  }

  tr.final_state = x;
  tr.final_time = tr.records.empty() ? 0.0 : tr.records.back().t + period;
  return tr;
}

void write_trace_csv(const Trace& tr, const QuadrotorParams& quad,
                     std::ostream& os) {
  os << kTraceCsvHeader << '\n';
  for (const TraceRecord& r : tr.records) {
    os << fmt17(r.t);
    for (int i = 0; i < 12; ++i) os << ',' << fmt17(r.x(i));
    // The wrench the plant actually received (motor commands include any
    // attack override; equals the post-clamp wrench otherwise).
    const Vec4 u = commands_to_wrench(r.cmds, quad).to_vec();
    for (int i = 0; i < 4; ++i) os << ',' << fmt17(u(i));
    os << ',' << mode_name(r.mode) << ',' << (r.comm ? 1 : 0) << ','
       << r.ref_id << ',' << fmt17(r.v) << ',';
    for (std::size_t i = 0; i < r.events.size(); ++i) {
      if (i > 0) os << ';';
      os << event_name(r.events[i].kind);
    }
    os << '\n';
  }
}

void write_events_jsonl(const Trace& tr, std::ostream& os) {
  for (const TraceRecord& r : tr.records) {
    for (const Event& e : r.events) {
      os << "{\"t\":" << fmt17(e.t) << ",\"event\":\"" << event_name(e.kind)
         << "\",\"detail\":\"" << e.detail << "\"}\n";
    }
  }
}

AuditResult audit_comm_gate(const Trace& tr) {
  for (const TraceRecord& r : tr.records) {
    if (r.comm && r.mode != Mode::TC) {
      return {false, "communication enabled outside tracking control at t=" +
                         fmt17(r.t)};
    }
  }
  return {};
}

AuditResult audit_comm_window(const Trace& tr, double t_r, double period) {
  double window_start = -1.0;
  double last_on = 0.0;
  const auto check = [&]() -> bool {
    return window_start < 0.0 ||
           last_on + period - window_start <= t_r + kTimeTol;
  };
  for (const TraceRecord& r : tr.records) {
    if (r.comm) {
      if (window_start < 0.0) window_start = r.t;
      last_on = r.t;
    } else if (window_start >= 0.0) {
      if (!check()) {
        return {false, "comm window starting at t=" + fmt17(window_start) +
                           " exceeds t_r"};
      }
      window_start = -1.0;
    }
  }
  if (!check()) {
    return {false, "trailing comm window exceeds t_r"};
  }
  return {};
}

AuditResult audit_cycle_bound(const Trace& tr, double t_uc) {
  double tc_entry = -1.0;
  for (const TraceRecord& r : tr.records) {
    for (const Event& e : r.events) {
      if (e.kind != EventKind::ModeSwitch) continue;
      if (e.detail == "SC->TC") {
        tc_entry = e.t;
      } else if (e.detail == "SR->SC" && tc_entry >= 0.0) {
        if (e.t - tc_entry > t_uc + kTimeTol) {
          return {false, "uncertain-control span " + fmt17(e.t - tc_entry) +
                             " from t=" + fmt17(tc_entry) + " exceeds T_UC"};
        }
        tc_entry = -1.0;
      }
    }
  }
  return {};
}

AuditResult audit_reference_integrity(const Trace& tr, const State& x_start) {
  if (!tr.records.empty()) {
    // walk reference switches; targets must be x_start or authenticated
    for (const ReferenceSwitch& sw : tr.switches) {
      bool known = same_state(sw.to, x_start);
      for (const State& a : tr.authenticated) {
        if (known) break;
        known = same_state(sw.to, a);
      }
      if (!known) {
        return {false,
                "reference switched to an unauthenticated point at t=" +
                    fmt17(sw.t)};
      }
    }
  }
  return {};
}

AuditResult audit_mode_sequence(const Trace& tr) {
  const char* expected = "SR->SC";
  for (const TraceRecord& r : tr.records) {
    for (const Event& e : r.events) {
      if (e.kind != EventKind::ModeSwitch) continue;
      if (e.detail != expected) {
        return {false, "unexpected transition " + e.detail + " at t=" +
                           fmt17(e.t) + " (expected " + expected + ")"};
      }
      if (e.detail == "SR->SC") expected = "SC->TC";
      else if (e.detail == "SC->TC") expected = "TC->SR";
      else expected = "SR->SC";
    }
  }
  return {};
}

AuditResult audit_event_switching(const Trace& tr, double eps_tc) {
  const auto ends_tc_phase = [](const TraceRecord& r) {
    for (const Event& e : r.events) {
      if (e.kind == EventKind::TcCompleted || e.kind == EventKind::TcTimeout) {
        return true;
      }
    }
    return false;
  };
  for (const ReferenceSwitch& sw : tr.switches) {
    if (same_state(sw.from, sw.to)) continue;
    // Find the tracking phase immediately preceding the switch. The record
    // that ends the phase already carries the post-transition mode, so the
    // phase is its run of TC records plus the ending record itself.
    double min_v = std::numeric_limits<double>::infinity();
    bool in_run = false;
    for (auto it = tr.records.rbegin(); it != tr.records.rend(); ++it) {
      if (it->t >= sw.t) continue;
      if (!in_run) {
        if (ends_tc_phase(*it)) {
          in_run = true;
          min_v = std::min(min_v, it->v);
        } else if (it->mode == Mode::TC) {
          in_run = true;
          min_v = std::min(min_v, it->v);
        }
      } else if (it->mode == Mode::TC) {
        min_v = std::min(min_v, it->v);
      } else {
        break;  // left the contiguous TC run
      }
    }
    if (min_v > eps_tc + kTimeTol) {
      return {false, "reference switch at t=" + fmt17(sw.t) +
                         " without a preceding E_TC observation"};
    }
  }
  return {};
}

AuditResult audit_all(const Trace& tr, const Scenario& s) {
  const State x_start = equilibrium_state(s.start);
  AuditResult results[] = {
      audit_comm_gate(tr),
      audit_comm_window(tr, s.timing.t_r, s.timing.control_period),
      audit_cycle_bound(tr, s.timing.t_uc),
      audit_reference_integrity(tr, x_start),
      audit_mode_sequence(tr),
      audit_event_switching(tr, s.eps_tc),
  };
  for (const AuditResult& r : results) {
    if (!r.ok) return r;
  }
  return {};
}

}  // namespace rejuv
