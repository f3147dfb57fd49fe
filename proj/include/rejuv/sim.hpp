#pragma once

#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "rejuv/design.hpp"
#include "rejuv/rejuvenation.hpp"

namespace rejuv {

struct Waypoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double yaw = 0.0;
};

State equilibrium_state(const Waypoint& w);

// Hover equilibria spaced at most `step` apart along the straight segment,
// yaw interpolated, first element the start, last exactly the goal.
std::vector<State> generate_references(const Waypoint& start,
                                       const Waypoint& goal, double step);

enum class SrCommandPolicy { Hold, Zero };

struct Scenario {
  QuadrotorParams quad;
  ClampSpec clamp;
  TimingParams timing;
  double eps_sc = 0.05;
  double eps_tc = 0.01;
  Waypoint start;
  Waypoint goal;
  double step_length = 0.1;
  AttackSpec attack;
  double dt = 1e-3;
  double duration = 40.0;
  double settle_duration = 2.0;
  std::uint64_t seed = 1;
  SrCommandPolicy sr_policy = SrCommandPolicy::Hold;
  AuthFailPolicy auth_policy = AuthFailPolicy::ResetToCurrent;
  Key key;
  std::optional<State> initial_state;  // default: hover at the start waypoint

  void validate() const;
  int substeps() const;
};

struct TraceRecord {
  double t = 0.0;
  State x = State::Zero();       // state the controllers acted on
  Wrench u_pre;                  // controller request (before clamp)
  Wrench u_post;                 // after the hypervisor clamp
  MotorCommands cmds{};          // applied motor commands (after any attack)
  Mode mode = Mode::SR;
  bool comm = false;
  int ref_id = 0;
  double v = 0.0;                // Lyapunov value w.r.t. the current reference
  bool saturated = false;
  bool attack_active = false;
  std::vector<Event> events;
};

struct ReferenceSwitch {
  double t = 0.0;
  State from = State::Zero();
  State to = State::Zero();
};

struct Trace {
  std::vector<TraceRecord> records;
  std::vector<State> references;
  std::vector<State> authenticated;  // payloads the hypervisor accepted
  std::vector<ReferenceSwitch> switches;
  State final_state = State::Zero();
  double final_time = 0.0;
  bool completed = false;
  double completion_time = 0.0;
  bool faulted = false;
  std::string fault_detail;
  std::uint64_t auth_failures = 0;
  std::uint64_t dropped_messages = 0;
};

// Closed-loop scenario execution: hypervisor step, active controller, clamp,
// mixer, attack injection, RK4 substeps of the nonlinear plant.
Trace run_scenario(const Scenario& s, const Design& d);

inline constexpr const char* kTraceCsvHeader =
    "t,x,y,z,phi,theta,psi,vx,vy,vz,p,q,r,F,tau_phi,tau_theta,tau_psi,mode,"
    "comm,ref_id,V,event";

void write_trace_csv(const Trace& tr, const QuadrotorParams& quad,
                     std::ostream& os);
void write_events_jsonl(const Trace& tr, std::ostream& os);

// Protocol audits used by the test suites; `ok` false carries a diagnostic.
struct AuditResult {
  bool ok = true;
  std::string detail;
};

AuditResult audit_comm_gate(const Trace& tr);
AuditResult audit_comm_window(const Trace& tr, double t_r, double period);
AuditResult audit_cycle_bound(const Trace& tr, double t_uc);
AuditResult audit_reference_integrity(const Trace& tr, const State& x_start);
AuditResult audit_mode_sequence(const Trace& tr);
AuditResult audit_event_switching(const Trace& tr, double eps_tc);
AuditResult audit_all(const Trace& tr, const Scenario& s);

}  // namespace rejuv
