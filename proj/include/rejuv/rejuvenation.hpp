#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rejuv/control.hpp"
#include "rejuv/types.hpp"

namespace rejuv {

using Key = std::vector<std::uint8_t>;
using Tag = std::array<std::uint8_t, 32>;

struct RefMessage {
  State point;
  std::vector<std::uint8_t> tag;
};

// HMAC-SHA256 over the canonical little-endian serialization of the point.
Tag ref_tag(const State& point, const Key& key);

// Constant-time tag verification; false for any malformed message.
bool authenticate(const RefMessage& msg, const Key& key);

Key key_from_hex(const std::string& hex);

// Reference points must be hover equilibria: zero velocities, zero roll and
// pitch. The hypervisor drops proposals that are not.
bool is_equilibrium_point(const State& x, double tol = 1e-9);

struct TimingParams {
  double t_sr = 0.03;           // software refresh duration
  double t_uc = 0.18;           // certified uncertain-control bound
  double t_r = 0.15;            // tracking timer
  double control_period = 0.004;

  void validate() const;
  // Refresh rounded up to whole control periods.
  double sr_quantized() const;
  // Tracking budget shaved by the refresh quantization excess so that any
  // TC-entry to SC-entry interval stays within T_UC at any control period.
  double tc_budget() const;
};

enum class AuthFailPolicy {
  ResetToCurrent,  // x_new := x_cur on a failed authentication
  KeepPrior,       // keep the previously authenticated pending point
};

enum class EventKind {
  ModeSwitch,
  RefSwitch,
  AuthOk,
  AuthFail,
  MsgDropped,
  TcCompleted,
  TcTimeout,
  ScCompleted,
  SrCompleted,
  AttackOn,
  AttackOff,
  SwitchOutsideSafeSet,
  Fault,
};

const char* event_name(EventKind k);

struct Event {
  double t = 0.0;
  EventKind kind{};
  std::string detail;
};

struct HypervisorState {
  Mode mode = Mode::SR;
  State x_cur = State::Zero();
  State x_new = State::Zero();
  double mode_entry_time = 0.0;
  double timer_deadline = 0.0;
  bool comm_on = false;
  // Minimum dwell for the first safety-control phase (the settle run).
  double first_sc_hold = 0.0;
  double sc_hold_until = 0.0;
  std::uint64_t auth_failures = 0;
  std::uint64_t dropped_messages = 0;
};

HypervisorState hv_init(const State& x_start, double first_sc_hold = 0.0,
                        double t0 = 0.0);

struct HvContext {
  TimingParams timing;
  double eps_sc = 0.05;
  double eps_tc = 0.01;
  Mat p;  // shared Lyapunov shape for the completion checks
  Key key;
  AuthFailPolicy auth_policy = AuthFailPolicy::ResetToCurrent;
};

struct HvStepResult {
  Mode mode = Mode::SR;  // mode in force for this control period
  bool comm_on = false;
  State reference = State::Zero();
  bool ref_switched = false;
  State ref_before = State::Zero();
  std::vector<State> authenticated;  // payloads accepted this step
  std::vector<Event> events;
};

// Advances the hypervisor by one control period. Processes the inbox while
// communication is on, evaluates the completion conditions against the shared
// Lyapunov function, and applies the mode transitions (SR -> SC -> TC -> SR).
// SR -> SC -> TC may cascade within one step (zero-length safety control).
HvStepResult hv_step(HypervisorState& hv, const HvContext& ctx, const State& x,
                     double t, std::span<const RefMessage> inbox);

}  // namespace rejuv
