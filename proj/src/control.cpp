#include "rejuv/control.hpp"

#include <algorithm>

namespace rejuv {

const char* mode_name(Mode m) {
  switch (m) {
    case Mode::SR: return "SR";
    case Mode::SC: return "SC";
    case Mode::TC: return "TC";
  }
  return "?";
}

LqrResult lqr_gain(const Mat& a, const Mat& b, const Mat& q, const Mat& r) {
  LqrResult out;
  out.s = solve_care(a, b, q, r);
  out.k = r.ldlt().solve(b.transpose() * out.s);
  if (!is_hurwitz(a - b * out.k)) {
    throw SolverError("lqr_gain: closed loop not Hurwitz");
  }
  return out;
}

Wrench control_law(const ControllerGains& g, const State& x,
                   const State& x_eq) {
  const Vec4 u = g.u_ff.to_vec() - g.k * (x - x_eq);
  return Wrench::from_vec(u);
}

bool WrenchBounds::contains(const Wrench& w, double tol) const {
  return w.thrust >= thrust_min - tol && w.thrust <= thrust_max + tol &&
         std::abs(w.tau_phi) <= torque_roll_pitch + tol &&
         std::abs(w.tau_theta) <= torque_roll_pitch + tol &&
         std::abs(w.tau_psi) <= torque_yaw + tol;
}

void WrenchBounds::validate() const {
  if (thrust_min < 0.0 || thrust_min >= thrust_max ||
      torque_roll_pitch <= 0.0 || torque_yaw <= 0.0) {
    throw ConfigError("invalid wrench bounds");
  }
}

void ClampSpec::validate() const {
  tc.validate();
  sc.validate();
  if (tc.thrust_min < sc.thrust_min || tc.thrust_max > sc.thrust_max ||
      tc.torque_roll_pitch > sc.torque_roll_pitch ||
      tc.torque_yaw > sc.torque_yaw) {
    throw ConfigError("TC clamp bounds must lie inside SC bounds");
  }
}

Wrench clamp_controls(const ClampSpec& spec, Mode mode, const Wrench& w) {
  if (mode == Mode::SR) {
    throw Error("clamp_controls: no controller runs during software refresh");
  }
  const WrenchBounds& b = mode == Mode::TC ? spec.tc : spec.sc;
  Wrench out;
  out.thrust = std::clamp(w.thrust, b.thrust_min, b.thrust_max);
  out.tau_phi = std::clamp(w.tau_phi, -b.torque_roll_pitch, b.torque_roll_pitch);
  out.tau_theta =
      std::clamp(w.tau_theta, -b.torque_roll_pitch, b.torque_roll_pitch);
  out.tau_psi = std::clamp(w.tau_psi, -b.torque_yaw, b.torque_yaw);
  return out;
}

Box input_set_from_clamp(const WrenchBounds& tc, double hover_thrust) {
  Vec lo(4), hi(4);
  lo << tc.thrust_min - hover_thrust, -tc.torque_roll_pitch,
      -tc.torque_roll_pitch, -tc.torque_yaw;
  hi << tc.thrust_max - hover_thrust, tc.torque_roll_pitch,
      tc.torque_roll_pitch, tc.torque_yaw;
  return Box(lo, hi);
}

}  // namespace rejuv
