#pragma once

#include "rejuv/dynamics.hpp"
#include "rejuv/numerics.hpp"
#include "rejuv/types.hpp"

namespace rejuv {

enum class Mode { SR, SC, TC };

const char* mode_name(Mode m);

struct LqrResult {
  Mat k;  // 4x12
  Mat s;  // Riccati solution
};

// K = R^{-1} B^T S with S from solve_care; the closed loop A - BK is
// verified Hurwitz before returning.
LqrResult lqr_gain(const Mat& a, const Mat& b, const Mat& q, const Mat& r);

struct ControllerGains {
  Mat k;       // 4x12
  Wrench u_ff; // gravity feedforward, u_ff.thrust = m g
  Mat p;       // Lyapunov shape shared by E_C / E_SC / E_TC
};

// u = u_ff - K (x - x_eq)
Wrench control_law(const ControllerGains& g, const State& x,
                   const State& x_eq);

struct WrenchBounds {
  double thrust_min = 0.0;
  double thrust_max = 16.0;
  double torque_roll_pitch = 0.66;  // symmetric bound, N m
  double torque_yaw = 0.1;          // symmetric bound, N m

  bool contains(const Wrench& w, double tol = 0.0) const;
  void validate() const;
};

struct ClampSpec {
  WrenchBounds tc;
  WrenchBounds sc;

  // TC bounds must sit inside SC bounds.
  void validate() const;
};

// Componentwise clip of the wrench to the mode's bounds. SR has no
// controller output to clamp and is rejected.
Wrench clamp_controls(const ClampSpec& spec, Mode mode, const Wrench& w);

// The TC clamp box expressed in wrench-deviation coordinates; this is the
// input set the reachability certification uses (single source of truth).
Box input_set_from_clamp(const WrenchBounds& tc, double hover_thrust);

}  // namespace rejuv
