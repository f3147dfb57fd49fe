#pragma once

#include <array>

#include "rejuv/types.hpp"

namespace rejuv {

using MotorCommands = std::array<double, 4>;  // normalized to [0, 1]

struct QuadrotorParams {
  double mass = 0.8;              // kg
  double ixx = 0.005;             // kg m^2
  double iyy = 0.005;             // kg m^2
  double izz = 0.009;             // kg m^2
  double arm_length = 0.125;      // m
  double motor_max_thrust = 4.0;  // N
  double motor_max_torque = 0.05; // N m at full thrust
  double gravity = 9.81;          // m/s^2

  double hover_thrust() const { return mass * gravity; }
  // Wrench produced by per-motor thrusts, plus configuration: motors 1/2 on
  // the +x/-x arms (spinning opposite to 3/4), motors 3/4 on +y/-y.
  Mat mixer_matrix() const;
  void validate() const;
};

// Nonlinear state derivative: ZYX Euler kinematics, world z-up, body-frame
// angular velocity, world-frame linear velocity.
State quad_derivative(const State& s, const Wrench& w,
                      const QuadrotorParams& p);

// Analytic Jacobians at hover (zero angles and velocities, thrust = m g,
// yaw 0), input ordered [thrust, tau_phi, tau_theta, tau_psi] as deviations.
struct Linearization {
  Mat a;  // 12x12
  Mat b;  // 12x4
};
Linearization linearize_hover(const QuadrotorParams& p);

struct MixerResult {
  MotorCommands commands{};
  bool saturated = false;
};

// Wrench -> normalized motor commands, clipped to [0,1] with a flag when the
// wrench is outside the achievable set.
MixerResult wrench_to_commands(const Wrench& w, const QuadrotorParams& p);
Wrench commands_to_wrench(const MotorCommands& cmds, const QuadrotorParams& p);

enum class AttackType { None, PropellerOff, ForgeRefs };

struct AttackSpec {
  AttackType type = AttackType::None;
  double start = 0.0;
  double end = 0.0;
  // PropellerOff only: act on the motor commands behind the hypervisor clamp
  // instead of replacing the controller output.
  bool bypass_clamp = false;

  bool active(double t) const {
    return type != AttackType::None && t >= start && t < end;
  }
  void validate() const;
};

// Motor-command level attack injection; pass-through outside the window.
MotorCommands apply_attack(const AttackSpec& a, const MotorCommands& cmds,
                           double t);

}  // namespace rejuv
