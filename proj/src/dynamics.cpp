#include "rejuv/dynamics.hpp"

#include <cmath>
#include <sstream>

namespace rejuv {

void QuadrotorParams::validate() const {
  if (mass <= 0 || ixx <= 0 || iyy <= 0 || izz <= 0 || arm_length <= 0 ||
      motor_max_thrust <= 0 || motor_max_torque <= 0 || gravity <= 0) {
    throw ConfigError("quadrotor parameters must all be positive");
  }
}

Mat QuadrotorParams::mixer_matrix() const {
  // Columns: per-motor thrust [N]; rows: [F, tau_phi, tau_theta, tau_psi].
  // kappa converts motor thrust to reaction torque about z.
  const double l = arm_length;
  const double kappa = motor_max_torque / motor_max_thrust;
  Mat m(4, 4);
  m << 1.0, 1.0, 1.0, 1.0,          // total thrust
      0.0, 0.0, l, -l,              // roll from the y-arm pair
      -l, l, 0.0, 0.0,              // pitch from the x-arm pair
      kappa, kappa, -kappa, -kappa; // yaw from rotor drag
  return m;
}

State quad_derivative(const State& s, const Wrench& w,
                      const QuadrotorParams& p) {
  const double phi = s(SPHI), theta = s(STHETA), psi = s(SPSI);
  if (std::abs(theta) > M_PI / 2.0 - 0.01) {
    std::ostringstream os;
    os << "pitch approaching Euler singularity: theta=" << theta;
    throw SimFault(os.str());
  }

  const double cphi = std::cos(phi), sphi = std::sin(phi);
  const double cth = std::cos(theta), sth = std::sin(theta);
  const double cpsi = std::cos(psi), spsi = std::sin(psi);

  State d;
  // Position rates = world-frame velocity.
  d(SX) = s(SVX);
  d(SY) = s(SVY);
  d(SZ) = s(SVZ);

  // Euler-angle kinematics from body rates.
  const double tth = sth / cth;
  const double pr = s(SP), qr = s(SQ), rr = s(SR_);
  d(SPHI) = pr + sphi * tth * qr + cphi * tth * rr;
  d(STHETA) = cphi * qr - sphi * rr;
  d(SPSI) = (sphi * qr + cphi * rr) / cth;

  // Thrust along body z rotated into the world frame, minus gravity.
  const double f_m = w.thrust / p.mass;
  d(SVX) = f_m * (cphi * sth * cpsi + sphi * spsi);
  d(SVY) = f_m * (cphi * sth * spsi - sphi * cpsi);
  d(SVZ) = f_m * (cphi * cth) - p.gravity;

  // Euler rigid-body equations with diagonal inertia.
  d(SP) = (w.tau_phi - (p.izz - p.iyy) * qr * rr) / p.ixx;
  d(SQ) = (w.tau_theta - (p.ixx - p.izz) * pr * rr) / p.iyy;
  d(SR_) = (w.tau_psi - (p.iyy - p.ixx) * pr * qr) / p.izz;
  return d;
}

Linearization linearize_hover(const QuadrotorParams& p) {
  Mat a = Mat::Zero(12, 12);
  // Kinematics: position <- velocity, angles <- body rates.
  a(SX, SVX) = 1.0;
  a(SY, SVY) = 1.0;
  a(SZ, SVZ) = 1.0;
  a(SPHI, SP) = 1.0;
  a(STHETA, SQ) = 1.0;
  a(SPSI, SR_) = 1.0;
  // Tilt couples gravity-scaled thrust into horizontal acceleration.
  a(SVX, STHETA) = p.gravity;
  a(SVY, SPHI) = -p.gravity;

  Mat b = Mat::Zero(12, 4);
  b(SVZ, 0) = 1.0 / p.mass;
  b(SP, 1) = 1.0 / p.ixx;
  b(SQ, 2) = 1.0 / p.iyy;
  b(SR_, 3) = 1.0 / p.izz;
  return {a, b};
}

MixerResult wrench_to_commands(const Wrench& w, const QuadrotorParams& p) {
  const Vec4 thrusts = p.mixer_matrix().inverse() * w.to_vec();
  MixerResult out;
  for (int i = 0; i < 4; ++i) {
    double cmd = thrusts(i) / p.motor_max_thrust;
    if (cmd < 0.0 || cmd > 1.0) {
      out.saturated = true;
      cmd = std::clamp(cmd, 0.0, 1.0);
    }
    out.commands[i] = cmd;
  }
  return out;
}

Wrench commands_to_wrench(const MotorCommands& cmds, const QuadrotorParams& p) {
  Vec4 thrusts;
  for (int i = 0; i < 4; ++i) thrusts(i) = cmds[i] * p.motor_max_thrust;
  return Wrench::from_vec(p.mixer_matrix() * thrusts);
}

void AttackSpec::validate() const {
  if (type != AttackType::None && !(start < end)) {
    throw ConfigError("attack window must satisfy start < end");
  }
}

MotorCommands apply_attack(const AttackSpec& a, const MotorCommands& cmds,
                           double t) {
  if (a.type == AttackType::PropellerOff && a.active(t)) {
    return {0.0, 0.0, 0.0, 0.0};
  }
  return cmds;
}

}  // namespace rejuv
