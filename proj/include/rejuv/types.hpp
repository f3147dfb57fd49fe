#pragma once

#include <Eigen/Dense>

#include <array>
#include <stdexcept>
#include <string>

namespace rejuv {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using Vec4 = Eigen::Vector4d;
using State = Eigen::Matrix<double, 12, 1>;

// State layout: position, ZYX Euler angles, world-frame linear velocity,
// body-frame angular velocity.
enum StateIndex : int {
  SX = 0,
  SY = 1,
  SZ = 2,
  SPHI = 3,
  STHETA = 4,
  SPSI = 5,
  SVX = 6,
  SVY = 7,
  SVZ = 8,
  SP = 9,
  SQ = 10,
  SR_ = 11,
};

inline constexpr int kStateDim = 12;
inline constexpr int kInputDim = 4;

inline constexpr std::array<const char*, 12> kStateNames = {
    "x", "y", "z", "phi", "theta", "psi", "vx", "vy", "vz", "p", "q", "r"};

// Total thrust along body z plus the three body torques. This is the control
// vector before the mixer maps it to individual motor commands.
struct Wrench {
  double thrust = 0.0;
  double tau_phi = 0.0;
  double tau_theta = 0.0;
  double tau_psi = 0.0;

  Vec4 to_vec() const { return Vec4(thrust, tau_phi, tau_theta, tau_psi); }
  static Wrench from_vec(const Vec4& v) { return {v(0), v(1), v(2), v(3)}; }
};

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct DimensionError : Error {
  explicit DimensionError(const std::string& msg) : Error(msg) {}
};

struct SolverError : Error {
  explicit SolverError(const std::string& msg) : Error(msg) {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

struct SimFault : Error {
  explicit SimFault(const std::string& msg) : Error(msg) {}
};

}  // namespace rejuv
