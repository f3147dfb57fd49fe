#pragma once

#include <Eigen/Eigenvalues>

#include <random>

#include "rejuv/config.hpp"
#include "rejuv/design.hpp"
#include "rejuv/numerics.hpp"

namespace rejuv::testing {

// Order-30 Taylor series on A t / 2^k in long double, re-squared; the
// independent reference for the production matrix exponential.
inline Mat taylor_expm_oracle(const Mat& a, double t, int terms = 30) {
  using MatL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  const Eigen::Index n = a.rows();
  MatL m = (a * t).cast<long double>();
  int squarings = 0;
  long double norm = m.cwiseAbs().sum();
  while (norm > 0.125L) {
    norm /= 2.0L;
    ++squarings;
  }
  m /= std::pow(2.0L, squarings);
  MatL sum = MatL::Identity(n, n);
  MatL term = MatL::Identity(n, n);
  for (int k = 1; k <= terms; ++k) {
    term = term * m / static_cast<long double>(k);
    sum += term;
  }
  for (int k = 0; k < squarings; ++k) sum = sum * sum;
  return sum.cast<double>();
}

inline Mat random_matrix(std::mt19937_64& rng, int rows, int cols) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = dist(rng);
  }
  return m;
}

inline Mat random_stable_matrix(std::mt19937_64& rng, int n) {
  Mat a = random_matrix(rng, n, n);
  return a - (spectral_abscissa(a) + 0.5) * Mat::Identity(n, n);
}

// Uniform-direction point on the boundary {z : z^T P z = level}.
inline Vec ellipsoid_boundary_point(const Mat& p, double level,
                                    std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec u(p.rows());
  for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = gauss(rng);
  u /= u.norm();
  const Mat l = Mat(p.llt().matrixL());
  return std::sqrt(level) *
         l.transpose().triangularView<Eigen::Upper>().solve(u);
}

// Exact discrete LTI propagator x+ = E x + G u over one step (zero-order
// hold), via the augmented-matrix exponential.
struct LtiPropagator {
  Mat e;
  Mat g;
};

inline LtiPropagator make_propagator(const Mat& a, const Mat& b, double dt) {
  const Eigen::Index n = a.rows();
  const Eigen::Index m = b.cols();
  Mat aug = Mat::Zero(n + m, n + m);
  aug.topLeftCorner(n, n) = a;
  aug.topRightCorner(n, m) = b;
  const Mat e = mat_exp(aug, dt);
  return {e.topLeftCorner(n, n), e.topRightCorner(n, m)};
}

// The reference configuration (the config-file defaults) and the certified
// variant the closed-loop suites run under.
inline RunConfig reference_config() { return RunConfig{}; }

inline RunConfig certified_config() {
  RunConfig cfg;
  cfg.eps_sc = 0.02;
  cfg.timing.t_uc = 0.048;
  cfg.timing.t_r = 0.018;
  cfg.timing.control_period = 0.002;
  cfg.outputs.design_report = "certified_report.json";
  return cfg;
}

inline const Design& certified_design() {
  static const Design d = build_design(certified_config().design_inputs());
  return d;
}

}  // namespace rejuv::testing
