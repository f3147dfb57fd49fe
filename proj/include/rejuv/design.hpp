#pragma once

#include "rejuv/control.hpp"
#include "rejuv/dynamics.hpp"
#include "rejuv/reach.hpp"
#include "rejuv/sets.hpp"

namespace rejuv {

// Everything the certification and the simulator need, in deviation
// coordinates around the current reference (center 0, translated per
// reference at evaluation time).
struct Design {
  Mat a;  // 12x12 hover linearization
  Mat b;  // 12x4
  ControllerGains safety;
  ControllerGains tracking;
  Mat p;  // shape of E_C (level 1); E_SC / E_TC are its eps level sets
  double log_det_p_inv = 0.0;
  HalfspacePolytope constraint;  // normalized operating box C
  InputSet input_set;            // TC clamp box in deviation coordinates
  double eps_sc = 0.05;
  double eps_tc = 0.01;

  Ellipsoid e_c() const { return {Vec::Zero(12), p, 1.0}; }
  HalfspacePolytope c_sc() const { return shrink_polytope(constraint, eps_sc); }
};

struct DesignInputs {
  QuadrotorParams quad;
  Vec q_safety;    // 12 diagonal weights
  Vec r_safety;    // 4
  Vec q_tracking;  // 12
  Vec r_tracking;  // 4
  ClampSpec clamp;
  Box state_bounds;  // operating constraints, deviation coordinates
  double eps_sc = 0.05;
  double eps_tc = 0.01;
  int volume_ascent_iters = 0;
  // When positive, P is shaped to minimize the worst reach-vertex value over
  // (0, shape_t_uc] instead of maximizing volume.
  double shape_t_uc = 0.0;
};

Design build_design(const DesignInputs& in);

}  // namespace rejuv
