#pragma once

#include <vector>

#include "rejuv/numerics.hpp"
#include "rejuv/types.hpp"

namespace rejuv {

// Intersection of halfspaces xi_j^T (x - center) <= offset_j. Boxes produce
// normals in antipodal direction pairs (stored adjacently: +axis, -axis).
struct HalfspacePolytope {
  Vec center;
  std::vector<Vec> normals;
  std::vector<double> offsets;

  int dim() const { return static_cast<int>(center.size()); }
  int num_facets() const { return static_cast<int>(normals.size()); }
  bool contains(const Vec& x, double tol = 0.0) const;
  // Largest value of xi^T (x - center) / offset over facets; <= 1 inside.
  double max_scaled_violation(const Vec& x) const;
};

// {x : (x - center)^T P (x - center) <= level}
struct Ellipsoid {
  Vec center;
  Mat shape;  // P, symmetric positive definite
  double level = 1.0;

  bool contains(const Vec& x, double tol = 0.0) const;
  Ellipsoid with_level(double new_level) const;
};

// Turns per-axis bounds lo_i < c_i < hi_i into the normalized form
// (+e_i / (hi_i - c_i), offset 1) and (-e_i / (c_i - lo_i), offset 1),
// pairs stored adjacently.
HalfspacePolytope normalize_constraints(const Box& bounds, const Vec& center);

struct InvariantEllipsoidOptions {
  // Diagonal weight of the Lyapunov right-hand side used to shape P.
  Vec q_weights;  // empty = identity
  // Rounds of coordinate ascent over the diagonal weights maximizing
  // log det P^{-1}. Zero keeps the plain scaled Lyapunov solution.
  int volume_ascent_iters = 0;
};

// Invariant ellipsoid {(x-c)^T P (x-c) <= 1} for xdot = A_sc (x - c) contained
// in the normalized polytope C: solves A_sc^T P0 + P0 A_sc = -Q_w and scales
// P = P0 / min_j 1/(xi_j^T P0^{-1} xi_j) so the worst facet is touched.
Ellipsoid invariant_ellipsoid(const Mat& a_sc, const HalfspacePolytope& c,
                              const InvariantEllipsoidOptions& opts = {});

// log det P^{-1}, the log-volume objective (up to a constant factor).
double log_det_inverse(const Mat& p);

// Same normals, all offsets replaced by sqrt(eps).
HalfspacePolytope shrink_polytope(const HalfspacePolytope& c, double eps);

// V(x) = (x - c)^T P (x - c)
double lyapunov_value(const Ellipsoid& e, const Vec& x);

// Boundary polyline (n_points) of the projection of {z^T P z <= level} onto
// coordinate plane (i, j), in deviation coordinates.
std::vector<Eigen::Vector2d> project_ellipsoid(const Mat& p, double level,
                                               int i, int j,
                                               int n_points = 64);

}  // namespace rejuv
