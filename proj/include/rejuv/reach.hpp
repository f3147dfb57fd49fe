#pragma once

#include <vector>

#include "rejuv/numerics.hpp"
#include "rejuv/sets.hpp"
#include "rejuv/types.hpp"

namespace rejuv {

// Admissible wrench deviations during uncertain control, as a box with its
// vertex list (the polytope 'U' of the reachability analysis).
struct InputSet {
  Box box;
  std::vector<Vec> vertices;

  InputSet() = default;
  explicit InputSet(Box b);
  int dim() const { return box.dim(); }
};

// xi(t) = e^{-A^T t} xi
Vec support_direction(const Mat& a, const Vec& xi, double t);

struct QuadratureOptions {
  double dt = 1e-3;        // initial panel width
  double rel_tol = 1e-6;   // refinement stop
  int max_panels = 1 << 20;
};

// integral_0^t max_i <xi(tau), B u_i> dtau by composite trapezoid with
// panel doubling until the relative change is below rel_tol.
double support_integral(const Mat& a, const Mat& b, const InputSet& u,
                        const Vec& xi, double t,
                        const QuadratureOptions& quad = {});

// Support-function over-approximation of the reach set at one time, as the
// intersection of propagated facet halfspaces; vertices recovered through
// the paired-normal (affine box image) structure.
struct ReachOverApprox {
  double t = 0.0;
  Vec center;
  std::vector<Vec> normals;     // propagated, paired like the source polytope
  std::vector<double> offsets;
  std::vector<Vec> vertices;    // absolute coordinates, 2^(n_facets/2) corners

  bool contains(const Vec& x, double tol = 0.0) const;
};

ReachOverApprox reach_overapprox(const Mat& a, const Mat& b, const InputSet& u,
                                 const HalfspacePolytope& c_sc, double t,
                                 const QuadratureOptions& quad = {});

struct VerifyOptions {
  int n_grid = 64;
  double containment_tol = 1e-9;
  QuadratureOptions quad;
  // Closed-loop matrix for the settle-time measurement (condition ii);
  // leave empty to skip it.
  Mat a_sc;
  double eps_sc = 0.05;
  double settle_horizon = 10.0;
  double settle_dt = 1e-3;
};

struct TucGridEntry {
  double t = 0.0;
  double max_v = 0.0;  // worst vertex Lyapunov value at this time
};

struct TucReport {
  double t_uc = 0.0;
  bool pass = false;
  double margin = 0.0;  // 1 - max V over all grid times
  double tolerance = 1e-9;
  double worst_time = 0.0;
  double worst_margin_slope = 0.0;  // max |d(max V)/dt| between grid points
  std::vector<TucGridEntry> grid;
  bool settle_measured = false;
  bool settle_ok = false;
  double settle_time = 0.0;  // measured T_SC upper bound over C_SC vertices
};

// Checks R+(C_SC, t_k, U) inside E_C at every grid time t_k in (0, T_UC]
// by evaluating the Lyapunov value at every over-approximation vertex; also
// measures the closed-loop settle time from the C_SC vertices into E_SC.
TucReport verify_tuc(const Mat& a, const Mat& b, const InputSet& u,
                     const HalfspacePolytope& c_sc, const Ellipsoid& e_c,
                     double t_uc, const VerifyOptions& opts = {});

// Bisection for the largest certified horizon: requires a pass at t_lo and a
// failure at t_hi, returns T* passing with verify(T* + tol) failing.
double find_max_tuc(const Mat& a, const Mat& b, const InputSet& u,
                    const HalfspacePolytope& c_sc, const Ellipsoid& e_c,
                    double t_lo, double t_hi, double tol,
                    const VerifyOptions& opts = {});

// Exact support function of a paired-normal polytope in direction xi
// (equals the maximum of <xi, v - center> over its vertices).
double polytope_support(const HalfspacePolytope& c, const Vec& xi);

struct ShapingOptions {
  int n_times = 8;  // shaping grid in (0, t_uc]
  QuadratureOptions quad;
};

// Invariant ellipsoid shaped for the certification itself: splits A_sc into
// its decoupled blocks and, per block, minimizes the worst reach-vertex
// Lyapunov value over all invariant in-box ellipsoids (a small log-barrier
// Newton solve, convex in P^{-1}). The result satisfies the same
// post-conditions as invariant_ellipsoid: A_sc-invariance and containment.
Ellipsoid margin_shaped_ellipsoid(const Mat& a_sc, const HalfspacePolytope& c,
                                  const Mat& a, const Mat& b, const InputSet& u,
                                  double eps_sc, double t_uc,
                                  const ShapingOptions& opts = {});

}  // namespace rejuv
