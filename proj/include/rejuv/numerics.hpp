#pragma once

#include <functional>
#include <vector>

#include "rejuv/types.hpp"

namespace rejuv {

// Axis-aligned box with possibly asymmetric bounds per axis.
struct Box {
  Vec lo;
  Vec hi;

  Box() = default;
  Box(Vec lower, Vec upper);

  int dim() const { return static_cast<int>(lo.size()); }
  Vec center() const { return 0.5 * (lo + hi); }
  static Box symmetric(const Vec& center, const Vec& half_widths);
  bool contains(const Vec& x, double tol = 0.0) const;
};

// e^{A t} by scaling-and-squaring with a degree-13 Pade approximant.
Mat mat_exp(const Mat& a, double t = 1.0);

// Kronecker product, used by the vectorized Lyapunov solve.
Mat kron(const Mat& a, const Mat& b);

// Symmetric P > 0 with A^T P + P A = -Q. Solved as the 144-unknown
// vectorized linear system; fails if the result is not positive definite
// (which covers non-Hurwitz A).
Mat solve_lyapunov(const Mat& a, const Mat& q);

// Largest real part over the spectrum of a.
double spectral_abscissa(const Mat& a);

bool is_hurwitz(const Mat& a, double margin = 0.0);

struct CareOptions {
  double rel_residual_tol = 1e-10;
  int max_newton_iters = 60;
};

// Stabilizing solution S of A^T S + S A - S B R^{-1} B^T S + Q = 0.
// Newton-Kleinman iteration started from a Bass stabilizing gain.
Mat solve_care(const Mat& a, const Mat& b, const Mat& q, const Mat& r,
               const CareOptions& opts = {});

double care_residual(const Mat& a, const Mat& b, const Mat& q, const Mat& r,
                     const Mat& s);

using VectorField = std::function<Vec(const Vec& x, const Vec& u)>;

// One classical fourth-order Runge-Kutta step with the input held constant.
Vec rk4_step(const VectorField& f, const Vec& x, const Vec& u, double dt);

// All 2^n corners in lexicographic order (axis 0 varies slowest, low before
// high). Refuses dimensions above 16.
std::vector<Vec> box_vertices(const Box& b);

}  // namespace rejuv
