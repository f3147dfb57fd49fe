#include "rejuv/sets.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

namespace rejuv {

bool HalfspacePolytope::contains(const Vec& x, double tol) const {
  if (x.size() != center.size()) {
    throw DimensionError("polytope membership dimension mismatch");
  }
  for (std::size_t j = 0; j < normals.size(); ++j) {
    if (normals[j].dot(x - center) > offsets[j] + tol) return false;
  }
  return true;
}

double HalfspacePolytope::max_scaled_violation(const Vec& x) const {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < normals.size(); ++j) {
    worst = std::max(worst, normals[j].dot(x - center) / offsets[j]);
  }
  return worst;
}

bool Ellipsoid::contains(const Vec& x, double tol) const {
  return lyapunov_value(*this, x) <= level + tol;
}

Ellipsoid Ellipsoid::with_level(double new_level) const {
  if (new_level <= 0.0) throw Error("ellipsoid level must be positive");
  return {center, shape, new_level};
}

HalfspacePolytope normalize_constraints(const Box& bounds, const Vec& center) {
  const int n = bounds.dim();
  if (center.size() != n) {
    throw DimensionError("normalize_constraints dimension mismatch");
  }
  HalfspacePolytope out;
  out.center = center;
  for (int i = 0; i < n; ++i) {
    const double w_hi = bounds.hi(i) - center(i);
    const double w_lo = center(i) - bounds.lo(i);
    if (w_hi <= 0.0 || w_lo <= 0.0) {
      std::ostringstream os;
      os << "constraint axis " << i << " does not strictly contain the center";
      throw Error(os.str());
    }
    Vec plus = Vec::Zero(n);
    plus(i) = 1.0 / w_hi;
    Vec minus = Vec::Zero(n);
    minus(i) = -1.0 / w_lo;
    out.normals.push_back(std::move(plus));
    out.offsets.push_back(1.0);
    out.normals.push_back(std::move(minus));
    out.offsets.push_back(1.0);
  }
  return out;
}

double log_det_inverse(const Mat& p) {
  Eigen::LLT<Mat> llt(p);
  if (llt.info() != Eigen::Success) {
    throw SolverError("log_det_inverse: matrix not positive definite");
  }
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    log_det += std::log(llt.matrixL()(i, i));
  }
  return -2.0 * log_det;
}

namespace {

struct ScaledSolution {
  Mat p;
  double objective;  // log det P^{-1}
};

// Lyapunov solve for the given diagonal weights, then scale so the tightest
// facet constraint xi^T P^{-1} xi <= 1 is active.
ScaledSolution solve_scaled(const Mat& a_sc, const HalfspacePolytope& c,
                            const Vec& w) {
  const Eigen::Index n = a_sc.rows();
  const Mat p0 = solve_lyapunov(a_sc, Mat(w.asDiagonal()));
  const Eigen::LLT<Mat> llt(p0);
  double worst = 0.0;
  for (const Vec& xi : c.normals) {
    worst = std::max(worst, xi.dot(llt.solve(xi)));
  }
  if (!(worst > 0.0)) {
    throw SolverError("invariant_ellipsoid: degenerate constraint set");
  }
  const double c_star = 1.0 / worst;
  ScaledSolution out;
  out.p = p0 / c_star;
  // log det (P0/c*)^{-1} = n log c* + log det P0^{-1}
  out.objective = static_cast<double>(n) * std::log(c_star) + log_det_inverse(p0);
  return out;
}

}  // namespace

Ellipsoid invariant_ellipsoid(const Mat& a_sc, const HalfspacePolytope& c,
                              const InvariantEllipsoidOptions& opts) {
  const Eigen::Index n = a_sc.rows();
  if (c.dim() != n) {
    throw DimensionError("invariant_ellipsoid dimension mismatch");
  }
  for (double b : c.offsets) {
    if (std::abs(b - 1.0) > 1e-12) {
      throw Error("invariant_ellipsoid expects normalized constraints (offsets 1)");
    }
  }
  if (!is_hurwitz(a_sc)) {
    throw SolverError("invariant_ellipsoid: closed-loop matrix is not Hurwitz");
  }

  Vec w = opts.q_weights.size() == 0 ? Vec::Ones(n) : opts.q_weights;
  if (w.size() != n || w.minCoeff() <= 0.0) {
    throw Error("invariant_ellipsoid: weights must be positive");
  }

  ScaledSolution best = solve_scaled(a_sc, c, w);

  // Derivative-free coordinate ascent on the diagonal weights. Every
  // candidate is itself a feasible invariant ellipsoid, so the loop can stop
  // anywhere; it only improves volume.
  double step = 2.0;
  for (int round = 0; round < opts.volume_ascent_iters; ++round) {
    bool improved = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (double factor : {step, 1.0 / step}) {
        Vec trial = w;
        trial(i) *= factor;
        ScaledSolution sol = solve_scaled(a_sc, c, trial);
        if (sol.objective > best.objective + 1e-12) {
          best = sol;
          w = trial;
          improved = true;
        }
      }
    }
    if (!improved) {
      step = std::sqrt(step);
      if (step < 1.0 + 1e-3) break;
    }
  }

  Ellipsoid e;
  e.center = c.center;
  e.shape = 0.5 * (best.p + best.p.transpose());
  e.level = 1.0;
  return e;
}

HalfspacePolytope shrink_polytope(const HalfspacePolytope& c, double eps) {
  if (!(eps > 0.0 && eps <= 1.0)) {
    throw Error("shrink_polytope: eps must lie in (0, 1]");
  }
  HalfspacePolytope out = c;
  const double b = std::sqrt(eps);
  for (double& offset : out.offsets) offset = b;
  return out;
}

double lyapunov_value(const Ellipsoid& e, const Vec& x) {
  if (x.size() != e.center.size()) {
    throw DimensionError("lyapunov_value dimension mismatch");
  }
  const Vec d = x - e.center;
  return d.dot(e.shape * d);
}

std::vector<Eigen::Vector2d> project_ellipsoid(const Mat& p, double level,
                                               int i, int j, int n_points) {
  // The shadow of {z^T P z <= level} on plane (i, j) is the ellipse with
  // shape equal to the inverse of the corresponding 2x2 block of P^{-1}.
  const Mat p_inv = p.llt().solve(Mat::Identity(p.rows(), p.cols()));
  Eigen::Matrix2d block;
  block << p_inv(i, i), p_inv(i, j), p_inv(j, i), p_inv(j, j);
  const Eigen::Matrix2d shape = block.inverse();

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(shape);
  const Eigen::Vector2d evals = es.eigenvalues();
  const Eigen::Matrix2d evecs = es.eigenvectors();

  std::vector<Eigen::Vector2d> pts;
  pts.reserve(n_points);
  for (int k = 0; k < n_points; ++k) {
    const double ang = 2.0 * M_PI * k / n_points;
    Eigen::Vector2d unit(std::cos(ang), std::sin(ang));
    Eigen::Vector2d scaled(unit(0) * std::sqrt(level / evals(0)),
                           unit(1) * std::sqrt(level / evals(1)));
    pts.push_back(evecs * scaled);
  }
  return pts;
}

}  // namespace rejuv
