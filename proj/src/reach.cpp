#include "rejuv/reach.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace rejuv {

InputSet::InputSet(Box b) : box(std::move(b)), vertices(box_vertices(box)) {
  if (!box.contains(Vec::Zero(box.dim()))) {
    throw Error("input set must contain the zero deviation");
  }
}

Vec support_direction(const Mat& a, const Vec& xi, double t) {
  if (t < 0.0) throw Error("support_direction: t must be nonnegative");
  if (t == 0.0) return xi;
  return mat_exp(-a.transpose(), t) * xi;
}

namespace {

// One composite-trapezoid pass with n panels; the direction is stepped with
// the fixed-interval propagator e^{-A^T h}.
double trapezoid_pass(const Mat& a, const Mat& bu, const Vec& xi, double t,
                      int n) {
  const double h = t / n;
  const Mat prop = mat_exp(-a.transpose(), h);
  const auto integrand = [&](const Vec& dir) {
    return (bu.transpose() * dir).maxCoeff();
  };
  Vec dir = xi;
  double sum = 0.5 * integrand(dir);
  for (int k = 1; k < n; ++k) {
    dir = prop * dir;
    sum += integrand(dir);
  }
  dir = prop * dir;
  sum += 0.5 * integrand(dir);
  return h * sum;
}

// Paired-normal (affine box image) structure of a box-derived polytope.
struct PairedFacets {
  Mat xi_plus;      // rows: one normal per direction pair
  Vec alpha;        // normals[2i+1] = -alpha(i) * normals[2i]
  Vec off_plus;
  Vec off_minus;
};

PairedFacets extract_pairs(const HalfspacePolytope& c) {
  const int m = c.num_facets();
  const int n = c.dim();
  if (m != 2 * n) {
    throw Error("reach: polytope must have one antipodal facet pair per dimension");
  }
  PairedFacets pf;
  pf.xi_plus.resize(n, n);
  pf.alpha.resize(n);
  pf.off_plus.resize(n);
  pf.off_minus.resize(n);
  for (int i = 0; i < n; ++i) {
    const Vec& plus = c.normals[2 * i];
    const Vec& minus = c.normals[2 * i + 1];
    const double alpha = -minus.dot(plus) / plus.squaredNorm();
    if (!(alpha > 0.0) ||
        (minus + alpha * plus).norm() > 1e-9 * minus.norm()) {
      throw Error("reach: facet normals are not antipodally paired");
    }
    pf.xi_plus.row(i) = plus.transpose();
    pf.alpha(i) = alpha;
    pf.off_plus(i) = c.offsets[2 * i];
    pf.off_minus(i) = c.offsets[2 * i + 1];
  }
  return pf;
}

}  // namespace

double polytope_support(const HalfspacePolytope& c, const Vec& xi) {
  const PairedFacets pf = extract_pairs(c);
  // z satisfies Xi z = y with y_i in [-off_minus_i / alpha_i, off_plus_i];
  // the support in direction xi is separable in the y coordinates.
  const Vec d = pf.xi_plus.transpose().partialPivLu().solve(xi);
  double support = 0.0;
  for (int i = 0; i < d.size(); ++i) {
    const double lo = -pf.off_minus(i) / pf.alpha(i);
    const double hi = pf.off_plus(i);
    support += std::max(d(i) * lo, d(i) * hi);
  }
  return support;
}

double support_integral(const Mat& a, const Mat& b, const InputSet& u,
                        const Vec& xi, double t,
                        const QuadratureOptions& quad) {
  if (t < 0.0) throw Error("support_integral: t must be nonnegative");
  if (quad.dt <= 0.0) throw Error("support_integral: dt must be positive");
  if (t == 0.0) return 0.0;

  Mat bu(b.rows(), u.vertices.size());
  for (std::size_t i = 0; i < u.vertices.size(); ++i) {
    bu.col(i) = b * u.vertices[i];
  }

  int n = std::max(4, static_cast<int>(std::ceil(t / quad.dt)));
  double prev = trapezoid_pass(a, bu, xi, t, n);
  while (n <= quad.max_panels) {
    n *= 2;
    const double cur = trapezoid_pass(a, bu, xi, t, n);
    if (std::abs(cur - prev) <=
        quad.rel_tol * std::max(std::abs(cur), 1e-12)) {
      return cur;
    }
    prev = cur;
  }
  return prev;
}

bool ReachOverApprox::contains(const Vec& x, double tol) const {
  for (std::size_t j = 0; j < normals.size(); ++j) {
    if (normals[j].dot(x - center) > offsets[j] + tol) return false;
  }
  return true;
}

ReachOverApprox reach_overapprox(const Mat& a, const Mat& b, const InputSet& u,
                                 const HalfspacePolytope& c_sc, double t,
                                 const QuadratureOptions& quad) {
  if (t < 0.0) throw Error("reach_overapprox: t must be nonnegative");
  const PairedFacets pf = extract_pairs(c_sc);
  const int n = c_sc.dim();

  ReachOverApprox out;
  out.t = t;
  out.center = c_sc.center;

  const Mat prop = t == 0.0 ? Mat::Identity(n, n) : mat_exp(-a.transpose(), t);
  out.normals.reserve(c_sc.normals.size());
  out.offsets.reserve(c_sc.normals.size());
  for (int j = 0; j < c_sc.num_facets(); ++j) {
    const Vec& xi = c_sc.normals[j];
    out.normals.push_back(prop * xi);
    out.offsets.push_back(support_integral(a, b, u, xi, t, quad) +
                          polytope_support(c_sc, xi));
  }

  // Propagated plus-normals define an invertible map; the over-approximation
  // is the image of the offset box under its inverse.
  Mat dirs(n, n);
  Vec y_lo(n), y_hi(n);
  for (int i = 0; i < n; ++i) {
    dirs.row(i) = out.normals[2 * i].transpose();
    y_hi(i) = out.offsets[2 * i];
    y_lo(i) = -out.offsets[2 * i + 1] / pf.alpha(i);
    if (!(y_lo(i) < y_hi(i))) {
      throw Error("reach_overapprox: degenerate facet interval");
    }
  }
  Eigen::PartialPivLU<Mat> lu(dirs);

  const std::vector<Vec> corners = box_vertices(Box(y_lo, y_hi));
  out.vertices.reserve(corners.size());
  for (const Vec& y : corners) {
    out.vertices.push_back(out.center + lu.solve(y));
  }
  return out;
}

namespace {

// Worst Lyapunov value over the polytope's own vertices (the t = 0 anchor).
double initial_worst_value(const HalfspacePolytope& c_sc, const Mat& p_norm) {
  const PairedFacets pf = extract_pairs(c_sc);
  Vec y_lo(pf.alpha.size()), y_hi(pf.alpha.size());
  for (int i = 0; i < pf.alpha.size(); ++i) {
    y_hi(i) = pf.off_plus(i);
    y_lo(i) = -pf.off_minus(i) / pf.alpha(i);
  }
  Eigen::PartialPivLU<Mat> lu(pf.xi_plus);
  double worst = 0.0;
  for (const Vec& y : box_vertices(Box(y_lo, y_hi))) {
    const Vec z = lu.solve(y);
    worst = std::max(worst, z.dot(p_norm * z));
  }
  return worst;
}

struct SettleResult {
  bool measured = false;
  bool ok = false;
  double time = 0.0;
};

// Closed-loop settle of every C_SC vertex into {z^T P z <= eps_sc}; sublevel
// sets are invariant for the certified loop, so first entry is enough.
SettleResult measure_settle(const Mat& a_sc, const HalfspacePolytope& c_sc,
                            const Mat& p_norm, const VerifyOptions& opts) {
  SettleResult res;
  if (a_sc.size() == 0) return res;
  res.measured = true;

  const PairedFacets pf = extract_pairs(c_sc);
  const int n = c_sc.dim();
  Vec y_lo(n), y_hi(n);
  for (int i = 0; i < n; ++i) {
    y_hi(i) = pf.off_plus(i);
    y_lo(i) = -pf.off_minus(i) / pf.alpha(i);
  }
  const std::vector<Vec> corners = box_vertices(Box(y_lo, y_hi));
  Eigen::PartialPivLU<Mat> lu(pf.xi_plus);
  Mat z(n, corners.size());
  for (std::size_t k = 0; k < corners.size(); ++k) {
    z.col(k) = lu.solve(corners[k]);
  }

  const Mat prop = mat_exp(a_sc, opts.settle_dt);
  std::vector<char> entered(corners.size(), 0);
  std::size_t remaining = corners.size();
  double worst_entry = 0.0;
  const int max_steps =
      static_cast<int>(std::ceil(opts.settle_horizon / opts.settle_dt));
  for (int step = 0; step <= max_steps && remaining > 0; ++step) {
    const double t_now = step * opts.settle_dt;
    for (std::size_t k = 0; k < corners.size(); ++k) {
      if (entered[k]) continue;
      const double v = z.col(k).dot(p_norm * z.col(k));
      if (v <= opts.eps_sc) {
        entered[k] = 1;
        --remaining;
        worst_entry = std::max(worst_entry, t_now);
      }
    }
    if (remaining > 0) z = (prop * z).eval();
  }
  res.ok = remaining == 0;
  res.time = worst_entry;
  return res;
}

}  // namespace

TucReport verify_tuc(const Mat& a, const Mat& b, const InputSet& u,
                     const HalfspacePolytope& c_sc, const Ellipsoid& e_c,
                     double t_uc, const VerifyOptions& opts) {
  if (opts.n_grid < 1) throw Error("verify_tuc: n_grid must be at least 1");
  if (!(t_uc > 0.0)) throw Error("verify_tuc: T_UC must be positive");

  // Work with the unit-level normalization of E_C.
  const Mat p_norm = e_c.shape / e_c.level;

  TucReport report;
  report.t_uc = t_uc;
  report.tolerance = opts.containment_tol;
  report.grid.reserve(opts.n_grid);

  double worst_v = 0.0;
  double worst_t = 0.0;
  double prev_v = initial_worst_value(c_sc, p_norm);
  double prev_t = 0.0;
  double worst_slope = 0.0;
  for (int k = 1; k <= opts.n_grid; ++k) {
    const double t_k = t_uc * k / opts.n_grid;
    const ReachOverApprox reach =
        reach_overapprox(a, b, u, c_sc, t_k, opts.quad);
    double max_v = 0.0;
    for (const Vec& x : reach.vertices) {
      const Vec z = x - reach.center;
      max_v = std::max(max_v, z.dot(p_norm * z));
    }
    report.grid.push_back({t_k, max_v});
    if (max_v > worst_v) {
      worst_v = max_v;
      worst_t = t_k;
    }
    worst_slope =
        std::max(worst_slope, std::abs(max_v - prev_v) / (t_k - prev_t));
    prev_v = max_v;
    prev_t = t_k;
  }

  report.margin = 1.0 - worst_v;
  report.worst_time = worst_t;
  report.worst_margin_slope = worst_slope;
  report.pass = report.margin >= -opts.containment_tol;

  const SettleResult settle = measure_settle(opts.a_sc, c_sc, p_norm, opts);
  report.settle_measured = settle.measured;
  report.settle_ok = settle.ok;
  report.settle_time = settle.time;
  return report;
}

double find_max_tuc(const Mat& a, const Mat& b, const InputSet& u,
                    const HalfspacePolytope& c_sc, const Ellipsoid& e_c,
                    double t_lo, double t_hi, double tol,
                    const VerifyOptions& opts) {
  if (!(t_lo > 0.0) || !(t_lo < t_hi) || !(tol > 0.0)) {
    throw Error("find_max_tuc: need 0 < t_lo < t_hi and tol > 0");
  }
  if (!verify_tuc(a, b, u, c_sc, e_c, t_lo, opts).pass) {
    throw Error("find_max_tuc: certification already fails at t_lo");
  }
  if (verify_tuc(a, b, u, c_sc, e_c, t_hi, opts).pass) {
    throw Error("find_max_tuc: certification still passes at t_hi (invalid bracket)");
  }
  while (t_hi - t_lo > tol) {
    const double mid = 0.5 * (t_lo + t_hi);
    if (verify_tuc(a, b, u, c_sc, e_c, mid, opts).pass) {
      t_lo = mid;
    } else {
      t_hi = mid;
    }
  }
  return t_lo;
}

}  // namespace rejuv
