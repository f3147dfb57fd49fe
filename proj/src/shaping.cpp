#include <Eigen/Eigenvalues>

#include <cmath>
#include <numeric>
#include <vector>

#include "rejuv/reach.hpp"

namespace rejuv {

namespace {

// Connected components of the coupling graph of a (symmetrized sparsity).
std::vector<std::vector<int>> coupling_blocks(const Mat& a) {
  const int n = static_cast<int>(a.rows());
  const double tol = 1e-8 * a.cwiseAbs().maxCoeff();
  std::vector<int> comp(n, -1);
  int n_comp = 0;
  for (int s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    std::vector<int> stack{s};
    comp[s] = n_comp;
    while (!stack.empty()) {
      const int i = stack.back();
      stack.pop_back();
      for (int j = 0; j < n; ++j) {
        if (comp[j] < 0 &&
            (std::abs(a(i, j)) > tol || std::abs(a(j, i)) > tol)) {
          comp[j] = n_comp;
          stack.push_back(j);
        }
      }
    }
    ++n_comp;
  }
  std::vector<std::vector<int>> blocks(n_comp);
  for (int i = 0; i < n; ++i) blocks[comp[i]].push_back(i);
  return blocks;
}

// Per-axis widths of a normalized box polytope (adjacent +/- normal pairs).
void box_widths(const HalfspacePolytope& c, Vec& w_hi, Vec& w_lo) {
  const int n = c.dim();
  if (c.num_facets() != 2 * n) {
    throw Error("margin shaping expects a box-derived constraint polytope");
  }
  w_hi.resize(n);
  w_lo.resize(n);
  for (int i = 0; i < n; ++i) {
    const Vec& plus = c.normals[2 * i];
    const Vec& minus = c.normals[2 * i + 1];
    if (plus(i) <= 0.0 || minus(i) >= 0.0) {
      throw Error("margin shaping expects axis-aligned constraints");
    }
    w_hi(i) = c.offsets[2 * i] / plus(i);
    w_lo(i) = -c.offsets[2 * i + 1] / minus(i);
  }
}

// One decoupled subproblem: minimize the worst vertex value of the invariant
// in-box ellipsoid. Convex in the inverse shape Qbar = P^{-1}:
//   min s   s.t.  -(Asc Qbar + Qbar Asc^T) >= 0,
//                 Qbar_ii <= min(w_hi, w_lo)_i^2,
//                 [[Qbar, z_k], [z_k^T, s]] >= 0  for every vertex.
// Solved with a log-barrier Newton path (analytic gradient and Hessian).
class ChainSolver {
 public:
  ChainSolver(Mat a_sc, Vec w_sym, std::vector<Vec> verts)
      : a_sc_(std::move(a_sc)), w_(std::move(w_sym)), verts_(std::move(verts)),
        n_(static_cast<int>(a_sc_.rows())) {
    // Symmetric coordinate basis for Qbar, then the margin variable s.
    for (int i = 0; i < n_; ++i) {
      for (int j = 0; j <= i; ++j) {
        Mat s = Mat::Zero(n_, n_);
        s(i, j) = s(j, i) = 1.0;
        basis_.push_back(std::move(s));
      }
    }
    m_ = static_cast<int>(basis_.size()) + 1;
  }

  // theta: packed Qbar entries then s.
  Vec pack(const Mat& qbar, double s) const {
    Vec th(m_);
    int k = 0;
    for (int i = 0; i < n_; ++i) {
      for (int j = 0; j <= i; ++j) th(k++) = qbar(i, j);
    }
    th(m_ - 1) = s;
    return th;
  }

  Mat unpack(const Vec& th) const {
    Mat qbar(n_, n_);
    int k = 0;
    for (int i = 0; i < n_; ++i) {
      for (int j = 0; j <= i; ++j) qbar(i, j) = qbar(j, i) = th(k++);
    }
    return qbar;
  }

  // Strictly feasible iff all barrier blocks are positive definite.
  bool feasible(const Vec& th) const {
    const Mat qbar = unpack(th);
    const double s = th(m_ - 1);
    Eigen::LLT<Mat> inv_llt(-(a_sc_ * qbar + qbar * a_sc_.transpose()));
    if (inv_llt.info() != Eigen::Success) return false;
    for (int i = 0; i < n_; ++i) {
      if (qbar(i, i) >= w_(i) * w_(i)) return false;
    }
    Eigen::LLT<Mat> q_llt(qbar);
    if (q_llt.info() != Eigen::Success) return false;
    for (const Vec& z : verts_) {
      if (z.dot(q_llt.solve(z)) >= s) return false;
    }
    return true;
  }

  double barrier(const Vec& th, double t, bool* ok) const {
    *ok = false;
    const Mat qbar = unpack(th);
    const double s = th(m_ - 1);
    double f = t * s;

    const Mat inv_block = -(a_sc_ * qbar + qbar * a_sc_.transpose());
    Eigen::LLT<Mat> illt(inv_block);
    if (illt.info() != Eigen::Success) return 0.0;
    f -= 2.0 * Mat(illt.matrixL()).diagonal().array().log().sum();

    for (int i = 0; i < n_; ++i) {
      const double slack = w_(i) * w_(i) - qbar(i, i);
      if (slack <= 0.0) return 0.0;
      f -= std::log(slack);
    }

    Eigen::LLT<Mat> qllt(qbar);
    if (qllt.info() != Eigen::Success) return 0.0;
    const double logdet_q = 2.0 * Mat(qllt.matrixL()).diagonal().array().log().sum();
    for (const Vec& z : verts_) {
      const double slack = s - z.dot(qllt.solve(z));
      if (slack <= 0.0) return 0.0;
      // log det [[Q, z],[z^T, s]] = log det Q + log(s - z^T Q^{-1} z)
      f -= logdet_q + std::log(slack);
    }
    *ok = true;
    return f;
  }

  // Analytic gradient and Hessian of the barrier at a strictly feasible th.
  void derivatives(const Vec& th, double t, Vec& grad, Mat& hess) const {
    const Mat qbar = unpack(th);
    const double s = th(m_ - 1);
    grad = Vec::Zero(m_);
    hess = Mat::Zero(m_, m_);
    grad(m_ - 1) += t;

    // Invariance block: M = -(Asc Q + Q Asc^T); dM/da = -(Asc S_a + S_a Asc^T)
    {
      const Mat minv =
          (-(a_sc_ * qbar + qbar * a_sc_.transpose())).llt().solve(
              Mat::Identity(n_, n_));
      std::vector<Mat> wmats(basis_.size());
      for (std::size_t a = 0; a < basis_.size(); ++a) {
        const Mat db = -(a_sc_ * basis_[a] + basis_[a] * a_sc_.transpose());
        wmats[a] = minv * db;
        grad(a) -= wmats[a].trace();
      }
      for (std::size_t a = 0; a < basis_.size(); ++a) {
        for (std::size_t b = 0; b <= a; ++b) {
          const double v = (wmats[a] * wmats[b]).trace();
          hess(a, b) += v;
          hess(b, a) = hess(a, b);
        }
      }
    }

    // Axis slacks: -log(w_i^2 - Q_ii); d(Q_ii)/da = basis_[a](i,i)
    for (int i = 0; i < n_; ++i) {
      const double slack = w_(i) * w_(i) - qbar(i, i);
      int a_ii = -1;
      int k = 0;
      for (int r = 0; r < n_; ++r) {
        for (int cc = 0; cc <= r; ++cc) {
          if (r == i && cc == i) a_ii = k;
          ++k;
        }
      }
      grad(a_ii) += 1.0 / slack;
      hess(a_ii, a_ii) += 1.0 / (slack * slack);
    }

    // Vertex blocks: -log det Q - log(s - z^T Q^{-1} z)
    {
      const Eigen::LLT<Mat> qllt(qbar);
      const Mat qinv = qllt.solve(Mat::Identity(n_, n_));
      std::vector<Mat> qs(basis_.size());
      std::vector<double> tr_qs(basis_.size());
      for (std::size_t a = 0; a < basis_.size(); ++a) {
        qs[a] = qinv * basis_[a];
        tr_qs[a] = qs[a].trace();
      }
      const double n_verts = static_cast<double>(verts_.size());
      for (std::size_t a = 0; a < basis_.size(); ++a) {
        grad(a) -= n_verts * tr_qs[a];
      }
      for (std::size_t a = 0; a < basis_.size(); ++a) {
        for (std::size_t b = 0; b <= a; ++b) {
          const double v = n_verts * (qs[a] * qs[b]).trace();
          hess(a, b) += v;
          hess(b, a) = hess(a, b);
        }
      }
      for (const Vec& z : verts_) {
        const Vec y = qllt.solve(z);  // Q^{-1} z
        const double slack = s - z.dot(y);
        // d slack / da = y^T S_a y   (for a < m-1), = 1 for s
        Vec dslack(m_);
        for (std::size_t a = 0; a < basis_.size(); ++a) {
          dslack(a) = y.dot(basis_[a] * y);
        }
        dslack(m_ - 1) = 1.0;
        grad -= dslack / slack;
        hess += (dslack * dslack.transpose()) / (slack * slack);
        // second-order term of z^T Q^{-1} z: +2 y^T S_a Q^{-1} S_b y / slack
        for (std::size_t a = 0; a < basis_.size(); ++a) {
          const Vec sa_y = qllt.solve(basis_[a] * y);
          for (std::size_t b = 0; b <= a; ++b) {
            const double v = 2.0 * (basis_[b] * y).dot(sa_y) / slack;
            hess(a, b) += v;
            if (a != b) hess(b, a) += v;
          }
        }
      }
    }
  }

  // Damped Newton on the barrier objective for fixed t.
  void center(Vec& th, double t) const {
    for (int iter = 0; iter < 80; ++iter) {
      Vec grad;
      Mat hess;
      derivatives(th, t, grad, hess);
      hess += 1e-12 * hess.norm() * Mat::Identity(m_, m_);
      const Vec step = -hess.ldlt().solve(grad);
      const double decrement = -0.5 * grad.dot(step);
      bool ok = false;
      const double f0 = barrier(th, t, &ok);
      if (!ok) throw SolverError("chain solver left the feasible region");
      double alpha = 1.0;
      Vec cand;
      for (int ls = 0; ls < 60; ++ls) {
        cand = th + alpha * step;
        bool cok = false;
        const double fc = barrier(cand, t, &cok);
        if (cok && fc <= f0 - 1e-4 * alpha * 0.5 * std::abs(decrement)) break;
        alpha *= 0.5;
        cand = th;
      }
      th = cand;
      if (std::abs(decrement) < 1e-9) break;
    }
  }

  // Path-following from a strictly feasible start; returns optimal-ish Qbar.
  Mat solve(const Mat& qbar0, double s0) {
    Vec th = pack(qbar0, s0);
    if (!feasible(th)) {
      throw SolverError("chain solver: infeasible start");
    }
    const double n_constraints =
        static_cast<double>(n_ + n_ + verts_.size() * (n_ + 1));
    double t = 1.0;
    const double t_final = n_constraints / 1e-8;
    while (t < t_final) {
      center(th, t);
      t *= 8.0;
    }
    center(th, t_final);
    return unpack(th);
  }

 private:
  Mat a_sc_;
  Vec w_;
  std::vector<Vec> verts_;
  int n_ = 0;
  int m_ = 0;
  std::vector<Mat> basis_;
};

// Plain facet-scaled Lyapunov solution, nudged strictly inside the facets;
// used as the interior starting point.
Mat feasible_seed(const Mat& a_sc, const Vec& w_sym) {
  const int n = static_cast<int>(a_sc.rows());
  const Mat p0 = solve_lyapunov(a_sc, Mat::Identity(n, n));
  const Mat p0_inv = p0.llt().solve(Mat::Identity(n, n));
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    worst = std::max(worst, p0_inv(i, i) / (w_sym(i) * w_sym(i)));
  }
  // Qbar = c* P0^{-1} shrunk a little so every facet slack is strict.
  return (1.0 / worst) * p0_inv / (1.0 + 1e-3);
}

}  // namespace

Ellipsoid margin_shaped_ellipsoid(const Mat& a_sc, const HalfspacePolytope& c,
                                  const Mat& a, const Mat& b, const InputSet& u,
                                  double eps_sc, double t_uc,
                                  const ShapingOptions& opts) {
  const int n = static_cast<int>(a_sc.rows());
  if (c.dim() != n || a.rows() != n || b.rows() != n) {
    throw DimensionError("margin_shaped_ellipsoid dimension mismatch");
  }
  if (!(eps_sc > 0.0 && eps_sc < 1.0) || !(t_uc > 0.0)) {
    throw Error("margin_shaped_ellipsoid: need 0 < eps_sc < 1 and t_uc > 0");
  }
  if (!is_hurwitz(a_sc)) {
    throw SolverError("margin_shaped_ellipsoid: closed loop not Hurwitz");
  }

  Vec w_hi, w_lo;
  box_widths(c, w_hi, w_lo);

  Mat p = Mat::Zero(n, n);
  for (const std::vector<int>& idx : coupling_blocks(a_sc)) {
    const int nc = static_cast<int>(idx.size());
    Mat a_sc_blk(nc, nc), a_open(nc, nc), b_blk(nc, b.cols());
    Vec wh(nc), wl(nc), ws(nc);
    for (int r = 0; r < nc; ++r) {
      for (int cix = 0; cix < nc; ++cix) {
        a_sc_blk(r, cix) = a_sc(idx[r], idx[cix]);
        a_open(r, cix) = a(idx[r], idx[cix]);
      }
      b_blk.row(r) = b.row(idx[r]);
      wh(r) = w_hi(idx[r]);
      wl(r) = w_lo(idx[r]);
      ws(r) = std::min(wh(r), wl(r));
    }

    const HalfspacePolytope c_blk = shrink_polytope(
        normalize_constraints(Box(-wl, wh), Vec::Zero(nc)), eps_sc);
    std::vector<Vec> verts;
    for (int k = 0; k <= opts.n_times; ++k) {
      // k = 0 anchors containment of the initial polytope itself.
      const double t = k == 0 ? t_uc * 1e-4 : t_uc * k / opts.n_times;
      const ReachOverApprox reach =
          reach_overapprox(a_open, b_blk, u, c_blk, t, opts.quad);
      verts.insert(verts.end(), reach.vertices.begin(), reach.vertices.end());
    }

    const Mat qbar0 = feasible_seed(a_sc_blk, ws);
    double s0 = 0.0;
    {
      const Eigen::LLT<Mat> llt(qbar0);
      for (const Vec& z : verts) {
        s0 = std::max(s0, z.dot(llt.solve(z)));
      }
      s0 *= 1.001;
    }
    ChainSolver solver(a_sc_blk, ws, verts);
    const Mat qbar = solver.solve(qbar0, s0);
    const Mat p_blk = qbar.llt().solve(Mat::Identity(nc, nc));
    for (int r = 0; r < nc; ++r) {
      for (int cix = 0; cix < nc; ++cix) {
        p(idx[r], idx[cix]) = 0.5 * (p_blk(r, cix) + p_blk(cix, r));
      }
    }
  }

  Ellipsoid e;
  e.center = c.center;
  e.shape = 0.5 * (p + p.transpose());
  e.level = 1.0;

  // The block construction must still satisfy the global post-conditions.
  Eigen::SelfAdjointEigenSolver<Mat> inv_check(
      a_sc.transpose() * e.shape + e.shape * a_sc);
  if (inv_check.eigenvalues().maxCoeff() > 1e-9 * e.shape.norm()) {
    throw SolverError("margin_shaped_ellipsoid: invariance check failed");
  }
  const Mat p_inv = e.shape.llt().solve(Mat::Identity(n, n));
  for (std::size_t j = 0; j < c.normals.size(); ++j) {
    if (c.normals[j].dot(p_inv * c.normals[j]) > 1.0 + 1e-9) {
      throw SolverError("margin_shaped_ellipsoid: containment check failed");
    }
  }
  return e;
}

}  // namespace rejuv
