#include "rejuv/numerics.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

namespace rejuv {

Box::Box(Vec lower, Vec upper) : lo(std::move(lower)), hi(std::move(upper)) {
  if (lo.size() != hi.size()) {
    throw DimensionError("box bounds have mismatched dimensions");
  }
  for (int i = 0; i < lo.size(); ++i) {
    if (!std::isfinite(lo(i)) || !std::isfinite(hi(i)) || lo(i) > hi(i)) {
      std::ostringstream os;
      os << "box axis " << i << " has invalid bounds [" << lo(i) << ", "
         << hi(i) << "]";
      throw Error(os.str());
    }
  }
}

Box Box::symmetric(const Vec& center, const Vec& half_widths) {
  return Box(center - half_widths, center + half_widths);
}

bool Box::contains(const Vec& x, double tol) const {
  if (x.size() != lo.size()) {
    throw DimensionError("box membership dimension mismatch");
  }
  for (int i = 0; i < lo.size(); ++i) {
    if (x(i) < lo(i) - tol || x(i) > hi(i) + tol) return false;
  }
  return true;
}

Mat mat_exp(const Mat& a, double t) {
  if (a.rows() != a.cols()) {
    throw DimensionError("mat_exp requires a square matrix");
  }
  const Eigen::Index n = a.rows();
  Mat m = a * t;
  if (!m.allFinite()) throw Error("mat_exp: non-finite input");

  // Degree-13 Pade coefficients (Higham 2005).
  static const double b[14] = {64764752532480000.0,
                               32382376266240000.0,
                               7771770303897600.0,
                               1187353796428800.0,
                               129060195264000.0,
                               10559470521600.0,
                               670442572800.0,
                               33522128640.0,
                               1323241920.0,
                               40840800.0,
                               960960.0,
                               16380.0,
                               182.0,
                               1.0};
  const double theta13 = 5.371920351148152;

  const double norm1 = m.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm1 > theta13) {
    squarings = static_cast<int>(std::ceil(std::log2(norm1 / theta13)));
    m /= std::pow(2.0, squarings);
  }

  const Mat eye = Mat::Identity(n, n);
  const Mat m2 = m * m;
  const Mat m4 = m2 * m2;
  const Mat m6 = m2 * m4;

  Mat u = m * (m6 * (b[13] * m6 + b[11] * m4 + b[9] * m2) + b[7] * m6 +
               b[5] * m4 + b[3] * m2 + b[1] * eye);
  Mat v = m6 * (b[12] * m6 + b[10] * m4 + b[8] * m2) + b[6] * m6 + b[4] * m4 +
          b[2] * m2 + b[0] * eye;

  Mat r = (v - u).partialPivLu().solve(v + u);
  for (int i = 0; i < squarings; ++i) r = r * r;
  return r;
}

Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

Mat solve_lyapunov(const Mat& a, const Mat& q) {
  if (a.rows() != a.cols() || q.rows() != q.cols() || a.rows() != q.rows()) {
    throw DimensionError("solve_lyapunov dimension mismatch");
  }
  const Eigen::Index n = a.rows();
  const Mat eye = Mat::Identity(n, n);
  // vec(A^T P + P A) = (I (x) A^T + A^T (x) I) vec(P)
  const Mat lhs = kron(eye, a.transpose()) + kron(a.transpose(), eye);
  Eigen::PartialPivLU<Mat> lu(lhs);
  const Vec rhs = -Eigen::Map<const Vec>(q.data(), n * n);
  Vec vec_p = lu.solve(rhs);
  Mat p = Eigen::Map<Mat>(vec_p.data(), n, n);
  p = 0.5 * (p + p.transpose()).eval();

  const double residual = (a.transpose() * p + p * a + q).norm();
  if (!p.allFinite() || residual > 1e-9 * std::max(1.0, q.norm())) {
    throw SolverError("solve_lyapunov: residual too large (A not Hurwitz?)");
  }
  Eigen::LLT<Mat> llt(p);
  if (llt.info() != Eigen::Success) {
    throw SolverError("solve_lyapunov: P not positive definite (A not Hurwitz?)");
  }
  return p;
}

double spectral_abscissa(const Mat& a) {
  Eigen::EigenSolver<Mat> es(a, /*computeEigenvectors=*/false);
  return es.eigenvalues().real().maxCoeff();
}

bool is_hurwitz(const Mat& a, double margin) {
  return spectral_abscissa(a) < -margin;
}

double care_residual(const Mat& a, const Mat& b, const Mat& q, const Mat& r,
                     const Mat& s) {
  const Mat g = b * r.ldlt().solve(b.transpose());
  return (a.transpose() * s + s * a - s * g * s + q).norm();
}

namespace {

// Bass stabilizing gain: with beta above the spectral abscissa, solve
// (A + beta I) Z + Z (A + beta I)^T = 2 B B^T and take K0 = B^T Z^{-1}.
// Requires (A, B) controllable so that Z is invertible.
Mat bass_stabilizing_gain(const Mat& a, const Mat& b) {
  const Eigen::Index n = a.rows();
  const double beta = a.norm() + 0.5;
  const Mat shifted = -(a + beta * Mat::Identity(n, n));
  // shifted is Hurwitz by construction, so the Lyapunov solve is well posed;
  // Z fails the definiteness check exactly when (A,B) is uncontrollable.
  Mat z;
  try {
    z = solve_lyapunov(shifted.transpose(), 2.0 * b * b.transpose());
  } catch (const SolverError&) {
    throw SolverError("solve_care: stabilizing seed failed ((A,B) not controllable)");
  }
  return b.transpose() * z.llt().solve(Mat::Identity(n, n));
}

}  // namespace

Mat solve_care(const Mat& a, const Mat& b, const Mat& q, const Mat& r,
               const CareOptions& opts) {
  if (a.rows() != a.cols() || b.rows() != a.rows() || q.rows() != a.rows() ||
      q.rows() != q.cols() || r.rows() != r.cols() || r.rows() != b.cols()) {
    throw DimensionError("solve_care dimension mismatch");
  }
  const Eigen::Index n = a.rows();
  const Eigen::LDLT<Mat> r_fact(r);
  if (r_fact.info() != Eigen::Success || !r_fact.isPositive()) {
    throw SolverError("solve_care: R must be positive definite");
  }

  Mat k = bass_stabilizing_gain(a, b);
  if (!is_hurwitz(a - b * k)) {
    throw SolverError("solve_care: seed gain does not stabilize (A,B)");
  }

  const double tol = opts.rel_residual_tol * std::max(1.0, q.norm());
  Mat s = Mat::Zero(n, n);
  double residual = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < opts.max_newton_iters; ++iter) {
    const Mat a_cl = a - b * k;
    try {
      s = solve_lyapunov(a_cl, q + k.transpose() * r * k);
    } catch (const SolverError&) {
      throw SolverError("solve_care: Newton step lost stability");
    }
    k = r_fact.solve(b.transpose() * s);
    residual = care_residual(a, b, q, r, s);
    if (residual <= tol) {
      return 0.5 * (s + s.transpose()).eval();
    }
  }
  std::ostringstream os;
  os << "solve_care: no convergence within " << opts.max_newton_iters
     << " iterations, final residual " << residual;
  throw SolverError(os.str());
}

Vec rk4_step(const VectorField& f, const Vec& x, const Vec& u, double dt) {
  if (dt <= 0.0) throw Error("rk4_step: dt must be positive");
  const Vec k1 = f(x, u);
  const Vec k2 = f(x + 0.5 * dt * k1, u);
  const Vec k3 = f(x + 0.5 * dt * k2, u);
  const Vec k4 = f(x + dt * k3, u);
  Vec out = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!out.allFinite()) {
    std::ostringstream os;
    os << "rk4_step: non-finite derivative at state [" << x.transpose() << "]";
    throw SimFault(os.str());
  }
  return out;
}

std::vector<Vec> box_vertices(const Box& b) {
  const int n = b.dim();
  if (n > 16) {
    throw Error("box_vertices: dimension above 16 refused (2^n vertices)");
  }
  const std::size_t count = std::size_t{1} << n;
  std::vector<Vec> out;
  out.reserve(count);
  for (std::size_t mask = 0; mask < count; ++mask) {
    Vec v(n);
    for (int i = 0; i < n; ++i) {
      // Axis 0 varies slowest: its bit is the most significant.
      const bool high = (mask >> (n - 1 - i)) & 1u;
      v(i) = high ? b.hi(i) : b.lo(i);
    }
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace rejuv
