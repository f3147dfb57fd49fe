#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "rejuv/numerics.hpp"
#include "rejuv/sets.hpp"
#include "support.hpp"

using namespace rejuv;
namespace rt = rejuv::testing;

TEST_CASE("normalize_constraints produces unit-offset axis pairs") {
  Vec w(3);
  w << 1.0, M_PI / 4.0, 2.5;
  const auto c = normalize_constraints(Box::symmetric(Vec::Zero(3), w),
                                       Vec::Zero(3));
  REQUIRE(c.num_facets() == 6);
  // z bound +-2.5 -> normals +-e_z / 2.5, offset 1
  CHECK(c.normals[4](2) == doctest::Approx(1.0 / 2.5));
  CHECK(c.normals[5](2) == doctest::Approx(-1.0 / 2.5));
  CHECK(c.offsets[4] == 1.0);
  // roll bound +-pi/4 -> normals +-e * 4/pi
  CHECK(c.normals[2](1) == doctest::Approx(4.0 / M_PI));
  // center strictly feasible
  CHECK(c.contains(Vec::Zero(3)));
  CHECK(c.max_scaled_violation(Vec::Zero(3)) == 0.0);
}

TEST_CASE("normalize_constraints rejects a center outside the range") {
  Vec lo(1), hi(1), center(1);
  lo << 0.0;
  hi << 1.0;
  center << 0.0;  // touches the lower bound
  CHECK_THROWS_AS(normalize_constraints(Box(lo, hi), center), Error);
}

TEST_CASE("invariant_ellipsoid of a symmetric contraction is the unit ball") {
  const auto c = normalize_constraints(
      Box::symmetric(Vec::Zero(3), Vec::Ones(3)), Vec::Zero(3));
  const Ellipsoid e = invariant_ellipsoid(-Mat::Identity(3, 3), c);
  CHECK((e.shape - Mat::Identity(3, 3)).norm() < 1e-12);
}

TEST_CASE("invariant_ellipsoid satisfies both post-conditions") {
  Mat a(2, 2);
  a << -1.0, 10.0, -10.0, -1.0;
  const auto c = normalize_constraints(
      Box::symmetric(Vec::Zero(2), Vec::Ones(2)), Vec::Zero(2));
  const Ellipsoid e = invariant_ellipsoid(a, c);
  Eigen::SelfAdjointEigenSolver<Mat> inv(a.transpose() * e.shape +
                                         e.shape * a);
  CHECK(inv.eigenvalues().maxCoeff() <= 1e-9);
  const Mat p_inv = e.shape.inverse();
  for (const Vec& xi : c.normals) {
    CHECK(xi.dot(p_inv * xi) <= 1.0 + 1e-9);
  }
}

TEST_CASE("quadrotor invariant ellipsoid stays inside the constraint box") {
  const RunConfig cfg;
  const Design& d = rt::certified_design();
  const auto c = normalize_constraints(
      Box::symmetric(Vec::Zero(12), cfg.constraint_half_widths), Vec::Zero(12));
  std::mt19937_64 rng(99);
  for (int i = 0; i < 10000; ++i) {
    const Vec z = rt::ellipsoid_boundary_point(d.p, 1.0, rng);
    CHECK(c.contains(z, 1e-9));
  }
}

TEST_CASE("volume ascent only improves the objective and stays feasible") {
  const Design& d = rt::certified_design();
  const Mat a_sc = d.a - d.b * d.safety.k;
  const RunConfig cfg;
  const auto c = normalize_constraints(
      Box::symmetric(Vec::Zero(12), cfg.constraint_half_widths), Vec::Zero(12));
  const Ellipsoid plain = invariant_ellipsoid(a_sc, c);
  InvariantEllipsoidOptions opts;
  opts.volume_ascent_iters = 40;
  const Ellipsoid ascended = invariant_ellipsoid(a_sc, c, opts);
  CHECK(log_det_inverse(ascended.shape) >=
        log_det_inverse(plain.shape) - 1e-9);
  Eigen::SelfAdjointEigenSolver<Mat> inv(a_sc.transpose() * ascended.shape +
                                         ascended.shape * a_sc);
  CHECK(inv.eigenvalues().maxCoeff() <= 1e-9 * ascended.shape.norm());
  const Mat p_inv = ascended.shape.llt().solve(Mat::Identity(12, 12));
  for (const Vec& xi : c.normals) {
    CHECK(xi.dot(p_inv * xi) <= 1.0 + 1e-9);
  }
}

TEST_CASE("invariant_ellipsoid is insensitive to facet order") {
  Mat a(3, 3);
  a << -1.0, 4.0, 0.0, -4.0, -2.0, 1.0, 0.0, -1.0, -3.0;
  Vec w(3);
  w << 1.0, 2.0, 0.5;
  auto c = normalize_constraints(Box::symmetric(Vec::Zero(3), w), Vec::Zero(3));
  const Ellipsoid e1 = invariant_ellipsoid(a, c);

  std::mt19937_64 rng(17);
  std::vector<int> order(c.num_facets());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  HalfspacePolytope shuffled;
  shuffled.center = c.center;
  for (int j : order) {
    shuffled.normals.push_back(c.normals[j]);
    shuffled.offsets.push_back(c.offsets[j]);
  }
  const Ellipsoid e2 = invariant_ellipsoid(a, shuffled);
  CHECK((e1.shape - e2.shape).norm() < 1e-9 * e1.shape.norm());
}

TEST_CASE("invariant_ellipsoid rejects a non-Hurwitz loop") {
  const auto c = normalize_constraints(
      Box::symmetric(Vec::Zero(2), Vec::Ones(2)), Vec::Zero(2));
  Mat a(2, 2);
  a << 0.0, 1.0, 0.0, 0.0;
  CHECK_THROWS_AS(invariant_ellipsoid(a, c), SolverError);
}

TEST_CASE("shrink_polytope scales offsets to sqrt(eps)") {
  const auto c = normalize_constraints(
      Box::symmetric(Vec::Zero(4), Vec::Ones(4)), Vec::Zero(4));
  SUBCASE("eps = 1 is the identity") {
    const auto s = shrink_polytope(c, 1.0);
    for (double b : s.offsets) CHECK(b == 1.0);
  }
  SUBCASE("eps = 0.25 halves the offsets") {
    const auto s = shrink_polytope(c, 0.25);
    for (double b : s.offsets) CHECK(b == doctest::Approx(0.5));
  }
  SUBCASE("eps = 0.05") {
    const auto s = shrink_polytope(c, 0.05);
    for (double b : s.offsets) {
      CHECK(b == doctest::Approx(0.22360679774997896).epsilon(1e-14));
    }
  }
  SUBCASE("out-of-range eps is rejected") {
    CHECK_THROWS_AS(shrink_polytope(c, 0.0), Error);
    CHECK_THROWS_AS(shrink_polytope(c, 1.5), Error);
  }
}

TEST_CASE("lyapunov_value basics") {
  Ellipsoid e;
  e.center = Vec::Zero(3);
  e.shape = Mat::Identity(3, 3);
  e.level = 1.0;
  CHECK(lyapunov_value(e, Vec::Zero(3)) == 0.0);
  Vec unit(3);
  unit << 1.0, 0.0, 0.0;
  CHECK(lyapunov_value(e, unit) == doctest::Approx(1.0));
}

TEST_CASE("V is non-increasing along the certified safety loop") {
  const Design& d = rt::certified_design();
  const Mat a_sc = d.a - d.b * d.safety.k;
  Ellipsoid e_c;
  e_c.center = Vec::Zero(12);
  e_c.shape = d.p;
  e_c.level = 1.0;

  std::mt19937_64 rng(123);
  const VectorField f = [&](const Vec& x, const Vec&) { return Vec(a_sc * x); };
  for (int run = 0; run < 5; ++run) {
    Vec z = rt::ellipsoid_boundary_point(d.p, 1.0, rng);
    double v_prev = lyapunov_value(e_c, z);
    for (int step = 0; step < 2000; ++step) {
      z = rk4_step(f, z, Vec::Zero(1), 1e-3);
      const double v = lyapunov_value(e_c, z);
      CHECK(v <= v_prev + 1e-6);
      v_prev = v;
    }
  }
}

TEST_CASE("level sets nest: E_TC inside E_SC inside E_C") {
  const Design& d = rt::certified_design();
  Ellipsoid e_c;
  e_c.center = Vec::Zero(12);
  e_c.shape = d.p;
  e_c.level = 1.0;
  const Ellipsoid e_sc = e_c.with_level(d.eps_sc);
  const Ellipsoid e_tc = e_c.with_level(d.eps_tc);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 2000; ++i) {
    const Vec z = rt::ellipsoid_boundary_point(d.p, d.eps_tc, rng);
    CHECK(e_sc.contains(z, 1e-12));
    CHECK(e_c.contains(z, 1e-12));
  }
  for (int i = 0; i < 2000; ++i) {
    const Vec z = rt::ellipsoid_boundary_point(d.p, d.eps_sc, rng);
    CHECK(e_c.contains(z, 1e-12));
    CHECK(!e_tc.contains(0.999 * z));
  }
}

TEST_CASE("the sqrt(eps) polytope contains the eps level set") {
  const Design& d = rt::certified_design();
  const RunConfig cfg;
  const auto c = normalize_constraints(
      Box::symmetric(Vec::Zero(12), cfg.constraint_half_widths), Vec::Zero(12));
  const double eps = d.eps_sc;
  const auto c_sc = shrink_polytope(c, eps);
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> radius(0.0, 1.0);
  for (int i = 0; i < 5000; ++i) {
    // random point with V(x) <= eps
    const Vec z = std::pow(radius(rng), 1.0 / 12.0) *
                  rt::ellipsoid_boundary_point(d.p, eps, rng);
    CHECK(c_sc.contains(z, 1e-12));
  }
}

TEST_CASE("project_ellipsoid boundary points satisfy the shadow equation") {
  const Design& d = rt::certified_design();
  const auto pts = project_ellipsoid(d.p, 0.05, SY, SZ, 64);
  REQUIRE(pts.size() == 64);
  // The shadow's boundary satisfies w^T S w = level with S the inverse of the
  // corresponding block of P^{-1}.
  const Mat p_inv = d.p.llt().solve(Mat::Identity(12, 12));
  Eigen::Matrix2d block;
  block << p_inv(SY, SY), p_inv(SY, SZ), p_inv(SZ, SY), p_inv(SZ, SZ);
  const Eigen::Matrix2d s = block.inverse();
  for (const auto& w : pts) {
    CHECK(w.dot(s * w) == doctest::Approx(0.05).epsilon(1e-9));
  }
}
