#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rejuv/numerics.hpp"
#include "support.hpp"

using namespace rejuv;
namespace rt = rejuv::testing;

TEST_CASE("mat_exp of the zero matrix is the identity") {
  const Mat e = mat_exp(Mat::Zero(12, 12), 3.7);
  CHECK((e - Mat::Identity(12, 12)).norm() < 1e-14);
}

TEST_CASE("mat_exp of a nilpotent matrix truncates") {
  Mat a(2, 2);
  a << 0, 1, 0, 0;
  for (double t : {0.3, -2.0, 17.5}) {
    const Mat e = mat_exp(a, t);
    CHECK(e(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(e(0, 1) == doctest::Approx(t).epsilon(1e-13));
    CHECK(e(1, 0) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(e(1, 1) == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("mat_exp matches the long-double Taylor oracle") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 5; ++trial) {
    const Mat a = rt::random_stable_matrix(rng, 12);
    const Mat got = mat_exp(a, 0.18);
    const Mat want = rt::taylor_expm_oracle(a, 0.18);
    CHECK((got - want).norm() / want.norm() < 1e-10);
  }
}

TEST_CASE("mat_exp semigroup property") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> times(-1.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const Mat a = rt::random_stable_matrix(rng, 6);
    const double s = times(rng), t = times(rng);
    const Mat lhs = mat_exp(a, s) * mat_exp(a, t);
    const Mat rhs = mat_exp(a, s + t);
    CHECK((lhs - rhs).norm() < 1e-9 * std::max(1.0, rhs.norm()));
  }
}

TEST_CASE("mat_exp inverse-transpose identity") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    const Mat a = rt::random_stable_matrix(rng, 8);
    const Mat lhs = mat_exp(-a.transpose(), 0.7);
    const Mat rhs = mat_exp(a, 0.7).inverse().transpose();
    CHECK((lhs - rhs).norm() < 1e-8 * rhs.norm());
  }
}

TEST_CASE("mat_exp rejects non-square input") {
  CHECK_THROWS_AS(mat_exp(Mat::Zero(3, 4), 1.0), DimensionError);
}

TEST_CASE("solve_lyapunov closed forms") {
  const Mat p = solve_lyapunov(-Mat::Identity(4, 4), Mat::Identity(4, 4));
  CHECK((p - 0.5 * Mat::Identity(4, 4)).norm() < 1e-12);

  Mat a(1, 1), q(1, 1);
  a << -2.0;
  q << 4.0;
  CHECK(solve_lyapunov(a, q)(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("solve_lyapunov on the quadrotor safety loop") {
  const Design& d = rt::certified_design();
  const Mat a_sc = d.a - d.b * d.safety.k;
  const Mat q = Mat::Identity(12, 12);
  const Mat p = solve_lyapunov(a_sc, q);
  CHECK((a_sc.transpose() * p + p * a_sc + q).norm() <= 1e-9 * q.norm());
  CHECK((p - p.transpose()).norm() < 1e-12 * p.norm());
  Eigen::SelfAdjointEigenSolver<Mat> es(p);
  CHECK(es.eigenvalues().minCoeff() > 0.0);
  CHECK(Eigen::LLT<Mat>(p).info() == Eigen::Success);
}

TEST_CASE("solve_lyapunov rejects non-Hurwitz input") {
  Mat a(2, 2);
  a << 1, 0, 0, -1;  // saddle
  CHECK_THROWS_AS(solve_lyapunov(a, Mat::Identity(2, 2)), SolverError);
}

TEST_CASE("solve_care scalar closed form") {
  Mat a(1, 1), b(1, 1), q(1, 1), r(1, 1);
  a << 0;
  b << 1;
  q << 1;
  r << 1;
  const Mat s = solve_care(a, b, q, r);
  CHECK(s(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("solve_care double integrator analytic gain") {
  Mat a(2, 2), b(2, 1);
  a << 0, 1, 0, 0;
  b << 0, 1;
  const Mat q = Mat::Identity(2, 2);
  Mat r(1, 1);
  r << 1;
  const Mat s = solve_care(a, b, q, r);
  const Mat k = r.inverse() * b.transpose() * s;
  CHECK(std::abs(k(0, 0) - 1.0) < 1e-9);
  CHECK(std::abs(k(0, 1) - std::sqrt(3.0)) < 1e-9);
  CHECK(care_residual(a, b, q, r, s) <= 1e-8 * q.norm());
  // closed-loop spectrum -sqrt(3)/2 +- i/2
  Eigen::EigenSolver<Mat> es(a - b * k);
  for (int i = 0; i < 2; ++i) {
    CHECK(es.eigenvalues()(i).real() ==
          doctest::Approx(-std::sqrt(3.0) / 2.0).epsilon(1e-9));
    CHECK(std::abs(es.eigenvalues()(i).imag()) ==
          doctest::Approx(0.5).epsilon(1e-9));
  }
}

TEST_CASE("solve_care on the quadrotor weights") {
  const RunConfig cfg;  // reference weights Q = 50 I, R = 100 I
  const Linearization lin = linearize_hover(cfg.quad);
  const Mat q = Mat(cfg.q_safety.asDiagonal());
  const Mat r = Mat(cfg.r_safety.asDiagonal());
  const Mat s = solve_care(lin.a, lin.b, q, r);
  CHECK(care_residual(lin.a, lin.b, q, r, s) <= 1e-8 * q.norm());
  const Mat k = r.ldlt().solve(lin.b.transpose() * s);
  CHECK(spectral_abscissa(lin.a - lin.b * k) < 0.0);
}

TEST_CASE("solve_care rejects an uncontrollable unstable pair") {
  Mat a(1, 1), b(1, 1), q(1, 1), r(1, 1);
  a << 1.0;
  b << 0.0;
  q << 1.0;
  r << 1.0;
  CHECK_THROWS_AS(solve_care(a, b, q, r), SolverError);
}

TEST_CASE("rk4_step exactness and convergence") {
  const Vec x0 = Vec::Constant(3, 1.5);
  const Vec u = Vec::Zero(1);

  SUBCASE("zero field leaves the state unchanged") {
    const VectorField f = [](const Vec& x, const Vec&) {
      return Vec(Vec::Zero(x.size()));
    };
    CHECK((rk4_step(f, x0, u, 0.1) - x0).norm() == 0.0);
  }

  SUBCASE("constant field is integrated exactly") {
    Vec c(3);
    c << 1.0, -2.0, 0.5;
    const VectorField f = [&](const Vec&, const Vec&) { return c; };
    const Vec got = rk4_step(f, x0, u, 0.25);
    CHECK((got - (x0 + 0.25 * c)).norm() < 1e-15);
  }

  SUBCASE("linear field matches the matrix exponential after 1000 steps") {
    std::mt19937_64 rng(3);
    const Mat a = rt::random_stable_matrix(rng, 6);
    const VectorField f = [&](const Vec& x, const Vec&) { return Vec(a * x); };
    Vec x = rt::random_matrix(rng, 6, 1);
    const Vec want = mat_exp(a, 1.0) * x;
    for (int i = 0; i < 1000; ++i) x = rk4_step(f, x, u, 1e-3);
    CHECK((x - want).norm() < 1e-8 * want.norm());
  }

  SUBCASE("observed order is at least 3.9") {
    std::mt19937_64 rng(5);
    const Mat a = rt::random_stable_matrix(rng, 6);
    const VectorField f = [&](const Vec& x, const Vec&) { return Vec(a * x); };
    const Vec x_init = rt::random_matrix(rng, 6, 1);
    const auto error_at = [&](double dt) {
      const int steps = static_cast<int>(std::round(0.5 / dt));
      Vec x = x_init;
      for (int i = 0; i < steps; ++i) x = rk4_step(f, x, u, dt);
      return (x - mat_exp(a, 0.5) * x_init).norm();
    };
    const double e1 = error_at(1.0 / 64.0);
    const double e2 = error_at(1.0 / 128.0);
    CHECK(std::log2(e1 / e2) >= 3.9);
  }

  SUBCASE("non-finite derivative raises a fault") {
    const VectorField f = [](const Vec& x, const Vec&) {
      return Vec(Vec::Constant(x.size(),
                               std::numeric_limits<double>::infinity()));
    };
    CHECK_THROWS_AS(rk4_step(f, x0, u, 0.1), SimFault);
  }
}

TEST_CASE("box_vertices enumeration") {
  SUBCASE("one dimension") {
    Vec lo(1), hi(1);
    lo << -1.0;
    hi << 1.0;
    const auto verts = box_vertices(Box(lo, hi));
    REQUIRE(verts.size() == 2);
    CHECK(verts[0](0) == -1.0);
    CHECK(verts[1](0) == 1.0);
  }

  SUBCASE("unit square has four corners in lexicographic order") {
    const auto verts =
        box_vertices(Box::symmetric(Vec::Zero(2), Vec::Ones(2)));
    REQUIRE(verts.size() == 4);
    CHECK(verts[0](0) == -1.0);
    CHECK(verts[0](1) == -1.0);
    CHECK(verts[1](0) == -1.0);
    CHECK(verts[1](1) == 1.0);
    CHECK(verts[3](0) == 1.0);
    CHECK(verts[3](1) == 1.0);
  }

  SUBCASE("twelve dimensions give 4096 vertices") {
    const auto verts =
        box_vertices(Box::symmetric(Vec::Zero(12), Vec::Ones(12)));
    CHECK(verts.size() == 4096);
  }

  SUBCASE("seventeen dimensions are refused") {
    CHECK_THROWS_AS(
        box_vertices(Box::symmetric(Vec::Zero(17), Vec::Ones(17))), Error);
  }
}
