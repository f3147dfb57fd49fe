#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "rejuv/control.hpp"
#include "support.hpp"

using namespace rejuv;
namespace rt = rejuv::testing;

TEST_CASE("lqr_gain scalar closed form") {
  Mat a(1, 1), b(1, 1), q(1, 1), r(1, 1);
  a << 0;
  b << 1;
  q << 1;
  r << 1;
  const LqrResult res = lqr_gain(a, b, q, r);
  CHECK(res.k(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("lqr_gain stabilizes the quadrotor and is definitional") {
  const RunConfig cfg;
  const Linearization lin = linearize_hover(cfg.quad);
  const Mat q = Mat(cfg.q_safety.asDiagonal());
  const Mat r = Mat(cfg.r_safety.asDiagonal());
  const LqrResult res = lqr_gain(lin.a, lin.b, q, r);
  CHECK(spectral_abscissa(lin.a - lin.b * res.k) < 0.0);
  const Mat k_def = r.inverse() * lin.b.transpose() * res.s;
  CHECK((res.k - k_def).cwiseAbs().maxCoeff() < 1e-14 * k_def.norm());
}

TEST_CASE("control_law is the feedforward at the reference and linear in error") {
  const Design& d = rt::certified_design();
  const State ref = State::Zero();

  const Wrench at_ref = control_law(d.safety, ref, ref);
  CHECK(at_ref.thrust == doctest::Approx(7.848).epsilon(1e-12));
  CHECK(at_ref.tau_phi == 0.0);
  CHECK(at_ref.tau_theta == 0.0);
  CHECK(at_ref.tau_psi == 0.0);

  std::mt19937_64 rng(6);
  const State x = State(0.01 * rt::random_matrix(rng, 12, 1));
  const Vec4 dev1 = control_law(d.safety, x, ref).to_vec() - at_ref.to_vec();
  const Vec4 dev2 =
      control_law(d.safety, State(2.0 * x), ref).to_vec() - at_ref.to_vec();
  CHECK((dev2 - 2.0 * dev1).norm() < 1e-12 * dev1.norm());
}

TEST_CASE("closed-loop V decreases monotonically from inside E_C") {
  const Design& d = rt::certified_design();
  std::mt19937_64 rng(21);
  const Vec z0 = 0.9 * rt::ellipsoid_boundary_point(d.p, 1.0, rng);
  // linear plant with the control law in deviation coordinates
  const VectorField f = [&](const Vec& z, const Vec&) {
    const Wrench u = control_law(d.safety, State(z), State::Zero());
    const Vec4 dev = u.to_vec() - d.safety.u_ff.to_vec();
    return Vec(d.a * z + d.b * dev);
  };
  Vec z = z0;
  double v_prev = z.dot(d.p * z);
  for (int step = 0; step < 3000; ++step) {
    z = rk4_step(f, z, Vec::Zero(1), 1e-3);
    const double v = z.dot(d.p * z);
    CHECK(v <= v_prev + 1e-6);
    v_prev = v;
  }
  CHECK(v_prev < 0.05);
}

TEST_CASE("clamp_controls pins the examples") {
  const RunConfig cfg;
  const ClampSpec& spec = cfg.clamp;

  const Wrench roll_heavy{7.0, 0.5, 0.0, 0.0};
  CHECK(clamp_controls(spec, Mode::TC, roll_heavy).tau_phi ==
        doctest::Approx(0.0033));
  CHECK(clamp_controls(spec, Mode::SC, roll_heavy).tau_phi ==
        doctest::Approx(0.5));

  const Wrench shutdown{0.0, 0.0, 0.0, 0.0};
  CHECK(clamp_controls(spec, Mode::TC, shutdown).thrust ==
        doctest::Approx(2.0));
  CHECK(clamp_controls(spec, Mode::SC, shutdown).thrust == 0.0);

  CHECK_THROWS_AS(clamp_controls(spec, Mode::SR, shutdown), Error);
}

TEST_CASE("clamp_controls is idempotent and nested") {
  const RunConfig cfg;
  const ClampSpec& spec = cfg.clamp;
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> thrust(-30.0, 30.0);
  std::uniform_real_distribution<double> torque(-2.0, 2.0);
  for (int i = 0; i < 500; ++i) {
    const Wrench w{thrust(rng), torque(rng), torque(rng), torque(rng)};
    for (Mode m : {Mode::TC, Mode::SC}) {
      const Wrench once = clamp_controls(spec, m, w);
      const Wrench twice = clamp_controls(spec, m, once);
      CHECK((once.to_vec() - twice.to_vec()).norm() == 0.0);
      const WrenchBounds& b = m == Mode::TC ? spec.tc : spec.sc;
      CHECK(b.contains(once));
    }
    // TC output always lies inside the SC bounds
    CHECK(spec.sc.contains(clamp_controls(spec, Mode::TC, w)));
  }
}

TEST_CASE("the TC clamp box in deviation coordinates is the input set") {
  const RunConfig cfg;
  const double hover = cfg.quad.hover_thrust();
  const Box u = input_set_from_clamp(cfg.clamp.tc, hover);
  CHECK(u.lo(0) == doctest::Approx(-5.848).epsilon(1e-12));
  CHECK(u.hi(0) == doctest::Approx(6.152).epsilon(1e-12));
  CHECK(u.hi(1) == 0.0033);
  CHECK(u.lo(1) == -0.0033);
  CHECK(u.hi(3) == 0.0005);

  const Design& d = rt::certified_design();
  CHECK((d.input_set.box.lo - u.lo).norm() == 0.0);
  CHECK((d.input_set.box.hi - u.hi).norm() == 0.0);
  CHECK(d.input_set.vertices.size() == 16);
}

TEST_CASE("clamp spec validation rejects non-nested bounds") {
  ClampSpec bad;
  bad.tc = {0.0, 16.0, 0.66, 0.1};
  bad.sc = {2.0, 14.0, 0.0033, 0.0005};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}
