#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "rejuv/dynamics.hpp"
#include "rejuv/numerics.hpp"
#include "support.hpp"

using namespace rejuv;
namespace rt = rejuv::testing;

namespace {

State hover_at(double x, double y, double z, double yaw) {
  State s = State::Zero();
  s(SX) = x;
  s(SY) = y;
  s(SZ) = z;
  s(SPSI) = yaw;
  return s;
}

}  // namespace

TEST_CASE("hover with the feedforward thrust is an equilibrium") {
  const QuadrotorParams p;
  CHECK(p.hover_thrust() == doctest::Approx(7.848).epsilon(1e-12));
  const Wrench u{p.hover_thrust(), 0.0, 0.0, 0.0};
  const State d = quad_derivative(State::Zero(), u, p);
  CHECK(d.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("free fall: zero thrust gives -g vertical acceleration only") {
  const QuadrotorParams p;
  const State d = quad_derivative(State::Zero(), Wrench{}, p);
  for (int i = 0; i < 12; ++i) {
    if (i == SVZ) {
      CHECK(d(i) == doctest::Approx(-p.gravity));
    } else {
      CHECK(d(i) == 0.0);
    }
  }
}

TEST_CASE("pure yaw torque accelerates r by tau/Izz") {
  const QuadrotorParams p;
  const Wrench u{p.hover_thrust(), 0.0, 0.0, 0.02};
  const State d = quad_derivative(State::Zero(), u, p);
  CHECK(d(SR_) == doctest::Approx(0.02 / p.izz));
  CHECK(d(SP) == 0.0);
  CHECK(d(SQ) == 0.0);
}

TEST_CASE("hover at arbitrary position and yaw is an equilibrium") {
  const QuadrotorParams p;
  const Wrench u{p.hover_thrust(), 0.0, 0.0, 0.0};
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> pos(-5.0, 5.0);
  std::uniform_real_distribution<double> yaw(-0.7, 0.7);
  for (int i = 0; i < 20; ++i) {
    const State s = hover_at(pos(rng), pos(rng), pos(rng), yaw(rng));
    CHECK(quad_derivative(s, u, p).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("pitch near the Euler singularity raises a fault") {
  const QuadrotorParams p;
  State s = State::Zero();
  s(STHETA) = M_PI / 2.0 - 0.005;
  CHECK_THROWS_AS(quad_derivative(s, Wrench{}, p), SimFault);
}

TEST_CASE("linearize_hover structure") {
  const QuadrotorParams p;
  const Linearization lin = linearize_hover(p);
  CHECK(lin.b(SVZ, 0) == doctest::Approx(1.0 / p.mass));
  // velocity-to-position identity coupling
  CHECK(lin.a(SX, SVX) == 1.0);
  CHECK(lin.a(SY, SVY) == 1.0);
  CHECK(lin.a(SZ, SVZ) == 1.0);
}

TEST_CASE("linearize_hover matches central finite differences") {
  const QuadrotorParams p;
  const Linearization lin = linearize_hover(p);
  const Wrench u_ff{p.hover_thrust(), 0.0, 0.0, 0.0};
  const double h = 1e-6;

  for (int j = 0; j < 12; ++j) {
    State plus = State::Zero(), minus = State::Zero();
    plus(j) += h;
    minus(j) -= h;
    const State d =
        (quad_derivative(plus, u_ff, p) - quad_derivative(minus, u_ff, p)) /
        (2.0 * h);
    for (int i = 0; i < 12; ++i) {
      CHECK(lin.a(i, j) == doctest::Approx(d(i)).epsilon(1e-6).scale(1.0));
    }
  }
  for (int j = 0; j < 4; ++j) {
    Vec4 du = Vec4::Zero();
    du(j) = h;
    const Wrench up = Wrench::from_vec(u_ff.to_vec() + du);
    const Wrench um = Wrench::from_vec(u_ff.to_vec() - du);
    const State d =
        (quad_derivative(State::Zero(), up, p) -
         quad_derivative(State::Zero(), um, p)) /
        (2.0 * h);
    for (int i = 0; i < 12; ++i) {
      CHECK(lin.b(i, j) == doctest::Approx(d(i)).epsilon(1e-6).scale(1.0));
    }
  }
}

TEST_CASE("nonlinear-vs-linear divergence is second order") {
  const QuadrotorParams p;
  const Linearization lin = linearize_hover(p);
  const Wrench u_ff{p.hover_thrust(), 0.0, 0.0, 0.0};
  std::mt19937_64 rng(8);
  Vec dir = rt::random_matrix(rng, 12, 1);
  dir /= dir.norm();

  const VectorField f = [&](const Vec& x, const Vec&) {
    return Vec(quad_derivative(State(x), u_ff, p));
  };
  const auto divergence = [&](double delta) {
    Vec x = delta * dir;
    for (int i = 0; i < 100; ++i) x = rk4_step(f, x, Vec::Zero(1), 1e-3);
    const Vec lin_end = mat_exp(lin.a, 0.1) * (delta * dir);
    return (x - lin_end).norm();
  };
  const double e1 = divergence(2e-2);
  const double e2 = divergence(1e-2);
  CHECK(std::log2(e1 / e2) >= 1.9);
}

TEST_CASE("mixer symmetry and round trip") {
  const QuadrotorParams p;

  SUBCASE("hover wrench maps to four equal commands") {
    const auto r = wrench_to_commands(Wrench{p.hover_thrust(), 0, 0, 0}, p);
    CHECK_FALSE(r.saturated);
    for (int i = 1; i < 4; ++i) {
      CHECK(r.commands[i] == doctest::Approx(r.commands[0]).epsilon(1e-14));
    }
  }

  SUBCASE("pure roll torque is an antisymmetric pair") {
    const auto hover = wrench_to_commands(Wrench{p.hover_thrust(), 0, 0, 0}, p);
    const auto r =
        wrench_to_commands(Wrench{p.hover_thrust(), 0.05, 0.0, 0.0}, p);
    CHECK(r.commands[0] == doctest::Approx(hover.commands[0]).epsilon(1e-12));
    CHECK(r.commands[1] == doctest::Approx(hover.commands[1]).epsilon(1e-12));
    const double d2 = r.commands[2] - hover.commands[2];
    const double d3 = r.commands[3] - hover.commands[3];
    CHECK(d2 == doctest::Approx(-d3).epsilon(1e-12));
    // thrust contribution unchanged
    const double sum = r.commands[0] + r.commands[1] + r.commands[2] +
                       r.commands[3];
    const double hover_sum = hover.commands[0] + hover.commands[1] +
                             hover.commands[2] + hover.commands[3];
    CHECK(sum == doctest::Approx(hover_sum).epsilon(1e-12));
  }

  SUBCASE("round trip over random admissible wrenches") {
    std::mt19937_64 rng(44);
    std::uniform_real_distribution<double> cmd(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
      const MotorCommands c = {cmd(rng), cmd(rng), cmd(rng), cmd(rng)};
      const Wrench w = commands_to_wrench(c, p);
      const auto back = wrench_to_commands(w, p);
      CHECK_FALSE(back.saturated);
      const Wrench w2 = commands_to_wrench(back.commands, p);
      CHECK((w.to_vec() - w2.to_vec()).norm() < 1e-12);
    }
  }

  SUBCASE("full collective thrust saturates every motor at one") {
    const auto r = wrench_to_commands(Wrench{16.0, 0, 0, 0}, p);
    for (double c : r.commands) CHECK(c == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("an unachievable wrench clips and raises the flag") {
    const auto r = wrench_to_commands(Wrench{20.0, 0, 0, 0}, p);
    CHECK(r.saturated);
    for (double c : r.commands) CHECK(c <= 1.0);
  }
}

TEST_CASE("apply_attack window semantics") {
  const MotorCommands cmds = {0.4, 0.5, 0.6, 0.7};

  SUBCASE("no attack configured") {
    AttackSpec none;
    CHECK(apply_attack(none, cmds, 1.0) == cmds);
  }

  SUBCASE("propeller-off zeroes all commands inside the window") {
    AttackSpec a;
    a.type = AttackType::PropellerOff;
    a.start = 1.0;
    a.end = 2.0;
    const MotorCommands off = apply_attack(a, cmds, 1.5);
    for (double c : off) CHECK(c == 0.0);
    CHECK(apply_attack(a, cmds, 2.5) == cmds);
    CHECK(apply_attack(a, cmds, 0.5) == cmds);
  }

  SUBCASE("ill-formed window is rejected") {
    AttackSpec a;
    a.type = AttackType::PropellerOff;
    a.start = 2.0;
    a.end = 1.0;
    CHECK_THROWS_AS(a.validate(), ConfigError);
  }
}
