#include <catch_amalgamated.hpp>

#include <cmath>

#include "lorenzlike/lyapunov.hpp"

using namespace lorenzlike;
using Catch::Matchers::WithinAbs;

TEST_CASE("Kaplan-Yorke dimension", "[lyapunov]") {
  CHECK(kaplan_yorke({-0.1, -0.2, -0.3}) == 0.0);
  CHECK_THAT(kaplan_yorke({0.03, -0.001, -2.2}), WithinAbs(2.0 + 0.029 / 2.2, 1e-15));
  CHECK_THAT(kaplan_yorke({0.5, -1.0, -2.0}), WithinAbs(1.5, 1e-15));
  CHECK(kaplan_yorke({0.1, 0.1, 0.1}) == 3.0);
}

TEST_CASE("near a stable equilibrium every exponent is negative", "[lyapunov]") {
  const SystemParams p = path_params({1.0, 0.5, 0.5});
  REQUIRE(equilibria_stable(p));
  const FtleResult r = ftle(p, kSPlus + State{1e-3, 0.0, 0.0}, 300.0);
  for (double le : r.exponents) CHECK(le < 0.0);
  CHECK(r.dimension == 0.0);
  CHECK(r.exponents[0] >= r.exponents[1]);
  CHECK(r.exponents[1] >= r.exponents[2]);
  CHECK_THAT(r.exponents[0] + r.exponents[1] + r.exponents[2], WithinAbs(divergence(p), 1e-6));
}

TEST_CASE("rescaled classical Lorenz attractor", "[lyapunov][oracle]") {
  // Lorenz (10, 28, 8/3): LE ~ (0.906, 0, -14.57); time here runs sqrt(sigma (r - 1)) times slower.
  const SystemParams p = lorenz_to_lorenzlike({10.0, 28.0, 8.0 / 3.0, 1.0});
  const double scale = std::sqrt(270.0);
  // start on the attractor: discard a transient
  IntegratorConfig cfg;
  cfg.max_time = 500.0;
  cfg.record = false;
  const State x0 = State::from(integrate(p, {0.1, 0.1, 0.1}, cfg).y_final);
  const FtleResult r = ftle(p, x0, 20000.0);
  CHECK_THAT(r.exponents[0] * scale, WithinAbs(0.906, 0.06));
  CHECK_THAT(r.exponents[1] * scale, WithinAbs(0.0, 0.03));
  CHECK_THAT(r.exponents[2] * scale, WithinAbs(-14.57, 0.1));
  CHECK_THAT(r.dimension, WithinAbs(2.06, 0.01));
  CHECK_THAT(r.exponents[0] + r.exponents[1] + r.exponents[2], WithinAbs(divergence(p), 1e-6));
  CHECK(r.max_frame_defect < 1e-12);
}

TEST_CASE("flow-aligned frame on a periodic orbit", "[lyapunov]") {
  // x' = v on the undamped, uncoupled oscillator lambda = 0, beta tiny: a closed orbit around S+.
  const SystemParams p{0.0, 1.0, 1e-9};
  const State x0{1.2, 0.0, 0.0};
  FtleOptions o;
  o.align_flow = true;
  const FtleResult r = ftle(p, x0, 200.0, o);
  CHECK(std::abs(r.exponents[0]) < 0.05);
  CHECK_THAT(r.exponents[0] + r.exponents[1] + r.exponents[2], WithinAbs(-1.0, 1e-6));
}

TEST_CASE("escape and bad input are reported", "[lyapunov]") {
  const SystemParams p = path_params({0.9, 0.2, 0.0});
  CHECK_THROWS_AS(ftle(p, {0.1, 0.1, 0.0}, 1e5), FtleEscape);
  CHECK_THROWS_AS(ftle(p, {0.1, 0.1, 0.0}, 0.0), std::invalid_argument);
  FtleOptions bad;
  bad.reorth_dt = 0.0;
  CHECK_THROWS_AS(ftle(p, {0.1, 0.1, 0.0}, 10.0, bad), std::invalid_argument);
}

TEST_CASE("repeat runs agree to the last bit", "[lyapunov][property]") {
  const SystemParams p = path_params({0.9, 2.899, 0.7955});
  const State x0{-0.0479075467563750, 8.41428910156156, 13.7220943173008};
  const FtleResult a = ftle(p, x0, 200.0);
  const FtleResult b = ftle(p, x0, 200.0);
  CHECK(a.exponents == b.exponents);
  CHECK(a.x_end == b.x_end);
}
