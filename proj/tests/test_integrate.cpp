#include <catch_amalgamated.hpp>

#include <cmath>

#include "lorenzlike/integrate.hpp"
#include "lorenzlike/model.hpp"

using namespace lorenzlike;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("u-axis is invariant and decays exponentially", "[integrate]") {
  const SystemParams p = path_params({0.9, 0.2, 0.3});
  IntegratorConfig cfg;
  cfg.max_time = 20.0;
  const double u0 = 0.7;
  const Trajectory<3> tr = integrate(p, {0, 0, u0}, cfg);
  REQUIRE(tr.times.size() > 10);
  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    const double exact = u0 * std::exp(-p.alpha * tr.times[i]);
    CHECK(tr.states[i][0] == 0.0);
    CHECK(tr.states[i][1] == 0.0);
    CHECK_THAT(tr.states[i][2], WithinAbs(exact, 10 * (cfg.rel_tol * exact + cfg.abs_tol)));
  }
  // dense output inside steps; error per component is weighted by rel_tol |u| + abs_tol
  for (std::size_t i = 0; i + 1 < tr.times.size(); ++i) {
    const double tm = 0.5 * (tr.times[i] + tr.times[i + 1]);
    const State y = state_at(tr, tm);
    const double exact = u0 * std::exp(-p.alpha * tm);
    CHECK_THAT(y.u, WithinAbs(exact, 10 * (cfg.rel_tol * exact + cfg.abs_tol)));
  }
}

TEST_CASE("equilibrium start stays put", "[integrate]") {
  const SystemParams p{0.5, 0.5, 1.0};
  IntegratorConfig cfg;
  cfg.max_time = 50.0;
  const Trajectory<3> tr = integrate(p, kSPlus, cfg);
  for (const auto& y : tr.states) CHECK(State::from(y) == kSPlus);
  CHECK(tr.t_final == 50.0);
}

TEST_CASE("event time on the linearised saddle flow", "[integrate][oracle]") {
  // x(t) = c_u e^{lu t} - c_ss e^{lss t} (first components), x = 0 at t* = ln(c_ss/c_u)/(lu - lss)
  const SystemParams p = path_params({0.9, 0.2, 0.4});
  const SaddleData d = saddle_data(p);
  const double cu = 1e-3, css = 1.0;
  const State y0{cu * d.v_u[0] - css * d.v_ss[0], cu * d.v_u[1] - css * d.v_ss[1], 0.0};
  const Mat3 J = jacobian(p, kS0);
  auto linear = [J](double, const Vector<3>& y) {
    Vector<3> f{};
    for (int i = 0; i < 3; ++i) f[i] = J[i][0] * y[0] + J[i][1] * y[1] + J[i][2] * y[2];
    return f;
  };
  const double x_u = cu * d.v_u[0], x_ss = css * d.v_ss[0];
  const double t_star = std::log(x_ss / x_u) / (d.lam_u - d.lam_ss);
  IntegratorConfig cfg;
  cfg.max_time = 2.0 * t_star;
  const std::vector<EventSpec<3>> ev{{[](const Vector<3>& y) { return y[0]; }, Crossing::Any, true, "x0", {}}};
  const Trajectory<3> tr = integrate_ode<3>(linear, 0.0, y0.array(), cfg, ev);
  REQUIRE(tr.termination == Termination::Event);
  REQUIRE(tr.events.size() == 1);
  CHECK_THAT(tr.events[0].t, WithinAbs(t_star, 1e-9));
  CHECK(std::abs(tr.events[0].y[0]) <= 1e-10);
  CHECK(tr.t_final == tr.events[0].t);
}

TEST_CASE("harmonic oscillator over many periods", "[integrate][oracle]") {
  auto f = [](double, const Vector<2>& y) { return Vector<2>{y[1], -y[0]}; };
  IntegratorConfig cfg;
  cfg.max_time = 20 * 2 * M_PI;
  const auto tr = integrate_ode<2>(f, 0.0, {1.0, 0.0}, cfg);
  CHECK_THAT(tr.y_final[0], WithinAbs(1.0, 1e-9));
  CHECK_THAT(tr.y_final[1], WithinAbs(0.0, 1e-9));
  // x crossings every pi, starting at pi/2, direction filter halves them
  const std::vector<EventSpec<2>> ev{{[](const Vector<2>& y) { return y[0]; }, Crossing::Falling, false, "down", {}}};
  const auto te = integrate_ode<2>(f, 0.0, {1.0, 0.0}, cfg, ev);
  REQUIRE(te.events.size() == 20);
  for (std::size_t k = 0; k < te.events.size(); ++k) {
    CHECK_THAT(te.events[k].t, WithinAbs(M_PI / 2 + 2 * M_PI * static_cast<double>(k), 1e-9));
    CHECK(std::abs(te.events[k].y[0]) <= 1e-10);
  }
}

TEST_CASE("backward integration retraces the forward one", "[integrate]") {
  const SystemParams p = path_params({0.9, 2.0, 0.5});
  IntegratorConfig cfg;
  cfg.max_time = 5.0;
  const State y0{0.3, -0.2, 0.1};
  const auto fw = integrate(p, y0, cfg);
  const auto bw = integrate_ode<3>(model_rhs(p), fw.t_final, fw.y_final, cfg, {}, true);
  CHECK_THAT(bw.t_final, WithinAbs(0.0, 1e-12));
  for (int k = 0; k < 3; ++k) CHECK_THAT(bw.y_final[k], WithinAbs(y0.array()[k], 1e-9));
}

TEST_CASE("dense output is exact at nodes and continuous across steps", "[integrate]") {
  const SystemParams p = path_params({0.9, 2.899, 0.7955});
  IntegratorConfig cfg;
  cfg.max_time = 30.0;
  const auto tr = integrate(p, {0.1, 0.2, 0.3}, cfg);
  REQUIRE(tr.dense.size() + 1 == tr.times.size());
  for (std::size_t i = 0; i < tr.times.size(); ++i) CHECK(eval_dense<3>(tr, tr.times[i]) == tr.states[i]);
  for (std::size_t i = 0; i + 1 < tr.dense.size(); ++i) {
    const auto left = tr.dense[i](1.0);
    const auto right = tr.dense[i + 1](0.0);
    for (int k = 0; k < 3; ++k) CHECK_THAT(left[k], WithinAbs(right[k], 1e-12 * (1 + std::abs(right[k]))));
  }
  CHECK_THROWS_AS(eval_dense<3>(tr, 31.0), std::out_of_range);
}

TEST_CASE("times increase strictly and terminal events stop the run", "[integrate]") {
  const SystemParams p = path_params({0.9, 0.2, 0.0});
  IntegratorConfig cfg;
  cfg.max_time = 1e4;
  const Events ev{make_event("escape", [](const State& y) { return norm(y) - 100.0; }, Crossing::Rising, true)};
  const auto tr = integrate(p, {1e-6, 1e-6, 0.0}, cfg, ev);
  REQUIRE(tr.termination == Termination::Event);
  CHECK(tr.terminal_label == "escape");
  CHECK_THAT(norm(State::from(tr.y_final)), WithinAbs(100.0, 1e-10));
  for (std::size_t i = 1; i < tr.times.size(); ++i) CHECK(tr.times[i] > tr.times[i - 1]);
  // monotone escape: no recorded state is outside the sphere
  for (const auto& y : tr.states) CHECK(norm(State::from(y)) <= 100.0 + 1e-10);
}

TEST_CASE("invalid configurations are rejected", "[integrate]") {
  const SystemParams p{0.5, 0.5, 1.0};
  IntegratorConfig cfg;
  cfg.rel_tol = 0.0;
  CHECK_THROWS_AS(integrate(p, kS0, cfg), std::invalid_argument);
  cfg = {};
  cfg.max_time = -1.0;
  CHECK_THROWS_AS(integrate(p, kS0, cfg), std::invalid_argument);
  cfg = {};
  CHECK_THROWS(integrate(p, {NAN, 0, 0}, cfg));
}
