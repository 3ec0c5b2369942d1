#include <catch_amalgamated.hpp>

#include <Eigen/Dense>

#include <cmath>

#include "lorenzlike/separatrix.hpp"

using namespace lorenzlike;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

double max_norm(const SeparatrixRun& run) {
  double m = 0.0;
  for (const auto& y : run.trans_traj.states) m = std::max(m, norm(State::from(y)));
  if (run.limit_traj)
    for (const auto& y : run.limit_traj->states) m = std::max(m, norm(State::from(y)));
  return m;
}

SystemParams lorenz_point(double r) {
  return path_params(path_point_from(lorenz_to_lorenzlike({10.0, r, 8.0 / 3.0, 1.0})));
}

}  // namespace

TEST_CASE("separatrix seeds", "[separatrix]") {
  const State s = seed_separatrix(PathPoint{1.0, 1.0, 0.0}, +1, 1e-6);
  CHECK_THAT(s.x, WithinAbs(1e-6 / std::sqrt(2.0), 1e-22));
  CHECK_THAT(s.v, WithinAbs(1e-6 / std::sqrt(2.0), 1e-22));
  CHECK(s.u == 0.0);

  for (double sv : {0.0, 0.3, 0.9}) {
    const PathPoint pp{0.9, 0.2, sv};
    const State plus = seed_separatrix(pp, +1, 1e-6);
    const State minus = seed_separatrix(pp, -1, 1e-6);
    CHECK(minus == symmetry_image(plus));
    const SaddleData d = saddle_data(pp);
    CHECK(dot(rhs(path_params(pp), plus), d.v_u) > 0.0);
    CHECK_THAT(norm(plus), WithinRel(1e-6, 1e-12));
  }
  CHECK_THROWS_AS(seed_separatrix(PathPoint{1.0, 1.0, 0.0}, +1, 0.0), std::invalid_argument);
}

TEST_CASE("without damping the separatrix escapes", "[separatrix]") {
  const Table1Params t1;
  SeparatrixOptions opt;
  opt.record = true;
  for (double delta : {0.2, 0.6, 0.9, 1.05}) {
    for (double beta : {0.3, 1.5, 2.0 + delta - 0.1}) {
      const SeparatrixRun run = run_separatrix(PathPoint{delta, beta, 0.0}, +1, t1, opt);
      CHECK(run.outcome.kind == OutcomeKind::EscapeToInfinity);
      CHECK(run.outcome.event_time > 0.0);
      // terminal event: nothing past the sphere is recorded
      CHECK(max_norm(run) <= t1.r_inf * (1 + 1e-12));
      CHECK_THAT(norm(run.final_state), WithinAbs(t1.r_inf, 1e-8));
    }
  }
}

TEST_CASE("limit sets on both sides of the small-beta flip", "[separatrix]") {
  const Table1Params t1;
  const SeparatrixRun eight = run_separatrix(PathPoint{0.9, 0.2, 0.03}, +1, t1);
  CHECK(eight.outcome.kind == OutcomeKind::LimitCycleEight);
  CHECK(eight.outcome.ftle < 1e-3);
  CHECK(eight.outcome.period > 0.0);

  const SeparatrixRun theta = run_separatrix(PathPoint{0.9, 0.2, 0.0601314606}, +1, t1);
  CHECK(theta.outcome.kind == OutcomeKind::LimitCycleOneSided);
  CHECK(theta.outcome.side == Side::Plus);
  CHECK(theta.outcome.label() == "LimitCycleOneSided(+)");
}

TEST_CASE("merged attractor is chaotic", "[separatrix]") {
  const SeparatrixRun run = run_separatrix(PathPoint{0.9, 2.899, 0.7955}, +1, Table1Params{});
  CHECK(run.outcome.kind == OutcomeKind::ChaoticOrUndecided);
  CHECK(run.outcome.ftle > SeparatrixOptions{}.chaos_threshold);
  CHECK(run.outcome.ftle < 0.1);
}

TEST_CASE("capture by the nearest stable equilibrium", "[separatrix]") {
  const SystemParams p = path_params({1.0, 0.5, 0.5});
  REQUIRE(equilibria_stable(p));
  const Table1Params t1;
  const SeparatrixRun near = track_trajectory(p, kSPlus + State{1e-8, -1e-8, 1e-8}, +1, t1, {});
  CHECK(near.outcome.kind == OutcomeKind::CaptureSameSide);
  const SeparatrixRun far = track_trajectory(p, kSMinus + State{1e-8, -1e-8, 1e-8}, +1, t1, {});
  CHECK(far.outcome.kind == OutcomeKind::CaptureOppositeSide);
}

TEST_CASE("classical Lorenz system on either side of the homoclinic value", "[separatrix]") {
  // Below r ~ 13.93 the right branch of the unstable manifold of the origin goes to the
  // equilibrium on its own side, above it crosses over to the other one.
  const Table1Params t1;
  CHECK(run_separatrix(lorenz_point(13.5), +1, t1).outcome.kind == OutcomeKind::CaptureSameSide);
  CHECK(run_separatrix(lorenz_point(14.5), +1, t1).outcome.kind == OutcomeKind::CaptureOppositeSide);
}

TEST_CASE("strong damping keeps the separatrix bounded", "[separatrix]") {
  const Table1Params t1;
  SeparatrixOptions opt;
  opt.record = true;
  for (double delta : {0.5, 1.0}) {
    for (double beta : {0.5, 2.0}) {
      const PathPoint pp{delta, beta, 0.9};
      REQUIRE(check_conditions(pp).ineq11_holds);
      const SeparatrixRun run = run_separatrix(pp, +1, t1, opt);
      CHECK(run.outcome.kind != OutcomeKind::EscapeToInfinity);
      CHECK(max_norm(run) < t1.r_inf);
    }
  }
}

TEST_CASE("mirror consistency and seed-offset robustness", "[separatrix][property]") {
  const Table1Params t1;
  const std::vector<PathPoint> points{{0.9, 0.2, 0.0},   {0.9, 0.2, 0.03},   {0.9, 0.2, 0.0601314606},
                                      {1.0, 0.5, 0.5},   {0.9, 2.899, 0.6}, {0.5, 1.0, 0.7}};
  for (const auto& pp : points) {
    CAPTURE(pp.delta, pp.beta, pp.s);
    const SeparatrixRun plus = run_separatrix(pp, +1, t1);
    const SeparatrixRun minus = run_separatrix(pp, -1, t1);
    CHECK(minus.outcome.kind == plus.outcome.kind);
    CHECK(minus.outcome.side == mirrored(plus.outcome.side));
    CHECK(minus.outcome.event_time == plus.outcome.event_time);

    SeparatrixOptions half;
    half.seed_offset = 5e-7;
    CHECK(run_separatrix(pp, +1, t1, half).outcome.kind == plus.outcome.kind);
  }
}

TEST_CASE("runs are bit-for-bit repeatable", "[separatrix][property]") {
  const Table1Params t1;
  const PathPoint pp{0.9, 2.899, 0.7955};
  const SeparatrixRun a = run_separatrix(pp, +1, t1);
  const SeparatrixRun b = run_separatrix(pp, +1, t1);
  CHECK(a.final_state == b.final_state);
  CHECK(a.outcome.ftle == b.outcome.ftle);
  CHECK(a.outcome.kind == b.outcome.kind);
}

TEST_CASE("regime comparison", "[separatrix]") {
  SeparatrixOutcome a, b;
  a.kind = b.kind = OutcomeKind::ChaoticOrUndecided;
  a.side = Side::Plus;
  b.side = Side::Minus;
  CHECK(same_regime(a, b));  // both split
  b.side = Side::Both;
  CHECK_FALSE(same_regime(a, b));
  a.kind = b.kind = OutcomeKind::LimitCycleOneSided;
  a.side = Side::Plus;
  b.side = Side::Minus;
  CHECK_FALSE(same_regime(a, b));
  a.kind = OutcomeKind::CaptureSameSide;
  b.kind = OutcomeKind::CaptureSameSide;
  CHECK(same_regime(a, b));
}

TEST_CASE("saddle-focus eigenpair", "[separatrix][oracle]") {
  const SystemParams p = path_params({0.5, 2.2, 0.8});
  const auto sf = saddle_focus_data(p);
  REQUIRE(sf);
  Eigen::Matrix3d J;
  const Mat3 j = jacobian(p, kSPlus);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) J(r, c) = j[r][c];
  Eigen::EigenSolver<Eigen::Matrix3d> es(J);
  int real_count = 0;
  for (int k = 0; k < 3; ++k) {
    const auto ev = es.eigenvalues()[k];
    if (std::abs(ev.imag()) < 1e-12) {
      ++real_count;
      CHECK_THAT(sf->real_eigenvalue, WithinAbs(ev.real(), 1e-10));
    } else {
      CHECK_THAT(sf->complex_real_part, WithinAbs(ev.real(), 1e-10));
      CHECK_THAT(sf->complex_imag_part, WithinAbs(std::abs(ev.imag()), 1e-10));
    }
  }
  CHECK(real_count == 1);
  const Eigen::Vector3d v(sf->real_eigenvector[0], sf->real_eigenvector[1], sf->real_eigenvector[2]);
  CHECK((J * v - sf->real_eigenvalue * v).norm() < 1e-10);

  // stable node-type S+ has no saddle-focus data
  CHECK_FALSE(saddle_focus_data(path_params({1.0, 0.5, 0.5})));
}
