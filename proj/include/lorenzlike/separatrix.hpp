// Unstable separatrix of the saddle S0: seeding, tracking with the escape and
// capture events, and classification of its limit set.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <utility>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "lorenzlike/integrate.hpp"
#include "lorenzlike/lyapunov.hpp"
#include "lorenzlike/model.hpp"

namespace lorenzlike {

/// Numerical constants of the scanning procedure.
struct Table1Params {
  double delta_grid = 1e-2;
  double s_step0 = 1e-3;
  double eps_threshold = 1e-12;
  double t_trans = 4e3;
  double t_lim = 1e3;
  double r_inf = 100.0;
  double eps_eq = 1e-1;
  // The published run used 1e-15, which is below the round-off floor of a
  // double precision 5(4) pair; 1e-12 is the working default.
  double rel_tol = 1e-12;
  double abs_tol = 1e-12;

  void validate() const {
    for (double v : {delta_grid, s_step0, eps_threshold, t_trans, t_lim, r_inf, eps_eq, rel_tol, abs_tol})
      if (!(v > 0.0) || !std::isfinite(v))
        throw std::invalid_argument("numerical procedure parameters must be positive");
    if (!(s_step0 < 1.0)) throw std::invalid_argument("s_step0 must be < 1");
  }
};

struct SeparatrixOptions {
  double seed_offset = 1e-6;
  double chaos_threshold = 5e-3;  // largest FTLE above which the limit set counts as chaotic
  double discard_fraction = 0.1;  // head of the limit arc ignored by the side analysis
  double reorth_dt = 0.5;
  double max_step = 0.1;
  bool record = false;            // keep both arcs for output
};

enum class OutcomeKind {
  EscapeToInfinity,
  CaptureSameSide,
  CaptureOppositeSide,
  LimitCycleOneSided,
  LimitCycleEight,
  ChaoticOrUndecided,
};

/// Absolute side in x of a limit set. Both marks sets visiting x > 0 and x < 0.
enum class Side { None, Plus, Minus, Both };

inline std::string_view to_string(OutcomeKind k) {
  switch (k) {
    case OutcomeKind::EscapeToInfinity: return "EscapeToInfinity";
    case OutcomeKind::CaptureSameSide: return "CaptureSameSide";
    case OutcomeKind::CaptureOppositeSide: return "CaptureOppositeSide";
    case OutcomeKind::LimitCycleOneSided: return "LimitCycleOneSided";
    case OutcomeKind::LimitCycleEight: return "LimitCycleEight";
    case OutcomeKind::ChaoticOrUndecided: return "ChaoticOrUndecided";
  }
  return "?";
}

inline std::string_view to_string(Side s) {
  switch (s) {
    case Side::None: return "none";
    case Side::Plus: return "plus";
    case Side::Minus: return "minus";
    case Side::Both: return "both";
  }
  return "?";
}

inline Side mirrored(Side s) {
  if (s == Side::Plus) return Side::Minus;
  if (s == Side::Minus) return Side::Plus;
  return s;
}

struct SeparatrixOutcome {
  OutcomeKind kind = OutcomeKind::ChaoticOrUndecided;
  Side side = Side::None;
  double event_time = 0.0;     // escape / capture time, measured from the seed
  double ftle = 0.0;           // largest FTLE of the limit arc, when computed
  double period = 0.0;         // eight: twice the mean gap between x = 0 crossings; one-sided: mean gap between x maxima
  std::size_t wing_visits_plus = 0;
  std::size_t wing_visits_minus = 0;

  /// "theta+" / "theta-" style label, or the kind name.
  std::string label() const {
    std::string s{to_string(kind)};
    if (kind == OutcomeKind::LimitCycleOneSided || kind == OutcomeKind::ChaoticOrUndecided)
      s += side == Side::Plus ? "(+)" : side == Side::Minus ? "(-)" : side == Side::Both ? "(+-)" : "";
    return s;
  }
};

/// Regime equality used for flip detection: kind plus side, with chaotic sets
/// compared only by merged (both wings) versus split (one wing).
inline bool same_regime(const SeparatrixOutcome& a, const SeparatrixOutcome& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case OutcomeKind::LimitCycleOneSided: return a.side == b.side;
    case OutcomeKind::ChaoticOrUndecided: {
      auto merged = [](Side s) { return s == Side::Both ? 0 : s == Side::None ? 2 : 1; };
      return merged(a.side) == merged(b.side);
    }
    default: return true;
  }
}

struct SeparatrixRun {
  PathPoint pp{};
  SystemParams params{};
  int sign = +1;
  double seed_offset = 0.0;
  State seed{};
  Trajectory<3> trans_traj;
  std::optional<Trajectory<3>> limit_traj;
  SeparatrixOutcome outcome;
  State final_state{};  // last integrated point
};

inline State seed_separatrix(const SaddleData& sd, int sign, double offset) {
  if (!(offset > 0.0)) throw std::invalid_argument("seed offset must be > 0");
  const double k = sign >= 0 ? offset : -offset;
  return k * State::from(sd.v_u);
}

inline State seed_separatrix(const PathPoint& pp, int sign, double offset) {
  return seed_separatrix(saddle_data(pp), sign, offset);
}

namespace detail {

// Capture balls are only armed when S+ and S- attract; around saddle-foci an entry into the
// ball is a passing visit, not convergence.
inline Events separatrix_events(double r_inf, double eps_eq, bool capture = true) {
  Events ev{make_event("escape", [r_inf](const State& y) { return norm(y) - r_inf; }, Crossing::Rising, true)};
  if (capture) {
    ev.push_back(make_event("capture+", [eps_eq](const State& y) { return norm(y - kSPlus) - eps_eq; },
                            Crossing::Falling, true));
    ev.push_back(make_event("capture-", [eps_eq](const State& y) { return norm(y - kSMinus) - eps_eq; },
                            Crossing::Falling, true));
  }
  return ev;
}

inline std::optional<SeparatrixOutcome> terminal_outcome(const Trajectory<3>& tr, int sign,
                                                         double t_offset) {
  if (tr.termination != Termination::Event) return std::nullopt;
  SeparatrixOutcome o;
  o.event_time = t_offset + tr.t_final;
  if (tr.terminal_label == "escape") {
    o.kind = OutcomeKind::EscapeToInfinity;
  } else {
    const bool plus = tr.terminal_label == "capture+";
    o.kind = (plus == (sign >= 0)) ? OutcomeKind::CaptureSameSide : OutcomeKind::CaptureOppositeSide;
    o.side = plus ? Side::Plus : Side::Minus;
  }
  return o;
}

}  // namespace detail

/// Side statistics of an arc: x = 0 crossings split it into lobes; lobes whose
/// peak |x| reaches half the largest peak are wing visits.
struct SideStats {
  std::size_t crossings = 0;
  std::size_t wing_plus = 0;
  std::size_t wing_minus = 0;
  double x_min = 0.0;
  double x_max = 0.0;
  double mean_crossing_gap = 0.0;
};

inline SideStats side_stats(const std::vector<double>& times, const std::vector<double>& xs) {
  SideStats st;
  if (xs.empty()) return st;
  st.x_min = *std::min_element(xs.begin(), xs.end());
  st.x_max = *std::max_element(xs.begin(), xs.end());

  struct Lobe {
    bool positive;
    double peak;
  };
  std::vector<Lobe> lobes;
  std::vector<double> crossing_times;
  Lobe cur{xs.front() > 0.0, std::abs(xs.front())};
  bool first = true;  // the leading lobe is partial and not counted
  for (std::size_t i = 1; i < xs.size(); ++i) {
    const bool pos = xs[i] > 0.0;
    if (pos != cur.positive) {
      ++st.crossings;
      crossing_times.push_back(times[i]);
      if (!first) lobes.push_back(cur);
      first = false;
      cur = {pos, std::abs(xs[i])};
    } else {
      cur.peak = std::max(cur.peak, std::abs(xs[i]));
    }
  }
  double top = 0.0;
  for (const Lobe& l : lobes) top = std::max(top, l.peak);
  for (const Lobe& l : lobes) {
    if (l.peak >= 0.5 * top) (l.positive ? st.wing_plus : st.wing_minus) += 1;
  }
  if (crossing_times.size() >= 2)
    st.mean_crossing_gap = (crossing_times.back() - crossing_times.front()) /
                           static_cast<double>(crossing_times.size() - 1);
  return st;
}

enum class MergeSplit { Merged, Split, Undecided };

inline std::string_view to_string(MergeSplit m) {
  switch (m) {
    case MergeSplit::Merged: return "merged";
    case MergeSplit::Split: return "split";
    case MergeSplit::Undecided: return "undecided";
  }
  return "?";
}

/// Merged when both wings are visited recurrently (at least twice each), split
/// when only one is; fewer than 10 section hits is undecided.
inline MergeSplit merge_split_from(const SideStats& st) {
  if (st.crossings < 10) {
    // A chaotic set confined strictly to one half never crosses x = 0.
    if (st.crossings == 0 && st.x_min != st.x_max) return MergeSplit::Split;
    return MergeSplit::Undecided;
  }
  if (st.wing_plus >= 2 && st.wing_minus >= 2) return MergeSplit::Merged;
  return MergeSplit::Split;
}

inline Side split_side(const SideStats& st) {
  if (st.crossings == 0) return st.x_max > 0.0 ? Side::Plus : Side::Minus;
  return st.wing_plus >= st.wing_minus ? Side::Plus : Side::Minus;
}

/// Tail of a recorded arc after discarding the leading fraction.
inline SideStats arc_side_stats(const Trajectory<3>& arc, double discard_fraction) {
  if (arc.times.empty()) return {};
  const double t0 = arc.times.front();
  const double t_cut = t0 + discard_fraction * (arc.times.back() - t0);
  std::vector<double> ts, xs;
  for (std::size_t i = 0; i < arc.times.size(); ++i) {
    if (arc.times[i] < t_cut) continue;
    ts.push_back(arc.times[i]);
    xs.push_back(arc.states[i][0]);
  }
  return side_stats(ts, xs);
}

inline MergeSplit merge_split_signature(const Trajectory<3>& limit_arc, double discard_fraction = 0.1) {
  return merge_split_from(arc_side_stats(limit_arc, discard_fraction));
}

/// Local maxima of x (v crossing zero downwards) along a recorded arc after t_from,
/// refined on the dense segments when present.
inline std::vector<std::pair<double, State>> x_maxima(const Trajectory<3>& arc, double t_from) {
  std::vector<std::pair<double, State>> out;
  const std::function<double(const Vector<3>&)> g = [](const Vector<3>& y) { return y[1]; };
  for (std::size_t i = 0; i + 1 < arc.states.size(); ++i) {
    if (arc.times[i] < t_from) continue;
    const double v0 = arc.states[i][1], v1 = arc.states[i + 1][1];
    if (!(v0 > 0.0 && v1 <= 0.0)) continue;
    if (i < arc.dense.size()) {
      const auto& seg = arc.dense[i];
      const double th_end = (arc.times[i + 1] - seg.t0) / seg.h;
      const double th = detail::locate_root<3>(seg, g, v0, v1, th_end);
      out.emplace_back(seg.t0 + th * seg.h, State::from(seg(th)));
    } else {
      out.emplace_back(arc.times[i + 1], State::from(arc.states[i + 1]));
    }
  }
  return out;
}

/// Largest FTLE of an arc measured between two x-maxima that nearly coincide in
/// phase space, so that whole periods of a cycle are averaged. Falls back to the
/// full arc when fewer than two maxima exist.
inline double arc_ftle(const Trajectory<3>& arc, const SystemParams& p, const Table1Params& t1,
                       const SeparatrixOptions& opt) {
  const double t0 = arc.times.front();
  const double span = arc.times.back() - t0;
  State start = State::from(arc.states.front());
  double length = span;
  const auto maxima = x_maxima(arc, t0 + opt.discard_fraction * span);
  if (maxima.size() >= 2) {
    const auto& [ts, ys] = maxima.front();
    const double half = ts + 0.5 * (arc.times.back() - ts);
    double best = std::numeric_limits<double>::infinity();
    double t_best = arc.times.back();
    for (std::size_t j = 1; j < maxima.size(); ++j) {
      if (maxima[j].first < half) continue;
      const double dist = norm(maxima[j].second - ys);
      if (dist <= best) {
        best = dist;
        t_best = maxima[j].first;
      }
    }
    if (std::isfinite(best)) {
      start = ys;
      length = t_best - ts;
    }
  }
  FtleOptions fo;
  fo.reorth_dt = opt.reorth_dt;
  fo.align_flow = true;
  fo.r_inf = t1.r_inf;
  fo.integrator.rel_tol = t1.rel_tol;
  fo.integrator.abs_tol = t1.abs_tol;
  fo.integrator.max_step = opt.max_step;
  return ftle(p, start, length, fo).exponents[0];
}

/// Classifies a recorded limit arc that ran its full length without a terminal event.
/// Periodic sets are eights when both wings are visited and one-sided otherwise.
inline SeparatrixOutcome classify_limit_set(const Trajectory<3>& limit_arc, const SystemParams& p,
                                            const Table1Params& t1, const SeparatrixOptions& opt) {
  if (limit_arc.states.size() < 2) throw std::invalid_argument("limit arc must be recorded");
  SeparatrixOutcome o;

  const State end = State::from(limit_arc.states.back());
  for (const auto& [eq, side] : {std::pair{kSPlus, Side::Plus}, std::pair{kSMinus, Side::Minus}}) {
    if (equilibria_stable(p) && norm(end - eq) <= t1.eps_eq) {
      o.kind = OutcomeKind::CaptureSameSide;  // relative side fixed by the caller
      o.side = side;
      return o;
    }
  }

  bool escaped = false;
  try {
    o.ftle = arc_ftle(limit_arc, p, t1, opt);
  } catch (const FtleEscape&) {
    escaped = true;
  }

  const SideStats st = arc_side_stats(limit_arc, opt.discard_fraction);
  o.wing_visits_plus = st.wing_plus;
  o.wing_visits_minus = st.wing_minus;

  if (escaped || o.ftle > opt.chaos_threshold) {
    o.kind = OutcomeKind::ChaoticOrUndecided;
    const MergeSplit ms = merge_split_from(st);
    o.side = ms == MergeSplit::Merged ? Side::Both : ms == MergeSplit::Split ? split_side(st) : Side::None;
    return o;
  }
  if (st.wing_plus > 0 && st.wing_minus > 0) {
    o.kind = OutcomeKind::LimitCycleEight;
    o.side = Side::Both;
    o.period = 2.0 * st.mean_crossing_gap;
  } else {
    o.kind = OutcomeKind::LimitCycleOneSided;
    o.side = st.crossings == 0 ? (st.x_max > 0.0 ? Side::Plus : Side::Minus) : split_side(st);
    const auto maxima = x_maxima(limit_arc, limit_arc.times.front());
    if (maxima.size() >= 2)
      o.period = (maxima.back().first - maxima.front().first) / static_cast<double>(maxima.size() - 1);
  }
  return o;
}

/// Follows the trajectory from y0 over T_trans with the escape/capture events, then over
/// T_lim, and classifies the limit set. `sign` fixes which equilibrium counts as the
/// same side.
inline SeparatrixRun track_trajectory(const SystemParams& p, const State& y0, int sign,
                                      const Table1Params& t1, const SeparatrixOptions& opt = {}) {
  p.validate();
  t1.validate();
  SeparatrixRun run;
  run.params = p;
  run.pp = path_point_from(p);
  run.sign = sign >= 0 ? +1 : -1;
  run.seed = y0;

  IntegratorConfig cfg;
  cfg.rel_tol = t1.rel_tol;
  cfg.abs_tol = t1.abs_tol;
  cfg.max_step = opt.max_step;
  cfg.max_time = t1.t_trans;
  cfg.record = opt.record;
  const Events events = detail::separatrix_events(t1.r_inf, t1.eps_eq, equilibria_stable(p));

  try {
    run.trans_traj = integrate(p, y0, cfg, events);
  } catch (const IntegrationError& e) {
    throw IntegrationError(std::string("separatrix transient: ") + e.what(), e.time(), e.last_state());
  }
  run.final_state = State::from(run.trans_traj.y_final);
  if (auto o = detail::terminal_outcome(run.trans_traj, run.sign, 0.0)) {
    run.outcome = *o;
    return run;
  }

  cfg.max_time = t1.t_lim;
  cfg.record = true;
  cfg.record_dense = true;
  cfg.initial_step = run.trans_traj.last_step;
  Trajectory<3> lim;
  try {
    lim = integrate(p, run.final_state, cfg, events);
  } catch (const IntegrationError& e) {
    throw IntegrationError(std::string("separatrix limit arc: ") + e.what(), e.time(), e.last_state());
  }
  run.final_state = State::from(lim.y_final);
  if (auto o = detail::terminal_outcome(lim, run.sign, t1.t_trans)) {
    run.outcome = *o;
  } else {
    run.outcome = classify_limit_set(lim, p, t1, opt);
    if (run.outcome.kind == OutcomeKind::CaptureSameSide) {
      const bool plus = run.outcome.side == Side::Plus;
      if (plus != (run.sign > 0)) run.outcome.kind = OutcomeKind::CaptureOppositeSide;
    }
  }
  if (opt.record) run.limit_traj = std::move(lim);
  return run;
}

/// Tracks the separatrix released from S0 along sign * v_u.
inline SeparatrixRun run_separatrix(const SystemParams& p, int sign, const Table1Params& t1,
                                    const SeparatrixOptions& opt = {}) {
  p.validate();
  const State seed = seed_separatrix(saddle_data(p), sign, opt.seed_offset);
  SeparatrixRun run = track_trajectory(p, seed, sign, t1, opt);
  run.seed_offset = opt.seed_offset;
  return run;
}

inline SeparatrixRun run_separatrix(const PathPoint& pp, int sign, const Table1Params& t1,
                                    const SeparatrixOptions& opt = {}) {
  SeparatrixRun run = run_separatrix(path_params(pp), sign, t1, opt);
  run.pp = pp;
  return run;
}

/// Real eigenpair of the Jacobian at S+ when the other two eigenvalues are complex.
struct SaddleFocusData {
  double real_eigenvalue = 0.0;
  Vec3 real_eigenvector{};
  double complex_real_part = 0.0;
  double complex_imag_part = 0.0;
};

/// Returns nothing unless S+ is a saddle-focus (one real eigenvalue whose sign
/// differs from the real part of the complex pair).
inline std::optional<SaddleFocusData> saddle_focus_data(const SystemParams& p) {
  const Mat3 J = jacobian(p, kSPlus);
  // Coefficients of det(mu I - J) = mu^3 + c2 mu^2 + c1 mu + c0.
  const double tr = J[0][0] + J[1][1] + J[2][2];
  double minors = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j) minors += J[i][i] * J[j][j] - J[i][j] * J[j][i];
  const double det = J[0][0] * (J[1][1] * J[2][2] - J[1][2] * J[2][1]) -
                     J[0][1] * (J[1][0] * J[2][2] - J[1][2] * J[2][0]) +
                     J[0][2] * (J[1][0] * J[2][1] - J[1][1] * J[2][0]);
  const double c2 = -tr, c1 = minors, c0 = -det;
  auto poly = [&](double m) { return ((m + c2) * m + c1) * m + c0; };
  // Bracket the real root.
  double lo = -1.0, hi = 1.0;
  while (poly(lo) > 0.0) lo *= 2.0;
  while (poly(hi) < 0.0) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (poly(mid) < 0.0 ? lo : hi) = mid;
  }
  const double mu = 0.5 * (lo + hi);
  // Deflate: mu^2 + b mu + c with b = c2 + mu, c = c1 + mu b.
  const double b = c2 + mu;
  const double c = c1 + mu * b;
  const double disc = b * b - 4.0 * c;
  if (disc >= 0.0) return std::nullopt;
  const double re = -b / 2.0;
  if ((re > 0.0) == (mu > 0.0)) return std::nullopt;

  // Eigenvector: cross product of two rows of (J - mu I).
  Mat3 A = J;
  for (int i = 0; i < 3; ++i) A[i][i] -= mu;
  auto cross = [](const Vec3& a, const Vec3& bb) {
    return Vec3{a[1] * bb[2] - a[2] * bb[1], a[2] * bb[0] - a[0] * bb[2], a[0] * bb[1] - a[1] * bb[0]};
  };
  Vec3 v = cross(A[0], A[1]);
  if (norm(v) < 1e-12) v = cross(A[0], A[2]);
  SaddleFocusData d;
  d.real_eigenvalue = mu;
  d.real_eigenvector = detail::normalized_positive(v);
  d.complex_real_part = re;
  d.complex_imag_part = std::sqrt(-disc) / 2.0;
  return d;
}

/// One-dimensional separatrix of the saddle-focus S+, integrated forward when the
/// real eigenvalue is unstable and backward otherwise. For plotting only.
inline std::optional<Trajectory<3>> saddle_focus_separatrix(const SystemParams& p, double duration,
                                                            const Table1Params& t1,
                                                            double offset = 1e-6) {
  const auto sf = saddle_focus_data(p);
  if (!sf) return std::nullopt;
  const State seed = kSPlus + offset * State::from(sf->real_eigenvector);
  IntegratorConfig cfg;
  cfg.rel_tol = t1.rel_tol;
  cfg.abs_tol = t1.abs_tol;
  cfg.max_time = duration;
  const Events events{make_event("escape", [r = t1.r_inf](const State& y) { return norm(y) - r; },
                                 Crossing::Rising, true)};
  return integrate_ode<3>(model_rhs(p), 0.0, seed.array(), cfg, events, sf->real_eigenvalue < 0.0);
}

}  // namespace lorenzlike
