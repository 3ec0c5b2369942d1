// Adaptive Dormand-Prince 5(4) integration with PI step control, the 4th order
// continuous extension and event location on the dense interpolant.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lorenzlike/model.hpp"

namespace lorenzlike {

template <std::size_t N>
using Vector = std::array<double, N>;

struct IntegratorConfig {
  double rel_tol = 1e-12;
  double abs_tol = 1e-12;
  double max_step = 0.1;
  double initial_step = 0.0;  // 0 selects the starting step automatically
  double max_time = 1e3;      // integration length |t_end - t0|
  long max_steps = 100'000'000;
  bool record = true;         // keep every node
  bool record_dense = true;   // with record: also keep the dense segments

  void validate() const {
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) throw std::invalid_argument("tolerances must be > 0");
    if (!(max_time > 0.0)) throw std::invalid_argument("max_time must be > 0");
    if (!(max_step > 0.0)) throw std::invalid_argument("max_step must be > 0");
    if (initial_step < 0.0) throw std::invalid_argument("initial_step must be >= 0");
  }
};

enum class Crossing { Any, Rising, Falling };

template <std::size_t N>
struct EventSpec {
  std::function<double(const Vector<N>&)> fn;
  Crossing direction = Crossing::Any;
  bool terminal = false;
  std::string label;
  // Optional filter evaluated at the located crossing; rejected crossings are ignored.
  std::function<bool(const Vector<N>&)> accept{};
};

template <std::size_t N>
struct EventHit {
  double t = 0.0;
  Vector<N> y{};
  std::string label;
  std::size_t index = 0;  // position in the EventSpec list
};

/// Continuous extension over one accepted step, theta = (t - t0)/h in [0, 1].
template <std::size_t N>
struct DenseSegment {
  double t0 = 0.0;
  double h = 0.0;
  std::array<Vector<N>, 5> r{};

  Vector<N> operator()(double theta) const {
    Vector<N> y;
    const double t1 = 1.0 - theta;
    for (std::size_t i = 0; i < N; ++i)
      y[i] = r[0][i] + theta * (r[1][i] + t1 * (r[2][i] + theta * (r[3][i] + t1 * r[4][i])));
    return y;
  }
  Vector<N> at(double t) const { return (*this)((t - t0) / h); }
};

enum class Termination { TimeExhausted, Event };

template <std::size_t N>
struct Trajectory {
  std::vector<double> times;
  std::vector<Vector<N>> states;
  std::vector<DenseSegment<N>> dense;  // dense[i] spans [times[i], times[i+1]]
  std::vector<EventHit<N>> events;
  Termination termination = Termination::TimeExhausted;
  std::string terminal_label;
  double t_final = 0.0;
  Vector<N> y_final{};
  double last_step = 0.0;
  long steps = 0;
  long rejected = 0;

  double t_start() const { return times.empty() ? t_final : times.front(); }
};

/// Thrown on step-size underflow or a non-finite state.
class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, double t, std::vector<double> last_state)
      : std::runtime_error(what), t_(t), last_(std::move(last_state)) {}
  double time() const { return t_; }
  const std::vector<double>& last_state() const { return last_; }

 private:
  double t_;
  std::vector<double> last_;
};

namespace dopri {
// Butcher tableau of the Dormand-Prince 5(4) pair.
inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                        a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                        a64 = 49.0 / 176, a65 = -5103.0 / 18656;
inline constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                        a75 = -2187.0 / 6784, a76 = 11.0 / 84;
inline constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                        e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
inline constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                        d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                        d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;
}  // namespace dopri

namespace detail {

template <std::size_t N>
bool all_finite(const Vector<N>& y) {
  return std::all_of(y.begin(), y.end(), [](double c) { return std::isfinite(c); });
}

template <std::size_t N>
double error_norm(const Vector<N>& err, const Vector<N>& y0, const Vector<N>& y1,
                  const IntegratorConfig& cfg) {
  double acc = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    const double sc = cfg.abs_tol + cfg.rel_tol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    const double q = err[i] / sc;
    acc += q * q;
  }
  return std::sqrt(acc / static_cast<double>(N));
}

template <std::size_t N>
double scaled_norm(const Vector<N>& v, const Vector<N>& y, const IntegratorConfig& cfg) {
  double acc = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    const double q = v[i] / (cfg.abs_tol + cfg.rel_tol * std::abs(y[i]));
    acc += q * q;
  }
  return std::sqrt(acc / static_cast<double>(N));
}

template <std::size_t N, class Rhs>
double initial_step(Rhs& f, double t, const Vector<N>& y, const Vector<N>& f0, double dir,
                    const IntegratorConfig& cfg) {
  const double d0 = scaled_norm<N>(y, y, cfg);
  const double d1 = scaled_norm<N>(f0, y, cfg);
  double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  h0 = std::min(h0, cfg.max_step);
  Vector<N> y1;
  for (std::size_t i = 0; i < N; ++i) y1[i] = y[i] + dir * h0 * f0[i];
  const Vector<N> f1 = f(t + dir * h0, y1);
  Vector<N> df;
  for (std::size_t i = 0; i < N; ++i) df[i] = f1[i] - f0[i];
  const double d2 = scaled_norm<N>(df, y, cfg) / h0;
  const double dm = std::max(d1, d2);
  const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 0.2);
  return std::min({100.0 * h0, h1, cfg.max_step});
}

template <std::size_t N>
bool crosses(double g0, double g1, Crossing dir) {
  const bool rising = g0 < 0.0 && g1 >= 0.0;
  const bool falling = g0 > 0.0 && g1 <= 0.0;
  switch (dir) {
    case Crossing::Rising: return rising;
    case Crossing::Falling: return falling;
    default: return rising || falling;
  }
}

/// Bracketed root of g on the interpolant, Illinois regula falsi with a bisection safeguard.
template <std::size_t N>
double locate_root(const DenseSegment<N>& seg, const std::function<double(const Vector<N>&)>& g,
                   double ga, double gb, double theta_hi) {
  double a = 0.0, b = theta_hi;
  const double width_tol = 1e-13 / std::max(std::abs(seg.h), 1e-300);
  int side = 0;
  for (int it = 0; it < 200 && (b - a) > width_tol; ++it) {
    double m = (a * gb - b * ga) / (gb - ga);
    if (!(m > a && m < b) || it % 4 == 3) m = 0.5 * (a + b);
    const double gm = g(seg(m));
    if (gm == 0.0) return m;
    if ((gm < 0.0) == (ga < 0.0)) {
      a = m;
      ga = gm;
      if (side == -1) gb *= 0.5;
      side = -1;
    } else {
      b = m;
      gb = gm;
      if (side == +1) ga *= 0.5;
      side = +1;
    }
  }
  // Report the endpoint past the crossing so terminal states lie on the far side.
  return b;
}

}  // namespace detail

/// Integrates y' = f(t, y) from t0 over cfg.max_time (negative direction if backward).
/// `observer(segment, t_end_of_step, y_end)` is invoked for each accepted (possibly truncated) step.
template <std::size_t N, class Rhs, class Observer>
Trajectory<N> integrate_ode(Rhs&& f, double t0, const Vector<N>& y0, const IntegratorConfig& cfg,
                            const std::vector<EventSpec<N>>& events, Observer&& observer,
                            bool backward = false) {
  using namespace dopri;
  cfg.validate();
  if (!detail::all_finite<N>(y0))
    throw IntegrationError("non-finite initial state", t0, {y0.begin(), y0.end()});

  const double dir = backward ? -1.0 : 1.0;
  const double t_end = t0 + dir * cfg.max_time;

  Trajectory<N> traj;
  if (cfg.record) {
    traj.times.push_back(t0);
    traj.states.push_back(y0);
  }

  double t = t0;
  Vector<N> y = y0;
  Vector<N> k1 = f(t, y);
  double h = cfg.initial_step > 0.0 ? std::min(cfg.initial_step, cfg.max_step)
                                    : detail::initial_step<N>(f, t, y, k1, dir, cfg);
  std::vector<double> g_prev(events.size());
  for (std::size_t e = 0; e < events.size(); ++e) g_prev[e] = events[e].fn(y);

  constexpr double kBeta = 0.04;
  constexpr double kExpo = 0.2 - kBeta * 0.75;
  constexpr double kSafe = 0.9;
  double facold = 1e-4;
  bool last_rejected = false;

  Vector<N> k2, k3, k4, k5, k6, k7, ytmp, ynew, err;
  while (true) {
    const double remaining = dir * (t_end - t);
    if (remaining <= 0.0) break;
    bool final_step = false;
    if (h >= remaining) {
      h = remaining;
      final_step = true;
    }
    if (traj.steps + traj.rejected >= cfg.max_steps)
      throw IntegrationError("step budget exhausted", t, {y.begin(), y.end()});
    if (h < 10.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t)))
      throw IntegrationError("step size underflow", t, {y.begin(), y.end()});

    const double hs = dir * h;
    for (std::size_t i = 0; i < N; ++i) ytmp[i] = y[i] + hs * a21 * k1[i];
    k2 = f(t + c2 * hs, ytmp);
    for (std::size_t i = 0; i < N; ++i) ytmp[i] = y[i] + hs * (a31 * k1[i] + a32 * k2[i]);
    k3 = f(t + c3 * hs, ytmp);
    for (std::size_t i = 0; i < N; ++i)
      ytmp[i] = y[i] + hs * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    k4 = f(t + c4 * hs, ytmp);
    for (std::size_t i = 0; i < N; ++i)
      ytmp[i] = y[i] + hs * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    k5 = f(t + c5 * hs, ytmp);
    for (std::size_t i = 0; i < N; ++i)
      ytmp[i] = y[i] + hs * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    const double t_new = final_step ? t_end : t + hs;
    k6 = f(t + hs, ytmp);
    for (std::size_t i = 0; i < N; ++i)
      ynew[i] = y[i] + hs * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
    k7 = f(t_new, ynew);
    for (std::size_t i = 0; i < N; ++i)
      err[i] = hs * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);

    double enorm = detail::error_norm<N>(err, y, ynew, cfg);
    if (!std::isfinite(enorm) || !detail::all_finite<N>(ynew)) enorm = 1e10;

    const double fac11 = std::pow(enorm, kExpo);
    if (enorm <= 1.0) {
      double fac = fac11 / std::pow(facold, kBeta);
      fac = std::clamp(fac / kSafe, 0.2, 10.0);
      double h_next = h / fac;
      if (last_rejected) h_next = std::min(h_next, h);
      h_next = std::min(h_next, cfg.max_step);
      facold = std::max(enorm, 1e-4);
      last_rejected = false;

      DenseSegment<N> seg;
      seg.t0 = t;
      seg.h = hs;
      for (std::size_t i = 0; i < N; ++i) {
        const double ydiff = ynew[i] - y[i];
        const double bspl = hs * k1[i] - ydiff;
        seg.r[0][i] = y[i];
        seg.r[1][i] = ydiff;
        seg.r[2][i] = bspl;
        seg.r[3][i] = ydiff - hs * k7[i] - bspl;
        seg.r[4][i] = hs * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] +
                            d7 * k7[i]);
      }

      // Event detection on the accepted step.
      struct Found {
        double theta;
        std::size_t index;
      };
      std::vector<Found> found;
      std::vector<double> g_new(events.size());
      for (std::size_t e = 0; e < events.size(); ++e) {
        g_new[e] = events[e].fn(ynew);
        if (detail::crosses<N>(g_prev[e], g_new[e], events[e].direction)) {
          const double th = detail::locate_root<N>(seg, events[e].fn, g_prev[e], g_new[e], 1.0);
          if (!events[e].accept || events[e].accept(th >= 1.0 ? ynew : seg(th)))
            found.push_back({th, e});
        }
      }
      std::stable_sort(found.begin(), found.end(),
                       [](const Found& a, const Found& b) { return a.theta < b.theta; });

      double t_stop = t_new;
      Vector<N> y_stop = ynew;
      bool stop = false;
      for (const Found& fd : found) {
        EventHit<N> hit;
        hit.y = seg(fd.theta);
        hit.t = fd.theta >= 1.0 ? t_new : t + fd.theta * hs;
        if (fd.theta >= 1.0) hit.y = ynew;
        hit.label = events[fd.index].label;
        hit.index = fd.index;
        traj.events.push_back(hit);
        if (events[fd.index].terminal) {
          stop = true;
          t_stop = hit.t;
          y_stop = hit.y;
          traj.termination = Termination::Event;
          traj.terminal_label = hit.label;
          break;
        }
      }

      ++traj.steps;
      if (cfg.record) {
        if (cfg.record_dense) traj.dense.push_back(seg);
        traj.times.push_back(t_stop);
        traj.states.push_back(y_stop);
      }
      observer(seg, t_stop, y_stop);
      traj.last_step = h;

      t = t_stop;
      y = y_stop;
      if (stop) break;
      k1 = k7;
      g_prev = std::move(g_new);
      h = h_next;
      if (final_step) break;
    } else {
      h /= std::min(1.0 / 0.2, fac11 / kSafe);
      last_rejected = true;
      ++traj.rejected;
    }
  }

  traj.t_final = t;
  traj.y_final = y;
  return traj;
}

template <std::size_t N, class Rhs>
Trajectory<N> integrate_ode(Rhs&& f, double t0, const Vector<N>& y0, const IntegratorConfig& cfg,
                            const std::vector<EventSpec<N>>& events = {}, bool backward = false) {
  return integrate_ode<N>(std::forward<Rhs>(f), t0, y0, cfg, events,
                          [](const DenseSegment<N>&, double, const Vector<N>&) {}, backward);
}

using Events = std::vector<EventSpec<3>>;

inline EventSpec<3> make_event(std::string label, std::function<double(const State&)> fn,
                               Crossing direction = Crossing::Any, bool terminal = false,
                               std::function<bool(const State&)> accept = {}) {
  EventSpec<3> e{[fn = std::move(fn)](const Vector<3>& y) { return fn(State::from(y)); }, direction,
                 terminal, std::move(label), {}};
  if (accept) e.accept = [a = std::move(accept)](const Vector<3>& y) { return a(State::from(y)); };
  return e;
}

inline auto model_rhs(const SystemParams& p) {
  return [p](double, const Vector<3>& y) { return rhs(p, State::from(y)).array(); };
}

/// Integrates the Lorenz-like system from y0 at t = 0 over cfg.max_time.
inline Trajectory<3> integrate(const SystemParams& p, const State& y0, const IntegratorConfig& cfg,
                               const Events& events = {}) {
  return integrate_ode<3>(model_rhs(p), 0.0, y0.array(), cfg, events);
}

/// Value of the continuous extension at time t; stored nodes are returned verbatim.
template <std::size_t N>
Vector<N> eval_dense(const Trajectory<N>& traj, double t) {
  if (traj.times.empty() || traj.dense.empty()) {
    if (!traj.times.empty() && t == traj.times.front()) return traj.states.front();
    throw std::out_of_range("trajectory has no dense output");
  }
  const bool forward = traj.times.back() >= traj.times.front();
  const double lo = forward ? traj.times.front() : traj.times.back();
  const double hi = forward ? traj.times.back() : traj.times.front();
  if (!(t >= lo && t <= hi)) throw std::out_of_range("time outside trajectory span");

  std::size_t i;
  if (forward) {
    auto it = std::upper_bound(traj.times.begin(), traj.times.end(), t);
    i = static_cast<std::size_t>(std::distance(traj.times.begin(), it));
  } else {
    auto it = std::upper_bound(traj.times.begin(), traj.times.end(), t, std::greater<double>());
    i = static_cast<std::size_t>(std::distance(traj.times.begin(), it));
  }
  // times[i-1] is the last node not past t.
  if (i > 0 && traj.times[i - 1] == t) return traj.states[i - 1];
  const std::size_t seg = std::min(i == 0 ? 0 : i - 1, traj.dense.size() - 1);
  return traj.dense[seg].at(t);
}

inline State state_at(const Trajectory<3>& traj, double t) {
  return State::from(eval_dense<3>(traj, t));
}

}  // namespace lorenzlike
