// Poincare sections near S0, the local map Sigma_in -> Sigma_out, the global map back to
// Sigma_in, iteration of colored point grids and the one-dimensional return-map test.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lorenzlike/integrate.hpp"
#include "lorenzlike/model.hpp"
#include "lorenzlike/parallel.hpp"

namespace lorenzlike {

enum class SectionKind { In, Out };

/// Plane through `origin` with unit `normal` and in-plane orthonormal basis (e1, e2).
/// Sigma_out is the pair of planes <y, v_u> = +-eps; `origin` is the + branch.
struct Section {
  SectionKind kind = SectionKind::In;
  double eps = 0.0;
  State origin{};
  Vec3 normal{};
  Vec3 e1{};
  Vec3 e2{};

  double signed_distance(const State& y) const { return dot(y - origin, normal); }
  std::array<double, 2> coords(const State& y) const { return {dot(y - origin, e1), dot(y - origin, e2)}; }
  State point(double a, double b, int branch = +1) const {
    const State o = branch >= 0 ? origin : -1.0 * origin;
    return o + State{a * e1[0] + b * e2[0], a * e1[1] + b * e2[1], a * e1[2] + b * e2[2]};
  }
};

struct SectionPair {
  Section in;
  Section out;
};

/// Sigma_in: origin eps_in v_s, normal v_s, basis (v_u, v_ss).
/// Sigma_out: origin eps_out v_u, normal v_u, basis (v_ss, v_s).
inline SectionPair build_sections(const SaddleData& sd, double eps_in, double eps_out) {
  if (!(eps_in > 0.0) || !(eps_out > 0.0)) throw std::invalid_argument("section distances must be > 0");
  SectionPair sp;
  sp.in = {SectionKind::In, eps_in, eps_in * State::from(sd.v_s), sd.v_s, sd.v_u, sd.v_ss};
  sp.out = {SectionKind::Out, eps_out, eps_out * State::from(sd.v_u), sd.v_u, sd.v_ss, sd.v_s};
  return sp;
}

inline SectionPair build_sections(const SystemParams& p, double eps_in, double eps_out) {
  return build_sections(saddle_data(p), eps_in, eps_out);
}

inline SectionPair build_sections(const PathPoint& pp, double eps_in, double eps_out) {
  return build_sections(saddle_data(pp), eps_in, eps_out);
}

struct PoincareOptions {
  double eps_in = 0.5;
  double eps_out = 0.5;
  double window = 0.0;           // accepted |a|, |b| on Sigma_in; 0 means eps_in
  double timeout = 1e4;          // per point and per map
  double converge_radius = 1e-10;
  double r_inf = 100.0;
  double rel_tol = 1e-12;
  double abs_tol = 1e-12;
  double max_step = 0.1;
  unsigned threads = 1;

  double in_window() const { return window > 0.0 ? window : eps_in; }
  void validate() const {
    if (!(eps_in > 0.0)) throw std::invalid_argument("eps_in must be > 0");
    if (!(eps_out > 0.0)) throw std::invalid_argument("eps_out must be > 0");
    if (!(window >= 0.0)) throw std::invalid_argument("window must be >= 0");
    if (!(timeout > 0.0)) throw std::invalid_argument("timeout must be > 0");
    if (!(r_inf > 0.0)) throw std::invalid_argument("r_inf must be > 0");
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) throw std::invalid_argument("tolerances must be > 0");
  }
};

enum class PointStatus { Hit, Converged, Escaped, Timeout, Failed, Lost };

inline std::string_view to_string(PointStatus s) {
  switch (s) {
    case PointStatus::Hit: return "hit";
    case PointStatus::Converged: return "converged";
    case PointStatus::Escaped: return "escaped";
    case PointStatus::Timeout: return "timeout";
    case PointStatus::Failed: return "failed";
    case PointStatus::Lost: return "lost";
  }
  return "?";
}

struct GridPoint {
  std::size_t id = 0;
  double a = 0.0;
  double b = 0.0;
  double color = 0.0;
  int branch = 0;  // +-1 on Sigma_out, 0 on Sigma_in
  PointStatus status = PointStatus::Hit;
  double t_hit = 0.0;
  State y{};
};

enum class GridShape { Rectangle, HalfFrame, Points };

struct ColoredGrid {
  GridShape shape = GridShape::Rectangle;
  std::vector<GridPoint> points;
};

struct GridImage {
  SectionKind on = SectionKind::In;
  std::vector<GridPoint> points;

  std::size_t hits() const {
    return static_cast<std::size_t>(
        std::count_if(points.begin(), points.end(), [](const GridPoint& g) { return g.status == PointStatus::Hit; }));
  }
};

struct Rect {
  double a_lo = 0.0;
  double a_hi = 0.0;
  double b_lo = 0.0;
  double b_hi = 0.0;

  bool contains(double a, double b) const { return a >= a_lo && a <= a_hi && b >= b_lo && b <= b_hi; }
  bool strictly_contains(double a, double b) const { return a > a_lo && a < a_hi && b > b_lo && b < b_hi; }
};

namespace detail {

inline double row_color(double a, const Rect& r, double a_ref) {
  const double ref = std::clamp(a_ref, r.a_lo, r.a_hi);
  const double span = std::max(std::abs(r.a_hi - ref), std::abs(r.a_lo - ref));
  return span > 0.0 ? std::abs(a - ref) / span : 0.0;
}

inline double lin(double lo, double hi, std::size_t i, std::size_t n) {
  return n == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
}

}  // namespace detail

/// na rows of constant a (parallel to v_ss), nb points per row. Colors grow with the distance
/// of the row from a_ref, the trace of the plane {v_s, v_ss} (a = 0) by default.
inline ColoredGrid rectangle_grid(const Section& in, const Rect& r, std::size_t na, std::size_t nb,
                                  double a_ref = 0.0) {
  if (in.kind != SectionKind::In) throw std::invalid_argument("grids live on Sigma_in");
  if (na == 0 || nb == 0) throw std::invalid_argument("grid needs at least one row and column");
  if (!(r.a_lo <= r.a_hi) || !(r.b_lo <= r.b_hi)) throw std::invalid_argument("inverted rectangle");
  ColoredGrid g;
  g.shape = GridShape::Rectangle;
  g.points.reserve(na * nb);
  for (std::size_t i = 0; i < na; ++i) {
    const double a = detail::lin(r.a_lo, r.a_hi, i, na);
    for (std::size_t j = 0; j < nb; ++j) {
      GridPoint p;
      p.id = g.points.size();
      p.a = a;
      p.b = detail::lin(r.b_lo, r.b_hi, j, nb);
      p.color = detail::row_color(a, r, a_ref);
      p.y = in.point(p.a, p.b);
      g.points.push_back(p);
    }
  }
  return g;
}

/// Cut-out for a half frame: centred on the separatrix hit in a, and running from just below
/// (or above) the hit through the nearest b edge, so the frame is U-shaped and the hit with
/// a relative `margin` neighbourhood lies inside the removed part.
inline Rect half_frame_cut(const Rect& outer, double a_hit, double b_hit, double inner_fraction = 0.5,
                           double margin = 0.05) {
  const double wa = outer.a_hi - outer.a_lo;
  const double wb = outer.b_hi - outer.b_lo;
  const double ha = std::max(0.5 * inner_fraction, margin) * wa;
  const double hb = std::max(0.5 * inner_fraction, margin) * wb;
  Rect cut{a_hit - ha, a_hit + ha, 0.0, 0.0};
  const double inf = std::numeric_limits<double>::infinity();
  if (b_hit >= 0.5 * (outer.b_lo + outer.b_hi)) {
    cut.b_lo = b_hit - hb;
    cut.b_hi = inf;
  } else {
    cut.b_lo = -inf;
    cut.b_hi = b_hit + hb;
  }
  return cut;
}

inline ColoredGrid half_frame_grid(const Section& in, const Rect& outer, const Rect& cut, std::size_t na,
                                   std::size_t nb, double a_ref = 0.0) {
  ColoredGrid full = rectangle_grid(in, outer, na, nb, a_ref);
  ColoredGrid g;
  g.shape = GridShape::HalfFrame;
  for (auto& p : full.points) {
    if (cut.strictly_contains(p.a, p.b)) continue;
    p.id = g.points.size();
    g.points.push_back(p);
  }
  return g;
}

inline GridImage to_image(const ColoredGrid& g) { return {SectionKind::In, g.points}; }

/// Point-wise symmetry image (x, v, u) -> (-x, -v, u); on Sigma_in it is (a, b) -> (-a, -b).
inline GridImage mirror(const GridImage& img) {
  GridImage m = img;
  for (auto& p : m.points) {
    p.a = -p.a;
    p.b = -p.b;
    p.branch = -p.branch;
    p.y = symmetry_image(p.y);
  }
  return m;
}

namespace detail {

inline IntegratorConfig map_config(const PoincareOptions& opt) {
  IntegratorConfig c;
  c.rel_tol = opt.rel_tol;
  c.abs_tol = opt.abs_tol;
  c.max_step = opt.max_step;
  c.max_time = opt.timeout;
  c.record = false;
  return c;
}

inline Events local_events(const SectionPair& sp, const PoincareOptions& opt) {
  const Vec3 vu = sp.out.normal;
  const double eps = sp.out.eps;
  return {make_event("out", [vu, eps](const State& y) { return std::abs(dot(y, vu)) - eps; }, Crossing::Rising, true),
          make_event("escape", [r = opt.r_inf](const State& y) { return norm(y) - r; }, Crossing::Rising, true),
          make_event("converge", [c = opt.converge_radius](const State& y) { return norm(y) - c; },
                     Crossing::Falling, true)};
}

inline Events global_events(const SectionPair& sp, const PoincareOptions& opt) {
  const Section in = sp.in;
  const double w = opt.in_window();
  return {make_event(
              "in", [in](const State& y) { return in.signed_distance(y); }, Crossing::Falling, true,
              [in, w](const State& y) {
                const auto c = in.coords(y);
                return std::abs(c[0]) <= w && std::abs(c[1]) <= w;
              }),
          make_event("escape", [r = opt.r_inf](const State& y) { return norm(y) - r; }, Crossing::Rising, true),
          make_event("converge", [c = opt.converge_radius](const State& y) { return norm(y) - c; },
                     Crossing::Falling, true)};
}

inline GridPoint map_point(const SystemParams& p, const GridPoint& src, const Section& target, const Events& ev,
                           const IntegratorConfig& cfg) {
  GridPoint out = src;
  if (src.status != PointStatus::Hit) {
    out.status = PointStatus::Lost;
    return out;
  }
  try {
    const Trajectory<3> tr = integrate(p, src.y, cfg, ev);
    if (tr.termination == Termination::TimeExhausted) {
      out.status = PointStatus::Timeout;
      return out;
    }
    const State y = State::from(tr.y_final);
    if (tr.terminal_label == "escape") {
      out.status = PointStatus::Escaped;
    } else if (tr.terminal_label == "converge") {
      out.status = PointStatus::Converged;
    } else {
      out.status = PointStatus::Hit;
      out.t_hit = tr.t_final;
      out.y = y;
      if (target.kind == SectionKind::Out) {
        out.branch = dot(y, target.normal) >= 0.0 ? +1 : -1;
        out.a = dot(y, target.e1);
        out.b = dot(y, target.e2);
      } else {
        out.branch = 0;
        const auto c = target.coords(y);
        out.a = c[0];
        out.b = c[1];
      }
    }
  } catch (const IntegrationError&) {
    out.status = PointStatus::Failed;
  }
  return out;
}

inline GridImage map_all(const SystemParams& p, const GridImage& src, const Section& target, const Events& ev,
                         const PoincareOptions& opt) {
  const IntegratorConfig cfg = map_config(opt);
  GridImage img;
  img.on = target.kind;
  img.points.resize(src.points.size());
  parallel_for(src.points.size(), opt.threads,
               [&](std::size_t i) { img.points[i] = map_point(p, src.points[i], target, ev, cfg); });
  return img;
}

}  // namespace detail

/// Pi_loc: each hit on Sigma_in is followed until |<y, v_u>| = eps_out.
inline GridImage map_local(const SystemParams& p, const SectionPair& sp, const GridImage& on_in,
                           const PoincareOptions& opt) {
  if (on_in.on != SectionKind::In) throw std::invalid_argument("map_local expects points on Sigma_in");
  opt.validate();
  return detail::map_all(p, on_in, sp.out, detail::local_events(sp, opt), opt);
}

/// Pi_glob: each hit on Sigma_out is followed to its next downward crossing of Sigma_in inside
/// the acceptance window.
inline GridImage map_global(const SystemParams& p, const SectionPair& sp, const GridImage& on_out,
                            const PoincareOptions& opt) {
  if (on_out.on != SectionKind::Out) throw std::invalid_argument("map_global expects points on Sigma_out");
  opt.validate();
  return detail::map_all(p, on_out, sp.in, detail::global_events(sp, opt), opt);
}

inline GridImage poincare_map(const SystemParams& p, const SectionPair& sp, const GridImage& on_in,
                              const PoincareOptions& opt) {
  return map_global(p, sp, map_local(p, sp, on_in, opt), opt);
}

/// Images Pi^i(grid) for i = 0..n; colors and ids travel with the points.
inline std::vector<GridImage> iterate_grid(const SystemParams& p, const SectionPair& sp, const ColoredGrid& grid,
                                           std::size_t n, const PoincareOptions& opt) {
  std::vector<GridImage> seq;
  seq.reserve(n + 1);
  seq.push_back(to_image(grid));
  for (std::size_t i = 0; i < n; ++i) seq.push_back(poincare_map(p, sp, seq.back(), opt));
  return seq;
}

/// Largest distance by which a hit leaves a section plane; Sigma_out residuals use |<y, v_u>|.
inline double max_section_residual(const GridImage& img, const SectionPair& sp) {
  double worst = 0.0;
  for (const auto& g : img.points) {
    if (g.status != PointStatus::Hit) continue;
    const double r = img.on == SectionKind::In ? sp.in.signed_distance(g.y)
                                               : std::abs(dot(g.y, sp.out.normal)) - sp.out.eps;
    worst = std::max(worst, std::abs(r));
  }
  return worst;
}

/// Separatrix Gamma^sign's first downward crossing of Sigma_in inside the window.
inline std::optional<GridPoint> separatrix_hit(const SystemParams& p, const SectionPair& sp, int sign,
                                               double seed_offset, const PoincareOptions& opt) {
  GridPoint start;
  start.y = (sign >= 0 ? seed_offset : -seed_offset) * State::from(sp.out.normal);
  start.branch = sign >= 0 ? +1 : -1;
  const GridPoint hit =
      detail::map_point(p, start, sp.in, detail::global_events(sp, opt), detail::map_config(opt));
  if (hit.status != PointStatus::Hit) return std::nullopt;
  return hit;
}

/// Consecutive downward crossings of Sigma_in (inside the window) along the trajectory from y0,
/// after skipping `t_skip` time units.
inline std::vector<State> attractor_section_points(const SystemParams& p, const SectionPair& sp, const State& y0,
                                                   std::size_t count, double t_skip, const PoincareOptions& opt) {
  opt.validate();
  IntegratorConfig cfg = detail::map_config(opt);
  State y = y0;
  if (t_skip > 0.0) {
    cfg.max_time = t_skip;
    y = State::from(integrate(p, y, cfg).y_final);
  }
  Events ev = detail::global_events(sp, opt);
  ev[0].terminal = false;
  std::vector<State> pts;
  double budget = opt.timeout * static_cast<double>(std::max<std::size_t>(count, 1));
  while (pts.size() < count && budget > 0.0) {
    cfg.max_time = std::min(budget, opt.timeout);
    const Trajectory<3> tr = integrate(p, y, cfg, ev);
    for (const auto& e : tr.events)
      if (e.label == "in" && pts.size() < count) pts.push_back(State::from(e.y));
    if (tr.termination == Termination::Event) break;
    budget -= tr.t_final;
    y = State::from(tr.y_final);
    if (tr.events.empty()) break;
  }
  return pts;
}

struct PrincipalAxis {
  std::array<double, 2> mean{};
  std::array<double, 2> axis{};  // unit
  double aspect_ratio = 0.0;     // sqrt of the eigenvalue ratio of the 2x2 covariance
};

inline PrincipalAxis principal_axis(const std::vector<std::array<double, 2>>& pts) {
  if (pts.size() < 2) throw std::invalid_argument("principal axis needs at least two points");
  PrincipalAxis pa;
  for (const auto& q : pts) {
    pa.mean[0] += q[0];
    pa.mean[1] += q[1];
  }
  const double n = static_cast<double>(pts.size());
  pa.mean[0] /= n;
  pa.mean[1] /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (const auto& q : pts) {
    const double dx = q[0] - pa.mean[0], dy = q[1] - pa.mean[1];
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  const double tr = sxx + syy;
  const double disc = std::sqrt(std::max(0.0, 0.25 * (sxx - syy) * (sxx - syy) + sxy * sxy));
  const double l1 = 0.5 * tr + disc;
  const double l2 = std::max(0.0, 0.5 * tr - disc);
  double ux = sxy, uy = l1 - sxx;
  if (std::hypot(ux, uy) < 1e-300) {
    ux = sxx >= syy ? 1.0 : 0.0;
    uy = sxx >= syy ? 0.0 : 1.0;
  }
  const double h = std::hypot(ux, uy);
  pa.axis = {ux / h, uy / h};
  pa.aspect_ratio = l2 > 0.0 ? std::sqrt(l1 / l2) : std::numeric_limits<double>::infinity();
  return pa;
}

struct TwoPieceFit {
  double breakpoint = 0.0;
  double value_at_break = 0.0;
  double slope_left = 0.0;
  double slope_right = 0.0;
  double rms = 0.0;
};

/// Continuous two-piece linear least-squares fit y = c + s_l min(x - x_b, 0) + s_r max(x - x_b, 0),
/// with the breakpoint chosen among the data abscissae. Needs x sorted ascending.
inline TwoPieceFit fit_two_piece(const std::vector<double>& x, const std::vector<double>& y,
                                 std::size_t min_side = 3) {
  const std::size_t n = x.size();
  if (n != y.size() || n < 2 * min_side + 1) throw std::invalid_argument("two-piece fit needs more points");
  TwoPieceFit best;
  best.rms = std::numeric_limits<double>::infinity();
  for (std::size_t k = min_side; k + min_side < n; ++k) {
    const double xb = x[k];
    // Normal equations for the three basis functions 1, l = min(x - xb, 0), r = max(x - xb, 0).
    double A[3][3] = {}, rhs[3] = {};
    for (std::size_t i = 0; i < n; ++i) {
      const double f[3] = {1.0, std::min(x[i] - xb, 0.0), std::max(x[i] - xb, 0.0)};
      for (int r = 0; r < 3; ++r) {
        rhs[r] += f[r] * y[i];
        for (int c = 0; c < 3; ++c) A[r][c] += f[r] * f[c];
      }
    }
    // Gaussian elimination with partial pivoting.
    int piv[3] = {0, 1, 2};
    bool singular = false;
    for (int c = 0; c < 3 && !singular; ++c) {
      int m = c;
      for (int r = c + 1; r < 3; ++r)
        if (std::abs(A[piv[r]][c]) > std::abs(A[piv[m]][c])) m = r;
      std::swap(piv[c], piv[m]);
      if (std::abs(A[piv[c]][c]) < 1e-300) {
        singular = true;
        break;
      }
      for (int r = c + 1; r < 3; ++r) {
        const double f = A[piv[r]][c] / A[piv[c]][c];
        for (int cc = c; cc < 3; ++cc) A[piv[r]][cc] -= f * A[piv[c]][cc];
        rhs[piv[r]] -= f * rhs[piv[c]];
      }
    }
    if (singular) continue;
    double sol[3];
    for (int r = 2; r >= 0; --r) {
      double acc = rhs[piv[r]];
      for (int c = r + 1; c < 3; ++c) acc -= A[piv[r]][c] * sol[c];
      sol[r] = acc / A[piv[r]][r];
    }
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double fit = sol[0] + sol[1] * std::min(x[i] - xb, 0.0) + sol[2] * std::max(x[i] - xb, 0.0);
      ss += (y[i] - fit) * (y[i] - fit);
    }
    const double rms = std::sqrt(ss / static_cast<double>(n));
    if (rms < best.rms) best = {xb, sol[0], sol[1], sol[2], rms};
  }
  if (!std::isfinite(best.rms)) throw std::runtime_error("two-piece fit failed");
  return best;
}

class DegenerateSegment : public std::runtime_error {
 public:
  explicit DegenerateSegment(double aspect)
      : std::runtime_error("section points do not form a segment (aspect ratio " + std::to_string(aspect) + " < 5)"),
        aspect_(aspect) {}
  double aspect_ratio() const { return aspect_; }

 private:
  double aspect_;
};

struct TentMapResult {
  std::vector<std::pair<double, double>> table;  // (coord, image coord), sorted by coord
  TwoPieceFit fit;
  // exp of the mean log |local slope| over the sampled points: the parameter of the tent map
  // with the same Lyapunov exponent, invariant under smooth changes of the coordinate.
  double effective_parameter = 0.0;
  bool unimodal = false;     // increasing then decreasing
  double aspect_ratio = 0.0;
  std::size_t dropped = 0;   // points whose image missed Sigma_in
};

/// Fits the return-map table; orientation of the coordinate is chosen so that a tent-like
/// table has its single peak in the interior.
inline TentMapResult tent_map_from_pairs(std::vector<std::pair<double, double>> table) {
  std::sort(table.begin(), table.end());
  std::vector<double> x, y;
  for (const auto& [c, ic] : table) {
    x.push_back(c);
    y.push_back(ic);
  }
  TentMapResult res;
  res.fit = fit_two_piece(x, y);
  if (res.fit.slope_left < 0.0 && res.fit.slope_right > 0.0) {
    // A valley becomes a peak under c -> -c applied to both coordinates.
    for (auto& [c, ic] : table) {
      c = -c;
      ic = -ic;
    }
    return tent_map_from_pairs(std::move(table));
  }
  res.unimodal = res.fit.slope_left > 0.0 && res.fit.slope_right < 0.0;

  // Local slopes by least squares over +-half_window neighbours in coordinate order, taking
  // only neighbours on the same side of the breakpoint so no window spans the kink.
  const std::size_t n = x.size();
  const std::size_t half_window = std::max<std::size_t>(3, n / 100);
  const double bp = res.fit.breakpoint;
  double log_sum = 0.0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const bool left = x[i] <= bp;
    const std::size_t lo = i >= half_window ? i - half_window : 0;
    const std::size_t hi = std::min(n, i + half_window + 1);
    double mx = 0.0, my = 0.0, m = 0.0;
    for (std::size_t j = lo; j < hi; ++j) {
      if ((x[j] <= bp) != left) continue;
      mx += x[j];
      my += y[j];
      m += 1.0;
    }
    if (m < 3.0) continue;
    mx /= m;
    my /= m;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t j = lo; j < hi; ++j) {
      if ((x[j] <= bp) != left) continue;
      sxx += (x[j] - mx) * (x[j] - mx);
      sxy += (x[j] - mx) * (y[j] - my);
    }
    if (sxx <= 0.0 || sxy == 0.0) continue;
    log_sum += std::log(std::abs(sxy / sxx));
    ++used;
  }
  if (used > 0) res.effective_parameter = std::exp(log_sum / static_cast<double>(used));
  res.table = std::move(table);
  return res;
}

/// Points whose first in-plane coordinate has the given sign: one of two mirror-image attractors.
inline std::vector<State> one_side(const std::vector<State>& pts, const Section& in, int sign) {
  std::vector<State> out;
  for (const auto& q : pts)
    if ((in.coords(q)[0] > 0.0) == (sign > 0)) out.push_back(q);
  return out;
}

/// Treats points of an attractor on Sigma_in as a segment: orders them along the principal
/// axis and compares each coordinate with that of its image under Pi.
inline TentMapResult tent_map_test(const SystemParams& p, const SectionPair& sp, const std::vector<State>& points,
                                   const PoincareOptions& opt) {
  std::vector<std::array<double, 2>> c2;
  c2.reserve(points.size());
  for (const auto& q : points) c2.push_back(sp.in.coords(q));
  const PrincipalAxis pa = principal_axis(c2);
  if (pa.aspect_ratio < 5.0) throw DegenerateSegment(pa.aspect_ratio);
  auto coord = [&pa](const std::array<double, 2>& q) {
    return (q[0] - pa.mean[0]) * pa.axis[0] + (q[1] - pa.mean[1]) * pa.axis[1];
  };

  GridImage src;
  src.on = SectionKind::In;
  for (std::size_t i = 0; i < points.size(); ++i) {
    GridPoint g;
    g.id = i;
    g.a = c2[i][0];
    g.b = c2[i][1];
    g.y = points[i];
    src.points.push_back(g);
  }
  const GridImage img = poincare_map(p, sp, src, opt);
  std::vector<std::pair<double, double>> table;
  std::size_t dropped = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (img.points[i].status != PointStatus::Hit) {
      ++dropped;
      continue;
    }
    table.emplace_back(coord(c2[i]), coord({img.points[i].a, img.points[i].b}));
  }
  TentMapResult res = tent_map_from_pairs(std::move(table));
  res.aspect_ratio = pa.aspect_ratio;
  res.dropped = dropped;
  return res;
}

}  // namespace lorenzlike
