// Lorenz-like system  x' = v,  v' = -lambda v - x u + x - x^3,  u' = -alpha u - beta x v
// together with its parameter path, saddle eigen-structure and the analytic
// inequalities that bound the region of homoclinic existence.
#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

namespace lorenzlike {

/// Phase point (x, v, u); v is the velocity-like coordinate.
struct State {
  double x = 0.0;
  double v = 0.0;
  double u = 0.0;

  friend constexpr State operator+(State a, const State& b) {
    return {a.x + b.x, a.v + b.v, a.u + b.u};
  }
  friend constexpr State operator-(State a, const State& b) {
    return {a.x - b.x, a.v - b.v, a.u - b.u};
  }
  friend constexpr State operator*(double k, const State& a) {
    return {k * a.x, k * a.v, k * a.u};
  }
  friend constexpr bool operator==(const State&, const State&) = default;

  constexpr std::array<double, 3> array() const { return {x, v, u}; }
  static constexpr State from(const std::array<double, 3>& a) { return {a[0], a[1], a[2]}; }
};

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<Vec3, 3>;

inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline double norm(const State& s) { return norm(s.array()); }
inline double dot(const State& a, const Vec3& b) { return dot(a.array(), b); }

inline bool finite(const State& s) {
  return std::isfinite(s.x) && std::isfinite(s.v) && std::isfinite(s.u);
}

/// Parameters (lambda, alpha, beta) of the Lorenz-like system.
struct SystemParams {
  double lambda = 0.0;
  double alpha = 1.0;
  double beta = 1.0;

  void validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
      throw std::domain_error("lambda must be finite and >= 0");
    if (!(alpha > 0.0) || !std::isfinite(alpha))
      throw std::domain_error("alpha must be finite and > 0");
    if (!(beta > 0.0) || !std::isfinite(beta))
      throw std::domain_error("beta must be finite and > 0");
  }
};

/// Point (delta, beta, s) on the path lambda = s/sqrt(1-s), alpha = delta sqrt(1-s).
struct PathPoint {
  double delta = 1.0;
  double beta = 1.0;
  double s = 0.0;

  /// Domain of the path map. Region membership is a separate question, see in_region().
  void validate() const {
    if (!(delta > 0.0) || !std::isfinite(delta)) throw std::domain_error("delta must be > 0");
    if (!(beta > 0.0) || !std::isfinite(beta)) throw std::domain_error("beta must be > 0");
    if (!(s >= 0.0) || !(s < 1.0)) throw std::domain_error("s must lie in [0, 1)");
  }
};

/// Region 0 < delta <= 1.1, 0 < beta < 2 + delta scanned for homoclinic bifurcations.
inline bool in_region(double delta, double beta) {
  return delta > 0.0 && delta <= 1.1 && beta > 0.0 && beta < 2.0 + delta;
}

/// delta > 1 gives a negative saddle value at S0.
inline bool negative_saddle_value(double delta) { return delta > 1.0; }

constexpr State kS0{0.0, 0.0, 0.0};
constexpr State kSPlus{1.0, 0.0, 0.0};
constexpr State kSMinus{-1.0, 0.0, 0.0};

inline State rhs(const SystemParams& p, const State& y) {
  return {y.v,
          -p.lambda * y.v - y.x * y.u + y.x - y.x * y.x * y.x,
          -p.alpha * y.u - p.beta * y.x * y.v};
}

inline Mat3 jacobian(const SystemParams& p, const State& y) {
  return {{{0.0, 1.0, 0.0},
           {1.0 - y.u - 3.0 * y.x * y.x, -p.lambda, -y.x},
           {-p.beta * y.v, -p.beta * y.x, -p.alpha}}};
}

/// Divergence of the vector field; constant in phase space.
inline double divergence(const SystemParams& p) { return -p.lambda - p.alpha; }

inline SystemParams path_params(const PathPoint& pp) {
  pp.validate();
  const double r = std::sqrt(1.0 - pp.s);
  return {pp.s / r, pp.delta * r, pp.beta};
}

/// Inverse of path_params: the unique s in [0,1) with s/sqrt(1-s) = lambda, and delta = alpha/sqrt(1-s).
inline PathPoint path_point_from(const SystemParams& p) {
  p.validate();
  const double l2 = p.lambda * p.lambda;
  // s^2 + lambda^2 s - lambda^2 = 0, written to avoid cancellation for large lambda.
  const double s = l2 == 0.0 ? 0.0 : 2.0 * l2 / (l2 + std::sqrt(l2 * l2 + 4.0 * l2));
  return {p.alpha / std::sqrt(1.0 - s), p.beta, s};
}

/// Eigen-structure of the linearisation at S0.
struct SaddleData {
  double lam_s = 0.0;   // -alpha, eigenvector along u
  double lam_ss = 0.0;  // strong stable
  double lam_u = 0.0;   // unstable
  Vec3 v_s{};
  Vec3 v_ss{};
  Vec3 v_u{};
  double sigma0 = 0.0;  // saddle value lam_u + lam_s
};

namespace detail {
inline Vec3 normalized_positive(Vec3 v) {
  const double n = norm(v);
  for (double& c : v) c /= n;
  for (double c : v) {
    if (c != 0.0) {
      if (c < 0.0)
        for (double& d : v) d = -d;
      break;
    }
  }
  return v;
}
}  // namespace detail

/// General form, valid for any (lambda, alpha, beta).
inline SaddleData saddle_data(const SystemParams& p) {
  const double root = std::sqrt(p.lambda * p.lambda + 4.0);
  SaddleData d;
  d.lam_s = -p.alpha;
  d.lam_u = 2.0 / (root + p.lambda);  // (root - lambda)/2 without cancellation
  d.lam_ss = -(root + p.lambda) / 2.0;
  d.v_s = {0.0, 0.0, 1.0};
  d.v_u = detail::normalized_positive({1.0, d.lam_u, 0.0});
  d.v_ss = detail::normalized_positive({1.0, d.lam_ss, 0.0});
  d.sigma0 = d.lam_u + d.lam_s;
  return d;
}

/// Closed forms along the path: lam_u = sqrt(1-s), lam_ss = -1/sqrt(1-s), sigma0 = (1-delta) sqrt(1-s).
inline SaddleData saddle_data(const PathPoint& pp) {
  pp.validate();
  const double r = std::sqrt(1.0 - pp.s);
  SaddleData d;
  d.lam_s = -pp.delta * r;
  d.lam_ss = -1.0 / r;
  d.lam_u = r;
  d.v_s = {0.0, 0.0, 1.0};
  d.v_ss = detail::normalized_positive({-r, 1.0, 0.0});
  d.v_u = detail::normalized_positive({1.0 / r, 1.0, 0.0});
  d.sigma0 = (1.0 - pp.delta) * r;
  return d;
}

/// S+ and S- are asymptotically stable iff beta < lambda (lambda alpha + alpha^2 + 2) / (lambda + alpha).
inline bool equilibria_stable(const SystemParams& p) {
  const double lam = p.lambda;
  const double a = p.alpha;
  return lam + a > 0.0 && p.beta < lam * (lam * a + a * a + 2.0) / (lam + a);
}

/// Evaluation of the analytic sufficient conditions at one parameter point.
struct ConditionReport {
  bool in_region = false;
  bool ineq11_holds = false;  // alpha (sqrt(lambda^2+4) + lambda) > 2 (beta - 2)
  double L = 0.0;
  double K = 0.0;
  double M = 0.0;
  double theta0 = 1.0;
  std::optional<double> x0;   // positive root of theta0^2 + x^2 - (M/2) x^4 = 0, needs M > 0
  bool splus_stable = false;  // beta < lambda (lambda alpha + alpha^2 + 2) / (lambda + alpha)
  bool lemma3_holds = false;  // lambda^2 > 4 ((1 + beta/2) x0^2 - 1)
  bool negative_saddle_value = false;
};

inline double x0_root(double M, double theta0) {
  // (M/2) X^2 - X - theta0^2 = 0 with X = x^2.
  const double X = (1.0 + std::sqrt(1.0 + 2.0 * M * theta0 * theta0)) / M;
  return std::sqrt(X);
}

inline ConditionReport check_conditions(const PathPoint& pp, double theta0 = 1.0) {
  const SystemParams p = path_params(pp);
  ConditionReport r;
  r.in_region = in_region(pp.delta, pp.beta);
  r.negative_saddle_value = negative_saddle_value(pp.delta);
  r.theta0 = theta0;

  const double root = std::sqrt(p.lambda * p.lambda + 4.0);
  r.ineq11_holds = p.alpha * (root + p.lambda) > 2.0 * (p.beta - 2.0);

  // K(L) = beta L / (alpha + 2L) increases with L, so the smallest admissible L is the best choice.
  const double l_min = 2.0 / (root + p.lambda);
  r.L = l_min * (1.0 + 1e-6);
  r.K = p.beta * r.L / (p.alpha + 2.0 * r.L);
  r.M = 1.0 - r.K;
  if (r.K >= 1.0) r.ineq11_holds = false;
  if (r.M > 0.0) r.x0 = x0_root(r.M, theta0);

  const double lam = p.lambda;
  r.splus_stable = equilibria_stable(p);
  if (r.x0) {
    const double x02 = *r.x0 * *r.x0;
    r.lemma3_holds = r.ineq11_holds && lam * lam > 4.0 * ((1.0 + p.beta / 2.0) * x02 - 1.0);
  }
  return r;
}

/// V = v^2 - u^2/beta - x^2 + x^4/2 and its derivative along the flow.
struct LyapunovValue {
  double V = 0.0;
  double Vdot = 0.0;
};

inline LyapunovValue lyapunov_V(const SystemParams& p, const State& y) {
  const double x2 = y.x * y.x;
  return {y.v * y.v - y.u * y.u / p.beta - x2 + x2 * x2 / 2.0,
          2.0 * (-p.lambda * y.v * y.v + (p.alpha / p.beta) * y.u * y.u)};
}

inline Vec3 lyapunov_grad(const SystemParams& p, const State& y) {
  return {-2.0 * y.x + 2.0 * y.x * y.x * y.x, 2.0 * y.v, -2.0 * y.u / p.beta};
}

/// Classical Lorenz parameters  x' = -sigma (x - y),  y' = r x - d y - x z,  z' = -b z + x y.
struct LorenzParams {
  double sigma = 10.0;
  double r = 28.0;
  double b = 8.0 / 3.0;
  double d = 1.0;
};

inline SystemParams lorenz_to_lorenzlike(const LorenzParams& lp) {
  if (!(lp.sigma > 0.0)) throw std::domain_error("sigma must be > 0");
  if (!(lp.r > lp.d)) throw std::domain_error("r must exceed d");
  const double scale = std::sqrt(lp.sigma * (lp.r - lp.d));
  return {(lp.sigma + lp.d) / scale, lp.b / scale, (2.0 * lp.sigma - lp.b) / lp.sigma};
}

/// Involution (x, v, u) -> (-x, -v, u); the vector field is equivariant under it.
constexpr State symmetry_image(const State& y) { return {-y.x, -y.v, y.u}; }

}  // namespace lorenzlike
