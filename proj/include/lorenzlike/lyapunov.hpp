// Finite-time Lyapunov exponents by joint integration of the flow and its
// variational equation, with periodic Gram-Schmidt re-orthonormalisation.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "lorenzlike/integrate.hpp"
#include "lorenzlike/model.hpp"

namespace lorenzlike {

struct FtleResult {
  std::array<double, 3> exponents{};  // descending
  double dimension = 0.0;             // Kaplan-Yorke
  double t_end = 0.0;
  State x0;
  State x_end;
  double max_frame_defect = 0.0;      // worst |Q^T Q - I| entry seen right after re-orthonormalisation
};

struct FtleOptions {
  double reorth_dt = 0.5;
  double r_inf = 100.0;
  bool align_flow = false;  // first frame vector along the vector field at x0
  IntegratorConfig integrator{};
};

class FtleEscape : public std::runtime_error {
 public:
  explicit FtleEscape(double t) : std::runtime_error("trajectory escaped before t_end"), t_(t) {}
  double time() const { return t_; }

 private:
  double t_;
};

/// Kaplan-Yorke interpolation j + (LE_1 + ... + LE_j)/|LE_{j+1}|, j the largest index
/// with a nonnegative partial sum; clamped to [0, 3].
inline double kaplan_yorke(const std::array<double, 3>& le) {
  double partial = 0.0;
  std::size_t j = 0;
  double sum_j = 0.0;
  for (std::size_t k = 0; k < 3; ++k) {
    partial += le[k];
    if (partial >= 0.0) {
      j = k + 1;
      sum_j = partial;
    } else {
      break;
    }
  }
  if (j == 0) return 0.0;
  if (j == 3) return 3.0;
  const double d = static_cast<double>(j) + sum_j / std::abs(le[j]);
  return std::clamp(d, 0.0, 3.0);
}

namespace detail {

// Layout: y[0..2] = state, y[3 + 3*c + r] = entry (r, c) of the tangent frame.
inline Vector<12> variational_rhs(const SystemParams& p, const Vector<12>& z) {
  const State s{z[0], z[1], z[2]};
  const State f = rhs(p, s);
  const Mat3 J = jacobian(p, s);
  Vector<12> out{};
  out[0] = f.x;
  out[1] = f.v;
  out[2] = f.u;
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t r = 0; r < 3; ++r) {
      double acc = 0.0;
      for (std::size_t k = 0; k < 3; ++k) acc += J[r][k] * z[3 + 3 * c + k];
      out[3 + 3 * c + r] = acc;
    }
  return out;
}

/// Modified Gram-Schmidt on the frame columns; returns the log of the diagonal of R.
inline std::array<double, 3> orthonormalize(Vector<12>& z) {
  std::array<double, 3> logs{};
  for (std::size_t c = 0; c < 3; ++c) {
    double* col = &z[3 + 3 * c];
    for (std::size_t prev = 0; prev < c; ++prev) {
      const double* q = &z[3 + 3 * prev];
      const double proj = col[0] * q[0] + col[1] * q[1] + col[2] * q[2];
      for (std::size_t r = 0; r < 3; ++r) col[r] -= proj * q[r];
    }
    const double n = std::sqrt(col[0] * col[0] + col[1] * col[1] + col[2] * col[2]);
    logs[c] = std::log(n);
    for (std::size_t r = 0; r < 3; ++r) col[r] /= n;
  }
  return logs;
}

inline double frame_defect(const Vector<12>& z) {
  double worst = 0.0;
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = 0; b < 3; ++b) {
      double d = 0.0;
      for (std::size_t r = 0; r < 3; ++r) d += z[3 + 3 * a + r] * z[3 + 3 * b + r];
      worst = std::max(worst, std::abs(d - (a == b ? 1.0 : 0.0)));
    }
  return worst;
}

}  // namespace detail

inline FtleResult ftle(const SystemParams& p, const State& x0, double t_end,
                       const FtleOptions& opt = {}) {
  if (!(t_end > 0.0)) throw std::invalid_argument("t_end must be > 0");
  if (!(opt.reorth_dt > 0.0)) throw std::invalid_argument("reorth_dt must be > 0");

  Vector<12> z{};
  z[0] = x0.x;
  z[1] = x0.v;
  z[2] = x0.u;
  z[3] = z[7] = z[11] = 1.0;
  if (opt.align_flow) {
    const State f0 = rhs(p, x0);
    const double n = norm(f0);
    if (n > 0.0) {
      // Replace the standard basis vector that is most parallel to f0.
      const std::array<double, 3> fa = f0.array();
      std::size_t k = 0;
      for (std::size_t i = 1; i < 3; ++i)
        if (std::abs(fa[i]) > std::abs(fa[k])) k = i;
      std::array<std::size_t, 3> order{k, (k + 1) % 3, (k + 2) % 3};
      Vector<12> frame{};
      for (std::size_t r = 0; r < 3; ++r) frame[3 + r] = fa[r] / n;
      for (std::size_t c = 1; c < 3; ++c) frame[3 + 3 * c + order[c]] = 1.0;
      for (std::size_t i = 3; i < 12; ++i) z[i] = frame[i];
      detail::orthonormalize(z);
    }
  }

  auto f = [&p](double, const Vector<12>& y) { return detail::variational_rhs(p, y); };
  const std::vector<EventSpec<12>> escape{
      {[r = opt.r_inf](const Vector<12>& y) {
         return std::sqrt(y[0] * y[0] + y[1] * y[1] + y[2] * y[2]) - r;
       },
       Crossing::Rising, true, "escape"}};

  IntegratorConfig cfg = opt.integrator;
  cfg.record = false;

  FtleResult res;
  res.x0 = x0;
  res.t_end = t_end;
  std::array<double, 3> sums{};
  double t = 0.0;
  while (t < t_end) {
    const double chunk = std::min(opt.reorth_dt, t_end - t);
    if (chunk <= 0.0) break;
    cfg.max_time = chunk;
    const Trajectory<12> tr = integrate_ode<12>(f, t, z, cfg, escape);
    if (tr.termination == Termination::Event) throw FtleEscape(tr.t_final);
    z = tr.y_final;
    cfg.initial_step = tr.last_step;
    const auto logs = detail::orthonormalize(z);
    for (std::size_t k = 0; k < 3; ++k) sums[k] += logs[k];
    res.max_frame_defect = std::max(res.max_frame_defect, detail::frame_defect(z));
    t += chunk;
    if (t_end - t < 1e-12 * t_end) break;
  }

  for (std::size_t k = 0; k < 3; ++k) res.exponents[k] = sums[k] / t_end;
  std::sort(res.exponents.begin(), res.exponents.end(), std::greater<double>());
  res.dimension = kaplan_yorke(res.exponents);
  res.x_end = {z[0], z[1], z[2]};
  return res;
}

}  // namespace lorenzlike
