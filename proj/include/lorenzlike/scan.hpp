// Sweeps along the parameter path, refinement of the s-intervals where the separatrix
// changes its fate, and classification of (delta, beta) points by bifurcation scenario.
#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "lorenzlike/model.hpp"
#include "lorenzlike/parallel.hpp"
#include "lorenzlike/separatrix.hpp"

namespace lorenzlike {

enum class RegionLabel {
  SeparatrixSwap,          // opposite equilibrium -> nearest equilibrium
  EightCycleSplit,         // eight-type cycle -> two one-sided cycles
  CycleSwapNearAttractor,  // opposite one-sided cycle -> nearest one, cycles coexist with another attractor
  AttractorMerge,          // merged chaotic set -> split
  NonDissipative,
  None
};

inline std::string_view to_string(RegionLabel r) {
  switch (r) {
    case RegionLabel::SeparatrixSwap: return "SeparatrixSwap";
    case RegionLabel::EightCycleSplit: return "EightCycleSplit";
    case RegionLabel::CycleSwapNearAttractor: return "CycleSwapNearAttractor";
    case RegionLabel::AttractorMerge: return "AttractorMerge";
    case RegionLabel::NonDissipative: return "NonDissipative";
    case RegionLabel::None: return "None";
  }
  return "?";
}

/// Where an outcome leaves the separatrix relative to the side it was released towards.
enum class Relative { None, Same, Opposite, Both };

inline Relative relative_side(const SeparatrixOutcome& o, int sign) {
  const Side own = sign >= 0 ? Side::Plus : Side::Minus;
  auto rel = [own](Side s) {
    if (s == Side::Both) return Relative::Both;
    if (s == Side::None) return Relative::None;
    return s == own ? Relative::Same : Relative::Opposite;
  };
  switch (o.kind) {
    case OutcomeKind::EscapeToInfinity: return Relative::None;
    case OutcomeKind::CaptureSameSide: return Relative::Same;
    case OutcomeKind::CaptureOppositeSide: return Relative::Opposite;
    case OutcomeKind::LimitCycleEight: return Relative::Both;
    case OutcomeKind::LimitCycleOneSided:
    case OutcomeKind::ChaoticOrUndecided: return rel(o.side);
  }
  return Relative::None;
}

struct SweepSample {
  double s = 0.0;
  SeparatrixOutcome outcome;
  State final_state{};
};

struct BifurcationInterval {
  double s_lo = 0.0;
  double s_hi = 0.0;
  SeparatrixOutcome outcome_before;
  SeparatrixOutcome outcome_after;
  State state_after{};  // end of the run at s_hi
  int refinement_depth = 0;
  bool grazing = false;            // some level showed more than one change of regime
  bool chaotic_transient = false;  // chaotic behaviour seen just below the flip

  double width() const { return s_hi - s_lo; }
};

struct SweepResult {
  std::vector<SweepSample> samples;
  std::vector<BifurcationInterval> intervals;
  bool non_dissipative = false;
  std::optional<double> early_exit_at;  // s where CaptureSameSide stopped the sweep
};

struct ScanOptions {
  SeparatrixOptions separatrix{};
  int sign = +1;
  int max_depth = 12;
  unsigned threads = 1;
};

inline SweepSample sample_at(double delta, double beta, double s, const Table1Params& t1,
                             const ScanOptions& opt) {
  const SeparatrixRun run = run_separatrix(PathPoint{delta, beta, s}, opt.sign, t1, opt.separatrix);
  return {s, run.outcome, run.final_state};
}

/// Runs the separatrix at s = k * s_step0, k = 1, 2, ... while s < 1, recording every
/// pair of neighbours whose regimes differ. Stops after the first capture by the
/// nearest equilibrium.
inline SweepResult sweep_s(double delta, double beta, const Table1Params& t1, const ScanOptions& opt = {}) {
  t1.validate();
  PathPoint{delta, beta, 0.0}.validate();
  SweepResult res;
  bool all_escape = true;
  for (long k = 1;; ++k) {
    const double s = static_cast<double>(k) * t1.s_step0;
    if (s >= 1.0) break;
    SweepSample smp = sample_at(delta, beta, s, t1, opt);
    if (smp.outcome.kind != OutcomeKind::EscapeToInfinity) all_escape = false;
    if (!res.samples.empty() && !same_regime(res.samples.back().outcome, smp.outcome)) {
      BifurcationInterval iv;
      iv.s_lo = res.samples.back().s;
      iv.s_hi = s;
      iv.outcome_before = res.samples.back().outcome;
      iv.outcome_after = smp.outcome;
      iv.state_after = smp.final_state;
      res.intervals.push_back(iv);
    }
    const bool stop = smp.outcome.kind == OutcomeKind::CaptureSameSide;
    res.samples.push_back(std::move(smp));
    if (stop) {
      res.early_exit_at = s;
      break;
    }
  }
  res.non_dissipative = !res.samples.empty() && all_escape;
  return res;
}

/// Re-scans the bracket at a tenth of its width per level and keeps the first sub-interval
/// whose right end already shows the regime found at the upper end. Stops once the width
/// does not exceed eps or after max_depth levels. `sample` maps a parameter value to a run.
template <class Sampler>
BifurcationInterval refine_bracket(BifurcationInterval iv, Sampler&& sample, double eps, int max_depth) {
  if (!(iv.s_lo < iv.s_hi)) throw std::invalid_argument("refine: empty interval");
  if (same_regime(iv.outcome_before, iv.outcome_after))
    throw std::invalid_argument("refine: outcomes at the endpoints agree");
  const SeparatrixOutcome target = iv.outcome_after;
  if (iv.outcome_before.kind == OutcomeKind::ChaoticOrUndecided) iv.chaotic_transient = true;

  while (iv.width() > eps * (1.0 + 1e-9) && iv.refinement_depth < max_depth) {
    const double a = iv.s_lo;
    const double w = iv.s_hi - iv.s_lo;
    std::vector<SweepSample> level;
    level.reserve(11);
    level.push_back({a, iv.outcome_before, {}});
    for (int k = 1; k < 10; ++k) level.push_back(sample(a + w * k / 10.0));
    level.push_back({iv.s_hi, iv.outcome_after, iv.state_after});

    int changes = 0;
    for (std::size_t k = 1; k < level.size(); ++k)
      if (!same_regime(level[k - 1].outcome, level[k].outcome)) ++changes;
    if (changes > 1) iv.grazing = true;

    std::size_t k = 1;
    while (k + 1 < level.size() && !same_regime(level[k].outcome, target)) ++k;
    iv.s_lo = level[k - 1].s;
    iv.s_hi = level[k].s;
    iv.outcome_before = level[k - 1].outcome;
    iv.outcome_after = level[k].outcome;
    iv.state_after = level[k].final_state;
    ++iv.refinement_depth;
    if (iv.outcome_before.kind == OutcomeKind::ChaoticOrUndecided) iv.chaotic_transient = true;
  }
  return iv;
}

inline BifurcationInterval refine_interval(const BifurcationInterval& iv, double delta, double beta,
                                           const Table1Params& t1, const ScanOptions& opt = {}) {
  t1.validate();
  return refine_bracket(
      iv, [&](double s) { return sample_at(delta, beta, s, t1, opt); }, t1.eps_threshold, opt.max_depth);
}

namespace detail {

inline bool lands_near(const SeparatrixOutcome& o, int sign) {
  const Relative r = relative_side(o, sign);
  if (o.kind == OutcomeKind::ChaoticOrUndecided) return r == Relative::Same || r == Relative::Opposite;
  return r == Relative::Same;
}

}  // namespace detail

/// First interval where the separatrix stops reaching the far side, or the other side
/// altogether, and starts staying near the equilibrium it was released towards.
inline std::optional<std::size_t> principal_interval(const SweepResult& sw, int sign) {
  for (std::size_t i = 0; i < sw.intervals.size(); ++i) {
    const auto& iv = sw.intervals[i];
    if (iv.outcome_before.kind == OutcomeKind::EscapeToInfinity) continue;
    if (!detail::lands_near(iv.outcome_before, sign) && detail::lands_near(iv.outcome_after, sign)) return i;
  }
  return std::nullopt;
}

/// Whether the one-sided cycle reached at s_hi still attracts at s_lo, i.e. the cycles
/// coexist with whatever attracted the separatrix before the flip.
inline bool cycle_persists_below(const BifurcationInterval& iv, double delta, double beta,
                                 const Table1Params& t1, const ScanOptions& opt = {}) {
  const SystemParams p = path_params({delta, beta, iv.s_lo});
  const SeparatrixRun run = track_trajectory(p, iv.state_after, opt.sign, t1, opt.separatrix);
  return run.outcome.kind == OutcomeKind::LimitCycleOneSided &&
         relative_side(run.outcome, opt.sign) == relative_side(iv.outcome_after, opt.sign);
}

struct RegionVerdict {
  RegionLabel label = RegionLabel::None;
  std::string evidence;
};

/// Decision tree on the regimes on both sides of the principal interval.
inline RegionVerdict classify_region(double delta, double beta, const SweepResult& sw,
                                     const std::optional<BifurcationInterval>& iv, const Table1Params& t1,
                                     const ScanOptions& opt = {}) {
  RegionVerdict v;
  if (sw.non_dissipative) {
    v.label = RegionLabel::NonDissipative;
    v.evidence = "every s escaped";
    return v;
  }
  if (!iv) {
    v.evidence = "no flip towards the nearest side";
    return v;
  }
  const auto& b = iv->outcome_before;
  const auto& a = iv->outcome_after;
  const Relative rb = relative_side(b, opt.sign);
  const Relative ra = relative_side(a, opt.sign);
  v.evidence = b.label() + " -> " + a.label();

  if (b.kind == OutcomeKind::CaptureOppositeSide && a.kind == OutcomeKind::CaptureSameSide) {
    v.label = RegionLabel::SeparatrixSwap;
  } else if (b.kind == OutcomeKind::ChaoticOrUndecided && rb == Relative::Both &&
             a.kind == OutcomeKind::ChaoticOrUndecided) {
    v.label = RegionLabel::AttractorMerge;
  } else if (a.kind == OutcomeKind::LimitCycleOneSided && ra == Relative::Same) {
    if (b.kind == OutcomeKind::LimitCycleOneSided && rb == Relative::Opposite) {
      v.label = RegionLabel::CycleSwapNearAttractor;
    } else if (rb == Relative::Both) {
      const bool coexist = cycle_persists_below(*iv, delta, beta, t1, opt);
      v.label = coexist ? RegionLabel::CycleSwapNearAttractor : RegionLabel::EightCycleSplit;
      v.evidence += coexist ? "; cycle persists below" : "; cycle absent below";
    }
  }
  return v;
}

struct ScanRow {
  double delta = 0.0;
  double beta = 0.0;
  RegionLabel label = RegionLabel::None;
  std::optional<BifurcationInterval> interval;
  std::string evidence;
  std::optional<double> early_exit_at;
  std::size_t runs = 0;
};

/// Full pipeline at one (delta, beta): sweep, refine the principal interval, classify.
inline ScanRow scan_point(double delta, double beta, const Table1Params& t1, const ScanOptions& opt = {}) {
  ScanRow row;
  row.delta = delta;
  row.beta = beta;
  const SweepResult sw = sweep_s(delta, beta, t1, opt);
  row.early_exit_at = sw.early_exit_at;
  row.runs = sw.samples.size();
  if (auto idx = principal_interval(sw, opt.sign)) {
    row.interval = refine_interval(sw.intervals[*idx], delta, beta, t1, opt);
    row.runs += static_cast<std::size_t>(row.interval->refinement_depth) * 9;
  }
  const RegionVerdict v = classify_region(delta, beta, sw, row.interval, t1, opt);
  row.label = v.label;
  row.evidence = v.evidence;
  return row;
}

struct GridAxis {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t n = 1;

  void validate(std::string_view name) const {
    if (n == 0) throw std::invalid_argument(std::string(name) + ": empty axis");
    if (!(lo <= hi)) throw std::invalid_argument(std::string(name) + ": inverted range");
    if (n == 1 && lo != hi) throw std::invalid_argument(std::string(name) + ": one point needs lo == hi");
  }
  double at(std::size_t i) const { return n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1); }
};

/// Row-major (delta outer, beta inner) scan; grid points run on a pool of worker threads and
/// land in their grid slot, so the result does not depend on the thread count.
inline std::vector<ScanRow> scan_grid(const GridAxis& deltas, const GridAxis& betas, const Table1Params& t1,
                                      const ScanOptions& opt = {},
                                      const std::function<void(const ScanRow&)>& on_done = {}) {
  deltas.validate("delta");
  betas.validate("beta");
  t1.validate();
  const std::size_t total = deltas.n * betas.n;
  std::vector<ScanRow> rows(total);
  std::mutex mu;
  parallel_for(total, opt.threads, [&](std::size_t i) {
    rows[i] = scan_point(deltas.at(i / betas.n), betas.at(i % betas.n), t1, opt);
    if (on_done) {
      std::lock_guard lock(mu);
      on_done(rows[i]);
    }
  });
  return rows;
}

/// Merged/split signature of the set that attracts the separatrix at one path point.
inline MergeSplit merge_split_signature(const PathPoint& pp, const Table1Params& t1, const ScanOptions& opt = {}) {
  SeparatrixOptions so = opt.separatrix;
  so.record = true;
  const SeparatrixRun run = run_separatrix(pp, opt.sign, t1, so);
  if (!run.limit_traj) return MergeSplit::Undecided;
  return merge_split_signature(*run.limit_traj, so.discard_fraction);
}

}  // namespace lorenzlike
