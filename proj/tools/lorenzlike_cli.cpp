// Command-line front end: check, separatrix, scan, poincare, lyapunov.
// Exit codes: 0 success, 2 invalid input, 3 numerical failure.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lorenzlike/integrate.hpp"
#include "lorenzlike/io.hpp"
#include "lorenzlike/lyapunov.hpp"
#include "lorenzlike/model.hpp"
#include "lorenzlike/poincare.hpp"
#include "lorenzlike/scan.hpp"
#include "lorenzlike/separatrix.hpp"

#ifndef LORENZLIKE_VERSION
#define LORENZLIKE_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using namespace lorenzlike;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) parts.push_back(item);
  return parts;
}

double to_double(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ValidationError(what + ": not a number: '" + s + "'");
  }
}

// "v" or "lo:hi:n"
GridAxis parse_axis(const std::string& s, const std::string& what) {
  const auto parts = split(s, ':');
  GridAxis ax;
  if (parts.size() == 1) {
    ax.lo = ax.hi = to_double(parts[0], what);
    ax.n = 1;
  } else if (parts.size() == 3) {
    ax.lo = to_double(parts[0], what);
    ax.hi = to_double(parts[1], what);
    const double n = to_double(parts[2], what);
    if (!(n >= 1.0) || n != static_cast<double>(static_cast<std::size_t>(n)))
      throw ValidationError(what + ": point count must be a positive integer");
    ax.n = static_cast<std::size_t>(n);
    if (ax.n == 1 && ax.lo != ax.hi) throw ValidationError(what + ": a single point needs lo == hi");
  } else {
    throw ValidationError(what + ": expected a value or lo:hi:n");
  }
  try {
    ax.validate(what);
  } catch (const std::invalid_argument& e) {
    throw ValidationError(e.what());
  }
  return ax;
}

double single_value(const std::string& s, const std::string& what) {
  const GridAxis ax = parse_axis(s, what);
  if (ax.n != 1) throw ValidationError(what + ": this command takes a single value");
  return ax.lo;
}

State parse_state(const std::string& s, const std::string& what) {
  const auto parts = split(s, ',');
  if (parts.size() != 3) throw ValidationError(what + ": expected x,v,u");
  return {to_double(parts[0], what), to_double(parts[1], what), to_double(parts[2], what)};
}

struct Settings {
  std::string out_dir = ".";
  unsigned threads = 1;
  std::string delta = "0.9";
  std::string beta = "0.2";
  double s = 0.0;
  Table1Params t1{};
  SeparatrixOptions sep{};
  PoincareOptions pc{};
  std::size_t iterations = 100;
  int max_depth = 12;

  // run metadata, written to the manifest and ignored on input
  std::string run_command;
  std::string run_version;
  std::string run_started;
  double run_wall_clock = 0.0;
  std::string run_outputs;

  // subcommand options
  bool mirror = false;
  bool saddle_focus = false;
  std::string rect;
  std::size_t na = 200;
  std::size_t nb = 40;
  bool half_frame = false;
  bool tent = false;
  std::size_t tent_points = 400;
  int tent_side = +1;
  std::string x0;
  double t_end = 1000.0;
  double reorth_dt = 0.5;
};

void add_common(CLI::App& app, Settings& st) {
  app.option_defaults()->always_capture_default();
  app.add_option("--out-dir,--out_dir", st.out_dir, "Directory for CSV files and the manifest");
  app.add_option("--threads", st.threads, "Worker threads for scans and grid maps")->check(CLI::PositiveNumber);
  app.add_option("--delta", st.delta, "delta, or lo:hi:n for scans");
  app.add_option("--beta", st.beta, "beta, or lo:hi:n for scans");
  app.add_option("--s", st.s, "Path parameter s in [0, 1)");
  app.add_option("--rel-tol,--rel_tol,--RelTol", st.t1.rel_tol, "Integrator relative tolerance");
  app.add_option("--abs-tol,--abs_tol,--AbsTol", st.t1.abs_tol, "Integrator absolute tolerance");
  app.add_option("--t-trans,--t_trans,--T_trans", st.t1.t_trans, "Transient integration time");
  app.add_option("--t-lim,--t_lim,--T_lim", st.t1.t_lim, "Limit-set integration time");
  app.add_option("--r-inf,--r_inf,--R_inf", st.t1.r_inf, "Escape radius");
  app.add_option("--eps-eq,--eps_eq", st.t1.eps_eq, "Capture radius around S+ and S-");
  app.add_option("--delta-grid,--delta_grid", st.t1.delta_grid, "Grid step in delta (informational)");
  app.add_option("--s-step0,--s_step0", st.t1.s_step0, "Initial step of the s sweep");
  app.add_option("--eps-threshold,--eps_threshold", st.t1.eps_threshold, "Target width of refined intervals");
  app.add_option("--max-depth,--max_depth", st.max_depth, "Refinement depth cap");
  app.add_option("--eps-in,--eps_in", st.pc.eps_in, "Distance of Sigma_in from S0");
  app.add_option("--eps-out,--eps_out", st.pc.eps_out, "Distance of Sigma_out from S0");
  app.add_option("--window", st.pc.window, "Accepted half-width on Sigma_in (0: eps_in)");
  app.add_option("--seed-offset,--seed_offset", st.sep.seed_offset, "Separatrix seed distance from S0");
  app.add_option("--chaos-threshold,--chaos_threshold", st.sep.chaos_threshold, "FTLE above which a limit set is chaotic");
  app.add_option("--iterations", st.iterations, "Poincare map iterations");
  app.add_option("--run-command,--run_command", st.run_command)->group("");
  app.add_option("--run-version,--run_version", st.run_version)->group("");
  app.add_option("--run-started,--run_started", st.run_started)->group("");
  app.add_option("--run-wall-clock,--run_wall_clock", st.run_wall_clock)->group("");
  app.add_option("--run-outputs,--run_outputs", st.run_outputs)->group("");
}

void validate_common(Settings& st) {
  try {
    st.t1.validate();
    st.pc.validate();
  } catch (const std::invalid_argument& e) {
    throw ValidationError(e.what());
  }
  if (!(st.sep.seed_offset > 0.0)) throw ValidationError("seed-offset must be > 0");
  if (st.max_depth < 0) throw ValidationError("max-depth must be >= 0");
  st.pc.r_inf = st.t1.r_inf;
  st.pc.rel_tol = st.t1.rel_tol;
  st.pc.abs_tol = st.t1.abs_tol;
  st.pc.timeout = 10.0 * st.t1.t_lim;
  st.pc.threads = st.threads;
}

PathPoint point_from(const Settings& st) {
  const PathPoint pp{single_value(st.delta, "delta"), single_value(st.beta, "beta"), st.s};
  try {
    pp.validate();
  } catch (const std::domain_error& e) {
    throw ValidationError(e.what());
  }
  return pp;
}

std::string iso_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

class Outputs {
 public:
  explicit Outputs(const std::string& dir) : dir_(dir) { fs::create_directories(dir_); }
  std::string path(const std::string& name) {
    files_.push_back(name);
    return (dir_ / name).string();
  }
  std::string list() const {
    std::string s;
    for (const auto& f : files_) s += (s.empty() ? "" : ";") + f;
    return s;
  }
  fs::path dir() const { return dir_; }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
};

void write_manifest(CLI::App& app, const Outputs& out, const std::string& command, const std::string& started,
                    std::chrono::steady_clock::time_point t0) {
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  auto set_meta = [&app](const std::string& name, const auto& value) {
    CLI::Option* o = app.get_option(name);
    o->clear();
    o->default_val(value);
  };
  set_meta("--run-command", command);
  set_meta("--run-version", std::string(LORENZLIKE_VERSION));
  set_meta("--run-started", started);
  set_meta("--run-wall-clock", wall);
  set_meta("--run-outputs", out.list());
  std::ofstream f(out.dir() / "manifest.ini");
  f << "; lorenzlike run manifest; rerun with: lorenzlike " << command << " --config manifest.ini\n";
  f << app.config_to_str(true, false);
}

std::string side_name(Side s) { return std::string(to_string(s)); }

// --- commands --------------------------------------------------------------------------

int cmd_check(Settings& st) {
  const PathPoint pp = point_from(st);
  const SystemParams p = path_params(pp);
  const SaddleData sd = saddle_data(pp);
  const ConditionReport r = check_conditions(pp);
  std::printf("delta=%s beta=%s s=%s\n", format_double(pp.delta).c_str(), format_double(pp.beta).c_str(),
              format_double(pp.s).c_str());
  std::printf("lambda=%s alpha=%s\n", format_double(p.lambda).c_str(), format_double(p.alpha).c_str());
  std::printf("in_region=%s negative_saddle_value=%s sigma0=%s\n", r.in_region ? "yes" : "no",
              r.negative_saddle_value ? "yes" : "no", format_double(sd.sigma0).c_str());
  std::printf("ineq11=%s L=%s K=%s M=%s theta0=%s\n", r.ineq11_holds ? "holds" : "fails", format_double(r.L).c_str(),
              format_double(r.K).c_str(), format_double(r.M).c_str(), format_double(r.theta0).c_str());
  std::printf("x0=%s lemma3=%s splus_stable=%s\n", r.x0 ? format_double(*r.x0).c_str() : "undefined",
              r.lemma3_holds ? "holds" : "fails", r.splus_stable ? "yes" : "no");
  std::printf("eigenvalues lam_s=%s lam_ss=%s lam_u=%s\n", format_double(sd.lam_s).c_str(),
              format_double(sd.lam_ss).c_str(), format_double(sd.lam_u).c_str());
  return 0;
}

int cmd_separatrix(Settings& st, Outputs& out) {
  const PathPoint pp = point_from(st);
  SeparatrixOptions opt = st.sep;
  opt.record = true;
  std::vector<int> signs{+1};
  if (st.mirror) signs.push_back(-1);
  for (int sign : signs) {
    const SeparatrixRun run = run_separatrix(pp, sign, st.t1, opt);
    const std::string name = sign > 0 ? "separatrix_plus.csv" : "separatrix_minus.csv";
    std::vector<const Trajectory<3>*> arcs{&run.trans_traj};
    if (run.limit_traj) arcs.push_back(&*run.limit_traj);
    write_trajectory_csv(out.path(name), arcs, run.trans_traj.t_final);
    const auto& o = run.outcome;
    std::printf("gamma%s outcome=%s side=%s event_time=%s ftle=%s period=%s\n", sign > 0 ? "+" : "-",
                o.label().c_str(), side_name(o.side).c_str(), format_double(o.event_time).c_str(),
                format_double(o.ftle).c_str(), format_double(o.period).c_str());
  }
  if (st.saddle_focus) {
    const SystemParams p = path_params(pp);
    const auto tr = saddle_focus_separatrix(p, st.t1.t_lim, st.t1, st.sep.seed_offset);
    if (!tr) {
      std::printf("S+ is not a saddle-focus; no separatrix written\n");
    } else {
      write_trajectory_csv(out.path("saddle_focus_plus.csv"), {&*tr});
      Trajectory<3> img = *tr;
      for (auto& y : img.states) y = symmetry_image(State::from(y)).array();
      write_trajectory_csv(out.path("saddle_focus_minus.csv"), {&img});
    }
  }
  return 0;
}

int cmd_scan(Settings& st, Outputs& out) {
  const GridAxis deltas = parse_axis(st.delta, "delta");
  const GridAxis betas = parse_axis(st.beta, "beta");
  for (std::size_t i = 0; i < deltas.n; ++i)
    if (!(deltas.at(i) > 0.0)) throw ValidationError("delta values must be > 0");
  for (std::size_t j = 0; j < betas.n; ++j)
    if (!(betas.at(j) > 0.0)) throw ValidationError("beta values must be > 0");
  ScanOptions opt;
  opt.separatrix = st.sep;
  opt.max_depth = st.max_depth;
  opt.threads = st.threads;
  std::size_t done = 0;
  const std::size_t total = deltas.n * betas.n;
  const auto rows = scan_grid(deltas, betas, st.t1, opt, [&](const ScanRow& r) {
    ++done;
    std::fprintf(stderr, "[%zu/%zu] delta=%g beta=%g %s\n", done, total, r.delta, r.beta,
                 std::string(to_string(r.label)).c_str());
  });
  CsvWriter csv(out.path("scan.csv"), {"delta", "beta", "region_label", "s_lo", "s_hi", "outcome_before",
                                       "outcome_after", "refinement_depth", "grazing", "chaotic_transient",
                                       "early_exit_s", "evidence"});
  for (const auto& r : rows) {
    const auto nan = std::numeric_limits<double>::quiet_NaN();
    if (r.interval) {
      const auto& iv = *r.interval;
      csv.row(r.delta, r.beta, to_string(r.label), iv.s_lo, iv.s_hi, iv.outcome_before.label(),
              iv.outcome_after.label(), iv.refinement_depth, iv.grazing, iv.chaotic_transient,
              r.early_exit_at.value_or(nan), r.evidence);
    } else {
      csv.row(r.delta, r.beta, to_string(r.label), nan, nan, std::string(), std::string(), 0, false, false,
              r.early_exit_at.value_or(nan), r.evidence);
    }
  }
  return 0;
}

void write_grid_csv(CsvWriter& csv, const GridImage& img, std::size_t iter) {
  for (const auto& g : img.points) csv.row(g.id, iter, g.a, g.b, g.color, to_string(g.status));
}

int cmd_poincare(Settings& st, Outputs& out) {
  const PathPoint pp = point_from(st);
  const SystemParams p = path_params(pp);
  const SectionPair sp = build_sections(pp, st.pc.eps_in, st.pc.eps_out);

  if (st.tent) {
    const State x0 = st.x0.empty() ? seed_separatrix(pp, +1, st.sep.seed_offset) : parse_state(st.x0, "x0");
    auto pts = attractor_section_points(p, sp, x0, st.tent_points * 2, st.t1.t_lim / 10.0, st.pc);
    pts = one_side(pts, sp.in, st.tent_side);
    if (pts.size() > st.tent_points) pts.resize(st.tent_points);
    const TentMapResult r = tent_map_test(p, sp, pts, st.pc);
    CsvWriter csv(out.path("return_map.csv"), {"coord", "image_coord"});
    for (const auto& [c, ic] : r.table) csv.row(c, ic);
    std::printf("points=%zu aspect=%s unimodal=%s slope_left=%s slope_right=%s effective_parameter=%s "
                "(two-piece least squares; effective parameter = exp mean log|local slope|)\n",
                r.table.size(), format_double(r.aspect_ratio).c_str(), r.unimodal ? "yes" : "no",
                format_double(r.fit.slope_left).c_str(), format_double(r.fit.slope_right).c_str(),
                format_double(r.effective_parameter).c_str());
    return 0;
  }

  const auto hit = separatrix_hit(p, sp, +1, st.sep.seed_offset, st.pc);
  Rect rect;
  if (!st.rect.empty()) {
    const auto parts = split(st.rect, ':');
    if (parts.size() != 4) throw ValidationError("rect: expected a_lo:a_hi:b_lo:b_hi");
    rect = {to_double(parts[0], "rect"), to_double(parts[1], "rect"), to_double(parts[2], "rect"),
            to_double(parts[3], "rect")};
    if (!(rect.a_lo < rect.a_hi) || !(rect.b_lo < rect.b_hi)) throw ValidationError("rect: empty rectangle");
  } else {
    if (!hit) throw ValidationError("separatrix does not reach Sigma_in; pass --rect or change --eps-in/--window");
    const double b = std::abs(hit->b) > 0.0 ? std::abs(hit->b) : st.pc.eps_in;
    rect = {-0.005 * b, 0.005 * b, -2.0 * b, 2.0 * b};
  }
  if (st.na == 0 || st.nb == 0) throw ValidationError("na and nb must be positive");
  ColoredGrid grid = rectangle_grid(sp.in, rect, st.na, st.nb);
  if (st.half_frame) {
    if (!hit) throw ValidationError("half frame needs the separatrix hit on Sigma_in");
    grid = half_frame_grid(sp.in, rect, half_frame_cut(rect, hit->a, hit->b), st.na, st.nb);
  }
  if (hit)
    std::printf("separatrix hit on Sigma_in: a=%s b=%s t=%s\n", format_double(hit->a).c_str(),
                format_double(hit->b).c_str(), format_double(hit->t_hit).c_str());

  std::set<std::size_t> keep{0, 1, st.iterations};
  for (std::size_t k = 25; k <= st.iterations; k += 25) keep.insert(k);
  GridImage cur = to_image(grid);
  for (std::size_t i = 0; i <= st.iterations; ++i) {
    if (i > 0) cur = poincare_map(p, sp, cur, st.pc);
    if (keep.count(i)) {
      char name[32];
      std::snprintf(name, sizeof name, "grid_iter_%03zu.csv", i);
      CsvWriter csv(out.path(name), {"point_id", "iter", "a", "b", "color", "status"});
      write_grid_csv(csv, cur, i);
      std::printf("iter %zu: %zu of %zu points on Sigma_in\n", i, cur.hits(), cur.points.size());
    }
  }
  return 0;
}

int cmd_lyapunov(Settings& st, Outputs& out) {
  const PathPoint pp = point_from(st);
  const SystemParams p = path_params(pp);
  if (!(st.t_end > 0.0)) throw ValidationError("t-end must be > 0");
  if (!(st.reorth_dt > 0.0)) throw ValidationError("reorth-dt must be > 0");
  State x0;
  if (!st.x0.empty()) {
    x0 = parse_state(st.x0, "x0");
  } else {
    // End of the separatrix transient: a point on whatever attracts Gamma+.
    SeparatrixOptions so = st.sep;
    const SeparatrixRun run = run_separatrix(pp, +1, st.t1, so);
    if (run.outcome.kind == OutcomeKind::EscapeToInfinity) throw FtleEscape(run.outcome.event_time);
    x0 = run.final_state;
  }
  FtleOptions fo;
  fo.reorth_dt = st.reorth_dt;
  fo.r_inf = st.t1.r_inf;
  fo.integrator.rel_tol = st.t1.rel_tol;
  fo.integrator.abs_tol = st.t1.abs_tol;
  const FtleResult r = ftle(p, x0, st.t_end, fo);
  CsvWriter csv(out.path("lyapunov.csv"),
                {"delta", "beta", "s", "x0x", "x0v", "x0u", "t_end", "le1", "le2", "le3", "ld"});
  csv.row(pp.delta, pp.beta, pp.s, x0.x, x0.v, x0.u, r.t_end, r.exponents[0], r.exponents[1], r.exponents[2],
          r.dimension);
  std::printf("LE = (%s, %s, %s) LD = %s\n", format_double(r.exponents[0]).c_str(),
              format_double(r.exponents[1]).c_str(), format_double(r.exponents[2]).c_str(),
              format_double(r.dimension).c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Separatrices, bifurcation scans, Poincare maps and Lyapunov exponents of the Lorenz-like system"};
  app.set_config("--config", "", "INI file with option=value lines; command-line flags win");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.fallthrough();
  app.require_subcommand(1);
  Settings st;
  add_common(app, st);

  auto* check = app.add_subcommand("check", "Analytic conditions at one path point");
  auto* sepx = app.add_subcommand("separatrix", "Track Gamma+ (and Gamma-) and classify its fate");
  sepx->add_flag("--mirror", st.mirror, "Also write Gamma-");
  sepx->add_flag("--saddle-focus", st.saddle_focus, "Write the separatrices of S+ and S- when they are saddle-foci");
  auto* scan = app.add_subcommand("scan", "Sweep s over a (delta, beta) grid and classify bifurcations");
  auto* pc = app.add_subcommand("poincare", "Iterate a colored grid on Sigma_in under the Poincare map");
  pc->add_option("--rect", st.rect, "a_lo:a_hi:b_lo:b_hi on Sigma_in (default: sized from the separatrix hit)");
  pc->add_option("--na", st.na, "Rows (constant a)");
  pc->add_option("--nb", st.nb, "Points per row");
  pc->add_flag("--half-frame", st.half_frame, "Cut out the part around the separatrix hit");
  pc->add_flag("--tent", st.tent, "Return-map test on attractor points instead of grid iteration");
  pc->add_option("--tent-points", st.tent_points, "Section points used by --tent");
  pc->add_option("--tent-side", st.tent_side, "Which of the mirror attractors (+1 or -1)");
  pc->add_option("--x0", st.x0, "Start x,v,u for --tent (default: separatrix seed)");
  auto* lyap = app.add_subcommand("lyapunov", "Finite-time Lyapunov exponents and dimension");
  lyap->add_option("--x0", st.x0, "Start x,v,u (default: end of the separatrix transient)");
  lyap->add_option("--t-end,--t_end", st.t_end, "Horizon");
  lyap->add_option("--reorth-dt,--reorth_dt", st.reorth_dt, "Re-orthonormalisation interval");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  const auto t0 = std::chrono::steady_clock::now();
  const std::string started = iso_now();
  const std::string command = app.get_subcommands().front()->get_name();
  try {
    validate_common(st);
    Outputs out(st.out_dir);
    int rc = 0;
    if (check->parsed()) rc = cmd_check(st);
    if (sepx->parsed()) rc = cmd_separatrix(st, out);
    if (scan->parsed()) rc = cmd_scan(st, out);
    if (pc->parsed()) rc = cmd_poincare(st, out);
    if (lyap->parsed()) rc = cmd_lyapunov(st, out);
    write_manifest(app, out, command, started, t0);
    return rc;
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  } catch (const std::domain_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  } catch (const FtleEscape& e) {
    std::fprintf(stderr, "numerical failure: %s (t = %g)\n", e.what(), e.time());
    return kExitNumerical;
  } catch (const IntegrationError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kExitNumerical;
  }
}
