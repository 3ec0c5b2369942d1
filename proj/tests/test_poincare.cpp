#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "lorenzlike/poincare.hpp"

using namespace lorenzlike;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// After the small-beta flip: the separatrix winds onto the one-sided cycle.
const PathPoint kCyclePoint{0.9, 0.2, 0.0601314606};

PoincareOptions small_sections() {
  PoincareOptions o;
  o.eps_in = o.eps_out = 0.005;
  o.window = 0.05;
  return o;
}

}  // namespace

TEST_CASE("section geometry", "[poincare]") {
  const SectionPair at0 = build_sections(PathPoint{0.9, 0.2, 0.0}, 0.5, 0.3);
  CHECK(at0.in.normal == Vec3{0, 0, 1});
  CHECK(at0.in.origin == State{0, 0, 0.5});
  CHECK(at0.in.signed_distance({0.3, -0.7, 0.5}) == 0.0);

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> ud(0.05, 1.1), us(0.0, 0.95);
  for (int i = 0; i < 100; ++i) {
    const SectionPair sp = build_sections(PathPoint{ud(rng), 1.0, us(rng)}, 0.5, 0.3);
    CHECK_THAT(norm(sp.in.origin), WithinAbs(0.5, 1e-15));
    CHECK_THAT(norm(sp.out.origin), WithinAbs(0.3, 1e-15));
    for (const Section* s : {&sp.in, &sp.out}) {
      CHECK_THAT(norm(s->normal), WithinAbs(1.0, 1e-14));
      CHECK_THAT(norm(s->e1), WithinAbs(1.0, 1e-14));
      CHECK_THAT(norm(s->e2), WithinAbs(1.0, 1e-14));
      CHECK_THAT(dot(s->normal, s->e1), WithinAbs(0.0, 1e-14));
      CHECK_THAT(dot(s->normal, s->e2), WithinAbs(0.0, 1e-14));
      CHECK_THAT(dot(s->e1, s->e2), WithinAbs(0.0, 1e-14));
      const State q = s->point(0.1, -0.2);
      CHECK_THAT(s->signed_distance(q), WithinAbs(0.0, 1e-15));
      CHECK_THAT(s->coords(q)[0], WithinAbs(0.1, 1e-15));
      CHECK_THAT(s->coords(q)[1], WithinAbs(-0.2, 1e-15));
    }
  }
  CHECK_THROWS_AS(build_sections(PathPoint{0.9, 0.2, 0.0}, 0.0, 0.3), std::invalid_argument);
}

TEST_CASE("grids", "[poincare]") {
  const SectionPair sp = build_sections(kCyclePoint, 0.005, 0.005);
  const Rect r{-1.0, 1.0, -2.0, 2.0};
  const ColoredGrid g = rectangle_grid(sp.in, r, 5, 4);
  REQUIRE(g.points.size() == 20);
  for (const auto& p : g.points) {
    CHECK(r.contains(p.a, p.b));
    CHECK_THAT(p.color, WithinAbs(std::abs(p.a), 1e-15));
    CHECK_THAT(sp.in.signed_distance(p.y), WithinAbs(0.0, 1e-15));
  }
  // rows share a and run along v_ss
  CHECK(g.points[0].a == g.points[3].a);
  CHECK(g.points[0].b == -2.0);
  CHECK(g.points[3].b == 2.0);

  const Rect cut = half_frame_cut(r, 0.1, 1.5);
  CHECK(cut.strictly_contains(0.1, 1.5));
  CHECK(std::isinf(cut.b_hi));
  const ColoredGrid hf = half_frame_grid(sp.in, r, cut, 21, 21);
  CHECK(hf.points.size() < 21 * 21);
  for (const auto& p : hf.points) CHECK_FALSE(cut.strictly_contains(p.a, p.b));

  CHECK_THROWS_AS(rectangle_grid(sp.out, r, 2, 2), std::invalid_argument);
  CHECK_THROWS_AS(rectangle_grid(sp.in, Rect{1, 0, 0, 1}, 2, 2), std::invalid_argument);
}

TEST_CASE("points on the stable manifold never reach Sigma_out", "[poincare]") {
  const SystemParams p = path_params(kCyclePoint);
  const PoincareOptions opt = small_sections();
  const SectionPair sp = build_sections(p, opt.eps_in, opt.eps_out);
  GridImage g;
  g.points.push_back({0, 0.0, 0.0, 0.0, 0, PointStatus::Hit, 0.0, sp.in.point(0.0, 0.0)});
  const GridImage img = map_local(p, sp, g, opt);
  CHECK(img.points[0].status != PointStatus::Hit);
}

TEST_CASE("Poincare map: residuals, half bowtie, stick, symmetry", "[poincare][property]") {
  const SystemParams p = path_params(kCyclePoint);
  const PoincareOptions opt = small_sections();
  const SectionPair sp = build_sections(p, opt.eps_in, opt.eps_out);
  const auto hit = separatrix_hit(p, sp, +1, 1e-6, opt);
  REQUIRE(hit);
  const double bh = std::abs(hit->b);

  // a != 0 rows only; small b keeps the rectangle close to the local stable manifold trace
  const Rect r{-1e-4, 1e-4, -0.5 * bh, 0.5 * bh};
  const ColoredGrid grid = rectangle_grid(sp.in, r, 10, 7);
  const GridImage g0 = to_image(grid);

  const GridImage loc = map_local(p, sp, g0, opt);
  CHECK(loc.on == SectionKind::Out);
  CHECK(loc.hits() == g0.points.size());
  CHECK(max_section_residual(loc, sp) <= 1e-10);
  for (std::size_t i = 0; i < loc.points.size(); ++i) {
    CAPTURE(g0.points[i].a, g0.points[i].b);
    CHECK(loc.points[i].branch == (g0.points[i].a > 0 ? +1 : -1));
  }

  const GridImage glob = map_global(p, sp, loc, opt);
  CHECK(glob.on == SectionKind::In);
  CHECK(glob.hits() == g0.points.size());
  CHECK(max_section_residual(glob, sp) <= 1e-10);
  std::vector<std::array<double, 2>> pts;
  for (const auto& q : glob.points) pts.push_back({q.a, q.b});
  CHECK(principal_axis(pts).aspect_ratio > 10.0);

  // Pi commutes with the symmetry
  const GridImage direct = mirror(poincare_map(p, sp, g0, opt));
  const GridImage via = poincare_map(p, sp, mirror(g0), opt);
  REQUIRE(direct.points.size() == via.points.size());
  for (std::size_t i = 0; i < via.points.size(); ++i) {
    CHECK(direct.points[i].status == via.points[i].status);
    CHECK_THAT(direct.points[i].a, WithinAbs(via.points[i].a, 1e-12));
    CHECK_THAT(direct.points[i].b, WithinAbs(via.points[i].b, 1e-12));
  }

  // iteration keeps ids and colors; i = 0 is the grid itself; misses stay lost
  const auto seq = iterate_grid(p, sp, grid, 2, opt);
  REQUIRE(seq.size() == 3);
  for (std::size_t i = 0; i < grid.points.size(); ++i) {
    CHECK(seq[0].points[i].a == grid.points[i].a);
    CHECK(seq[0].points[i].b == grid.points[i].b);
    CHECK(seq[2].points[i].id == grid.points[i].id);
    CHECK(seq[2].points[i].color == grid.points[i].color);
    if (seq[1].points[i].status != PointStatus::Hit) CHECK(seq[2].points[i].status == PointStatus::Lost);
  }
  CHECK_THROWS_AS(map_global(p, sp, g0, opt), std::invalid_argument);
}

TEST_CASE("two-piece fit and tent analysis on synthetic tables", "[poincare][oracle]") {
  std::vector<double> x, y;
  for (int i = 0; i <= 200; ++i) {
    const double c = -1.0 + 0.01 * i;
    x.push_back(c);
    y.push_back(c < 0.2 ? 1.0 + 3.0 * (c - 0.2) : 1.0 - 1.5 * (c - 0.2));
  }
  const TwoPieceFit f = fit_two_piece(x, y);
  CHECK_THAT(f.breakpoint, WithinAbs(0.2, 1e-12));
  CHECK_THAT(f.slope_left, WithinAbs(3.0, 1e-10));
  CHECK_THAT(f.slope_right, WithinAbs(-1.5, 1e-10));
  CHECK_THAT(f.value_at_break, WithinAbs(1.0, 1e-10));
  CHECK(f.rms < 1e-10);

  // symmetric tent with parameter 2: c -> 1 - 2|c| on [-1, 1]
  std::vector<std::pair<double, double>> tent;
  for (int i = 0; i <= 400; ++i) {
    const double c = -1.0 + 0.005 * i;
    tent.emplace_back(c, 1.0 - 2.0 * std::abs(c));
  }
  const TentMapResult t = tent_map_from_pairs(tent);
  CHECK(t.unimodal);
  CHECK_THAT(t.fit.slope_left, WithinAbs(2.0, 1e-10));
  CHECK_THAT(t.fit.slope_right, WithinAbs(-2.0, 1e-10));
  CHECK_THAT(t.effective_parameter, WithinRel(2.0, 0.02));

  // a valley is turned into a peak
  std::vector<std::pair<double, double>> valley;
  for (const auto& [c, ic] : tent) valley.emplace_back(c, -ic);
  const TentMapResult v = tent_map_from_pairs(valley);
  CHECK(v.unimodal);
  CHECK_THAT(v.fit.slope_left, WithinAbs(2.0, 1e-10));

  // identity table: slope one, not a tent
  std::vector<std::pair<double, double>> id;
  for (int i = 0; i <= 100; ++i) id.emplace_back(0.01 * i, 0.01 * i);
  const TentMapResult idt = tent_map_from_pairs(id);
  CHECK_THAT(idt.fit.slope_left, WithinAbs(1.0, 1e-10));
  CHECK_THAT(idt.fit.slope_right, WithinAbs(1.0, 1e-10));
  CHECK_THAT(idt.effective_parameter, WithinAbs(1.0, 1e-10));
  CHECK_FALSE(idt.unimodal);
}

TEST_CASE("principal axis", "[poincare]") {
  std::vector<std::array<double, 2>> line;
  for (int i = 0; i < 50; ++i) line.push_back({1.0 + 0.6 * i, 2.0 + 0.8 * i});
  const PrincipalAxis pa = principal_axis(line);
  CHECK_THAT(std::abs(pa.axis[0]), WithinAbs(0.6, 1e-12));
  CHECK_THAT(std::abs(pa.axis[1]), WithinAbs(0.8, 1e-12));
  CHECK(pa.aspect_ratio > 1e6);

  std::vector<std::array<double, 2>> square{{0, 0}, {1, 0}, {0, 1}, {1, 1}};
  CHECK_THAT(principal_axis(square).aspect_ratio, WithinAbs(1.0, 1e-12));
  CHECK_THROWS_AS(principal_axis({{0.0, 0.0}}), std::invalid_argument);
}

TEST_CASE("round clouds are not segments", "[poincare]") {
  const SystemParams p = path_params(kCyclePoint);
  const PoincareOptions opt = small_sections();
  const SectionPair sp = build_sections(p, opt.eps_in, opt.eps_out);
  std::vector<State> ring;
  for (int k = 0; k < 16; ++k) ring.push_back(sp.in.point(1e-3 * std::cos(k * M_PI / 8), 1e-3 * std::sin(k * M_PI / 8)));
  CHECK_THROWS_AS(tent_map_test(p, sp, ring, opt), DegenerateSegment);
}
