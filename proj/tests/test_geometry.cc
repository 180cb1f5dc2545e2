/* grid domains: boxes, quantization, balls, enumeration */

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "impsym/common.hh"
#include "impsym/geometry.hh"

using namespace impsym;
using Catch::Approx;

TEST_CASE("box construction validates its bounds") {
  REQUIRE_NOTHROW(Box({0, 0}, {1, 2}));
  REQUIRE_THROWS_AS(Box({0, 0}, {1}), OutOfDomain);
  REQUIRE_THROWS_AS(Box({0, 3}, {1, 2}), OutOfDomain);
  REQUIRE_THROWS_AS(Box({0, 2}, {1, 2}), OutOfDomain);
  Box b({25}, {50});
  REQUIRE(b.dim() == 1);
  REQUIRE(b.min_side() == 25);
  REQUIRE(b.contains({25.0}, 0));
  REQUIRE(b.contains({50.0}, 0));
  REQUIRE_FALSE(b.contains({50.1}, 0));
  REQUIRE(b.contains({50.05}, 0.1));
}

TEST_CASE("domain construction rejects degenerate grids") {
  REQUIRE_NOTHROW(GridDomain({Box({25}, {50})}, 0.01));
  REQUIRE_THROWS_AS(GridDomain({}, 0.01), OutOfDomain);
  REQUIRE_THROWS_AS(GridDomain({Box({25}, {50})}, 0.0), OutOfDomain);
  REQUIRE_THROWS_AS(GridDomain({Box({25}, {50})}, -1.0), OutOfDomain);
  /* spacing must not exceed the narrowest side */
  REQUIRE_THROWS_AS(GridDomain({Box({0}, {0.4})}, 0.5), OutOfDomain);
  REQUIRE_NOTHROW(GridDomain({Box({0}, {0.5})}, 0.5));
  /* boxes of mixed dimension cannot share a grid */
  REQUIRE_THROWS_AS(GridDomain({Box({0}, {1}), Box({0, 0}, {1, 1})}, 0.1),
                    OutOfDomain);
}

TEST_CASE("decode scales coordinates by the spacing") {
  GridDomain g({Box({25}, {50})}, 0.01);
  GridIndex q;
  q.coords = {2500};
  REQUIRE(g.decode(q)[0] == Approx(25.0).margin(1e-15));
  q.coords = {2599};
  REQUIRE(g.decode(q)[0] == Approx(25.99).margin(1e-12));
}

TEST_CASE("quantize rounds to the nearest point, half away from minus") {
  GridDomain g({Box({25}, {50})}, 0.01);
  REQUIRE(g.quantize({30.004}).coords[0] == 3000);
  REQUIRE(g.quantize({30.006}).coords[0] == 3001);
  /* the midpoint 25.005 sits exactly between two points and goes up; its
   * double representation rounds a hair low, which the guard absorbs */
  REQUIRE(g.quantize({25.005}).coords[0] == 2501);
  REQUIRE(g.quantize({25.0}).coords[0] == 2500);
  REQUIRE(g.quantize({50.0}).coords[0] == 5000);
  /* up to half a cell outside still lands on the boundary point */
  REQUIRE(g.quantize({50.004}).coords[0] == 5000);
  REQUIRE(g.quantize({24.996}).coords[0] == 2500);
  REQUIRE_THROWS_AS(g.quantize({50.2}), OutOfDomain);
  REQUIRE_THROWS_AS(g.quantize({24.7}), OutOfDomain);
  REQUIRE_THROWS_AS(g.quantize({30.0, 30.0}), OutOfDomain);
}

TEST_CASE("membership carries a boundary guard proportional to the spacing") {
  GridDomain g({Box({25}, {50})}, 0.01);
  REQUIRE(g.contains({50.0 + 0.5e-11}));
  REQUIRE_FALSE(g.contains({50.0 + 1e-9}));
  REQUIRE(g.contains_inflated({50.004}, 0.005));
  REQUIRE_FALSE(g.contains_inflated({50.006}, 0.005));
}

TEST_CASE("ball points match a direct distance scan") {
  GridDomain g({Box({25}, {50})}, 0.01);
  Rng rng(2024);
  for (int trial = 0; trial < 500; ++trial) {
    vec c = {rng.uniform(24.9, 50.1)};
    double r = rng.uniform(0.0, 0.05);
    std::vector<GridIndex> got = g.ball_points(c, r);
    /* oracle: every in-domain index within r of the center, in coordinate
     * units with the same boundary guard */
    std::vector<std::int64_t> want;
    for (std::int64_t k = 2500; k <= 5000; ++k) {
      double off = std::abs(static_cast<double>(k) - c[0] / 0.01);
      if (off <= r / 0.01 + grid_slack) want.push_back(k);
    }
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i)
      REQUIRE(got[i].coords[0] == want[i]);
  }
}

TEST_CASE("the unrestricted ball ignores the domain boundary") {
  GridDomain g({Box({25}, {50})}, 0.01);
  std::vector<GridIndex> inside = g.ball_points({25.0}, 0.02);
  std::vector<GridIndex> full = g.grid_ball({25.0}, 0.02);
  REQUIRE(inside.size() == 3);  /* 2500..2502 */
  REQUIRE(full.size() == 5);    /* 2498..2502 */
  REQUIRE(full.front().coords[0] == 2498);
  REQUIRE(full.back().coords[0] == 2502);
}

TEST_CASE("an exact-radius ball keeps its boundary points") {
  GridDomain g({Box({25}, {50})}, 0.01);
  /* center on the grid, radius exactly one spacing: three points, not one */
  std::vector<GridIndex> b = g.ball_points({30.0}, 0.01);
  REQUIRE(b.size() == 3);
  REQUIRE(b.front().coords[0] == 2999);
  REQUIRE(b.back().coords[0] == 3001);
}

TEST_CASE("enumeration walks every box once in lexicographic order") {
  GridDomain g1({Box({25}, {50})}, 0.01);
  std::vector<GridIndex> pts = g1.enumerate();
  REQUIRE(pts.size() == 2501);
  REQUIRE(pts.front().coords[0] == 2500);
  REQUIRE(pts.back().coords[0] == 5000);
  REQUIRE(std::is_sorted(pts.begin(), pts.end()));

  /* overlapping boxes must not double-count shared points */
  GridDomain g2({Box({0}, {1}), Box({0.5}, {2})}, 0.5);
  std::vector<GridIndex> pts2 = g2.enumerate();
  REQUIRE(pts2.size() == 5);  /* 0, 0.5, 1, 1.5, 2 */

  GridDomain g3({Box({0, 0}, {1, 2})}, 0.5);
  std::vector<GridIndex> pts3 = g3.enumerate();
  REQUIRE(pts3.size() == 3 * 5);
  REQUIRE(pts3.front().coords == std::vector<std::int64_t>{0, 0});
  REQUIRE(pts3.back().coords == std::vector<std::int64_t>{2, 4});
  std::set<std::vector<std::int64_t>> uniq;
  for (const GridIndex& q : pts3) uniq.insert(q.coords);
  REQUIRE(uniq.size() == pts3.size());
}

TEST_CASE("enumeration refuses grids beyond the point cap") {
  GridDomain g({Box({0, 0, 0}, {100, 100, 100})}, 1e-3);
  REQUIRE_THROWS_AS(g.enumerate(), DomainTooLarge);
}

TEST_CASE("grid points decode into the domain") {
  GridDomain g({Box({25}, {50})}, 0.01);
  for (const GridIndex& q : g.enumerate()) {
    REQUIRE(g.contains(q));
    vec x = g.decode(q);
    REQUIRE(x[0] >= 25.0 - 1e-9);
    REQUIRE(x[0] <= 50.0 + 1e-9);
  }
}
