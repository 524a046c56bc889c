#include <doctest.h>

#include "test_helpers.hpp"

#include "stochact/actuator_game.hpp"
#include "stochact/error.hpp"
#include "stochact/levelset_rounding.hpp"

using namespace stochact;
using namespace testing_support;

namespace {
Field vec4(double a, double b, double c, double d) {
  Field f(4);
  f << a, b, c, d;
  return f;
}
}  // namespace

TEST_SUITE("levelset_rounding") {

TEST_CASE("level c(alpha)") {
  const Grid g(4, 1.0);
  CHECK(compute_c_alpha(g, vec4(4, 3, 2, 1), 0.5) == 3.0);
  for (double alpha : {0.1, 0.5, 0.9}) CHECK(compute_c_alpha(g, Field::Constant(4, 7.0), alpha) == 7.0);
  CHECK(compute_c_alpha(g, vec4(2, 2, 1, 1), 0.25) == 2.0);
  CHECK(required_cells(4, 0.5) == 2);
  CHECK(required_cells(4, 0.375) == 2);
  CHECK(required_cells(10, 0.3) == 3);
}

TEST_CASE("indicator construction") {
  const Grid g(4, 1.0);
  SUBCASE("exact level") {
    const LevelSetResult r = round_to_indicator(g, vec4(4, 3, 2, 1), 0.5);
    CHECK(r.indicator.theta == vec4(1, 1, 0, 0));
    CHECK(r.c_alpha == 3.0);
    CHECK(r.fractional_cells.empty());
  }
  SUBCASE("ties go to the lowest index") {
    const LevelSetResult r = round_to_indicator(g, vec4(2, 2, 1, 1), 0.25, TieBreak::lowest_index);
    CHECK(r.indicator.theta == vec4(1, 0, 0, 0));
  }
  SUBCASE("fractional cell") {
    const LevelSetResult r = round_to_indicator(g, vec4(4, 3, 2, 1), 0.375);
    CHECK(r.indicator.theta == vec4(1, 0.5, 0, 0));
    REQUIRE(r.fractional_cells.size() == 1);
    CHECK(r.fractional_cells[0] == 1);
    CHECK(r.achieved_mass == doctest::Approx(0.375 * g.measure()).epsilon(1e-15));
  }
  SUBCASE("binary mode rounds the last cell up") {
    const LevelSetResult r = round_to_indicator(g, vec4(4, 3, 2, 1), 0.375, TieBreak::lowest_index,
                                                RoundingMode::binary);
    CHECK(r.indicator.theta == vec4(1, 1, 0, 0));
  }
}

TEST_CASE("symmetric pairing keeps mirror symmetry") {
  const Grid g(6, 1.0);
  Field H(6);
  H << 1, 3, 2, 2, 3, 1;
  const LevelSetResult r = round_to_indicator(g, H, 0.5, TieBreak::symmetric_pairing);
  CHECK(r.indicator.theta == r.indicator.theta.reverse());
  CHECK(r.achieved_mass == doctest::Approx(0.5 * g.measure()).epsilon(1e-15));

  // An odd number of cells at the level: the pair shares the remainder.
  const LevelSetResult s = round_to_indicator(g, H, 1.0 / 3.0, TieBreak::symmetric_pairing);
  CHECK(s.indicator.theta == s.indicator.theta.reverse());
  const LevelSetResult lo = round_to_indicator(g, H, 0.25, TieBreak::symmetric_pairing);
  CHECK(lo.indicator.theta == lo.indicator.theta.reverse());
  CHECK(lo.achieved_mass == doctest::Approx(0.25 * g.measure()).epsilon(1e-14));
}

TEST_CASE("indicator invariants on random switching functions") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 40);
    const Grid g(n, 1.0);
    Field H = random_field(rng, n, 0.0, 5.0);
    if (trial % 3 == 0) H = H.array().round();  // many exact ties
    const double alpha = 0.05 + 0.9 * (trial / 50.0);
    for (TieBreak tie : {TieBreak::lowest_index, TieBreak::symmetric_pairing}) {
      const LevelSetResult r = round_to_indicator(g, H, alpha, tie);
      CHECK(r.achieved_mass == doctest::Approx(alpha * g.measure()).epsilon(1e-13));
      for (int i = 0; i < n; ++i) {
        if (H[i] > r.c_alpha + r.tie_tolerance) CHECK(r.indicator.theta[i] == 1.0);
        if (H[i] < r.c_alpha - r.tie_tolerance) CHECK(r.indicator.theta[i] == 0.0);
      }
      CHECK(linear_objective(g, r.indicator.theta, H) ==
            doctest::Approx(max_linear_objective(g, H, alpha)).epsilon(1e-13));
    }
  }
}

TEST_CASE("bang-bang certificate") {
  const Grid g(4, 1.25);  // h = 0.25
  const Field H = vec4(4, 3, 2, 1);
  const LevelSetResult r = round_to_indicator(g, H, 0.5);
  const Field uniform = Field::Constant(4, 0.5);
  const Field self = r.indicator.theta;
  const Field extras[] = {self, uniform};
  const BangBangReport rep = verify_bang_bang(g, r, H, 0, 1, extras);
  REQUIRE(rep.margins.size() == 2);
  CHECK(rep.margins[0] == 0.0);
  CHECK(linear_objective(g, r.indicator.theta, H) == doctest::Approx(1.75));
  CHECK(linear_objective(g, uniform, H) == doctest::Approx(1.25));
  CHECK(rep.margins[1] == doctest::Approx(0.5));
  CHECK(rep.violations == 0);
}

TEST_CASE("bang-bang on the tiny instance") {
  const ControlProblem p = tiny_problem();
  const Field H = compute_H(p, minimize_J(p).eta_star);
  const LevelSetResult r = round_to_indicator(p.grid, H, 0.5);
  const BangBangReport rep = verify_bang_bang(p.grid, r, H, 1000, 42);
  CHECK(rep.samples == 1000);
  CHECK(rep.violations == 0);
  CHECK(rep.max_violation <= 1e-10);
  CHECK(rep.min_margin >= 0.0);
}

TEST_CASE("sampler is seeded and admissible") {
  const Grid g(9, 2.0);
  DensitySampler a(g, 0.4, 123), b(g, 0.4, 123);
  for (int i = 0; i < 50; ++i) {
    const Field x = a.next().theta;
    CHECK(x == b.next().theta);
    CHECK(x.minCoeff() >= 0.0);
    CHECK(x.maxCoeff() <= 1.0);
    CHECK(x.sum() * g.h() == doctest::Approx(0.4 * g.measure()).epsilon(1e-13));
  }
}

TEST_CASE("names and errors") {
  CHECK(parse_tie_break("symmetric-pairing") == TieBreak::symmetric_pairing);
  CHECK(to_string(TieBreak::lowest_index) == "lowest-index");
  CHECK(parse_rounding_mode("binary") == RoundingMode::binary);
  CHECK_THROWS_AS(parse_tie_break("random"), ConfigError);
  CHECK_THROWS_AS(round_to_indicator(Grid(4, 1.0), Field::Ones(3), 0.5), DimensionError);
  CHECK_THROWS_AS(compute_c_alpha(Grid(4, 1.0), Field::Ones(4), 1.5), ConfigError);
}

}
