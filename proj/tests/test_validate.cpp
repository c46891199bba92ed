#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "tsrmlab/validate.hpp"

using namespace tsrmlab;

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

McOptions threads(unsigned n) {
  McOptions o;
  o.threads = n;
  return o;
}

}  // namespace

TEST_CASE("report serialises to the NDJSON schema") {
  const auto r = validate_three_bm(0.2, 0.25, 1, 2000, 7, 1e-3, threads(1));
  const auto j = to_json(r);
  for (const char* k : {"tag", "params", "trials", "estimate", "ci95", "bound", "verdict", "seed", "grid", "wallclock_s"})
    CHECK(j.contains(k));
  CHECK(j["grid"].contains("x0"));
  CHECK(j["grid"].contains("dx"));
  CHECK(j["grid"].contains("n"));
  CHECK(!to_json(r, false).contains("wallclock_s"));
  CHECK(j.dump().find('\n') == std::string::npos);
}

TEST_CASE("reports are reproducible and thread-count independent") {
  const auto a = validate_three_bm(0.2, 0.5, 1, 5000, 11, 1e-3, threads(1));
  const auto b = validate_three_bm(0.2, 0.5, 1, 5000, 11, 1e-3, threads(4));
  CHECK(to_json(a, false).dump() == to_json(b, false).dump());
}

TEST_CASE("three free BMs") {
  CHECK(validate_three_bm(0.0, 1, 1, 100, 1, 1e-3).estimate == 0.0);
  const auto shorter = validate_three_bm(0.2, 0.25, 1, 20000, 3, 1e-3);
  const auto longer = validate_three_bm(0.2, 1.0, 1, 20000, 3, 1e-3);
  CHECK(longer.estimate <= shorter.estimate);
  CHECK(shorter.bound > longer.bound);
}

TEST_CASE("pair non-coalescence bound") {
  const auto g = Grid::span(0, 1, 1e-3);
  const auto flat = make_flat(g, 0, inf);
  CHECK(validate_pair_noncoalescence(flat, 1, 0, 0.5, 0.5, 1, 1000, 1).estimate == 0.0);
  const auto r = validate_pair_noncoalescence(flat, 1, 0, 0.5, 0.6, 1, 20000, 2);
  CHECK(r.bound == Catch::Approx(0.1 / std::sqrt(M_PI)));
  CHECK(r.passed());
  const auto bm = make_brownian(g, 1, 0, inf, 5);
  CHECK(validate_pair_noncoalescence(bm, 1, 0, 0.5, 0.6, 1, 20000, 3).passed());
}

TEST_CASE("line count bound and lattice independence") {
  const auto b = make_flat(Grid::span(0, 1, 1e-3), -10, inf);
  std::vector<McReport> rs;
  for (int p : {4, 6}) rs.push_back(validate_line_count(b, 1, 0, 1, 1, p, 200, 9));
  for (const auto& r : rs) CHECK(r.passed());
  CHECK(std::abs(rs[0].estimate - rs[1].estimate) <= rs[0].ci95 + rs[1].ci95);
  CHECK(rs[0].bound == Catch::Approx(2 + 2 / std::sqrt(M_PI)));
}

TEST_CASE("no atom above the barrier") {
  const auto b = make_flat(Grid::span(0, 1, 1e-3), 0, 0.5);
  const auto r = validate_no_atom(b, 1, 0, 0.3, 1, 20000, 40, 4);
  CHECK(r.passed());
  const auto s = validate_no_atom(shifted(b, 1.0), 1, 0, 1.3, 1, 20000, 40, 4);
  CHECK(s.verdict == r.verdict);
}

TEST_CASE("hitting the barrier at chi") {
  BarrierFactory flat = [](double dx) { return make_flat(Grid::span(-0.25, 0.25, dx), 0, 0); };
  const auto f = validate_nice_hit(flat, 1, -0.25, 0.25, 4000, {1e-2, 1e-3, 1e-4}, 5);
  CHECK(f.params.at("nice") == 1.0);
  CHECK(f.passed());
  BarrierFactory cusp = [](double dx) { return make_cusp(Grid::span(-0.25, 0.25, dx), 0); };
  const auto c = validate_nice_hit(cusp, 1, -0.25, -0.4, 4000, {1e-2, 1e-3, 1e-4}, 6);
  CHECK(c.params.at("nice") == 0.0);
  CHECK(c.passed());
  CHECK(c.estimate >= 0.05);
}

TEST_CASE("no sticking to the barrier") {
  const auto b = make_flat(Grid::span(-1, 1, 1e-3), 0, 1);
  const auto r = validate_no_stick(b, 1, -0.5, 0.5, -1, 0.1, 10000, 7);
  CHECK(r.estimate == 0.0);
  CHECK(r.passed());
  const auto one = validate_no_stick(b, 1, 0.0, 0.0005, -1, 0.1, 2000, 7);
  CHECK(one.estimate >= 0.0);
  CHECK_THROWS_AS(validate_no_stick(b, 1, 0.5, 1.5, -1, 0.1, 10, 7), Error);
}

TEST_CASE("three coalescing lines scale cubically") {
  const auto b = make_flat(Grid::span(0, 1, 1e-3), 0, inf);
  const auto zero = validate_three_lines(b, 1, 0, 3, 0, 1, 100, 1, ThreeLinesRegime::reflecting);
  CHECK(zero.estimate == 0.0);
  CHECK(zero.passed());
  const auto r = validate_three_lines_scaling(b, 1, 0, 3, {{0.2, 1}, {0.2, 0.5}, {0.1, 0.5}}, 100000, 2,
                                              ThreeLinesRegime::reflecting);
  CHECK(r.passed());
  const auto above = validate_three_lines(b, 1, 0, 3, 0.2, 1, 20000, 3, ThreeLinesRegime::above_barrier);
  const auto free = validate_three_bm(0.2, 1, 1, 20000, 3, 1e-3);
  CHECK(std::abs(above.estimate - free.estimate) <= 3 * (above.ci95 + free.ci95));
}

TEST_CASE("time reversal") {
  const auto flat = make_flat(Grid::span(-0.5, 1, 1e-3), 0, 0);
  const auto r = validate_reversal(flat, 1, 1, 0.5, 0, 1000, 5, 6);
  CHECK(r.passed());
  const auto cusp = make_cusp(Grid::span(-1, 1, 1e-3), 0);
  CHECK_THROWS_AS(validate_reversal(cusp, 1, 0.5, 0.5, -0.5, 1000, 5), Error);
  try {
    validate_reversal(cusp, 1, 0.5, 0.5, -0.5, 1000, 5);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NotNiceBarrier);
  }
}
