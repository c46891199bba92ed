#include <catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "tsrmlab/lines.hpp"
#include "tsrmlab/stats.hpp"

using namespace tsrmlab;
using Catch::Approx;

namespace {

Skeleton flat_skeleton(int m, std::uint64_t seed, double xa = -1, double xb = 1, double hh = 1, double dx = 0) {
  const double step = dx > 0 ? dx : std::ldexp(1.0, -m - 2);
  auto b = make_flat(Grid::span(xa, xb, step), 0, 0);
  SkeletonOptions opt;
  opt.h_hi = hh;
  return build_skeleton(b, m, seed, opt);
}

bool non_crossing(const Skeleton& s) {
  for (std::size_t c = 0; c + 1 < s.columns(); ++c)
    for (std::size_t k = 1; k < s.nodes(c); ++k)
      if (s.successor(c, k) < s.successor(c, k - 1)) return false;
  return true;
}

}  // namespace

TEST_CASE("level-1 enumeration on a 2x2 window") {
  auto s = flat_skeleton(1, 1, -1, 1, 2);
  std::set<std::pair<double, double>> got;
  for (const auto& st : s.starts()) got.insert({st.x, st.h});
  std::set<std::pair<double, double>> want;
  for (double x = -1; x <= 1; x += 0.5)
    for (double h = 0.5; h <= 2; h += 0.5) want.insert({x, h});
  CHECK(got == want);
  for (std::size_t k = 1; k < s.starts().size(); ++k) {
    const auto& a = s.starts()[k - 1];
    const auto& b = s.starts()[k];
    CHECK(std::tie(a.level, a.x, a.h) < std::tie(b.level, b.x, b.h));
  }
  CHECK(non_crossing(s));
}

TEST_CASE("off-grid start abscissae snap to the nearest node") {
  auto b = make_flat(Grid::span(-1, 1, 0.1), 0, 0);
  const auto s = build_skeleton(b, 3, 1);
  for (const auto& st : s.starts()) CHECK(std::abs(s.grid().x(st.column) - st.x) <= 0.05 + 1e-12);
  CHECK(non_crossing(s));
  SkeletonOptions opt;
  opt.coalescing.max_lines = 10;
  auto b2 = make_flat(Grid::span(-1, 1, 0.125), 0, 0);
  try {
    build_skeleton(b2, 3, 1, opt);
    FAIL("expected ResourceLimit");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ResourceLimit);
  }
}

TEST_CASE("skeleton is deterministic and non-crossing") {
  auto a = flat_skeleton(4, 3);
  auto b = flat_skeleton(4, 3);
  REQUIRE(a.columns() == b.columns());
  for (std::size_t c = 0; c < a.columns(); ++c) {
    REQUIRE(a.nodes(c) == b.nodes(c));
    for (std::size_t k = 0; k < a.nodes(c); ++k) CHECK(a.node_value(c, k) == b.node_value(c, k));
  }
  CHECK(non_crossing(a));
  auto g = Grid::span(-1, 1, 1.0 / 64);
  auto br = make_brownian(g, 1.0, 0.0, 0.2, 5);
  SkeletonOptions opt;
  opt.h_hi = 1.5;
  auto sb = build_skeleton(br, 4, 7, opt);
  CHECK(non_crossing(sb));
  for (std::size_t c = 0; c < sb.columns(); ++c)
    for (std::size_t k = 0; k < sb.nodes(c); ++k)
      if (br.reflecting(c)) CHECK(sb.node_value(c, k) >= br[c] - 1e-12);
}

TEST_CASE("forward evaluation") {
  auto s = flat_skeleton(5, 11);
  const auto& st = s.starts()[s.starts().size() / 2];
  const auto path = s.system().resolved(st.line);
  for (std::size_t c = st.column; c < s.columns(); ++c)
    CHECK(eval_forward(s, st.x, st.h, s.grid().x(c)) == path[c - st.column]);
  Rng r(4);
  for (int q = 0; q < 200; ++q) {
    const double x = -1 + 1.5 * r.uniform();
    const double h = 0.05 + 0.9 * r.uniform();
    const double xs = std::ldexp(std::round(std::ldexp(x, 5)), -5);
    CHECK(std::abs(eval_forward(s, xs, h, xs) - h) <= s.spacing());
    const double y = x + 0.5 * r.uniform();
    const double h2 = h + 0.1 * r.uniform();
    CHECK(eval_forward(s, x, h, y) <= eval_forward(s, x, h2, y));
  }
  CHECK_THROWS_AS(eval_forward(s, 0, 0, 0.5), Error);
}

TEST_CASE("starts on every column give lattice-scale accuracy off the coarse lattice") {
  auto b = make_flat(Grid::span(-1, 1, 1.0 / 128), 0, 0);
  SkeletonOptions opt;
  opt.x_level = 7;
  auto s = build_skeleton(b, 5, 17, opt);
  Rng r(6);
  for (int q = 0; q < 100; ++q) {
    const double x = -1 + 1.9 * r.uniform();
    const double h = 0.05 + 0.9 * r.uniform();
    CHECK(std::abs(eval_forward(s, x, h, x) - h) <= s.spacing());
  }
}

TEST_CASE("skeleton values are dense above the barrier") {
  auto s = flat_skeleton(5, 12);
  Rng r(8);
  for (int q = 0; q < 100; ++q) {
    const double x = std::ldexp(std::round(std::ldexp(-0.5 + 1.5 * r.uniform(), 5)), -5);
    const double h = 0.9 * r.uniform();
    const std::size_t c = s.column_of(x);
    double best = INFINITY;
    for (std::size_t k = 0; k < s.nodes(c); ++k) best = std::min(best, std::abs(s.node_value(c, k) - h));
    CHECK(best <= 2 * s.spacing());
  }
}

TEST_CASE("trace sets") {
  auto s = flat_skeleton(4, 13);
  auto t = trace_set(s, 0.0, 0.0 + s.grid().dx());
  CHECK(std::is_sorted(t.begin(), t.end()));
  CHECK(std::adjacent_find(t.begin(), t.end()) == t.end());
  auto b = make_flat(Grid::span(-1, 1, 1.0 / 64), 0, -0.5);
  SkeletonOptions opt;
  auto sa = build_skeleton(b, 4, 2, opt);
  auto tr = trace_set(sa, 0.0, 0.9);
  bool absorbed = false;
  for (const auto& l : sa.system().lines())
    if (l.absorbed_at && *l.absorbed_at <= sa.column_of(0.9)) absorbed = true;
  CHECK((!tr.empty() && tr.front() == 0.0) == absorbed);
}

TEST_CASE("line count at unit distance stays below the bound") {
  std::vector<double> counts;
  auto b = make_flat(Grid::span(0, 1, 1.0 / 256), 0, 0);
  SkeletonOptions opt;
  opt.x_lo = 0;
  opt.x_hi = 0;
  opt.h_hi = 1;
  for (int seed = 0; seed < 200; ++seed) {
    auto s = build_skeleton(b, 6, mix_seed(21, seed), opt);
    counts.push_back(static_cast<double>(trace_set(s, 0, 1).size()));
  }
  auto m = stats::mean_ci(counts);
  CHECK(m.mean <= line_count_bound(1, 1, 1) + m.ci95);
}

TEST_CASE("backward evaluation") {
  auto s = flat_skeleton(5, 14);
  for (double x : {-0.8, -0.5, -0.25}) {
    const std::size_t c = s.column_of(x);
    const double low = s.node_value(c, 0);
    if (low > 0) CHECK(eval_backward(s, x, low, -1.0) == 0.0);
  }
  Grid g(0, 1, 4);
  auto b = make_flat(g, -10, INFINITY);
  Rng r(9);
  for (int q = 0; q < 300; ++q) {
    const double x = -0.5 + 1.4 * r.uniform();
    const double h = 0.05 + 0.9 * r.uniform();
    const double y = -1 + (x + 1) * r.uniform();
    const double bk = eval_backward(s, x, h, y);
    const std::size_t cy = s.column_of(y), cx = s.column_of(x);
    for (std::size_t k = 0; k < s.nodes(cy); ++k)
      if (s.follow(cy, k, cx) < h) CHECK(bk >= s.node_value(cy, k));
  }
}

TEST_CASE("backward lines agree with the dual characterization on start columns") {
  const int m = 5;
  auto s = flat_skeleton(m, 15, -1, 1, 3);
  Rng r(10);
  double worst = 0;
  for (int q = 0; q < 300; ++q) {
    const double x = -0.5 + 1.4 * r.uniform();
    const double h = 0.05 + 0.6 * r.uniform();
    const double y = std::ldexp(std::floor(std::ldexp(-1 + (x + 1) * r.uniform(), m)), -m);
    const double bk = eval_backward(s, x, h, y);
    const std::size_t cy = s.column_of(y);
    double lo = 0, hi = s.node_value(cy, s.nodes(cy) - 1);
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (eval_forward(s, y, mid, x) < h)
        lo = mid;
      else
        hi = mid;
    }
    worst = std::max(worst, std::abs(bk - lo));
  }
  CHECK(worst <= 2 * std::ldexp(1.0, -m));
}
