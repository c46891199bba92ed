#include <catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "tsrmlab/barrier.hpp"

using namespace tsrmlab;
using Catch::Approx;

TEST_CASE("flat and affine barriers") {
  Grid g(-1, 0.01, 201);
  auto f = make_flat(g, 0.0, 0.0);
  for (double l : f.values()) CHECK(l == 0.0);
  CHECK(f.family() == BarrierFamily::flat);
  auto a = make_affine(g, 1.0, 2.0, 0.0);
  CHECK(a.at(0.5) == Approx(2.0));
  CHECK(lipschitz_constant(a) == Approx(2.0));
}

TEST_CASE("piecewise linear barrier") {
  Grid g(-1, 0.125, 17);
  auto p = make_piecewise_linear(g, {{-1, 0}, {0, 1}, {1, 0}}, 0.0);
  CHECK(p.at(0.5) == Approx(0.5));
  CHECK(p.at(0.0) == Approx(1.0));
  CHECK(lipschitz_constant(p) == Approx(1.0));
  auto flat = make_piecewise_linear(g, {{-1, 0.3}, {1, 0.3}}, 0.0);
  CHECK(flat.values() == make_flat(g, 0.3, 0.0).values());
  CHECK_THROWS_AS(make_piecewise_linear(g, {{0, 0}, {-1, 1}, {1, 0}}, 0.0), Error);
  try {
    make_piecewise_linear(g, {{-0.5, 0}, {1, 0}}, 0.0);
    FAIL("expected MalformedKnots");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MalformedKnots);
  }
}

TEST_CASE("cusp barrier") {
  Grid g(-1, 0.001, 2001);
  auto c = make_cusp(g);
  CHECK(c.at(0) == 0.0);
  CHECK(c.at(1) == Approx(-1.0));
  CHECK(c.at(-1) == Approx(-1.0));
  auto v = is_nice_numeric(c, {0.5, 1.0});
  CHECK_FALSE(v.nice);
  for (auto& w : v.witness) CHECK_FALSE(w.has_value());
}

TEST_CASE("nice verdicts") {
  Grid g(-1, 0.001, 2001);
  auto f = make_flat(g, 0.0, 0.0);
  auto v = is_nice_numeric(f, {0.01, 0.1, 0.5, 1.0});
  CHECK(v.nice);
  std::vector<double> l(g.n());
  for (std::size_t i = 0; i < g.n(); ++i) l[i] = g.x(i) < 0 ? -2 * std::sqrt(-g.x(i)) : 0.0;
  Barrier bad(g, l, 0.0, BarrierFamily::file);
  CHECK_FALSE(is_nice_numeric(bad, {0.1, 0.5}).nice);
  Barrier outside(g, l, 5.0, BarrierFamily::file);
  try {
    is_nice_numeric(outside, {0.1});
    FAIL("expected ChiOutsideWindow");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ChiOutsideWindow);
  }
}

TEST_CASE("Brownian barriers are nice and reproducible") {
  Grid g(-1, 0.001, 2001);
  auto a = make_brownian(g, 1.0, 0.0, 0.0, 9);
  auto b = make_brownian(g, 1.0, 0.0, 0.0, 9);
  CHECK(a.values() == b.values());
  CHECK(a.at(0.0) == 0.0);
  double s2 = 0;
  for (std::size_t i = 1; i < g.n(); ++i) s2 += (a[i] - a[i - 1]) * (a[i] - a[i - 1]);
  CHECK(s2 / double(g.n() - 1) == Approx(0.001).epsilon(0.1));
  Rng r(3);
  int nice = 0;
  for (int k = 0; k < 100; ++k) {
    const double chi = -0.5 + r.uniform();
    auto bk = make_brownian(g, 1.0, 0.0, chi, mix_seed(77, k));
    nice += is_nice_numeric(bk, {0.1, 0.25, 0.5}).nice ? 1 : 0;
  }
  CHECK(nice == 100);
}

TEST_CASE("barrier file round trip") {
  Grid g(-0.5, 0.25, 5);
  Barrier b(g, {0.1, -0.2, 1.0 / 3.0, 0.0, 2.5}, 0.125, BarrierFamily::file);
  std::stringstream ss;
  write_barrier(ss, b, 1.5);
  auto back = read_barrier(ss);
  CHECK(back.barrier.values() == b.values());
  CHECK(back.barrier.chi() == b.chi());
  CHECK(back.v == 1.5);
  std::stringstream inf("0 1 2 inf 1\n0 0\n");
  CHECK(std::isinf(read_barrier(inf).barrier.chi()));
  std::stringstream shortfile("0 1 3 0 1\n0 0\n");
  CHECK_THROWS_AS(read_barrier(shortfile), Error);
}

TEST_CASE("reversal maps the barrier") {
  Grid g(-1, 0.5, 5);
  Barrier b(g, {0, 1, 2, 3, 4}, 0.5, BarrierFamily::file);
  auto r = reversed(b);
  CHECK(r.grid().x0() == -1.0);
  CHECK(r.chi() == -0.5);
  CHECK(r[0] == 4.0);
  CHECK(r.at(-0.5) == Approx(b.at(0.5)));
}

TEST_CASE("goodness estimates") {
  Grid g = Grid::span(-128, 128, 0.05);
  GoodOptions opt;
  auto flat = is_good_numeric(make_flat(g, 0, 0), 2000, 2.0, 1, opt);
  CHECK(flat.hit_prob_right >= 0.97);
  CHECK(flat.hit_prob_left >= 0.97);
  std::vector<double> l(g.n());
  for (std::size_t i = 0; i < g.n(); ++i) l[i] = -g.x(i) * g.x(i);
  opt.start_gap = 1.0;
  auto para = is_good_numeric(Barrier(g, l, 0.0, BarrierFamily::file), 2000, 2.0, 1, opt);
  CHECK(para.hit_prob_right < 0.9);
  CHECK_FALSE(para.good_consistent);
}
