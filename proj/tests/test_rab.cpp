#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "tsrmlab/coalescing.hpp"
#include "tsrmlab/rab.hpp"
#include "tsrmlab/stats.hpp"

using namespace tsrmlab;
using Catch::Approx;

namespace {
constexpr double inf = std::numeric_limits<double>::infinity();
const Grid unit(0, 1, 4);
NoisePath hand_noise() { return make_noise(unit, 1.0, {0, -2, -1, -3}); }
}  // namespace

TEST_CASE("pure reflection hand trace") {
  auto r = sample_rab(make_flat(unit, 0, inf), 0, 1, hand_noise());
  CHECK(r.values == std::vector<double>{1, 0, 1, 0});
  CHECK_FALSE(r.absorbed_at);
  CHECK(r.first_hit_before_chi == 1u);
}

TEST_CASE("pure absorption hand trace") {
  auto r = sample_rab(make_flat(unit, 0, -inf), 0, 1, hand_noise());
  CHECK(r.values == std::vector<double>{1, 0, 0, 0});
  CHECK(r.absorbed_at == 1u);
}

TEST_CASE("reflection then absorption hand trace") {
  auto r = sample_rab(make_flat(unit, 0, 2), 0, 1, hand_noise());
  CHECK(r.values == std::vector<double>{1, 0, 1, 0});
  CHECK(r.absorbed_at == 3u);
}

TEST_CASE("start errors") {
  auto b = make_flat(unit, 0, inf);
  try {
    sample_rab(b, 0, 0, hand_noise());
    FAIL("expected UndefinedStart");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UndefinedStart);
  }
  auto other = make_noise(Grid(0, 0.5, 4), 1.0, {0, 0, 0, 0});
  try {
    sample_rab(b, 0, 1, other);
    FAIL("expected InvalidConfig");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InvalidConfig);
  }
}

TEST_CASE("barrier-starting RAB") {
  Grid g(0, 1, 3);
  auto b = make_flat(g, 0, inf);
  CHECK(sample_barrier_start_rab(b, 0, make_noise(g, 1, {0, 1, 2})).values == std::vector<double>{0, 1, 2});
  CHECK(sample_barrier_start_rab(b, 0, make_noise(g, 1, {0, -1, 1})).values == std::vector<double>{0, 0, 2});
  Grid g2(0, 0.5, 5);
  std::vector<double> l{0.3, 0.1, -0.2, 0.4, 0.0};
  Barrier b2(g2, l, 0.5, BarrierFamily::file);
  auto r = sample_barrier_start_rab(b2, 1.0, sample_bm(g2, 1, 0, 3));
  CHECK(r.values == std::vector<double>{-0.2, 0.4, 0.0});
}

TEST_CASE("crossing index") {
  std::vector<double> p{0, 1, 2, 3}, q{1, 2, 1, 4};
  CHECK(crossing_index(p, p, 1) == 1u);
  CHECK_FALSE(crossing_index(p, std::vector<double>{5, 6, 7, 8}, 0));
  CHECK(crossing_index(p, q, 0) == 2u);
}

TEST_CASE("path invariants on random barriers") {
  Grid g(-1, 0.01, 201);
  for (int k = 0; k < 200; ++k) {
    const double chi = -0.5 + 0.005 * k;
    auto b = make_brownian(g, 1.0, 0.0, chi, mix_seed(1, k));
    auto w = sample_bm(g, 1.0, 0.0, mix_seed(2, k));
    const double h = b[0] + 0.3;
    auto r = sample_rab(b, -1, h, w, {k % 2 == 0});
    REQUIRE(r.values.front() == h);
    for (std::size_t i = 0; i < g.n(); ++i) {
      if (b.reflecting(i)) CHECK(r.values[i] >= b[i] - 1e-12);
      if (r.absorbed_at && i >= *r.absorbed_at) CHECK(r.values[i] == b[i]);
      if (i > 0 && b.reflecting(i) && !(r.absorbed_at && i >= *r.absorbed_at))
        CHECK(r.values[i] - r.values[i - 1] >= w[i] - w[i - 1] - 1e-12);
    }
    if (r.absorbed_at) CHECK(*r.absorbed_at >= b.chi_node());
  }
}

TEST_CASE("FICRAB single line equals the RAB") {
  Grid g(0, 0.01, 101);
  auto b = make_flat(g, 0, 0.5);
  auto w = sample_bm(g, 1, 0, 4);
  auto fam = build_ficrab(b, {{0.0, 0.5}}, {w});
  CHECK(fam.merge_records.empty());
  CHECK(fam.paths[0]->values == sample_rab(b, 0.0, 0.5, w).values);
}

TEST_CASE("FICRAB hand-traced merge") {
  auto b = make_flat(unit, -10, inf);
  auto w1 = make_noise(unit, 1, {0.5, 0.6, 0.7, 0.8});
  auto w2 = make_noise(unit, 1, {0, 1.0, 0.65, 0.2});
  auto fam = build_ficrab(b, {{0, 0.5}, {1, 1.0}}, {w1, w2});
  CHECK(fam.paths[0]->values == std::vector<double>{0.5, 0.6, 0.7, 0.8});
  REQUIRE(fam.merge_records.size() == 1);
  CHECK(fam.merge_records[0].j == 1);
  CHECK(fam.merge_records[0].omega == 2);
  CHECK(fam.merge_records[0].nu == 0);
  CHECK(fam.paths[1]->values == std::vector<double>{1.0, 0.7, 0.8});
  CHECK(fam.tail_sharing[1] == 0);
}

TEST_CASE("FICRAB undefined starts are absent and merges are exact") {
  Grid g(0, 0.01, 201);
  auto b = make_flat(g, 0, 1.0);
  std::vector<Start> starts{{0, 0.2}, {0, 0.0}, {0.3, 0.25}, {0.1, 0.05}, {0, 0.4}};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  auto fam = build_ficrab(b, 1.0, starts, seeds);
  CHECK_FALSE(fam.paths[1].has_value());
  for (const auto& m : fam.merge_records) {
    CHECK(m.nu < m.j);
    const auto& pj = *fam.paths[m.j];
    const auto& pn = *fam.paths[m.nu];
    for (std::size_t c = m.omega; c < g.n(); ++c) CHECK(pj.at(c) == pn.at(c));
  }
}

TEST_CASE("FICRAB marginals do not depend on the insertion order") {
  Grid g(0, 0.01, 201);
  auto b = make_flat(g, 0, 0.5);
  const std::vector<Start> s{{0, 0.3}, {0, 0.6}, {0.25, 0.45}};
  const std::size_t y = 150;
  const int T = 10000;
  std::vector<std::vector<double>> first(3), second(3);
  CoalescingOptions opt;
  for (int t = 0; t < T; ++t) {
    const std::uint64_t base1 = mix_seed(100, t), base2 = mix_seed(200, t);
    auto f1 = build_ficrab(b, 1.0, {s[0], s[1], s[2]}, {mix_seed(base1, 0), mix_seed(base1, 1), mix_seed(base1, 2)}, opt);
    auto f2 = build_ficrab(b, 1.0, {s[2], s[0], s[1]}, {mix_seed(base2, 2), mix_seed(base2, 0), mix_seed(base2, 1)}, opt);
    for (int k = 0; k < 3; ++k) first[k].push_back(f1.paths[k]->at(y));
    second[2].push_back(f2.paths[0]->at(y));
    second[0].push_back(f2.paths[1]->at(y));
    second[1].push_back(f2.paths[2]->at(y));
  }
  for (int k = 0; k < 3; ++k) {
    auto ks = stats::ks_two_sample(first[k], second[k]);
    INFO("line " << k << " D=" << ks.statistic << " crit=" << ks.critical_1pct);
    CHECK_FALSE(ks.reject);
  }
}

TEST_CASE("fluctuation frequency respects the Gaussian tail bound") {
  const double dx = 0.002, a = 0.5, delta = 0.25;
  Grid g(0, dx, static_cast<std::size_t>(delta / dx) + 1);
  auto b = make_brownian(g, 1.0, -1.0, inf, 5);
  const double lmax = b.max_value();
  const int T = 10000;
  std::size_t hits = 0;
  for (int t = 0; t < T; ++t) {
    auto r = sample_rab(b, 0, lmax + a + 0.3, sample_bm(g, 1, 0, mix_seed(9, t)));
    for (double x : r.values)
      if (std::abs(x - r.values.front()) >= a) {
        ++hits;
        break;
      }
  }
  auto ci = stats::wilson(hits, T);
  CHECK(ci.estimate <= bm_fluct_upper_bound(a, 1, delta) + 3 * ci.half_width());
}
