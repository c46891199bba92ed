// Barriers (lambda, chi): construction, file I/O, and numeric checks of the
// "nice" and "good" conditions.

#ifndef TSRMLAB_BARRIER_HPP
#define TSRMLAB_BARRIER_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <locale>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "tsrmlab/core.hpp"
#include "tsrmlab/parallel.hpp"

namespace tsrmlab {

enum class BarrierFamily { flat, affine, piecewise_linear, brownian, cusp, file };

inline const char* to_string(BarrierFamily f) {
  switch (f) {
    case BarrierFamily::flat: return "flat";
    case BarrierFamily::affine: return "affine";
    case BarrierFamily::piecewise_linear: return "piecewise_linear";
    case BarrierFamily::brownian: return "brownian";
    case BarrierFamily::cusp: return "cusp";
    case BarrierFamily::file: return "file";
  }
  return "unknown";
}

/// A continuous barrier sampled on a grid. Paths reflect on lambda at nodes
/// x_i <= chi and are absorbed at nodes beyond chi. chi may be +-infinity.
class Barrier {
 public:
  Barrier(Grid grid, std::vector<double> lambda, double chi, BarrierFamily family)
      : grid_(grid), lambda_(std::move(lambda)), chi_(chi), family_(family) {
    if (lambda_.size() != grid_.n()) fail(ErrorKind::InvalidConfig, "barrier length does not match the grid");
    for (double l : lambda_)
      if (!std::isfinite(l)) fail(ErrorKind::InvalidConfig, "barrier values must be finite");
    if (std::isnan(chi_)) fail(ErrorKind::InvalidConfig, "chi must not be NaN");
  }

  const Grid& grid() const noexcept { return grid_; }
  const std::vector<double>& values() const noexcept { return lambda_; }
  double chi() const noexcept { return chi_; }
  BarrierFamily family() const noexcept { return family_; }
  std::size_t size() const noexcept { return lambda_.size(); }

  double operator[](std::size_t i) const noexcept { return lambda_[i]; }

  /// Linear interpolation; constant extension outside the window.
  double at(double x) const noexcept {
    const double r = (x - grid_.x0()) / grid_.dx();
    if (r <= 0.0) return lambda_.front();
    const double last = static_cast<double>(lambda_.size() - 1);
    if (r >= last) return lambda_.back();
    const auto i = static_cast<std::size_t>(std::floor(r));
    const double f = r - static_cast<double>(i);
    if (f == 0.0) return lambda_[i];
    return lambda_[i] + f * (lambda_[i + 1] - lambda_[i]);
  }

  /// Node i lies in the reflecting region x_i <= chi.
  bool reflecting(std::size_t i) const noexcept {
    if (chi_ == std::numeric_limits<double>::infinity()) return true;
    if (chi_ == -std::numeric_limits<double>::infinity()) return false;
    return grid_.x(i) <= chi_ + 1e-9 * grid_.dx();
  }

  /// First node with x_i >= chi; absorption is checked from here on.
  std::size_t chi_node() const noexcept {
    if (chi_ == std::numeric_limits<double>::infinity()) return grid_.n();
    if (chi_ == -std::numeric_limits<double>::infinity()) return 0;
    return grid_.ceil_index(chi_);
  }

  double min_value() const noexcept { return *std::min_element(lambda_.begin(), lambda_.end()); }
  double max_value() const noexcept { return *std::max_element(lambda_.begin(), lambda_.end()); }

 private:
  Grid grid_;
  std::vector<double> lambda_;
  double chi_;
  BarrierFamily family_;
};

inline Barrier make_flat(const Grid& grid, double c, double chi) {
  return Barrier(grid, std::vector<double>(grid.n(), c), chi, BarrierFamily::flat);
}

inline Barrier make_affine(const Grid& grid, double intercept, double slope, double chi) {
  std::vector<double> l(grid.n());
  for (std::size_t i = 0; i < grid.n(); ++i) l[i] = intercept + slope * grid.x(i);
  return Barrier(grid, std::move(l), chi, BarrierFamily::affine);
}

/// Two-sided Brownian barrier of variance v_b with lambda(anchor_x) = anchor
/// (anchor_x is snapped to the nearest node).
inline Barrier make_brownian(const Grid& grid, double v_b, double anchor, double chi, std::uint64_t seed,
                             double anchor_x = 0.0) {
  if (!(v_b > 0.0)) fail(ErrorKind::InvalidConfig, "barrier variance must be positive");
  const std::size_t a = grid.nearest(anchor_x);
  std::vector<double> l(grid.n());
  Rng rng(mix_seed(seed, 0xBA22));
  const double sd = std::sqrt(v_b * grid.dx());
  l[a] = anchor;
  for (std::size_t i = a + 1; i < grid.n(); ++i) l[i] = l[i - 1] + sd * rng.gaussian();
  for (std::size_t i = a; i-- > 0;) l[i] = l[i + 1] + sd * rng.gaussian();
  return Barrier(grid, std::move(l), chi, BarrierFamily::brownian);
}

/// lambda(t) = -|t|^{1/3}, extended symmetrically to t < 0.
inline Barrier make_cusp(const Grid& grid, double chi = 0.0) {
  if (!grid.contains(0.0)) fail(ErrorKind::InvalidConfig, "cusp barrier needs 0 inside the window");
  std::vector<double> l(grid.n());
  for (std::size_t i = 0; i < grid.n(); ++i) l[i] = -std::cbrt(std::abs(grid.x(i)));
  return Barrier(grid, std::move(l), chi, BarrierFamily::cusp);
}

/// Linear interpolation through sorted knots that cover the window.
inline Barrier make_piecewise_linear(const Grid& grid, const std::vector<std::pair<double, double>>& knots,
                                     double chi) {
  if (knots.size() < 2) fail(ErrorKind::MalformedKnots, "need at least two knots");
  for (std::size_t k = 1; k < knots.size(); ++k)
    if (!(knots[k].first > knots[k - 1].first)) fail(ErrorKind::MalformedKnots, "knots must be strictly increasing");
  for (const auto& [x, y] : knots)
    if (!std::isfinite(x) || !std::isfinite(y)) fail(ErrorKind::MalformedKnots, "knots must be finite");
  const double tol = 1e-9 * grid.dx();
  if (knots.front().first > grid.left() + tol || knots.back().first < grid.right() - tol)
    fail(ErrorKind::MalformedKnots, "knots do not cover the grid window");
  std::vector<double> l(grid.n());
  std::size_t k = 0;
  for (std::size_t i = 0; i < grid.n(); ++i) {
    const double x = grid.x(i);
    while (k + 2 < knots.size() && x > knots[k + 1].first) ++k;
    const auto& [xa, ya] = knots[k];
    const auto& [xb, yb] = knots[k + 1];
    const double f = std::clamp((x - xa) / (xb - xa), 0.0, 1.0);
    l[i] = ya + f * (yb - ya);
  }
  return Barrier(grid, std::move(l), chi, BarrierFamily::piecewise_linear);
}

/// Largest absolute slope between consecutive nodes.
inline double lipschitz_constant(const Barrier& b) {
  double best = 0.0;
  for (std::size_t i = 1; i < b.size(); ++i) best = std::max(best, std::abs(b[i] - b[i - 1]) / b.grid().dx());
  return best;
}

/// The barrier seen from the right: lambda'(x) = lambda(-x), chi' = -chi.
inline Barrier reversed(const Barrier& b) {
  const Grid& g = b.grid();
  Grid rg(-g.right(), g.dx(), g.n());
  std::vector<double> l(b.values().rbegin(), b.values().rend());
  return Barrier(rg, std::move(l), -b.chi(), b.family());
}

/// Translate lambda by a constant.
inline Barrier shifted(const Barrier& b, double offset) {
  std::vector<double> l = b.values();
  for (double& x : l) x += offset;
  return Barrier(b.grid(), std::move(l), b.chi(), b.family());
}

/// The same barrier read off on another grid by linear interpolation; used to
/// refine or coarsen one realisation consistently.
inline Barrier resampled(const Barrier& b, const Grid& g) {
  std::vector<double> l(g.n());
  for (std::size_t i = 0; i < g.n(); ++i) l[i] = b.at(g.x(i));
  return Barrier(g, std::move(l), b.chi(), b.family());
}

// ---------------------------------------------------------------------------
// File format: header "x0 dx n chi v" then n lambda values.

struct BarrierFile {
  Barrier barrier;
  double v;
};

inline BarrierFile read_barrier(std::istream& in) {
  in.imbue(std::locale::classic());
  double x0 = 0, dx = 0, chi = 0, v = 0;
  long long n = 0;
  std::string chi_token;
  if (!(in >> x0 >> dx >> n >> chi_token >> v)) fail(ErrorKind::InvalidConfig, "barrier file: malformed header");
  if (chi_token == "inf" || chi_token == "+inf") chi = std::numeric_limits<double>::infinity();
  else if (chi_token == "-inf") chi = -std::numeric_limits<double>::infinity();
  else {
    std::istringstream cs(chi_token);
    cs.imbue(std::locale::classic());
    if (!(cs >> chi)) fail(ErrorKind::InvalidConfig, "barrier file: malformed chi");
  }
  if (n < 2) fail(ErrorKind::InvalidConfig, "barrier file: n must be at least 2");
  std::vector<double> l(static_cast<std::size_t>(n));
  for (auto& x : l)
    if (!(in >> x)) fail(ErrorKind::InvalidConfig, "barrier file: fewer values than n");
  double extra;
  if (in >> extra) fail(ErrorKind::InvalidConfig, "barrier file: more values than n");
  return {Barrier(Grid(x0, dx, static_cast<std::size_t>(n)), std::move(l), chi, BarrierFamily::file), v};
}

inline void write_barrier(std::ostream& out, const Barrier& b, double v) {
  out.imbue(std::locale::classic());
  out.precision(17);
  out << b.grid().x0() << ' ' << b.grid().dx() << ' ' << b.grid().n() << ' ';
  if (std::isinf(b.chi())) out << (b.chi() > 0 ? "inf" : "-inf");
  else out << b.chi();
  out << ' ' << v << '\n';
  for (std::size_t i = 0; i < b.size(); ++i) out << b[i] << (i + 1 == b.size() ? '\n' : ' ');
}

// ---------------------------------------------------------------------------
// Niceness: a grid witness x in [chi-eps, chi) with lambda(x)-lambda(chi) > -sqrt(chi-x)
// shows the bad condition fails for that eps at grid resolution.

struct NiceVerdict {
  bool nice = true;
  std::vector<double> eps;
  std::vector<std::optional<double>> witness;  ///< per eps, the witness abscissa if found
  double eps_star = 0.0;                       ///< largest eps without a witness (0 if nice)
};

inline NiceVerdict is_nice_numeric(const Barrier& b, const std::vector<double>& eps_list) {
  const Grid& g = b.grid();
  const double chi = b.chi();
  if (!std::isfinite(chi) || !g.contains(chi))
    fail(ErrorKind::ChiOutsideWindow, "chi must lie inside the grid window");
  const double lchi = b.at(chi);
  NiceVerdict out;
  for (double eps : eps_list) {
    if (!(eps > 0.0)) fail(ErrorKind::InvalidConfig, "eps must be positive");
    if (eps > chi - g.left() + 1e-12) fail(ErrorKind::InvalidConfig, "eps exceeds the window left of chi");
    if (eps < g.dx()) fail(ErrorKind::InvalidConfig, "eps below grid resolution");
    std::optional<double> w;
    // Scan from chi leftwards so the witness closest to chi is reported.
    const std::size_t hi = g.ceil_index(chi);
    for (std::size_t i = hi + 1; i-- > 0;) {
      if (i >= g.n()) continue;
      const double x = g.x(i);
      if (x >= chi - 1e-12 * g.dx()) continue;
      if (x < chi - eps - 1e-12 * g.dx()) break;
      if (b[i] - lchi > -std::sqrt(chi - x)) {
        w = x;
        break;
      }
    }
    out.eps.push_back(eps);
    out.witness.push_back(w);
    if (!w) {
      out.nice = false;
      out.eps_star = std::max(out.eps_star, eps);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Goodness: does a two-sided BM started above lambda hit it on both sides?

struct GoodEstimate {
  std::vector<double> half_widths;  ///< window half-widths, increasing
  std::vector<double> hit_right;    ///< hit fraction within each half-width to the right
  std::vector<double> hit_left;
  double hit_prob_right = 0.0;  ///< on the largest window
  double hit_prob_left = 0.0;
  double ci95 = 0.0;
  bool good_consistent = false;
};

struct GoodOptions {
  double v = 1.0;
  double start_gap = 0.01;       ///< start height above lambda at the centre node
  double initial_half_width = 0.0;  ///< 0: largest window / growth^4
  double threshold = 0.99;
  unsigned threads = 1;
};

inline GoodEstimate is_good_numeric(const Barrier& b, std::size_t trials, double horizon_growth, std::uint64_t seed,
                                    const GoodOptions& opt = {}) {
  if (trials < 1) fail(ErrorKind::InvalidConfig, "trials must be at least 1");
  if (!(horizon_growth > 1.0)) fail(ErrorKind::InvalidConfig, "horizon_growth must exceed 1");
  const Grid& g = b.grid();
  const std::size_t c = g.n() / 2;
  const std::size_t max_steps = std::min(c, g.n() - 1 - c);
  if (max_steps < 1) fail(ErrorKind::InvalidConfig, "window too small");
  const double largest = static_cast<double>(max_steps) * g.dx();
  double w = opt.initial_half_width > 0 ? opt.initial_half_width : largest / std::pow(horizon_growth, 4);
  GoodEstimate est;
  while (w < largest * (1 - 1e-12)) {
    est.half_widths.push_back(w);
    w *= horizon_growth;
  }
  est.half_widths.push_back(largest);

  const double sd = std::sqrt(opt.v * g.dx());
  const double var = opt.v * g.dx();
  const double h0 = b[c] + opt.start_gap;
  // Per trial: number of steps until the first hit on each side (max_steps+1 if none).
  struct Hits {
    std::size_t right, left;
  };
  auto hits = parallel_map<Hits>(trials, opt.threads, [&](std::size_t t) {
    Rng rng(mix_seed(seed, t));
    Hits h{max_steps + 1, max_steps + 1};
    for (int dir = 0; dir < 2; ++dir) {
      double w_prev = h0;
      for (std::size_t k = 1; k <= max_steps; ++k) {
        const std::size_t i = dir == 0 ? c + k : c - k;
        const std::size_t ip = dir == 0 ? i - 1 : i + 1;
        const double wn = w_prev + sd * rng.gaussian();
        const double g0 = w_prev - b[ip], g1 = wn - b[i];
        const bool hit = g1 <= 0.0 || rng.uniform() < bridge_crossing_probability(g0, g1, var);
        if (hit) {
          (dir == 0 ? h.right : h.left) = k;
          break;
        }
        w_prev = wn;
      }
    }
    return h;
  });
  for (double hw : est.half_widths) {
    const auto steps = static_cast<std::size_t>(std::llround(hw / g.dx()));
    std::size_t r = 0, l = 0;
    for (const auto& h : hits) {
      r += h.right <= steps;
      l += h.left <= steps;
    }
    est.hit_right.push_back(static_cast<double>(r) / static_cast<double>(trials));
    est.hit_left.push_back(static_cast<double>(l) / static_cast<double>(trials));
  }
  est.hit_prob_right = est.hit_right.back();
  est.hit_prob_left = est.hit_left.back();
  const double p = std::min(est.hit_prob_right, est.hit_prob_left);
  est.ci95 = 1.96 * std::sqrt(std::max(p * (1 - p), 1.0 / static_cast<double>(trials)) / static_cast<double>(trials));
  est.good_consistent = p + est.ci95 >= opt.threshold;
  return est;
}

}  // namespace tsrmlab

#endif  // TSRMLAB_BARRIER_HPP
