// Bubble areas T(x,h), their inversion into the self-repelling motion
// (X_t, H_t), local times L_t and the Ray-Knight and occupation checks.
//
// Heights at a column are split into levels: level k holds h in
// (v_k, v_{k+1}] where v_0 < v_1 < ... are the skeleton nodes there. Inside a
// level the bubble follows node k to the right, the predecessor chain of node
// k to the left, and equals h at the column itself, so
//   T(x, h) = A(x, k) + dx (h - v_k),
// with A(x, k) the trapezoid area at the bottom of the level. Below the lowest
// node the bubble follows the barrier-starting line from x, whose area to the
// right of x is F(x), so T = F(x) + dx (h - lambda(x)) there.

#ifndef TSRMLAB_TSRM_HPP
#define TSRMLAB_TSRM_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "tsrmlab/lines.hpp"
#include "tsrmlab/stats.hpp"

namespace tsrmlab {

struct BubbleProfile {
  double x = 0.0;
  double h = 0.0;
  std::size_t column = 0;
  std::vector<double> values;  ///< on every grid column
  double area = 0.0;
  bool left_closed = false;
  bool right_closed = false;
  /// The profile comes within one lattice spacing of the highest start
  /// height, above which the skeleton is not dense; values there are unresolved.
  bool capped = false;
};

/// Trapezoid area between a profile and the barrier over the whole grid.
inline double trapezoid_area(const std::vector<double>& profile, const Barrier& b) {
  if (profile.size() != b.size()) fail(ErrorKind::InvalidConfig, "profile length does not match the barrier");
  double s = 0.0;
  for (std::size_t i = 0; i < profile.size(); ++i) {
    const double w = (i == 0 || i + 1 == profile.size()) ? 0.5 : 1.0;
    s += w * (profile[i] - b[i]);
  }
  return s * b.grid().dx();
}

/// Stitched forward/backward profile through (x, h). Does not throw when the
/// profile is cut by the window; inspect the closed flags.
inline BubbleProfile bubble_profile(const Skeleton& s, double x, double h) {
  const Barrier& b = s.barrier();
  BubbleProfile p;
  p.column = s.column_of(x);
  p.x = s.grid().x(p.column);
  p.h = h;
  if (!(h > b[p.column])) fail(ErrorKind::UndefinedStart, "start height must lie strictly above the barrier");
  const std::size_t n = s.columns();
  const std::size_t c = p.column;
  p.values.assign(b.values().begin(), b.values().end());
  p.values[c] = h;
  const std::size_t k = s.level_of(c, h);
  if (k == npos) {
    for (std::size_t y = c + 1; y < n; ++y) p.values[y] = s.floor_value(c, y);
  } else {
    for (std::size_t y = c + 1; y < n; ++y) p.values[y] = s.follow(c, k, y);
    std::size_t j = k;
    for (std::size_t y = c; y > 0 && j != npos; --y) {
      j = s.predecessor(y, j);
      if (j != npos) p.values[y - 1] = s.node_value(y - 1, j);
    }
  }
  const double ceiling = s.options().h_hi - s.spacing();
  for (double v : p.values) p.capped = p.capped || v >= ceiling;
  p.left_closed = p.values.front() <= b[0];
  p.right_closed = p.values.back() <= b[n - 1];
  p.area = trapezoid_area(p.values, b);
  return p;
}

/// Bubble through (x, h); raises NotClosedInWindow if it leaves the window.
inline BubbleProfile bubble(const Skeleton& s, double x, double h) {
  auto p = bubble_profile(s, x, h);
  if (!p.left_closed || !p.right_closed)
    fail(ErrorKind::NotClosedInWindow, "bubble does not return to the barrier inside the window");
  return p;
}

/// T at column c from the level tables.
inline double area_at(const Skeleton& s, std::size_t c, double h) {
  const Barrier& b = s.barrier();
  const double dx = s.grid().dx();
  if (!(h > b[c])) fail(ErrorKind::UndefinedStart, "start height must lie strictly above the barrier");
  const std::size_t k = s.level_of(c, h);
  if (k == npos) {
    if (c == 0 || s.floor_open(c)) fail(ErrorKind::NotClosedInWindow, "bubble touches the window edge");
    return s.floor_area(c) + dx * (h - b[c]);
  }
  if (s.level_open(c, k)) fail(ErrorKind::NotClosedInWindow, "bubble does not return to the barrier inside the window");
  return s.level_area(c, k) + dx * (h - s.node_value(c, k));
}

/// T(x, h).
inline double area(const Skeleton& s, double x, double h) { return area_at(s, s.column_of(x), h); }

struct TPlus {
  double value;   ///< extrapolated limit as eta -> 0
  double spread;  ///< max - min of the sampled T(x, h + eta)
  std::vector<double> eta;
  std::vector<double> samples;
};

/// Right limit of T(x, .) at h, by linear extrapolation in eta.
inline TPlus t_plus(const Skeleton& s, double x, double h, std::vector<double> eta_list = {}) {
  if (eta_list.empty()) {
    const double e = std::ldexp(1.0, -s.level() - 3);
    eta_list = {4 * e, 2 * e, e};
  }
  const std::size_t c = s.column_of(x);
  if (h < s.barrier()[c]) fail(ErrorKind::UndefinedStart, "height below the barrier");
  TPlus out{0.0, 0.0, eta_list, {}};
  for (double e : eta_list) {
    if (!(e > 0.0)) fail(ErrorKind::InvalidConfig, "eta must be positive");
    out.samples.push_back(area_at(s, c, h + e));
  }
  const auto [mn, mx] = std::minmax_element(out.samples.begin(), out.samples.end());
  out.spread = *mx - *mn;
  out.value = eta_list.size() >= 2 ? stats::linear_fit(eta_list, out.samples).intercept : out.samples.front();
  return out;
}

namespace detail {

/// Levels of one column for time inversion. Index 0 is the point h = lambda
/// (area 0), index 1 the heights below the lowest node, index k + 2 the level
/// of node k. start(i) is the area at the bottom of level i.
class ColumnLevels {
 public:
  ColumnLevels(const Skeleton& s, std::size_t c) : s_(s), c_(c), K_(s.nodes(c)) {}
  std::size_t size() const noexcept { return K_ + 2; }
  double start(std::size_t i) const {
    if (i == 0) return 0.0;
    if (i == 1) return s_.floor_area(c_);
    return s_.level_area(c_, i - 2);
  }
  bool open(std::size_t i) const {
    if (i == 0) return false;
    if (i == 1) return c_ == 0 || s_.floor_open(c_);
    return s_.level_open(c_, i - 2);
  }
  double base(std::size_t i) const { return i < 2 ? s_.barrier()[c_] : s_.node_value(c_, i - 2); }
  double top(std::size_t i) const {
    if (i == 0) return s_.barrier()[c_];
    const std::size_t next = i - 1;  // node index above level i
    return next < K_ ? s_.node_value(c_, next) : std::numeric_limits<double>::infinity();
  }
  /// Largest i with start(i) < t, or npos when t <= 0.
  std::size_t below(double t) const {
    std::size_t lo = 0, hi = size();
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      if (start(mid) < t)
        lo = mid + 1;
      else
        hi = mid;
    }
    return lo == 0 ? npos : lo - 1;
  }
  /// Height inside level i whose area is t, capped at the level top.
  double solve(std::size_t i, double t, double dx) const {
    if (i == 0) return base(0);
    return std::min(top(i), base(i) + (t - start(i)) / dx);
  }
  double area(std::size_t i, double h, double dx) const { return i == 0 ? 0.0 : start(i) + dx * (h - base(i)); }

 private:
  const Skeleton& s_;
  std::size_t c_;
  std::size_t K_;
};

}  // namespace detail

/// L_t at column c: sup of h with T(c, h) < t, lambda if none.
inline double local_time_at(const Skeleton& s, double t, std::size_t c) {
  if (!(t >= 0.0)) fail(ErrorKind::InvalidConfig, "time must be non-negative");
  const detail::ColumnLevels lv(s, c);
  const std::size_t i = lv.below(t);
  if (i == npos) return s.barrier()[c];
  if (lv.open(i)) fail(ErrorKind::NotClosedInWindow, "local time needs bubbles that close inside the window");
  return lv.solve(i, t, s.grid().dx());
}

inline double local_time(const Skeleton& s, double t, double x) { return local_time_at(s, t, s.column_of(x)); }

/// L_t on every column; columns whose value cannot be decided inside the
/// window are reported as NaN.
inline std::vector<double> local_time_profile(const Skeleton& s, double t) {
  std::vector<double> out(s.columns());
  for (std::size_t c = 0; c < s.columns(); ++c) {
    try {
      out[c] = local_time_at(s, t, c);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NotClosedInWindow) throw;
      out[c] = std::numeric_limits<double>::quiet_NaN();
    }
  }
  return out;
}

struct TimePoint {
  double X;
  double H;
  double residual;  ///< |T(X, H) - t|
  double gap;       ///< width of the area bracket at the chosen column
  std::size_t column;
};

/// Locate the point whose bubble area is t: per column, bracket t between
/// consecutive levels; keep the column with the narrowest bracket (ties: smaller
/// |x|, then smaller x) and solve inside its level.
inline TimePoint invert_time(const Skeleton& s, double t) {
  if (!(t >= 0.0)) fail(ErrorKind::InvalidConfig, "time must be non-negative");
  const Grid& g = s.grid();
  const double dx = g.dx();
  std::optional<TimePoint> best;
  for (std::size_t c = 1; c + 1 < s.columns(); ++c) {
    const detail::ColumnLevels lv(s, c);
    const std::size_t i = lv.below(t);
    double gap = 0.0, H = s.barrier()[c], residual = 0.0;
    if (i != npos) {
      if (i + 1 >= lv.size() || lv.open(i) || lv.open(i + 1)) continue;
      gap = lv.start(i + 1) - lv.start(i);
      H = lv.solve(i, t, dx);
      residual = std::abs(t - lv.area(i, H, dx));
    }
    const double x = g.x(c);
    auto better = [&](const TimePoint& o) {
      if (gap != o.gap) return gap < o.gap;
      const double ax = std::abs(x), ao = std::abs(g.x(o.column));
      if (ax != ao) return ax < ao;
      return x < g.x(o.column);
    };
    if (!best || better(*best)) best = TimePoint{x, H, residual, gap, c};
  }
  if (!best) fail(ErrorKind::TimeOutOfRange, "time exceeds the closed-bubble areas available in the window");
  return *best;
}

struct TsrmSample {
  std::vector<double> times;
  std::vector<double> X;
  std::vector<double> H;
  std::vector<double> residual;
  std::vector<std::vector<double>> local_time_snapshots;  ///< empty unless requested
  double max_jump = 0.0;                                  ///< max |X_{k+1} - X_k|
};

inline TsrmSample tsrm_path(const Skeleton& s, const std::vector<double>& t_grid, bool snapshots = false) {
  if (!std::is_sorted(t_grid.begin(), t_grid.end())) fail(ErrorKind::InvalidConfig, "time grid must be increasing");
  TsrmSample out;
  for (double t : t_grid) {
    const TimePoint p = invert_time(s, t);
    out.times.push_back(t);
    out.X.push_back(p.X);
    out.H.push_back(p.H);
    out.residual.push_back(p.residual);
    if (snapshots) out.local_time_snapshots.push_back(local_time_profile(s, t));
    if (out.X.size() > 1) out.max_jump = std::max(out.max_jump, std::abs(out.X.back() - out.X[out.X.size() - 2]));
  }
  return out;
}

struct RayKnight {
  double max_abs_error;
  double t;
  std::size_t worst_column;
};

/// max over interior columns of |L_{T(x,h)}(y) - bubble(y)|.
inline RayKnight ray_knight_check(const Skeleton& s, double x, double h) {
  const BubbleProfile p = bubble(s, x, h);
  const double t = area_at(s, p.column, h);
  RayKnight out{0.0, t, p.column};
  for (std::size_t c = 1; c + 1 < s.columns(); ++c) {
    const double e = std::abs(local_time_at(s, t, c) - p.values[c]);
    if (e > out.max_abs_error) {
      out.max_abs_error = e;
      out.worst_column = c;
    }
  }
  return out;
}

struct Occupation {
  double lhs;  ///< time spent in [a, b] up to t
  double rhs;  ///< integral of L_t - lambda over [a, b]
};

/// Occupation identity on [a, b] using a midpoint time grid of n_t cells.
inline Occupation occupation_check(const Skeleton& s, double t, double a, double b, std::size_t n_t) {
  if (!(b > a)) fail(ErrorKind::InvalidConfig, "interval must satisfy a < b");
  if (n_t < 1) fail(ErrorKind::InvalidConfig, "time grid needs at least one cell");
  const Grid& g = s.grid();
  if (!g.contains(a) || !g.contains(b)) fail(ErrorKind::InvalidConfig, "interval must lie inside the window");
  const double dt = t / static_cast<double>(n_t);
  Occupation o{0.0, 0.0};
  for (std::size_t k = 0; k < n_t; ++k) {
    const TimePoint p = invert_time(s, (static_cast<double>(k) + 0.5) * dt);
    if (p.X >= a && p.X <= b) o.lhs += dt;
  }
  const std::size_t ca = g.ceil_index(a);
  std::size_t cb = g.nearest(b);
  if (g.x(cb) > b + 1e-9 * g.dx() && cb > 0) --cb;
  const Barrier& bar = s.barrier();
  for (std::size_t c = ca; c <= cb && c < g.n(); ++c) {
    const double w = (c == ca || c == cb) ? 0.5 : 1.0;
    o.rhs += w * (local_time_at(s, t, c) - bar[c]);
  }
  o.rhs *= g.dx();
  return o;
}

}  // namespace tsrmlab

#endif  // TSRMLAB_TSRM_HPP
