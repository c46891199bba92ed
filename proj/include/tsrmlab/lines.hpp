// Dyadic skeleton of coalescing forward lines, forward and backward line
// evaluation, trace sets and the column tables (successors, predecessors,
// bubble areas) that the self-repelling motion is built from.

#ifndef TSRMLAB_LINES_HPP
#define TSRMLAB_LINES_HPP

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <tuple>
#include <vector>

#include "tsrmlab/barrier.hpp"
#include "tsrmlab/coalescing.hpp"
#include "tsrmlab/core.hpp"

namespace tsrmlab {

struct SkeletonOptions {
  double v = 1.0;
  /// Start window in x; defaults to the grid window.
  std::optional<double> x_lo, x_hi;
  /// Start heights lie in (h_lo, h_hi]; h_lo defaults to the barrier minimum.
  std::optional<double> h_lo;
  double h_hi = 1.0;
  /// Dyadic exponent of the start abscissae (spacing 2^-x_level); defaults to
  /// m. Setting it to the grid exponent starts lines on every column.
  std::optional<int> x_level;
  CoalescingOptions coalescing{};
  /// Gaussians summed per grid step (see RngDriver); keeps noise coupled when
  /// the grid step is halved and substeps doubled.
  unsigned substeps = 1;
};

struct SkeletonStart {
  double x;
  double h;
  std::size_t column;
  int level;  ///< dyadic level at which the point first appears
  std::size_t line;
};

struct ForwardEval {
  double value;
  bool fallback;  ///< no skeleton line passes below h: a fresh RAB was used
};

/// Seed of the line started at (x, h); independent of the level m and of the
/// grid step, so refinements reuse the same noise for shared starts.
inline std::uint64_t lattice_seed(std::uint64_t seed, double x, double h) {
  const auto ix = static_cast<std::uint64_t>(std::llround(std::ldexp(x, 30)));
  const auto ih = static_cast<std::uint64_t>(std::llround(std::ldexp(h, 30)));
  return mix_seed(mix_seed(seed, ix), ih);
}

class Skeleton {
 public:
  Skeleton(const Barrier& b, int m, std::uint64_t seed, const SkeletonOptions& opt = {})
      : sys_(b, opt.v, opt.coalescing), m_(m), seed_(seed), opt_(opt) {
    if (m < 1 || m > 30) fail(ErrorKind::InvalidConfig, "skeleton level m must lie in [1, 30]");
    enumerate();
    build();
    tabulate();
  }

  const Barrier& barrier() const noexcept { return sys_.barrier(); }
  const Grid& grid() const noexcept { return sys_.barrier().grid(); }
  const CoalescingSystem& system() const noexcept { return sys_; }
  int level() const noexcept { return m_; }
  std::uint64_t seed() const noexcept { return seed_; }
  double v() const noexcept { return opt_.v; }
  const SkeletonOptions& options() const noexcept { return opt_; }
  double spacing() const noexcept { return std::ldexp(1.0, -m_); }
  const std::vector<SkeletonStart>& starts() const noexcept { return starts_; }
  std::size_t columns() const noexcept { return sys_.columns(); }
  const std::vector<ColumnNode>& column(std::size_t c) const { return sys_.column(c); }
  std::size_t nodes(std::size_t c) const { return sys_.column(c).size(); }
  double node_value(std::size_t c, std::size_t k) const { return sys_.column(c)[k].value; }

  /// Column of abscissa x (nearest node); x must lie in the window.
  std::size_t column_of(double x) const {
    if (!grid().contains(x)) fail(ErrorKind::InvalidConfig, "abscissa outside the grid window");
    return grid().nearest(x);
  }

  /// Node index at column c+1 of the trajectory through node (c, k).
  std::size_t successor(std::size_t c, std::size_t k) const { return succ_[c][k]; }
  /// Top node at column c-1 whose successor lies at or below node k; npos if none.
  std::size_t predecessor(std::size_t c, std::size_t k) const { return pred_[c][k]; }

  /// Level of height h at column c: index of the top node strictly below h, npos if none.
  std::size_t level_of(std::size_t c, double h) const {
    const auto& col = sys_.column(c);
    const auto it =
        std::lower_bound(col.begin(), col.end(), h, [](const ColumnNode& a, double x) { return a.value < x; });
    const auto n = static_cast<std::size_t>(it - col.begin());
    return n == 0 ? npos : n - 1;
  }

  /// Bubble area at the bottom of level k of column c (h just above node k).
  double level_area(std::size_t c, std::size_t k) const { return left_[c][k] + right_[c][k]; }
  /// True if the bubble at level k of column c is still above lambda at a window edge.
  bool level_open(std::size_t c, std::size_t k) const {
    return c == 0 || c + 1 == columns() || left_open_[c][k] || right_open_[c][k];
  }

  /// Barrier-starting line from column c, coalesced into the skeleton; it is
  /// the limit of the lines started just above lambda(c).
  const LineRecord& floor_line(std::size_t c) const { return floor_[c]; }
  double floor_value(std::size_t c, std::size_t cy) const { return sys_.value(floor_[c], cy); }
  /// dx * sum over columns > c of (floor line - lambda), and whether it stays
  /// above lambda at the right edge.
  double floor_area(std::size_t c) const { return floor_area_[c]; }
  bool floor_open(std::size_t c) const { return floor_open_[c] != 0; }

  /// Value at column cy of the trajectory through node (c, k).
  double follow(std::size_t c, std::size_t k, std::size_t cy) const {
    return sys_.value(sys_.column(c)[k].owner, cy);
  }

  /// Forward line from (x, h) evaluated at y >= x.
  ForwardEval forward(double x, double h, double y) const {
    const std::size_t c = column_of(x);
    const std::size_t cy = column_of(y);
    if (cy < c) fail(ErrorKind::InvalidConfig, "forward evaluation needs y >= x");
    if (!(h > barrier()[c])) fail(ErrorKind::UndefinedStart, "start height must lie strictly above the barrier");
    if (const std::size_t k = sys_.find_node(c, h); k != npos) return {follow(c, k, cy), false};
    if (const std::size_t k = level_of(c, h); k != npos) return {follow(c, k, cy), false};
    RngDriver d(lattice_seed(mix_seed(seed_, 0xFA11BAC), grid().x(c), h), opt_.v, grid().dx(), opt_.substeps);
    const LineRecord rec = sys_.probe(c, h, d);
    return {sys_.value(rec, cy), true};
  }

  /// Distinct values at column y of lines started at or left of x.
  std::vector<double> trace(double x, double y) const {
    const std::size_t c = column_of(x);
    const std::size_t cy = column_of(y);
    if (cy < c) fail(ErrorKind::InvalidConfig, "trace set needs x <= y");
    std::vector<double> out;
    const auto& col = sys_.column(c);
    out.reserve(col.size());
    for (const auto& node : col) out.push_back(sys_.value(node.owner, cy));
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  /// Backward line from (x, h) at y <= x: the highest line through column y
  /// that passes strictly below h at x; lambda(y) if there is none.
  double backward(double x, double h, double y) const {
    const std::size_t c = column_of(x);
    const std::size_t cy = column_of(y);
    if (cy > c) fail(ErrorKind::InvalidConfig, "backward evaluation needs y <= x");
    if (!(h > barrier()[c])) fail(ErrorKind::UndefinedStart, "start height must lie strictly above the barrier");
    const std::size_t k = backward_node(c, h, cy);
    return k == npos ? barrier()[cy] : node_value(cy, k);
  }

  /// Node at column cy of the backward line from (c, h), npos for lambda.
  std::size_t backward_node(std::size_t c, double h, std::size_t cy) const {
    const auto& col = sys_.column(cy);
    std::size_t lo = 0, hi = col.size();  // first node whose value at c is >= h
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      if (sys_.value(col[mid].owner, c) < h)
        lo = mid + 1;
      else
        hi = mid;
    }
    return lo == 0 ? npos : lo - 1;
  }

 private:
  void enumerate() {
    const Grid& g = grid();
    const double step = spacing();
    const int mx = opt_.x_level.value_or(m_);
    if (mx < 1 || mx > 30) fail(ErrorKind::InvalidConfig, "x_level must lie in [1, 30]");
    const double xstep = std::ldexp(1.0, -mx);
    const double xl = opt_.x_lo.value_or(g.left());
    const double xr = opt_.x_hi.value_or(g.right());
    if (xl < g.left() - 1e-12 || xr > g.right() + 1e-12 || !(xr >= xl))
      fail(ErrorKind::InvalidConfig, "start window must lie inside the grid window");
    const double hl = opt_.h_lo.value_or(barrier().min_value());
    const double hh = opt_.h_hi;
    if (!(hh > hl)) fail(ErrorKind::InvalidConfig, "start heights need h_hi > h_lo");
    const auto ix0 = static_cast<long long>(std::ceil(xl / xstep - 1e-9));
    const auto ix1 = static_cast<long long>(std::floor(xr / xstep + 1e-9));
    const auto ih0 = static_cast<long long>(std::floor(hl / step + 1e-9)) + 1;
    const auto ih1 = static_cast<long long>(std::floor(hh / step + 1e-9));
    const double count = static_cast<double>(std::max(0LL, ix1 - ix0 + 1)) * static_cast<double>(std::max(0LL, ih1 - ih0 + 1));
    if (count > static_cast<double>(opt_.coalescing.max_lines)) fail(ErrorKind::ResourceLimit, "too many skeleton starts");
    auto level_of_index = [](long long i, int e) {
      if (i == 0) return 0;
      return std::max(0, e - std::countr_zero(static_cast<unsigned long long>(i < 0 ? -i : i)));
    };
    std::vector<std::tuple<int, long long, long long>> keys;
    for (long long ix = ix0; ix <= ix1; ++ix) {
      const double x = static_cast<double>(ix) * xstep;
      const std::size_t c = g.nearest(x);
      for (long long ih = ih0; ih <= ih1; ++ih) {
        const double h = static_cast<double>(ih) * step;
        if (!(h > barrier()[c])) continue;
        keys.emplace_back(std::max(level_of_index(ix, mx), level_of_index(ih, m_)), ix, ih);
      }
    }
    std::sort(keys.begin(), keys.end());
    starts_.reserve(keys.size());
    // Abscissae off the grid start at the nearest node; when several share a
    // node the earliest in the ordering is kept.
    std::set<std::pair<std::size_t, long long>> used;
    for (const auto& [lev, ix, ih] : keys) {
      const double x = static_cast<double>(ix) * xstep;
      const std::size_t c = g.nearest(x);
      if (xstep < g.dx() && !used.emplace(c, ih).second) continue;
      starts_.push_back({x, static_cast<double>(ih) * step, c, lev, npos});
    }
  }

  void build() {
    for (auto& s : starts_) {
      const std::uint64_t ls = lattice_seed(seed_, s.x, s.h);
      RngDriver d(ls, opt_.v, grid().dx(), opt_.substeps);
      s.line = sys_.size();
      sys_.add_line(s.column, s.h, d, ls);
    }
  }

  void tabulate() {
    const std::size_t n = columns();
    const Barrier& b = barrier();
    const double dx = grid().dx();
    succ_.assign(n, {});
    pred_.assign(n, {});
    for (std::size_t c = 0; c + 1 < n; ++c) {
      const auto& col = sys_.column(c);
      succ_[c].resize(col.size());
      for (std::size_t k = 0; k < col.size(); ++k) {
        const std::size_t s = sys_.find_node(c + 1, sys_.value(col[k].owner, c + 1));
        if (s == npos) fail(ErrorKind::InvalidConfig, "internal: successor node missing");
        succ_[c][k] = s;
      }
    }
    succ_[n - 1].assign(sys_.column(n - 1).size(), npos);
    pred_[0].assign(sys_.column(0).size(), npos);
    for (std::size_t c = 1; c < n; ++c) {
      const std::size_t size = sys_.column(c).size();
      pred_[c].assign(size, npos);
      const auto& sp = succ_[c - 1];
      std::size_t j = 0;
      for (std::size_t k = 0; k < size; ++k) {
        while (j < sp.size() && sp[j] <= k) ++j;
        pred_[c][k] = j == 0 ? npos : j - 1;
      }
    }
    right_.assign(n, {});
    right_open_.assign(n, {});
    for (std::size_t c = n; c-- > 0;) {
      const auto& col = sys_.column(c);
      right_[c].resize(col.size());
      right_open_[c].resize(col.size());
      for (std::size_t k = 0; k < col.size(); ++k) {
        const double excess = dx * (col[k].value - b[c]);
        if (c + 1 == n) {
          right_[c][k] = excess;
          right_open_[c][k] = col[k].value > b[c];
        } else {
          right_[c][k] = excess + right_[c + 1][succ_[c][k]];
          right_open_[c][k] = right_open_[c + 1][succ_[c][k]];
        }
      }
    }
    left_.assign(n, {});
    left_open_.assign(n, {});
    for (std::size_t c = 0; c < n; ++c) {
      const auto& col = sys_.column(c);
      left_[c].resize(col.size());
      left_open_[c].resize(col.size());
      for (std::size_t k = 0; k < col.size(); ++k) {
        if (c == 0) {
          left_[c][k] = 0.0;
          left_open_[c][k] = col[k].value > b[0];
          continue;
        }
        const std::size_t j = pred_[c][k];
        if (j == npos) {
          left_[c][k] = 0.0;
          left_open_[c][k] = false;
        } else {
          const double vj = sys_.column(c - 1)[j].value;
          left_[c][k] = dx * (vj - b[c - 1]) + left_[c - 1][j];
          left_open_[c][k] = c - 1 == 0 ? vj > b[0] : left_open_[c - 1][j];
        }
      }
    }
    floor_.resize(n);
    floor_area_.assign(n, 0.0);
    floor_open_.assign(n, 0);
    for (std::size_t c = 0; c < n; ++c) {
      RngDriver d(lattice_seed(mix_seed(seed_, 0xF100D), grid().x(c), 0.0), opt_.v, dx, opt_.substeps);
      const LineRecord& f = floor_[c] = sys_.probe_from_barrier(c, d);
      double a = 0.0;
      const std::size_t own_end = std::min(n, f.start + f.own.size());
      for (std::size_t y = c + 1; y < own_end; ++y) a += f.own[y - f.start] - b[y];
      floor_area_[c] = dx * a;
      if (f.merged()) {
        const std::size_t k = sys_.find_node(f.omega, sys_.value(f.nu, f.omega));
        floor_area_[c] += right_[f.omega][k];
        floor_open_[c] = right_open_[f.omega][k];
      } else {
        floor_open_[c] = c + 1 == n || f.own.back() > b[n - 1];
      }
    }
  }

  CoalescingSystem sys_;
  int m_;
  std::uint64_t seed_;
  SkeletonOptions opt_;
  std::vector<SkeletonStart> starts_;
  std::vector<std::vector<std::size_t>> succ_, pred_;
  std::vector<std::vector<double>> left_, right_;
  std::vector<std::vector<std::uint8_t>> left_open_, right_open_;
  std::vector<LineRecord> floor_;
  std::vector<double> floor_area_;
  std::vector<std::uint8_t> floor_open_;
};

inline Skeleton build_skeleton(const Barrier& b, int m, std::uint64_t seed, const SkeletonOptions& opt = {}) {
  return Skeleton(b, m, seed, opt);
}

inline double eval_forward(const Skeleton& s, double x, double h, double y) { return s.forward(x, h, y).value; }

inline std::vector<double> trace_set(const Skeleton& s, double x, double y) { return s.trace(x, y); }

inline double eval_backward(const Skeleton& s, double x, double h, double y) { return s.backward(x, h, y); }

/// One draw of the backward line value at y; the caller supplies a skeleton
/// built from a fresh seed per draw.
inline double reversal_sample(const Skeleton& s, double x, double h, double y) { return s.backward(x, h, y); }

}  // namespace tsrmlab

#endif  // TSRMLAB_LINES_HPP
