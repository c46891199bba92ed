// Incremental engine for families of coalescing RABs. Lines are added one at a
// time; each walks its own RAB until it meets or crosses a previously added
// line and then shares that line's tail. Values are stored once per distinct
// trajectory, so merged tails are exact copies by construction.

#ifndef TSRMLAB_COALESCING_HPP
#define TSRMLAB_COALESCING_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "tsrmlab/barrier.hpp"
#include "tsrmlab/core.hpp"
#include "tsrmlab/rab.hpp"

namespace tsrmlab {

inline constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

/// Increment source from a seeded stream. Each step sums `substeps` Gaussians
/// of variance v*dx/substeps, so a line's driving BM is the same function of x
/// whatever the grid step, as long as dx*substeps is held fixed.
class RngDriver {
 public:
  RngDriver(std::uint64_t seed, double v, double dx, unsigned substeps = 1)
      : noise_(seed), bridge_(mix_seed(seed, 0xB51D6E)), sd_(std::sqrt(v * dx / substeps)), sub_(substeps) {}
  double increment(std::size_t) noexcept {
    double s = 0.0;
    for (unsigned k = 0; k < sub_; ++k) s += noise_.gaussian();
    return sd_ * s;
  }
  double uniform() noexcept { return bridge_.uniform(); }

 private:
  Rng noise_;
  Rng bridge_;
  double sd_;
  unsigned sub_;
};

/// Increment source replaying a stored Brownian path.
class NoiseDriver {
 public:
  explicit NoiseDriver(const NoisePath& w) : w_(&w), bridge_(mix_seed(w.seed, 0xB51D6E)) {}
  double increment(std::size_t i) const noexcept { return (*w_)[i] - (*w_)[i - 1]; }
  double uniform() noexcept { return bridge_.uniform(); }

 private:
  const NoisePath* w_;
  Rng bridge_;
};

/// One line of a coalescing family: its own RAB segment [start, omega) and the
/// earlier line nu it follows from omega on.
struct LineRecord {
  bool present = false;
  std::size_t start = 0;
  double height = 0.0;
  std::vector<double> own;
  std::size_t omega = npos;
  std::size_t nu = npos;
  std::optional<std::size_t> absorbed_at;
  std::optional<std::size_t> first_contact;
  std::uint64_t seed = 0;

  bool merged() const noexcept { return omega != npos; }
};

struct ColumnNode {
  double value;
  std::uint32_t owner;  ///< line whose own segment holds this node
};

struct CoalescingOptions {
  SamplingOptions sampling;
  std::size_t max_lines = 2'000'000;
};

class CoalescingSystem {
 public:
  CoalescingSystem(Barrier b, double v, CoalescingOptions opt = {})
      : b_(std::move(b)), v_(v), opt_(opt), cols_(b_.grid().n()) {
    if (!(v > 0.0) || !std::isfinite(v)) fail(ErrorKind::InvalidConfig, "Brownian variance v must be positive");
  }

  const Barrier& barrier() const noexcept { return b_; }
  double v() const noexcept { return v_; }
  const CoalescingOptions& options() const noexcept { return opt_; }
  std::size_t size() const noexcept { return lines_.size(); }
  const LineRecord& line(std::size_t j) const { return lines_.at(j); }
  const std::vector<LineRecord>& lines() const noexcept { return lines_; }
  const std::vector<ColumnNode>& column(std::size_t c) const { return cols_.at(c); }
  std::size_t columns() const noexcept { return cols_.size(); }

  /// Value of line j at column c >= start, following merges.
  double value(std::size_t j, std::size_t c) const noexcept {
    const LineRecord* l = &lines_[j];
    while (c >= l->omega) l = &lines_[l->nu];
    return l->own[c - l->start];
  }

  /// Index of the node holding value h at column c, or npos.
  std::size_t find_node(std::size_t c, double h) const noexcept {
    const auto& col = cols_[c];
    auto it = std::lower_bound(col.begin(), col.end(), h, [](const ColumnNode& a, double x) { return a.value < x; });
    if (it != col.end() && it->value == h) return static_cast<std::size_t>(it - col.begin());
    return npos;
  }

  /// Add the line started at column s and height h. Starts with h <= lambda
  /// are recorded as absent and return false.
  template <class Driver>
  bool add_line(std::size_t s, double h, Driver& driver, std::uint64_t seed = 0) {
    if (lines_.size() >= opt_.max_lines) fail(ErrorKind::ResourceLimit, "line budget exceeded");
    if (s >= cols_.size()) fail(ErrorKind::InvalidConfig, "start column outside the grid");
    LineRecord rec;
    rec.start = s;
    rec.height = h;
    rec.seed = seed;
    if (!(h > b_[s])) {
      lines_.push_back(std::move(rec));
      return false;
    }
    rec.present = true;
    walk(rec, driver);
    const auto id = static_cast<std::uint32_t>(lines_.size());
    for (std::size_t k = 0; k < rec.own.size(); ++k) insert(rec.start + k, rec.own[k], id);
    lines_.push_back(std::move(rec));
    return true;
  }

  /// Walk a line against the current family without adding it.
  template <class Driver>
  LineRecord probe(std::size_t s, double h, Driver& driver) const {
    LineRecord rec;
    rec.start = s;
    rec.height = h;
    if (!(h > b_[s])) fail(ErrorKind::UndefinedStart, "start height must lie strictly above the barrier");
    rec.present = true;
    walk(rec, driver);
    return rec;
  }

  /// Walk a barrier-starting line from column s without adding it; the
  /// line is identically lambda when s lies in the absorbing regime.
  template <class Driver>
  LineRecord probe_from_barrier(std::size_t s, Driver& driver) const {
    LineRecord rec;
    rec.start = s;
    rec.height = b_[s];
    rec.present = true;
    if (starts_absorbing(b_, s)) {
      rec.own.assign(b_.values().begin() + static_cast<std::ptrdiff_t>(s), b_.values().end());
      rec.absorbed_at = s;
      return rec;
    }
    walk(rec, driver);
    return rec;
  }

  /// Value at column c of a probed line.
  double value(const LineRecord& rec, std::size_t c) const noexcept {
    if (c < rec.omega) return rec.own[c - rec.start];
    return value(rec.nu, c);
  }

  /// Full path of line j from its start to the right edge.
  std::vector<double> resolved(std::size_t j) const {
    const LineRecord& l = lines_.at(j);
    std::vector<double> out;
    if (!l.present) return out;
    out.reserve(cols_.size() - l.start);
    for (std::size_t c = l.start; c < cols_.size(); ++c) out.push_back(value(j, c));
    return out;
  }

 private:
  void insert(std::size_t c, double value, std::uint32_t owner) {
    auto& col = cols_[c];
    auto it = std::lower_bound(col.begin(), col.end(), value,
                               [](const ColumnNode& a, double x) { return a.value < x; });
    col.insert(it, ColumnNode{value, owner});
  }

  template <class Driver>
  void walk(LineRecord& rec, Driver& driver) const {
    const std::size_t s = rec.start;
    const std::size_t n = cols_.size();
    const bool bridge = opt_.sampling.bridge_correction;
    const double pair_var = 2.0 * v_ * b_.grid().dx();
    if (const std::size_t k = find_node(s, rec.height); k != npos) {
      rec.omega = s;
      rec.nu = cols_[s][k].owner;
      return;
    }
    RabStepper stepper(b_, v_, bridge);
    if (starts_absorbing(b_, s)) stepper.start_absorbing();
    rec.own.reserve(16);
    rec.own.push_back(rec.height);
    double p = rec.height;
    constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
    for (std::size_t i = s + 1; i < n; ++i) {
      const double dw = driver.increment(i);
      double u[3] = {1.0, 1.0, 1.0};
      if (bridge) {
        u[0] = driver.uniform();
        u[1] = driver.uniform();
        u[2] = driver.uniform();
      }
      const bool was = stepper.absorbed();
      const double q = stepper.step(i, p, dw, u[0]);
      if (!was && stepper.absorbed()) rec.absorbed_at = i;

      const auto& prev = cols_[i - 1];
      const auto hi = static_cast<std::size_t>(
          std::lower_bound(prev.begin(), prev.end(), p, [](const ColumnNode& a, double x) { return a.value < x; }) -
          prev.begin());
      // The first trajectory met is the adjacent one the step crosses; the
      // adopted node's owner is the smallest line id through that node.
      std::size_t target = none;
      const bool has_hi = hi < prev.size(), has_lo = hi > 0;
      const double hi_val = has_hi ? value(prev[hi].owner, i) : 0.0;
      const double lo_val = has_lo ? value(prev[hi - 1].owner, i) : 0.0;
      std::optional<double> met;
      if (has_hi && hi_val <= q)
        met = hi_val;
      else if (has_lo && lo_val >= q)
        met = lo_val;
      else if (find_node(i, q) != npos)
        met = q;
      if (met) target = cols_[i][find_node(i, *met)].owner;
      if (bridge && target == none && p > b_[i - 1] && q > b_[i]) {
        if (has_hi && prev[hi].value > b_[i - 1] && hi_val > b_[i] &&
            u[1] < bridge_crossing_probability(prev[hi].value - p, hi_val - q, pair_var))
          target = cols_[i][find_node(i, hi_val)].owner;
        else if (has_lo && prev[hi - 1].value > b_[i - 1] && lo_val > b_[i] &&
            u[2] < bridge_crossing_probability(p - prev[hi - 1].value, q - lo_val, pair_var))
          target = cols_[i][find_node(i, lo_val)].owner;
      }
      if (target != none) {
        rec.omega = i;
        rec.nu = target;
        break;
      }
      rec.own.push_back(q);
      p = q;
    }
    rec.first_contact = stepper.first_contact();
  }

  Barrier b_;
  double v_;
  CoalescingOptions opt_;
  std::vector<std::vector<ColumnNode>> cols_;
  std::vector<LineRecord> lines_;
};

// ---------------------------------------------------------------------------
// Finite families of independent coalescing RABs

struct Start {
  double x;
  double h;
};

struct MergeRecord {
  std::size_t j;
  std::size_t omega;
  std::size_t nu;
};

struct CoalescingFamily {
  std::vector<std::optional<RabPath>> paths;  ///< resolved C_j; empty for undefined starts
  std::vector<MergeRecord> merge_records;
  std::vector<std::size_t> tail_sharing;  ///< nu_j for merged lines, j otherwise
};

namespace detail {

inline CoalescingFamily family_from(const CoalescingSystem& sys) {
  CoalescingFamily fam;
  for (std::size_t j = 0; j < sys.size(); ++j) {
    const LineRecord& l = sys.line(j);
    fam.tail_sharing.push_back(l.merged() ? l.nu : j);
    if (!l.present) {
      fam.paths.emplace_back(std::nullopt);
      continue;
    }
    RabPath p;
    p.start_index = l.start;
    p.start_height = l.height;
    p.values = sys.resolved(j);
    p.absorbed_at = l.absorbed_at;
    p.first_hit_before_chi = l.first_contact;
    p.noise_seed = l.seed;
    fam.paths.emplace_back(std::move(p));
    if (l.merged()) fam.merge_records.push_back({j, l.omega, l.nu});
  }
  return fam;
}

}  // namespace detail

/// Coalescing family driven by seeded streams, one seed per start.
inline CoalescingFamily build_ficrab(const Barrier& b, double v, const std::vector<Start>& starts,
                                     const std::vector<std::uint64_t>& seeds, const CoalescingOptions& opt = {}) {
  if (starts.empty()) fail(ErrorKind::InvalidConfig, "at least one start is required");
  if (seeds.size() != starts.size()) fail(ErrorKind::InvalidConfig, "one seed per start is required");
  CoalescingSystem sys(b, v, opt);
  for (std::size_t j = 0; j < starts.size(); ++j) {
    const std::size_t s = detail::start_node(b, starts[j].x);
    RngDriver d(seeds[j], v, b.grid().dx());
    sys.add_line(s, starts[j].h, d, seeds[j]);
  }
  return detail::family_from(sys);
}

/// Coalescing family driven by given noise paths, one per start.
inline CoalescingFamily build_ficrab(const Barrier& b, const std::vector<Start>& starts,
                                     const std::vector<NoisePath>& noises, const CoalescingOptions& opt = {}) {
  if (starts.empty()) fail(ErrorKind::InvalidConfig, "at least one start is required");
  if (noises.size() != starts.size()) fail(ErrorKind::InvalidConfig, "one noise path per start is required");
  CoalescingSystem sys(b, noises.front().v, opt);
  for (std::size_t j = 0; j < starts.size(); ++j) {
    detail::check_noise(b, noises[j]);
    const std::size_t s = detail::start_node(b, starts[j].x);
    NoiseDriver d(noises[j]);
    sys.add_line(s, starts[j].h, d, noises[j].seed);
  }
  return detail::family_from(sys);
}

}  // namespace tsrmlab

#endif  // TSRMLAB_COALESCING_HPP
