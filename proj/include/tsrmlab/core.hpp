// Uniform grids, counter-based seeding, Gaussian sampling, Brownian paths
// and the closed-form Gaussian fluctuation bounds used across the library.

#ifndef TSRMLAB_CORE_HPP
#define TSRMLAB_CORE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace tsrmlab {

inline constexpr const char* version = "0.1.0";

enum class ErrorKind {
  InvalidConfig,
  UndefinedStart,
  ResourceLimit,
  ChiOutsideWindow,
  MalformedKnots,
  NotClosedInWindow,
  TimeOutOfRange,
  NotNiceBarrier,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::UndefinedStart: return "UndefinedStart";
    case ErrorKind::ResourceLimit: return "ResourceLimit";
    case ErrorKind::ChiOutsideWindow: return "ChiOutsideWindow";
    case ErrorKind::MalformedKnots: return "MalformedKnots";
    case ErrorKind::NotClosedInWindow: return "NotClosedInWindow";
    case ErrorKind::TimeOutOfRange: return "TimeOutOfRange";
    case ErrorKind::NotNiceBarrier: return "NotNiceBarrier";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the ErrorKind tags.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

// ---------------------------------------------------------------------------
// Grid

/// Uniform abscissa lattice x_i = x0 + i*dx, i in [0, n).
class Grid {
 public:
  Grid(double x0, double dx, std::size_t n) : x0_(x0), dx_(dx), n_(n) {
    if (!(dx > 0.0) || !std::isfinite(dx)) fail(ErrorKind::InvalidConfig, "grid step must be positive");
    if (n < 2) fail(ErrorKind::InvalidConfig, "grid needs at least two points");
    if (!std::isfinite(x0)) fail(ErrorKind::InvalidConfig, "grid origin must be finite");
  }

  /// Grid covering [a, b] with step dx; b is rounded to the nearest node.
  static Grid span(double a, double b, double dx) {
    if (!(b > a)) fail(ErrorKind::InvalidConfig, "grid window must satisfy a < b");
    if (!(dx > 0.0)) fail(ErrorKind::InvalidConfig, "grid step must be positive");
    const auto n = static_cast<std::size_t>(std::llround((b - a) / dx)) + 1;
    return Grid(a, dx, n);
  }

  double x0() const noexcept { return x0_; }
  double dx() const noexcept { return dx_; }
  std::size_t n() const noexcept { return n_; }
  double x(std::size_t i) const noexcept { return x0_ + static_cast<double>(i) * dx_; }
  double left() const noexcept { return x0_; }
  double right() const noexcept { return x(n_ - 1); }
  bool contains(double x) const noexcept { return x >= left() - 1e-12 * dx_ && x <= right() + 1e-12 * dx_; }

  /// Nearest node index, clamped to the grid.
  std::size_t nearest(double x) const noexcept {
    const double r = std::round((x - x0_) / dx_);
    if (r <= 0.0) return 0;
    if (r >= static_cast<double>(n_ - 1)) return n_ - 1;
    return static_cast<std::size_t>(r);
  }

  /// Smallest index with x_i >= x (n if none). Nodes within 1e-9*dx of x count as equal.
  std::size_t ceil_index(double x) const noexcept {
    const double r = std::ceil((x - x0_) / dx_ - 1e-9);
    if (r <= 0.0) return 0;
    if (r >= static_cast<double>(n_)) return n_;
    return static_cast<std::size_t>(r);
  }

  /// True when x lies on a node up to 1e-9*dx.
  bool on_node(double x) const noexcept {
    const double r = (x - x0_) / dx_;
    return std::abs(r - std::round(r)) < 1e-9;
  }

  friend bool operator==(const Grid& a, const Grid& b) noexcept {
    return a.x0_ == b.x0_ && a.dx_ == b.dx_ && a.n_ == b.n_;
  }

 private:
  double x0_;
  double dx_;
  std::size_t n_;
};

// ---------------------------------------------------------------------------
// Random numbers

/// SplitMix64 finalizer (Steele, Lea, Flood 2014).
constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Per-trial seed derivation; trials are independent of evaluation order.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  return splitmix64(seed ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

/// xoshiro256** with a Box-Muller Gaussian on top. The stream is fixed by the
/// seed alone so results are bit-identical across platforms and thread counts.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept {
    std::uint64_t z = seed;
    for (auto& w : s_) {
      z += 0x9E3779B97F4A7C15ULL;
      w = splitmix64(z);
    }
  }

  std::uint64_t next_u64() noexcept {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform in [0, 1).
  double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in (0, 1].
  double uniform_open0() noexcept { return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53; }

  double gaussian() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform_open0()));
    const double theta = 2.0 * std::numbers::pi * uniform();
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

  std::uint64_t s_[4]{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// ---------------------------------------------------------------------------
// Brownian paths

/// Brownian motion W sampled on every node of a grid.
struct NoisePath {
  Grid grid;
  double v;
  std::vector<double> values;
  std::uint64_t seed;

  double operator[](std::size_t i) const noexcept { return values[i]; }
  std::size_t size() const noexcept { return values.size(); }
};

/// Brownian path of variance v per unit abscissa with W(x0) = start_value.
inline NoisePath sample_bm(const Grid& grid, double v, double start_value, std::uint64_t seed) {
  if (!(v > 0.0) || !std::isfinite(v)) fail(ErrorKind::InvalidConfig, "Brownian variance v must be positive");
  NoisePath path{grid, v, {}, seed};
  path.values.resize(grid.n());
  Rng rng(seed);
  const double sd = std::sqrt(v * grid.dx());
  double w = start_value;
  path.values[0] = w;
  for (std::size_t i = 1; i < grid.n(); ++i) {
    w += sd * rng.gaussian();
    path.values[i] = w;
  }
  return path;
}

/// Wrap externally supplied values (hand-traced paths in tests, replayed noise).
inline NoisePath make_noise(const Grid& grid, double v, std::vector<double> values, std::uint64_t seed = 0) {
  if (values.size() != grid.n()) fail(ErrorKind::InvalidConfig, "noise length does not match the grid");
  if (!(v > 0.0)) fail(ErrorKind::InvalidConfig, "Brownian variance v must be positive");
  return NoisePath{grid, v, std::move(values), seed};
}

// ---------------------------------------------------------------------------
// Closed-form bounds

namespace detail {
inline void require_positive(double value, const char* name) {
  if (!(value > 0.0)) fail(ErrorKind::InvalidConfig, std::string(name) + " must be positive");
}
}  // namespace detail

/// Upper bound on P(exists y in [y1, y1+dx], |W_y - W_y1| >= a):
/// 2 sqrt(2 v dx) / (a sqrt(pi)) * exp(-a^2 / (2 v dx)).
inline double bm_fluct_upper_bound(double a, double v, double delta_x) {
  detail::require_positive(a, "a");
  detail::require_positive(v, "v");
  detail::require_positive(delta_x, "delta_x");
  if (std::isinf(a)) return 0.0;
  const double var = v * delta_x;
  return 2.0 * std::sqrt(2.0 * var) / (a * std::sqrt(std::numbers::pi)) * std::exp(-a * a / (2.0 * var));
}

/// Upper bound on P(max over [y1, y1+dx] of W_y - W_y1 <= a) = 2a / sqrt(2 pi v dx).
inline double bm_small_max_bound(double a, double v, double delta_x) {
  if (a < 0.0) fail(ErrorKind::InvalidConfig, "a must be non-negative");
  detail::require_positive(v, "v");
  detail::require_positive(delta_x, "delta_x");
  return 2.0 * a / std::sqrt(2.0 * std::numbers::pi * v * delta_x);
}

/// Leading-order probability that three independent BMs started delta apart
/// stay pairwise distinct for a duration eps: (delta/sqrt(eps))^3 / (2 sqrt(pi v^3)).
inline double three_bm_separation_asymptote(double delta, double eps, double v) {
  if (delta < 0.0) fail(ErrorKind::InvalidConfig, "delta must be non-negative");
  detail::require_positive(eps, "eps");
  detail::require_positive(v, "v");
  const double r = delta / std::sqrt(eps);
  return r * r * r / (2.0 * std::sqrt(std::numbers::pi * v * v * v));
}

/// Upper bound on P(two coalescing RABs started gap apart stay strictly
/// ordered above the barrier after a distance span): gap / sqrt(pi v span).
inline double pair_noncoalescence_bound(double gap, double v, double span) {
  if (gap < 0.0) fail(ErrorKind::InvalidConfig, "gap must be non-negative");
  detail::require_positive(v, "v");
  detail::require_positive(span, "span");
  return gap / std::sqrt(std::numbers::pi * v * span);
}

/// Bound on the expected number of distinct values at q' of lines started on
/// the height lattice of [-K, K] at q: 2 + 2K / sqrt(pi v (q'-q)).
inline double line_count_bound(double K, double v, double span) {
  detail::require_positive(K, "K");
  detail::require_positive(v, "v");
  detail::require_positive(span, "span");
  return 2.0 + 2.0 * K / std::sqrt(std::numbers::pi * v * span);
}

/// Probability that a Brownian bridge of variance var over one step, with
/// endpoint gaps g0 > 0 and g1 > 0 from a level, touches the level.
inline double bridge_crossing_probability(double g0, double g1, double var) {
  if (g0 <= 0.0 || g1 <= 0.0) return 1.0;
  return std::exp(-2.0 * g0 * g1 / var);
}

}  // namespace tsrmlab

#endif  // TSRMLAB_CORE_HPP
