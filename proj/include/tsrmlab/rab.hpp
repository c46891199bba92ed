// Brownian motions reflected on lambda left of chi and absorbed by lambda
// right of chi (RABs), sampled on the barrier grid.

#ifndef TSRMLAB_RAB_HPP
#define TSRMLAB_RAB_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "tsrmlab/barrier.hpp"
#include "tsrmlab/core.hpp"

namespace tsrmlab {

struct SamplingOptions {
  /// Test for crossings between nodes with the Brownian-bridge probability
  /// exp(-2 g0 g1 / var). Off by default: detection at nodes only.
  bool bridge_correction = false;
};

/// One-step update of a RAB on the grid. For reflecting nodes the discrete
/// Skorokhod map R_{i} = max(R_{i-1} + dW, lambda_i) reproduces
/// W_i + sup_{Y <= z <= i}(lambda_z - W_z) exactly; for absorbing nodes the
/// path is glued to lambda at the first node where it would go at or below it.
class RabStepper {
 public:
  RabStepper(const Barrier& b, double v, bool bridge) : b_(&b), var_(v * b.grid().dx()), bridge_(bridge) {}

  bool absorbed() const noexcept { return absorbed_; }
  void set_absorbed() noexcept { absorbed_ = true; }

  /// Index of the first reflection off lambda (the free phase ends there).
  std::optional<std::size_t> first_contact() const noexcept { return first_contact_; }

  /// Advance from node i-1 (value prev) to node i with increment dw. u is a
  /// uniform draw used only by the bridge test.
  double step(std::size_t i, double prev, double dw, double u) noexcept {
    const Barrier& b = *b_;
    if (absorbed_) return b[i];
    const double free = prev + dw;
    if (b.reflecting(i) && !free_absorbing_) {
      if (free <= b[i]) {
        if (!first_contact_) first_contact_ = i;
        if (i == b.chi_node()) absorbed_ = true;
        return b[i];
      }
      return free;
    }
    if (free <= b[i] || (bridge_ && u < bridge_crossing_probability(prev - b[i - 1], free - b[i], var_))) {
      absorbed_ = true;
      return b[i];
    }
    return free;
  }

  /// Started at or beyond chi: the path is a plain absorbed BM from the start.
  void start_absorbing() noexcept { free_absorbing_ = true; }

 private:
  const Barrier* b_;
  double var_;
  bool bridge_;
  bool absorbed_ = false;
  bool free_absorbing_ = false;
  std::optional<std::size_t> first_contact_;
};

/// True when the start node lies in the absorbing regime (x >= chi).
inline bool starts_absorbing(const Barrier& b, std::size_t i0) {
  const double chi = b.chi();
  if (chi == -std::numeric_limits<double>::infinity()) return true;
  if (chi == std::numeric_limits<double>::infinity()) return false;
  return b.grid().x(i0) >= chi - 1e-9 * b.grid().dx();
}

struct RabPath {
  std::size_t start_index = 0;
  double start_height = 0.0;
  std::vector<double> values;  ///< R(x_i) for i >= start_index
  std::optional<std::size_t> absorbed_at;
  std::optional<std::size_t> first_hit_before_chi;
  std::uint64_t noise_seed = 0;

  double at(std::size_t i) const { return values.at(i - start_index); }
  std::size_t end_index() const noexcept { return start_index + values.size(); }
};

namespace detail {

inline std::size_t start_node(const Barrier& b, double x) {
  const Grid& g = b.grid();
  if (!g.contains(x)) fail(ErrorKind::InvalidConfig, "start abscissa outside the grid window");
  return g.nearest(x);
}

inline void check_noise(const Barrier& b, const NoisePath& noise) {
  if (!(noise.grid == b.grid())) fail(ErrorKind::InvalidConfig, "noise grid does not match the barrier grid");
}

inline RabPath run_rab(const Barrier& b, std::size_t i0, double h, const NoisePath& noise, bool absorbing_start,
                       const SamplingOptions& opt) {
  RabPath path;
  path.start_index = i0;
  path.start_height = h;
  path.noise_seed = noise.seed;
  const std::size_t n = b.grid().n();
  path.values.reserve(n - i0);
  path.values.push_back(h);
  RabStepper stepper(b, noise.v, opt.bridge_correction);
  if (absorbing_start) stepper.start_absorbing();
  Rng bridge_rng(mix_seed(noise.seed, 0xB51D6E));
  double r = h;
  for (std::size_t i = i0 + 1; i < n; ++i) {
    const double u = opt.bridge_correction ? bridge_rng.uniform() : 1.0;
    const bool was = stepper.absorbed();
    r = stepper.step(i, r, noise[i] - noise[i - 1], u);
    if (!was && stepper.absorbed()) path.absorbed_at = i;
    path.values.push_back(r);
  }
  path.first_hit_before_chi = stepper.first_contact();
  return path;
}

}  // namespace detail

/// RAB started from (x, h) and driven by the increments of noise after x.
/// x is snapped to the nearest node.
inline RabPath sample_rab(const Barrier& b, double x, double h, const NoisePath& noise,
                          const SamplingOptions& opt = {}) {
  detail::check_noise(b, noise);
  const std::size_t i0 = detail::start_node(b, x);
  if (!(h > b[i0])) fail(ErrorKind::UndefinedStart, "start height must lie strictly above the barrier");
  return detail::run_rab(b, i0, h, noise, starts_absorbing(b, i0), opt);
}

/// RAB started on the barrier: identically lambda if x >= chi, otherwise the
/// reflected path W_y + sup_{x <= z <= y}(lambda_z - W_z) up to chi.
inline RabPath sample_barrier_start_rab(const Barrier& b, double x, const NoisePath& noise,
                                        const SamplingOptions& opt = {}) {
  detail::check_noise(b, noise);
  const std::size_t i0 = detail::start_node(b, x);
  if (starts_absorbing(b, i0)) {
    RabPath path;
    path.start_index = i0;
    path.start_height = b[i0];
    path.noise_seed = noise.seed;
    path.values.assign(b.values().begin() + static_cast<std::ptrdiff_t>(i0), b.values().end());
    path.absorbed_at = i0;
    return path;
  }
  auto path = detail::run_rab(b, i0, b[i0], noise, false, opt);
  path.first_hit_before_chi = i0;
  return path;
}

/// First index i >= from where p and q meet or cross between i-1 and i.
/// Paths are indexed on a common grid; values outside [begin, end) are absent.
inline std::optional<std::size_t> crossing_index(const std::vector<double>& p, const std::vector<double>& q,
                                                 std::size_t from) {
  const std::size_t n = std::min(p.size(), q.size());
  for (std::size_t i = from; i < n; ++i) {
    if (p[i] == q[i]) return i;
    if (i > from && (p[i] - q[i]) * (p[i - 1] - q[i - 1]) < 0.0) return i;
  }
  return std::nullopt;
}

}  // namespace tsrmlab

#endif  // TSRMLAB_RAB_HPP
