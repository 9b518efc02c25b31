#pragma once

/// \file metrics.hpp
/// L_p distance kernels over single-precision vectors, 0 < p <= 2.
///
/// Three cost tiers:
///   Fast      p = 1 or 2        add/sub/mul only, auto-vectorizes
///   SqrtFast  p = 0.5 or 1.5    adds one hardware sqrt per component
///   General   any other p       one powf per component, roughly an order
///                               of magnitude slower than the Fast tier
///
/// Kernels accumulate in single precision across eight independent lanes
/// (fixed horizontal-sum order, so results are bit-reproducible). Callers
/// are expected to reject non-finite components at ingestion; debug builds
/// assert on them here.

#include <cassert>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace uhnsw {

enum class MetricTier { kFast, kSqrtFast, kGeneral };

/// The per-query metric parameter p of the L_p metric. Valid range (0, 2].
/// Tier classification compares p exactly against 0.5, 1, 1.5, 2: p is
/// user-supplied configuration, not a computed quantity.
class MetricParam {
 public:
  explicit MetricParam(double p) : p_(p) {
    if (!(p > 0.0) || p > 2.0) {
      throw std::invalid_argument("MetricParam: p must be in (0, 2], got " +
                                  std::to_string(p));
    }
    if (p == 1.0 || p == 2.0) {
      tier_ = MetricTier::kFast;
    } else if (p == 0.5 || p == 1.5) {
      tier_ = MetricTier::kSqrtFast;
    } else {
      tier_ = MetricTier::kGeneral;
    }
  }

  double p() const noexcept { return p_; }
  MetricTier tier() const noexcept { return tier_; }

  friend bool operator==(const MetricParam& a, const MetricParam& b) noexcept {
    return a.p_ == b.p_;
  }

 private:
  double p_;
  MetricTier tier_;
};

/// Counts kernel invocations per metric parameter on the current thread.
/// Inactive (zero cost beyond a null check) unless an instance is alive.
/// Used by tests to prove search paths evaluate only their base metric.
class EvalRecorder {
 public:
  EvalRecorder();
  ~EvalRecorder();
  EvalRecorder(const EvalRecorder&) = delete;
  EvalRecorder& operator=(const EvalRecorder&) = delete;

  std::uint64_t count(double p) const noexcept {
    for (const auto& [key, n] : counts_) {
      if (key == p) return n;
    }
    return 0;
  }

  std::uint64_t total() const noexcept {
    std::uint64_t n = 0;
    for (const auto& [key, c] : counts_) n += c;
    return n;
  }

  void note(double p) noexcept {
    for (auto& [key, n] : counts_) {
      if (key == p) {
        ++n;
        return;
      }
    }
    counts_.emplace_back(p, 1);
  }

 private:
  std::vector<std::pair<double, std::uint64_t>> counts_;
  EvalRecorder* prev_;
};

namespace detail {

extern thread_local EvalRecorder* tl_recorder;

inline void note_eval(double p) noexcept {
  if (EvalRecorder* r = tl_recorder) r->note(p);
}

inline constexpr std::size_t kLanes = 8;

// Lane-wise sums below keep eight independent float accumulators and reduce
// them in a fixed tree; gcc/clang turn the inner blocks into SIMD at -O3.

inline float sum_abs(const float* x, const float* y, std::size_t d) noexcept {
  float acc[kLanes] = {};
  std::size_t i = 0;
  for (; i + kLanes <= d; i += kLanes) {
    for (std::size_t l = 0; l < kLanes; ++l) {
      acc[l] += std::fabs(x[i + l] - y[i + l]);
    }
  }
  float tail = 0.0f;
  for (; i < d; ++i) tail += std::fabs(x[i] - y[i]);
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) +
         ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail;
}

inline float sum_sq(const float* x, const float* y, std::size_t d) noexcept {
  float acc[kLanes] = {};
  std::size_t i = 0;
  for (; i + kLanes <= d; i += kLanes) {
    for (std::size_t l = 0; l < kLanes; ++l) {
      const float diff = x[i + l] - y[i + l];
      acc[l] += diff * diff;
    }
  }
  float tail = 0.0f;
  for (; i < d; ++i) {
    const float diff = x[i] - y[i];
    tail += diff * diff;
  }
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) +
         ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail;
}

inline float sum_sqrt_abs(const float* x, const float* y,
                          std::size_t d) noexcept {
  float acc[kLanes] = {};
  std::size_t i = 0;
  for (; i + kLanes <= d; i += kLanes) {
    for (std::size_t l = 0; l < kLanes; ++l) {
      acc[l] += std::sqrt(std::fabs(x[i + l] - y[i + l]));
    }
  }
  float tail = 0.0f;
  for (; i < d; ++i) tail += std::sqrt(std::fabs(x[i] - y[i]));
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) +
         ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail;
}

// |diff|^1.5 == |diff| * sqrt(|diff|)
inline float sum_abs_15(const float* x, const float* y,
                        std::size_t d) noexcept {
  float acc[kLanes] = {};
  std::size_t i = 0;
  for (; i + kLanes <= d; i += kLanes) {
    for (std::size_t l = 0; l < kLanes; ++l) {
      const float a = std::fabs(x[i + l] - y[i + l]);
      acc[l] += a * std::sqrt(a);
    }
  }
  float tail = 0.0f;
  for (; i < d; ++i) {
    const float a = std::fabs(x[i] - y[i]);
    tail += a * std::sqrt(a);
  }
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) +
         ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail;
}

inline float sum_pow(const float* x, const float* y, std::size_t d,
                     float p) noexcept {
  float acc[kLanes] = {};
  std::size_t i = 0;
  for (; i + kLanes <= d; i += kLanes) {
    for (std::size_t l = 0; l < kLanes; ++l) {
      acc[l] += std::pow(std::fabs(x[i + l] - y[i + l]), p);
    }
  }
  float tail = 0.0f;
  for (; i < d; ++i) tail += std::pow(std::fabs(x[i] - y[i]), p);
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) +
         ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail;
}

inline void check_pair(std::span<const float> x, std::span<const float> y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument(
        "lp_distance: dimension mismatch (" + std::to_string(x.size()) +
        " vs " + std::to_string(y.size()) + ")");
  }
#ifndef NDEBUG
  for (std::size_t i = 0; i < x.size(); ++i) {
    assert(std::isfinite(x[i]) && std::isfinite(y[i]) &&
           "non-finite component reached a distance kernel");
  }
#endif
}

inline float pth_power_dispatch(std::span<const float> x,
                                std::span<const float> y,
                                const MetricParam& m) noexcept {
  const float* a = x.data();
  const float* b = y.data();
  const std::size_t d = x.size();
  switch (m.tier()) {
    case MetricTier::kFast:
      return m.p() == 1.0 ? sum_abs(a, b, d) : sum_sq(a, b, d);
    case MetricTier::kSqrtFast:
      return m.p() == 0.5 ? sum_sqrt_abs(a, b, d) : sum_abs_15(a, b, d);
    case MetricTier::kGeneral:
      break;
  }
  return sum_pow(a, b, d, static_cast<float>(m.p()));
}

/// Forces the General-tier pow kernel regardless of p. Tier-agreement tests
/// compare this against the dispatched fast paths.
inline float pth_power_general(std::span<const float> x,
                               std::span<const float> y, const MetricParam& m) {
  check_pair(x, y);
  return sum_pow(x.data(), y.data(), x.size(), static_cast<float>(m.p()));
}

}  // namespace detail

/// Applies the 1/p root that turns a summed p-th power into an L_p distance.
inline float lp_root(float pth_power_sum, const MetricParam& m) noexcept {
  const double p = m.p();
  if (p == 1.0) return pth_power_sum;
  if (p == 2.0) return std::sqrt(pth_power_sum);
  if (p == 0.5) return pth_power_sum * pth_power_sum;
  return std::pow(pth_power_sum, static_cast<float>(1.0 / p));
}

/// Monotone ranking surrogate sum_i |x_i - y_i|^p. Ordering any point set by
/// this value equals ordering by lp_distance; ranking code may skip the root.
inline float lp_distance_pth_power(std::span<const float> x,
                                   std::span<const float> y,
                                   const MetricParam& m) {
  detail::check_pair(x, y);
  detail::note_eval(m.p());
  return detail::pth_power_dispatch(x, y, m);
}

/// L_p distance (sum_i |x_i - y_i|^p)^(1/p).
inline float lp_distance(std::span<const float> x, std::span<const float> y,
                         const MetricParam& m) {
  detail::check_pair(x, y);
  detail::note_eval(m.p());
  return lp_root(detail::pth_power_dispatch(x, y, m), m);
}

/// Mean wall-clock nanoseconds per lp_distance call at dimension d, measured
/// over `reps` calls on random finite inputs. Single-threaded; benchmark use.
double time_distance_kernel(std::uint32_t d, const MetricParam& m,
                            std::uint64_t reps);

}  // namespace uhnsw
