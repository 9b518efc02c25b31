#pragma once

// Shared test helpers. The double-precision scalar loops below are the
// correctness oracle for the single-precision kernels; they deliberately
// share no code with the library implementation.

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace testsupport {

inline double lp_pth_power_ref(std::span<const float> x,
                               std::span<const float> y, double p) {
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    acc += std::pow(std::fabs(static_cast<double>(x[i]) -
                              static_cast<double>(y[i])),
                    p);
  }
  return acc;
}

inline double lp_distance_ref(std::span<const float> x,
                              std::span<const float> y, double p) {
  return std::pow(lp_pth_power_ref(x, y, p), 1.0 / p);
}

inline std::vector<float> random_vector(std::mt19937_64& rng, std::size_t d,
                                        float scale = 1.0f) {
  std::normal_distribution<float> dist(0.0f, scale);
  std::vector<float> v(d);
  for (float& c : v) c = dist(rng);
  return v;
}

inline double rel_err(double got, double want) {
  const double denom = std::max(std::fabs(want), 1e-30);
  return std::fabs(got - want) / denom;
}

}  // namespace testsupport
