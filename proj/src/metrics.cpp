#include "uhnsw/metrics.hpp"

#include <chrono>
#include <random>

namespace uhnsw {

namespace detail {
thread_local EvalRecorder* tl_recorder = nullptr;
}  // namespace detail

EvalRecorder::EvalRecorder() : prev_(detail::tl_recorder) {
  detail::tl_recorder = this;
}

EvalRecorder::~EvalRecorder() { detail::tl_recorder = prev_; }

double time_distance_kernel(std::uint32_t d, const MetricParam& m,
                            std::uint64_t reps) {
  if (d == 0) throw std::invalid_argument("time_distance_kernel: d must be >= 1");
  if (reps == 0) throw std::invalid_argument("time_distance_kernel: reps must be >= 1");

  // A small pool of vector pairs keeps the working set cache-resident while
  // preventing the compiler from hoisting a single evaluation out of the loop.
  constexpr std::size_t kPool = 16;
  std::mt19937_64 rng(7);
  std::normal_distribution<float> dist(0.0f, 1.0f);
  std::vector<float> xs(kPool * d), ys(kPool * d);
  for (float& v : xs) v = dist(rng);
  for (float& v : ys) v = dist(rng);

  float sink = 0.0f;
  // warm-up
  for (std::size_t i = 0; i < kPool; ++i) {
    sink += lp_distance(std::span<const float>(&xs[i * d], d),
                        std::span<const float>(&ys[i * d], d), m);
  }

  const auto start = std::chrono::steady_clock::now();
  for (std::uint64_t r = 0; r < reps; ++r) {
    const std::size_t i = r % kPool;
    sink += lp_distance(std::span<const float>(&xs[i * d], d),
                        std::span<const float>(&ys[i * d], d), m);
  }
  const auto stop = std::chrono::steady_clock::now();

  volatile float keep = sink;
  (void)keep;

  const auto ns =
      std::chrono::duration_cast<std::chrono::nanoseconds>(stop - start);
  return static_cast<double>(ns.count()) / static_cast<double>(reps);
}

}  // namespace uhnsw
