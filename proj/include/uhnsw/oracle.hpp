#pragma once

/// \file oracle.hpp
/// Exact brute-force K-NN under any L_p and recall computation: the
/// ground-truth source for every benchmark and acceptance check. Distances
/// are computed in double precision; ties at any rank break by ascending id.
///
/// Ground-truth cache format: magic "UHGT1", u32 n_queries, u32 K,
/// f64 p, then n_queries x K u32 ids (all little-endian).

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "uhnsw/dataset.hpp"
#include "uhnsw/metrics.hpp"
#include "uhnsw/scored_id.hpp"

namespace uhnsw {

/// Exact double-precision L_p distance; reference path used for ground truth.
double lp_distance_double(std::span<const float> x, std::span<const float> y,
                          const MetricParam& p);

/// Exact double-precision p-th power sum (ranking surrogate).
double lp_pth_power_double(std::span<const float> x, std::span<const float> y,
                           const MetricParam& p);

/// Exact top-k of `data` around q under L_p, ascending by (distance, id).
/// Requires 1 <= k <= n. Returned dist fields are narrowed to float.
std::vector<ScoredId> brute_force_knn(const Dataset& data,
                                      std::span<const float> q,
                                      const MetricParam& p, std::uint32_t k);

/// Per-query exact top-k id lists for a whole query set.
struct GroundTruth {
  double p = 0.0;
  std::uint32_t k = 0;
  std::uint32_t n_queries = 0;
  std::vector<std::uint32_t> ids;  // n_queries * k, each row ascending by dist

  std::span<const std::uint32_t> entry(std::uint32_t query) const {
    return {ids.data() + static_cast<std::size_t>(query) * k, k};
  }
};

/// Computes ground truth for every query row; embarrassingly parallel across
/// queries (threads == 0 picks the hardware count), merged in query order.
GroundTruth compute_ground_truth(const Dataset& data, const Dataset& queries,
                                 const MetricParam& p, std::uint32_t k,
                                 unsigned threads = 0);

/// |result ∩ truth| / k. Both sides must hold exactly k distinct ids.
double recall(std::span<const std::uint32_t> result_ids,
              std::span<const std::uint32_t> truth_ids);

void save_ground_truth(const GroundTruth& gt,
                       const std::filesystem::path& path);
GroundTruth load_ground_truth(const std::filesystem::path& path);

/// Cache location keyed by (corpus, query set, p, k).
std::filesystem::path ground_truth_cache_path(
    const std::filesystem::path& dir, const Dataset& data,
    const Dataset& queries, const MetricParam& p, std::uint32_t k);

/// Loads the cached ground truth if present and consistent, else computes
/// and saves it.
GroundTruth cached_ground_truth(const std::filesystem::path& dir,
                                const Dataset& data, const Dataset& queries,
                                const MetricParam& p, std::uint32_t k,
                                unsigned threads = 0);

}  // namespace uhnsw
