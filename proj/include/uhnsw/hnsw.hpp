#pragma once

/// \file hnsw.hpp
/// Hierarchical navigable small-world graph index under one fixed base
/// metric. Construction inserts points one by one; each layer links a node
/// to at most M neighbors (2M at layer 0) chosen by the pruning heuristic.
/// After build the index is immutable and safe for concurrent searches.
///
/// Snapshot format (all integers little-endian 32-bit unless noted):
///   magic "UHNSW1"
///   u32 M, u32 ef_construction, u64 seed, f64 metric p
///   u32 n, u32 d, u32 max_level, u32 entry_point
///   n   x u32 node level
///   per node, per layer 0..level: u32 count, count x u32 neighbor ids
/// The snapshot stores the graph only; loading requires the original
/// dataset and validates n and d against it.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "uhnsw/dataset.hpp"
#include "uhnsw/metrics.hpp"
#include "uhnsw/scored_id.hpp"

namespace uhnsw {

struct HnswParams {
  std::uint32_t M = 32;
  std::uint32_t ef_construction = 500;
  std::uint64_t seed = 100;
  MetricParam metric{2.0};

  /// M >= 2, ef_construction >= M.
  void validate() const;
};

struct SearchStats {
  /// Number of query-to-data distance evaluations under the base metric.
  std::uint64_t n_base = 0;
};

class HnswIndex {
 public:
  /// Builds the full graph over `dataset`. With threads > 1 insertions run
  /// concurrently (per-node locking); threads == 1 is the deterministic
  /// reference: identical (dataset order, params) give identical adjacency.
  /// The index keeps a reference to the dataset, which must outlive it.
  static HnswIndex build(const Dataset& dataset, const HnswParams& params,
                         unsigned threads = 1);

  /// Approximate t nearest neighbors of q under params().metric, ascending
  /// by (distance, id), at most min(t, n) entries. Requires ef_search >= t.
  std::vector<ScoredId> knn_search(std::span<const float> q, std::uint32_t t,
                                   std::uint32_t ef_search) const;

  /// As above, additionally counting base-metric distance evaluations.
  std::vector<ScoredId> knn_search(std::span<const float> q, std::uint32_t t,
                                   std::uint32_t ef_search,
                                   SearchStats& stats) const;

  const HnswParams& params() const noexcept { return params_; }
  const Dataset& dataset() const noexcept { return *data_; }
  std::uint32_t size() const noexcept {
    return static_cast<std::uint32_t>(levels_.size());
  }
  std::uint32_t entry_point() const noexcept { return entry_point_; }
  std::int32_t max_level() const noexcept { return max_level_; }
  std::int32_t level(std::uint32_t node) const { return levels_.at(node); }

  std::span<const std::uint32_t> neighbors(std::uint32_t node,
                                           std::int32_t layer) const {
    const auto& per_layer = links_.at(node).at(static_cast<std::size_t>(layer));
    return per_layer;
  }

  void save(const std::filesystem::path& path) const;
  static HnswIndex load(const std::filesystem::path& path,
                        const Dataset& dataset);

 private:
  friend class HnswBuilder;
  HnswIndex() : params_{} {}

  std::vector<ScoredId> search_impl(std::span<const float> q, std::uint32_t t,
                                    std::uint32_t ef_search,
                                    SearchStats* stats) const;

  const Dataset* data_ = nullptr;
  HnswParams params_;
  std::vector<std::int32_t> levels_;
  // links_[node][layer] = neighbor ids; layer 0 holds every node
  std::vector<std::vector<std::vector<std::uint32_t>>> links_;
  std::uint32_t entry_point_ = 0;
  std::int32_t max_level_ = 0;
};

}  // namespace uhnsw
