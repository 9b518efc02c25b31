#pragma once

/// \file uhnsw.hpp
/// Per-query-metric nearest-neighbor search over a pair of base-metric HNSW
/// indexes. A query (q, p, K) selects the base index by the cutoff on p,
/// fetches t candidates under the cheap base metric, then re-ranks them by
/// exact L_p distance in batches of kappa, stopping once the top-K set
/// stabilizes (intersection ratio >= tau). Queries with p equal to a base
/// metric bypass verification entirely.

#include <cstdint>
#include <span>
#include <vector>

#include "uhnsw/dataset.hpp"
#include "uhnsw/hnsw.hpp"
#include "uhnsw/metrics.hpp"
#include "uhnsw/scored_id.hpp"

namespace uhnsw {

struct GroundTruth;

struct UhnswParams {
  std::uint32_t t = 300;     ///< candidate set size
  double tau = 0.92;         ///< early-termination threshold; 1 disables it
  std::uint32_t kappa = 0;   ///< verification batch size; 0 binds to K
  std::uint32_t ef_search = 400;
  double cutoff_p = 1.4;     ///< p <= cutoff selects the low base index
  double p_min = 0.5;        ///< supported query range, inclusive
  double p_max = 2.0;
};

/// One ANNS-U-L_p query: vector, metric parameter, result size.
struct QueryTuple {
  std::span<const float> q;
  MetricParam p;
  std::uint32_t k = 50;
};

struct QueryStats {
  std::uint64_t n_base = 0;          ///< base-metric distance evaluations
  std::uint32_t n_lp = 0;            ///< target-metric distance evaluations
  std::uint32_t batches_consumed = 0;
  bool terminated_early = false;
  bool shortcut = false;             ///< p matched a base metric exactly
  bool used_low_index = false;
};

struct QueryResult {
  std::vector<ScoredId> neighbors;  ///< k entries ascending by L_p (dist, id)
  QueryStats stats;
};

struct VerifyOutcome {
  std::vector<ScoredId> neighbors;
  std::uint32_t n_lp = 0;
  std::uint32_t batches_consumed = 0;
  bool terminated_early = false;
};

/// Batched re-ranking of a base-metric-ordered candidate list by exact L_p
/// distance. `candidates` must be ascending under the base metric and hold
/// at least k entries. Seeds the running top-k with the first k candidates,
/// then consumes batches of kappa; after each batch the new top-k replaces
/// the old, and with tau < 1 the loop stops once the id overlap between the
/// two is >= tau * k. tau == 1 scans the whole list. Returned distances are
/// true L_p distances, ascending with ties by id.
VerifyOutcome verify_candidates(const Dataset& data,
                                std::span<const ScoredId> candidates,
                                std::span<const float> q, const MetricParam& p,
                                std::uint32_t k, double tau,
                                std::uint32_t kappa);

class UhnswIndex {
 public:
  /// Both indexes must cover the same dataset; base_lo's metric parameter
  /// must be below base_hi's, and both must be one of 0.5, 1, 2.
  UhnswIndex(const HnswIndex& base_lo, const HnswIndex& base_hi,
             UhnswParams params);

  /// Standard configuration over (G_1, G_2): cutoff 1.4, p in [0.5, 2].
  static UhnswIndex standard(const HnswIndex& g1, const HnswIndex& g2,
                             UhnswParams params = {});

  /// Shifted-range variant over (G_0.5, G_1): cutoff 0.6, p in [0.2, 1].
  static UhnswIndex extended(const HnswIndex& g05, const HnswIndex& g1,
                             UhnswParams params = {});

  /// base_lo if p <= cutoff_p, else base_hi.
  const HnswIndex& select_base_index(const MetricParam& p) const noexcept {
    return p.p() <= params_.cutoff_p ? *lo_ : *hi_;
  }

  QueryResult query(const QueryTuple& qt) const;

  const UhnswParams& params() const noexcept { return params_; }
  const HnswIndex& base_lo() const noexcept { return *lo_; }
  const HnswIndex& base_hi() const noexcept { return *hi_; }
  const Dataset& dataset() const noexcept { return lo_->dataset(); }

 private:
  const HnswIndex* lo_;
  const HnswIndex* hi_;
  UhnswParams params_;
};

/// Mean recall over the query set when the candidate list is the exact
/// top-t under base_metric (brute force) and the top k of its full L_p
/// re-ranking is compared against exact L_p ground truth. Isolates
/// re-ranking quality from graph-search error. Requires k <= t <= n.
/// `truth` may supply precomputed ground truth for (p, k, queries);
/// when null it is computed on the fly.
double idealized_recall(const Dataset& data, const Dataset& queries,
                        const MetricParam& p, std::uint32_t k, std::uint32_t t,
                        const MetricParam& base_metric,
                        const GroundTruth* truth = nullptr);

/// As above for several candidate sizes at once, sharing the base-metric
/// scan; ts must be ascending. Returns one mean recall per t.
std::vector<double> idealized_recall_sweep(const Dataset& data,
                                           const Dataset& queries,
                                           const MetricParam& p,
                                           std::uint32_t k,
                                           std::span<const std::uint32_t> ts,
                                           const MetricParam& base_metric,
                                           const GroundTruth* truth = nullptr);

}  // namespace uhnsw
