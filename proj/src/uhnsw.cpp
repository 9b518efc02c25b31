#include "uhnsw/uhnsw.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "uhnsw/oracle.hpp"

namespace uhnsw {

namespace {

std::uint32_t count_shared_ids(std::span<const ScoredId> a,
                               std::span<const ScoredId> b) {
  std::vector<std::uint32_t> ia = ids_of(a);
  std::vector<std::uint32_t> ib = ids_of(b);
  std::sort(ia.begin(), ia.end());
  std::sort(ib.begin(), ib.end());
  std::uint32_t shared = 0;
  std::size_t i = 0, j = 0;
  while (i < ia.size() && j < ib.size()) {
    if (ia[i] == ib[j]) {
      ++shared;
      ++i;
      ++j;
    } else if (ia[i] < ib[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  return shared;
}

bool is_base_metric(double p) noexcept {
  return p == 0.5 || p == 1.0 || p == 2.0;
}

}  // namespace

VerifyOutcome verify_candidates(const Dataset& data,
                                std::span<const ScoredId> candidates,
                                std::span<const float> q, const MetricParam& p,
                                std::uint32_t k, double tau,
                                std::uint32_t kappa) {
  if (k == 0) throw std::invalid_argument("verify_candidates: k must be >= 1");
  if (candidates.size() < k) {
    throw std::invalid_argument(
        "verify_candidates: candidate list holds " +
        std::to_string(candidates.size()) + " points, need at least k=" +
        std::to_string(k));
  }
  if (!(tau >= 0.0 && tau <= 1.0)) {
    throw std::invalid_argument("verify_candidates: tau must be in [0, 1]");
  }
  if (kappa == 0) {
    throw std::invalid_argument("verify_candidates: kappa must be >= 1");
  }
  if (q.size() != data.dim()) {
    throw std::invalid_argument("verify_candidates: query dimension mismatch");
  }

  std::uint32_t n_lp = 0;
  const auto score = [&](std::uint32_t id) {
    ++n_lp;
    return lp_distance_pth_power(q, data.row(id), p);
  };

  // running top-k, ranked by the p-th power surrogate (rank-identical to L_p)
  std::vector<ScoredId> top;
  top.reserve(k);
  for (std::uint32_t i = 0; i < k; ++i) {
    top.push_back({candidates[i].id, score(candidates[i].id)});
  }
  std::sort(top.begin(), top.end());

  std::uint32_t batches = 0;
  bool terminated_early = false;
  std::vector<ScoredId> batch;
  batch.reserve(kappa);
  std::vector<ScoredId> merged;
  merged.reserve(static_cast<std::size_t>(k) + kappa);

  std::size_t pos = k;
  while (pos < candidates.size()) {
    batch.clear();
    const std::size_t end = std::min(pos + kappa, candidates.size());
    for (; pos < end; ++pos) {
      batch.push_back({candidates[pos].id, score(candidates[pos].id)});
    }
    ++batches;
    std::sort(batch.begin(), batch.end());

    merged.clear();
    std::merge(top.begin(), top.end(), batch.begin(), batch.end(),
               std::back_inserter(merged));
    merged.resize(k);

    const std::uint32_t shared = count_shared_ids(merged, top);
    top.swap(merged);
    // tau == 1 means full verification: never stop before C is exhausted
    if (tau < 1.0 &&
        static_cast<double>(shared) / static_cast<double>(k) >= tau) {
      terminated_early = true;
      break;
    }
  }

  for (ScoredId& s : top) s.dist = lp_root(s.dist, p);
  std::sort(top.begin(), top.end());
  return {std::move(top), n_lp, batches, terminated_early};
}

UhnswIndex::UhnswIndex(const HnswIndex& base_lo, const HnswIndex& base_hi,
                       UhnswParams params)
    : lo_(&base_lo), hi_(&base_hi), params_(params) {
  if (&base_lo.dataset() != &base_hi.dataset()) {
    throw std::invalid_argument("UhnswIndex: base indexes must share a dataset");
  }
  const double plo = base_lo.params().metric.p();
  const double phi = base_hi.params().metric.p();
  if (!(plo < phi)) {
    throw std::invalid_argument(
        "UhnswIndex: base_lo metric must be below base_hi metric");
  }
  if (!is_base_metric(plo) || !is_base_metric(phi)) {
    throw std::invalid_argument(
        "UhnswIndex: base metrics must be one of L0.5, L1, L2");
  }
  if (params_.t == 0) throw std::invalid_argument("UhnswIndex: t must be >= 1");
  if (params_.ef_search < params_.t) {
    throw std::invalid_argument("UhnswIndex: ef_search must be >= t");
  }
  if (!(params_.tau > 0.0 && params_.tau <= 1.0)) {
    throw std::invalid_argument("UhnswIndex: tau must be in (0, 1]");
  }
  if (!(params_.p_min > 0.0 && params_.p_min <= params_.p_max &&
        params_.p_max <= 2.0)) {
    throw std::invalid_argument("UhnswIndex: invalid supported p range");
  }
}

UhnswIndex UhnswIndex::standard(const HnswIndex& g1, const HnswIndex& g2,
                                UhnswParams params) {
  return UhnswIndex(g1, g2, params);
}

UhnswIndex UhnswIndex::extended(const HnswIndex& g05, const HnswIndex& g1,
                                UhnswParams params) {
  params.cutoff_p = 0.6;
  params.p_min = 0.2;
  params.p_max = 1.0;
  return UhnswIndex(g05, g1, params);
}

QueryResult UhnswIndex::query(const QueryTuple& qt) const {
  if (qt.k == 0) throw std::invalid_argument("query: k must be >= 1");
  if (qt.k > params_.t) {
    throw std::invalid_argument("query: k=" + std::to_string(qt.k) +
                                " exceeds candidate size t=" +
                                std::to_string(params_.t));
  }
  const double p = qt.p.p();
  if (p < params_.p_min || p > params_.p_max) {
    throw std::invalid_argument(
        "query: p=" + std::to_string(p) + " outside supported range [" +
        std::to_string(params_.p_min) + ", " + std::to_string(params_.p_max) +
        "]");
  }

  QueryResult res;
  const double plo = lo_->params().metric.p();
  const double phi = hi_->params().metric.p();
  if (p == plo || p == phi) {
    // the query metric is a base metric: search that graph directly
    const HnswIndex& idx = p == plo ? *lo_ : *hi_;
    SearchStats st;
    res.neighbors = idx.knn_search(qt.q, qt.k, params_.ef_search, st);
    res.stats.n_base = st.n_base;
    res.stats.shortcut = true;
    res.stats.used_low_index = p == plo;
    return res;
  }

  const HnswIndex& base = select_base_index(qt.p);
  SearchStats st;
  const auto candidates = base.knn_search(qt.q, params_.t, params_.ef_search, st);
  const std::uint32_t kappa = params_.kappa == 0 ? qt.k : params_.kappa;
  auto verified = verify_candidates(dataset(), candidates, qt.q, qt.p, qt.k,
                                    params_.tau, kappa);
  res.neighbors = std::move(verified.neighbors);
  res.stats.n_base = st.n_base;
  res.stats.n_lp = verified.n_lp;
  res.stats.batches_consumed = verified.batches_consumed;
  res.stats.terminated_early = verified.terminated_early;
  res.stats.used_low_index = &base == lo_;
  return res;
}

std::vector<double> idealized_recall_sweep(const Dataset& data,
                                           const Dataset& queries,
                                           const MetricParam& p,
                                           std::uint32_t k,
                                           std::span<const std::uint32_t> ts,
                                           const MetricParam& base_metric,
                                           const GroundTruth* truth) {
  if (ts.empty()) {
    throw std::invalid_argument("idealized_recall: no candidate sizes given");
  }
  if (!std::is_sorted(ts.begin(), ts.end())) {
    throw std::invalid_argument("idealized_recall: ts must be ascending");
  }
  if (k == 0 || ts.front() < k) {
    throw std::invalid_argument("idealized_recall: need k >= 1 and t >= k");
  }
  if (ts.back() > data.n()) {
    throw std::invalid_argument("idealized_recall: t exceeds dataset size");
  }

  GroundTruth local;
  if (truth == nullptr) {
    local = compute_ground_truth(data, queries, p, k);
    truth = &local;
  } else if (truth->k != k || truth->p != p.p() ||
             truth->n_queries != queries.n()) {
    throw std::invalid_argument(
        "idealized_recall: ground truth does not match (p, k, queries)");
  }

  const std::uint32_t t_max = ts.back();
  std::vector<double> sums(ts.size(), 0.0);
  struct Ranked {
    std::uint32_t id;
    double dist;
    friend bool operator<(const Ranked& a, const Ranked& b) noexcept {
      return a.dist < b.dist || (a.dist == b.dist && a.id < b.id);
    }
  };
  for (std::uint32_t qi = 0; qi < queries.n(); ++qi) {
    const auto q = queries.row(qi);
    const auto base_top = brute_force_knn(data, q, base_metric, t_max);
    std::vector<Ranked> reranked(t_max);
    for (std::uint32_t i = 0; i < t_max; ++i) {
      reranked[i] = {base_top[i].id,
                     lp_pth_power_double(q, data.row(base_top[i].id), p)};
    }
    for (std::size_t ti = 0; ti < ts.size(); ++ti) {
      std::vector<Ranked> prefix(reranked.begin(), reranked.begin() + ts[ti]);
      std::partial_sort(prefix.begin(), prefix.begin() + k, prefix.end());
      std::vector<std::uint32_t> ids(k);
      for (std::uint32_t j = 0; j < k; ++j) ids[j] = prefix[j].id;
      sums[ti] += recall(ids, truth->entry(qi));
    }
  }
  for (double& s : sums) s /= queries.n();
  return sums;
}

double idealized_recall(const Dataset& data, const Dataset& queries,
                        const MetricParam& p, std::uint32_t k, std::uint32_t t,
                        const MetricParam& base_metric,
                        const GroundTruth* truth) {
  const std::uint32_t ts[] = {t};
  return idealized_recall_sweep(data, queries, p, k, ts, base_metric, truth)[0];
}

}  // namespace uhnsw
