#include "uhnsw/hnsw.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <memory>
#include <mutex>
#include <queue>
#include <random>
#include <stdexcept>
#include <thread>

#include "uhnsw/detail/binary_io.hpp"

namespace uhnsw {

namespace {

constexpr char kSnapshotMagic[] = "UHNSW1";

inline bool closer(float da, std::uint32_t ia, float db,
                   std::uint32_t ib) noexcept {
  return da < db || (da == db && ia < ib);
}

// std::priority_queue keeps the "largest" element on top.
struct ClosestOnTop {
  bool operator()(const ScoredId& a, const ScoredId& b) const noexcept {
    return b < a;
  }
};
struct FarthestOnTop {
  bool operator()(const ScoredId& a, const ScoredId& b) const noexcept {
    return a < b;
  }
};

// Epoch-stamped visited set; reusable across searches without refilling.
struct VisitTable {
  std::vector<std::uint32_t> stamp;
  std::uint32_t epoch = 0;

  explicit VisitTable(std::size_t n) : stamp(n, 0) {}

  void next_epoch() {
    if (++epoch == 0) {
      std::fill(stamp.begin(), stamp.end(), 0u);
      epoch = 1;
    }
  }

  bool test_and_set(std::uint32_t id) {
    if (stamp[id] == epoch) return true;
    stamp[id] = epoch;
    return false;
  }
};

}  // namespace

void HnswParams::validate() const {
  if (M < 2) throw std::invalid_argument("HnswParams: M must be >= 2");
  if (ef_construction < M) {
    throw std::invalid_argument(
        "HnswParams: ef_construction must be >= M");
  }
}

/// Incremental construction state. Lives only for the duration of build();
/// the finished index carries no locks.
class HnswBuilder {
 public:
  HnswBuilder(const Dataset& data, const HnswParams& params)
      : data_(data),
        params_(params),
        max_m0_(2 * params.M),
        level_mult_(1.0 / std::log(static_cast<double>(params.M))) {
    const std::uint32_t n = data.n();
    levels_.resize(n);
    std::mt19937_64 rng(params_.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (auto& level : levels_) {
      const double u = 1.0 - unif(rng);  // (0, 1]
      level = static_cast<std::int32_t>(std::floor(-std::log(u) * level_mult_));
    }
    links_.resize(n);
    locks_ = std::make_unique<std::mutex[]>(n);
  }

  void run(unsigned threads) {
    const std::uint32_t n = data_.n();
    links_[0].resize(static_cast<std::size_t>(levels_[0]) + 1);
    entry_point_ = 0;
    max_level_ = levels_[0];
    if (n == 1) return;
    if (threads <= 1) {
      WorkerScratch scratch(n);
      for (std::uint32_t i = 1; i < n; ++i) insert(i, scratch);
      return;
    }
    std::atomic<std::uint32_t> next{1};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        WorkerScratch scratch(n);
        for (std::uint32_t i = next.fetch_add(1); i < n;
             i = next.fetch_add(1)) {
          insert(i, scratch);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  void finish(HnswIndex& index) {
    index.data_ = &data_;
    index.params_ = params_;
    index.levels_ = std::move(levels_);
    index.links_ = std::move(links_);
    index.entry_point_ = entry_point_;
    index.max_level_ = max_level_;
  }

 private:
  struct WorkerScratch {
    VisitTable visits;
    std::vector<std::uint32_t> snapshot;
    explicit WorkerScratch(std::uint32_t n) : visits(n) {}
  };

  float dist(std::span<const float> a, std::span<const float> b) const {
    return lp_distance_pth_power(a, b, params_.metric);
  }

  void neighbor_snapshot(std::uint32_t node, std::int32_t layer,
                         std::vector<std::uint32_t>& out) {
    std::lock_guard<std::mutex> lock(locks_[node]);
    const auto& list = links_[node][static_cast<std::size_t>(layer)];
    out.assign(list.begin(), list.end());
  }

  std::vector<ScoredId> search_layer(std::span<const float> q, ScoredId entry,
                                     std::int32_t layer, std::uint32_t ef,
                                     WorkerScratch& scratch) {
    scratch.visits.next_epoch();
    std::priority_queue<ScoredId, std::vector<ScoredId>, ClosestOnTop>
        candidates;
    std::priority_queue<ScoredId, std::vector<ScoredId>, FarthestOnTop> best;
    candidates.push(entry);
    best.push(entry);
    scratch.visits.test_and_set(entry.id);
    while (!candidates.empty()) {
      const ScoredId cur = candidates.top();
      if (best.size() >= ef && best.top() < cur) break;
      candidates.pop();
      neighbor_snapshot(cur.id, layer, scratch.snapshot);
      for (const std::uint32_t nb : scratch.snapshot) {
        if (scratch.visits.test_and_set(nb)) continue;
        const ScoredId scored{nb, dist(q, data_.row(nb))};
        if (best.size() < ef) {
          best.push(scored);
          candidates.push(scored);
        } else if (scored < best.top()) {
          best.push(scored);
          best.pop();
          candidates.push(scored);
        }
      }
    }
    std::vector<ScoredId> out(best.size());
    for (std::size_t i = best.size(); i-- > 0;) {
      out[i] = best.top();
      best.pop();
    }
    return out;
  }

  // Pruning heuristic: keep a candidate only if it is closer to the target
  // than to every neighbor kept so far; if fewer than want survive, fill
  // back from the pruned ones in ascending distance order.
  std::vector<ScoredId> select_neighbors(std::span<const float> target,
                                         const std::vector<ScoredId>& cand_asc,
                                         std::uint32_t want) {
    if (cand_asc.size() <= want) return cand_asc;
    std::vector<ScoredId> selected;
    std::vector<ScoredId> pruned;
    selected.reserve(want);
    for (const ScoredId& c : cand_asc) {
      if (selected.size() >= want) break;
      bool keep = true;
      const auto c_vec = data_.row(c.id);
      for (const ScoredId& s : selected) {
        if (dist(c_vec, data_.row(s.id)) < c.dist) {
          keep = false;
          break;
        }
      }
      (keep ? selected : pruned).push_back(c);
    }
    for (const ScoredId& p : pruned) {
      if (selected.size() >= want) break;
      selected.push_back(p);
    }
    return selected;
  }

  void link_back(std::uint32_t node, std::uint32_t incoming, float d,
                 std::int32_t layer) {
    const std::uint32_t cap = layer == 0 ? max_m0_ : params_.M;
    std::lock_guard<std::mutex> lock(locks_[node]);
    auto& list = links_[node][static_cast<std::size_t>(layer)];
    if (list.size() < cap) {
      list.push_back(incoming);
      return;
    }
    // over capacity: re-run the selection over existing + incoming
    const auto node_vec = data_.row(node);
    std::vector<ScoredId> cand;
    cand.reserve(list.size() + 1);
    cand.push_back({incoming, d});
    for (const std::uint32_t nb : list) {
      cand.push_back({nb, dist(node_vec, data_.row(nb))});
    }
    std::sort(cand.begin(), cand.end());
    list = ids_of(select_neighbors(node_vec, cand, cap));
  }

  void insert(std::uint32_t i, WorkerScratch& scratch) {
    const std::int32_t level = levels_[i];
    {
      std::lock_guard<std::mutex> lock(locks_[i]);
      links_[i].resize(static_cast<std::size_t>(level) + 1);
    }
    std::uint32_t ep;
    std::int32_t top;
    {
      std::lock_guard<std::mutex> lock(entry_mutex_);
      ep = entry_point_;
      top = max_level_;
    }
    const auto q = data_.row(i);
    float ep_dist = dist(q, data_.row(ep));
    for (std::int32_t lc = top; lc > level; --lc) {
      bool changed = true;
      while (changed) {
        changed = false;
        neighbor_snapshot(ep, lc, scratch.snapshot);
        for (const std::uint32_t nb : scratch.snapshot) {
          const float d = dist(q, data_.row(nb));
          if (closer(d, nb, ep_dist, ep)) {
            ep_dist = d;
            ep = nb;
            changed = true;
          }
        }
      }
    }
    for (std::int32_t lc = std::min(level, top); lc >= 0; --lc) {
      const auto found =
          search_layer(q, {ep, ep_dist}, lc, params_.ef_construction, scratch);
      const auto selected = select_neighbors(q, found, params_.M);
      {
        std::lock_guard<std::mutex> lock(locks_[i]);
        links_[i][static_cast<std::size_t>(lc)] = ids_of(selected);
      }
      for (const ScoredId& s : selected) {
        link_back(s.id, i, s.dist, lc);
      }
      ep = found.front().id;
      ep_dist = found.front().dist;
    }
    {
      std::lock_guard<std::mutex> lock(entry_mutex_);
      if (level > max_level_) {
        max_level_ = level;
        entry_point_ = i;
      }
    }
  }

  const Dataset& data_;
  const HnswParams params_;
  const std::uint32_t max_m0_;
  const double level_mult_;
  std::vector<std::int32_t> levels_;
  std::vector<std::vector<std::vector<std::uint32_t>>> links_;
  std::unique_ptr<std::mutex[]> locks_;
  std::mutex entry_mutex_;
  std::uint32_t entry_point_ = 0;
  std::int32_t max_level_ = 0;
};

HnswIndex HnswIndex::build(const Dataset& dataset, const HnswParams& params,
                           unsigned threads) {
  params.validate();
  HnswBuilder builder(dataset, params);
  builder.run(threads);
  HnswIndex index;
  builder.finish(index);
  return index;
}

std::vector<ScoredId> HnswIndex::knn_search(std::span<const float> q,
                                            std::uint32_t t,
                                            std::uint32_t ef_search) const {
  return search_impl(q, t, ef_search, nullptr);
}

std::vector<ScoredId> HnswIndex::knn_search(std::span<const float> q,
                                            std::uint32_t t,
                                            std::uint32_t ef_search,
                                            SearchStats& stats) const {
  return search_impl(q, t, ef_search, &stats);
}

std::vector<ScoredId> HnswIndex::search_impl(std::span<const float> q,
                                             std::uint32_t t,
                                             std::uint32_t ef_search,
                                             SearchStats* stats) const {
  if (q.size() != data_->dim()) {
    throw std::invalid_argument("knn_search: query dimension " +
                                std::to_string(q.size()) + " != dataset " +
                                std::to_string(data_->dim()));
  }
  if (t == 0) throw std::invalid_argument("knn_search: t must be >= 1");
  if (ef_search < t) {
    throw std::invalid_argument("knn_search: ef_search must be >= t");
  }

  std::uint64_t evals = 0;
  const auto dist_to = [&](std::uint32_t id) {
    ++evals;
    return lp_distance_pth_power(q, data_->row(id), params_.metric);
  };

  std::uint32_t ep = entry_point_;
  float ep_dist = dist_to(ep);
  for (std::int32_t lc = max_level_; lc > 0; --lc) {
    bool changed = true;
    while (changed) {
      changed = false;
      for (const std::uint32_t nb : neighbors(ep, lc)) {
        const float d = dist_to(nb);
        if (closer(d, nb, ep_dist, ep)) {
          ep_dist = d;
          ep = nb;
          changed = true;
        }
      }
    }
  }

  std::vector<std::uint8_t> visited(size(), 0);
  std::priority_queue<ScoredId, std::vector<ScoredId>, ClosestOnTop> candidates;
  std::priority_queue<ScoredId, std::vector<ScoredId>, FarthestOnTop> best;
  candidates.push({ep, ep_dist});
  best.push({ep, ep_dist});
  visited[ep] = 1;
  while (!candidates.empty()) {
    const ScoredId cur = candidates.top();
    if (best.size() >= ef_search && best.top() < cur) break;
    candidates.pop();
    for (const std::uint32_t nb : neighbors(cur.id, 0)) {
      if (visited[nb]) continue;
      visited[nb] = 1;
      const ScoredId scored{nb, dist_to(nb)};
      if (best.size() < ef_search) {
        best.push(scored);
        candidates.push(scored);
      } else if (scored < best.top()) {
        best.push(scored);
        best.pop();
        candidates.push(scored);
      }
    }
  }

  std::vector<ScoredId> out(best.size());
  for (std::size_t i = best.size(); i-- > 0;) {
    out[i] = best.top();
    best.pop();
  }
  if (out.size() > t) out.resize(t);
  // surrogate sums -> true distances, then re-sort so the documented
  // (distance, id) order holds on the values actually returned
  for (ScoredId& s : out) s.dist = lp_root(s.dist, params_.metric);
  std::sort(out.begin(), out.end());
  if (stats) stats->n_base = evals;
  return out;
}

void HnswIndex::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  detail::write_magic(out, kSnapshotMagic);
  detail::write_u32(out, params_.M);
  detail::write_u32(out, params_.ef_construction);
  detail::write_u64(out, params_.seed);
  detail::write_f64(out, params_.metric.p());
  detail::write_u32(out, size());
  detail::write_u32(out, data_->dim());
  detail::write_u32(out, static_cast<std::uint32_t>(max_level_));
  detail::write_u32(out, entry_point_);
  for (const std::int32_t level : levels_) {
    detail::write_u32(out, static_cast<std::uint32_t>(level));
  }
  for (const auto& per_node : links_) {
    for (const auto& layer : per_node) {
      detail::write_u32(out, static_cast<std::uint32_t>(layer.size()));
      for (const std::uint32_t id : layer) detail::write_u32(out, id);
    }
  }
  if (!out) throw std::runtime_error("write failed on " + path.string());
}

HnswIndex HnswIndex::load(const std::filesystem::path& path,
                          const Dataset& dataset) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  detail::expect_magic(in, kSnapshotMagic, path.string());

  HnswIndex index;
  HnswParams params;
  params.M = detail::read_u32(in);
  params.ef_construction = detail::read_u32(in);
  params.seed = detail::read_u64(in);
  params.metric = MetricParam(detail::read_f64(in));
  params.validate();

  const std::uint32_t n = detail::read_u32(in);
  const std::uint32_t d = detail::read_u32(in);
  if (n != dataset.n() || d != dataset.dim()) {
    throw std::runtime_error(path.string() + ": snapshot is for n=" +
                             std::to_string(n) + ", d=" + std::to_string(d) +
                             " but dataset has n=" +
                             std::to_string(dataset.n()) + ", d=" +
                             std::to_string(dataset.dim()));
  }
  index.max_level_ = static_cast<std::int32_t>(detail::read_u32(in));
  index.entry_point_ = detail::read_u32(in);
  if (index.entry_point_ >= n) {
    throw std::runtime_error(path.string() + ": entry point out of range");
  }

  index.levels_.resize(n);
  for (auto& level : index.levels_) {
    level = static_cast<std::int32_t>(detail::read_u32(in));
  }
  index.links_.resize(n);
  for (std::uint32_t node = 0; node < n; ++node) {
    index.links_[node].resize(
        static_cast<std::size_t>(index.levels_[node]) + 1);
    for (auto& layer : index.links_[node]) {
      const std::uint32_t count = detail::read_u32(in);
      layer.resize(count);
      for (auto& id : layer) {
        id = detail::read_u32(in);
        if (id >= n || id == node) {
          throw std::runtime_error(path.string() +
                                   ": invalid neighbor id in adjacency");
        }
      }
    }
  }
  index.data_ = &dataset;
  index.params_ = params;
  return index;
}

}  // namespace uhnsw
