#include "uhnsw/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <queue>
#include <stdexcept>
#include <thread>

#include "uhnsw/detail/binary_io.hpp"

namespace uhnsw {

namespace {

constexpr char kGtMagic[] = "UHGT1";

struct DoubleScored {
  std::uint32_t id;
  double dist;
  friend bool operator<(const DoubleScored& a, const DoubleScored& b) noexcept {
    return a.dist < b.dist || (a.dist == b.dist && a.id < b.id);
  }
};

}  // namespace

double lp_pth_power_double(std::span<const float> x, std::span<const float> y,
                           const MetricParam& m) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("lp_pth_power_double: dimension mismatch");
  }
  const double p = m.p();
  double acc = 0.0;
  if (p == 1.0) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      acc += std::fabs(static_cast<double>(x[i]) - y[i]);
    }
  } else if (p == 2.0) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = static_cast<double>(x[i]) - y[i];
      acc += d * d;
    }
  } else if (p == 0.5) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      acc += std::sqrt(std::fabs(static_cast<double>(x[i]) - y[i]));
    }
  } else if (p == 1.5) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double a = std::fabs(static_cast<double>(x[i]) - y[i]);
      acc += a * std::sqrt(a);
    }
  } else {
    for (std::size_t i = 0; i < x.size(); ++i) {
      acc += std::pow(std::fabs(static_cast<double>(x[i]) - y[i]), p);
    }
  }
  return acc;
}

double lp_distance_double(std::span<const float> x, std::span<const float> y,
                          const MetricParam& m) {
  const double sum = lp_pth_power_double(x, y, m);
  const double p = m.p();
  if (p == 1.0) return sum;
  if (p == 2.0) return std::sqrt(sum);
  if (p == 0.5) return sum * sum;
  return std::pow(sum, 1.0 / p);
}

std::vector<ScoredId> brute_force_knn(const Dataset& data,
                                      std::span<const float> q,
                                      const MetricParam& p, std::uint32_t k) {
  if (k == 0) throw std::invalid_argument("brute_force_knn: k must be >= 1");
  if (k > data.n()) {
    throw std::invalid_argument("brute_force_knn: k=" + std::to_string(k) +
                                " exceeds n=" + std::to_string(data.n()));
  }
  if (q.size() != data.dim()) {
    throw std::invalid_argument("brute_force_knn: query dimension mismatch");
  }
  // max-heap of the k best; top is the current worst keeper
  std::priority_queue<DoubleScored> best;
  for (std::uint32_t i = 0; i < data.n(); ++i) {
    const DoubleScored s{i, lp_pth_power_double(q, data.row(i), p)};
    if (best.size() < k) {
      best.push(s);
    } else if (s < best.top()) {
      best.push(s);
      best.pop();
    }
  }
  std::vector<ScoredId> out(best.size());
  const double pv = p.p();
  for (std::size_t i = best.size(); i-- > 0;) {
    const DoubleScored s = best.top();
    best.pop();
    double dist = s.dist;
    if (pv == 2.0) {
      dist = std::sqrt(dist);
    } else if (pv == 0.5) {
      dist = dist * dist;
    } else if (pv != 1.0) {
      dist = std::pow(dist, 1.0 / pv);
    }
    out[i] = ScoredId{s.id, static_cast<float>(dist)};
  }
  return out;
}

GroundTruth compute_ground_truth(const Dataset& data, const Dataset& queries,
                                 const MetricParam& p, std::uint32_t k,
                                 unsigned threads) {
  if (queries.dim() != data.dim()) {
    throw std::invalid_argument("compute_ground_truth: dimension mismatch");
  }
  GroundTruth gt;
  gt.p = p.p();
  gt.k = k;
  gt.n_queries = queries.n();
  gt.ids.resize(static_cast<std::size_t>(queries.n()) * k);

  const auto worker = [&](std::uint32_t begin, std::uint32_t end) {
    for (std::uint32_t qi = begin; qi < end; ++qi) {
      const auto top = brute_force_knn(data, queries.row(qi), p, k);
      for (std::uint32_t j = 0; j < k; ++j) {
        gt.ids[static_cast<std::size_t>(qi) * k + j] = top[j].id;
      }
    }
  };

  if (threads == 0) threads = std::thread::hardware_concurrency();
  if (threads <= 1 || queries.n() < 2) {
    worker(0, queries.n());
    return gt;
  }
  threads = std::min<unsigned>(threads, queries.n());
  std::vector<std::thread> pool;
  pool.reserve(threads);
  const std::uint32_t chunk = (queries.n() + threads - 1) / threads;
  for (unsigned w = 0; w < threads; ++w) {
    const std::uint32_t begin = w * chunk;
    const std::uint32_t end = std::min(queries.n(), begin + chunk);
    if (begin >= end) break;
    pool.emplace_back(worker, begin, end);
  }
  for (auto& th : pool) th.join();
  return gt;
}

double recall(std::span<const std::uint32_t> result_ids,
              std::span<const std::uint32_t> truth_ids) {
  if (result_ids.size() != truth_ids.size() || truth_ids.empty()) {
    throw std::invalid_argument(
        "recall: result and truth must hold the same nonzero count of ids");
  }
  std::vector<std::uint32_t> a(result_ids.begin(), result_ids.end());
  std::vector<std::uint32_t> b(truth_ids.begin(), truth_ids.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t shared = 0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) {
      ++shared;
      ++i;
      ++j;
    } else if (a[i] < b[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  return static_cast<double>(shared) / static_cast<double>(truth_ids.size());
}

void save_ground_truth(const GroundTruth& gt,
                       const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  detail::write_magic(out, kGtMagic);
  detail::write_u32(out, gt.n_queries);
  detail::write_u32(out, gt.k);
  detail::write_f64(out, gt.p);
  for (const std::uint32_t id : gt.ids) detail::write_u32(out, id);
  if (!out) throw std::runtime_error("write failed on " + path.string());
}

GroundTruth load_ground_truth(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  detail::expect_magic(in, kGtMagic, path.string());
  GroundTruth gt;
  gt.n_queries = detail::read_u32(in);
  gt.k = detail::read_u32(in);
  gt.p = detail::read_f64(in);
  gt.ids.resize(static_cast<std::size_t>(gt.n_queries) * gt.k);
  for (auto& id : gt.ids) id = detail::read_u32(in);
  return gt;
}

std::filesystem::path ground_truth_cache_path(
    const std::filesystem::path& dir, const Dataset& data,
    const Dataset& queries, const MetricParam& p, std::uint32_t k) {
  const std::uint64_t key = dataset_hash(data) ^ (dataset_hash(queries) * 31);
  char name[96];
  std::snprintf(name, sizeof(name), "gt-%016llx-p%g-K%u.uhgt",
                static_cast<unsigned long long>(key), p.p(), k);
  return dir / name;
}

GroundTruth cached_ground_truth(const std::filesystem::path& dir,
                                const Dataset& data, const Dataset& queries,
                                const MetricParam& p, std::uint32_t k,
                                unsigned threads) {
  const auto path = ground_truth_cache_path(dir, data, queries, p, k);
  if (std::filesystem::exists(path)) {
    GroundTruth gt = load_ground_truth(path);
    if (gt.n_queries == queries.n() && gt.k == k && gt.p == p.p()) {
      return gt;
    }
  }
  GroundTruth gt = compute_ground_truth(data, queries, p, k, threads);
  std::filesystem::create_directories(dir);
  save_ground_truth(gt, path);
  return gt;
}

}  // namespace uhnsw
