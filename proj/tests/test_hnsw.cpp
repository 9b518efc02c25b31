#include <filesystem>
#include <fstream>
#include <queue>
#include <random>

#include "doctest.h"
#include "support.hpp"
#include "uhnsw/hnsw.hpp"
#include "uhnsw/io.hpp"
#include "uhnsw/oracle.hpp"

using namespace uhnsw;
namespace fs = std::filesystem;

namespace {

bool same_adjacency(const HnswIndex& a, const HnswIndex& b) {
  if (a.size() != b.size() || a.max_level() != b.max_level() ||
      a.entry_point() != b.entry_point()) {
    return false;
  }
  for (std::uint32_t node = 0; node < a.size(); ++node) {
    if (a.level(node) != b.level(node)) return false;
    for (std::int32_t layer = 0; layer <= a.level(node); ++layer) {
      const auto na = a.neighbors(node, layer);
      const auto nb = b.neighbors(node, layer);
      if (!std::equal(na.begin(), na.end(), nb.begin(), nb.end())) {
        return false;
      }
    }
  }
  return true;
}

// Structural invariants: degree caps, id ranges, no self-loops, layer
// monotonicity, entry point present at the top level.
void check_structure(const HnswIndex& index) {
  const std::uint32_t n = index.size();
  const std::uint32_t m = index.params().M;
  REQUIRE(index.entry_point() < n);
  CHECK(index.level(index.entry_point()) == index.max_level());
  for (std::uint32_t node = 0; node < n; ++node) {
    REQUIRE(index.level(node) >= 0);
    for (std::int32_t layer = 0; layer <= index.level(node); ++layer) {
      const auto nbrs = index.neighbors(node, layer);
      const std::size_t cap = layer == 0 ? 2 * m : m;
      CHECK(nbrs.size() <= cap);
      for (const std::uint32_t nb : nbrs) {
        CHECK(nb < n);
        CHECK(nb != node);
        // a neighbor listed at this layer must exist at this layer
        CHECK(index.level(nb) >= layer);
      }
    }
  }
}

}  // namespace

TEST_CASE("HnswParams validation") {
  HnswParams p;
  p.M = 1;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p.M = 8;
  p.ef_construction = 4;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p.ef_construction = 8;
  CHECK_NOTHROW(p.validate());
}

TEST_CASE("single-point index") {
  const Dataset ds = gen_synthetic(1, 4, SyntheticDistribution::kGaussian, 1);
  HnswParams params;
  params.M = 4;
  params.ef_construction = 8;
  const HnswIndex index = HnswIndex::build(ds, params);
  CHECK(index.size() == 1);
  CHECK(index.entry_point() == 0);
  for (std::int32_t layer = 0; layer <= index.level(0); ++layer) {
    CHECK(index.neighbors(0, layer).empty());
  }

  SearchStats stats;
  const auto res = index.knn_search(ds.row(0), 1, 8, stats);
  REQUIRE(res.size() == 1);
  CHECK(res[0].id == 0);
  CHECK(res[0].dist == 0.0f);
  CHECK(stats.n_base == 1);
}

TEST_CASE("structure and connectivity on a small build") {
  const Dataset ds = gen_synthetic(100, 8, SyntheticDistribution::kUniform01, 12);
  HnswParams params;
  params.M = 8;
  params.ef_construction = 64;
  params.metric = MetricParam(2.0);
  const HnswIndex index = HnswIndex::build(ds, params);
  check_structure(index);

  // every node reachable from the entry point along layer-0 edges
  std::vector<bool> seen(index.size(), false);
  std::queue<std::uint32_t> frontier;
  frontier.push(index.entry_point());
  seen[index.entry_point()] = true;
  std::uint32_t reached = 0;
  while (!frontier.empty()) {
    const std::uint32_t cur = frontier.front();
    frontier.pop();
    ++reached;
    for (const std::uint32_t nb : index.neighbors(cur, 0)) {
      if (!seen[nb]) {
        seen[nb] = true;
        frontier.push(nb);
      }
    }
  }
  CHECK(reached == index.size());
}

TEST_CASE("deterministic rebuild with the same seed") {
  const Dataset ds = gen_synthetic(300, 8, SyntheticDistribution::kGaussian, 8);
  HnswParams params;
  params.M = 8;
  params.ef_construction = 50;
  params.seed = 42;
  const HnswIndex a = HnswIndex::build(ds, params);
  const HnswIndex b = HnswIndex::build(ds, params);
  CHECK(same_adjacency(a, b));

  params.seed = 43;
  const HnswIndex c = HnswIndex::build(ds, params);
  CHECK_FALSE(same_adjacency(a, c));
}

TEST_CASE("parallel build keeps structural invariants") {
  const Dataset ds = gen_synthetic(1500, 12, SyntheticDistribution::kGaussian, 77);
  HnswParams params;
  params.M = 12;
  params.ef_construction = 60;
  params.metric = MetricParam(1.0);
  const HnswIndex index = HnswIndex::build(ds, params, 4);
  check_structure(index);

  // search quality should be unaffected: most self-queries come back first
  std::uint32_t hit = 0;
  for (std::uint32_t i = 0; i < 200; ++i) {
    const auto res = index.knn_search(ds.row(i), 1, 32);
    if (res[0].id == i) ++hit;
  }
  CHECK(hit >= 195);
}

TEST_CASE("knn_search contracts on a 2000-point corpus") {
  const Dataset ds = gen_synthetic(2000, 16, SyntheticDistribution::kUniform01, 5);
  HnswParams params;
  params.M = 16;
  params.ef_construction = 200;
  params.metric = MetricParam(2.0);
  const HnswIndex index = HnswIndex::build(ds, params, 2);

  SUBCASE("input validation") {
    const std::vector<float> q(16, 0.5f);
    CHECK_THROWS_AS(index.knn_search(q, 50, 10), std::invalid_argument);
    const std::vector<float> short_q(4, 0.0f);
    CHECK_THROWS_AS(index.knn_search(short_q, 1, 8), std::invalid_argument);
  }

  SUBCASE("results sorted ascending, no duplicate ids") {
    const Dataset qs =
        gen_synthetic(20, 16, SyntheticDistribution::kUniform01, 6);
    for (std::uint32_t qi = 0; qi < qs.n(); ++qi) {
      const auto res = index.knn_search(qs.row(qi), 50, 200);
      REQUIRE(res.size() == 50);
      std::vector<std::uint32_t> ids;
      for (std::size_t i = 0; i < res.size(); ++i) {
        ids.push_back(res[i].id);
        if (i > 0) {
          const bool ordered = res[i - 1].dist < res[i].dist ||
                               (res[i - 1].dist == res[i].dist &&
                                res[i - 1].id < res[i].id);
          CHECK(ordered);
        }
        // dist field is the true distance under the base metric
        const float want =
            lp_distance(qs.row(qi), ds.row(res[i].id), params.metric);
        CHECK(res[i].dist == doctest::Approx(want).epsilon(1e-6));
      }
      std::sort(ids.begin(), ids.end());
      CHECK(std::adjacent_find(ids.begin(), ids.end()) == ids.end());
    }
  }

  SUBCASE("self-queries return the point itself") {
    std::uint32_t hits = 0;
    for (std::uint32_t i = 0; i < 1000; ++i) {
      const auto res = index.knn_search(ds.row(i), 1, 50);
      if (res[0].id == i && res[0].dist == 0.0f) ++hits;
    }
    CHECK(hits >= 990);  // greedy search may in principle miss a few
  }

  SUBCASE("deterministic search and eval counts") {
    const Dataset qs = gen_synthetic(5, 16, SyntheticDistribution::kUniform01, 7);
    for (std::uint32_t qi = 0; qi < qs.n(); ++qi) {
      SearchStats s1, s2;
      const auto r1 = index.knn_search(qs.row(qi), 30, 100, s1);
      const auto r2 = index.knn_search(qs.row(qi), 30, 100, s2);
      CHECK(r1 == r2);
      CHECK(s1.n_base == s2.n_base);
      CHECK(s1.n_base > 0);
    }
  }

  SUBCASE("search evaluates only the base metric") {
    const Dataset qs = gen_synthetic(3, 16, SyntheticDistribution::kUniform01, 8);
    for (std::uint32_t qi = 0; qi < qs.n(); ++qi) {
      EvalRecorder recorder;
      SearchStats stats;
      index.knn_search(qs.row(qi), 10, 64, stats);
      CHECK(recorder.total() == stats.n_base);
      CHECK(recorder.count(2.0) == stats.n_base);
    }
  }
}

TEST_CASE("recall against the exact oracle per base metric") {
  const Dataset ds = gen_synthetic(2000, 16, SyntheticDistribution::kUniform01, 31);
  const Dataset qs = gen_synthetic(100, 16, SyntheticDistribution::kUniform01, 32);
  for (const double p : {0.5, 1.0, 2.0}) {
    HnswParams params;
    params.M = 16;
    params.ef_construction = 200;
    params.metric = MetricParam(p);
    const HnswIndex index = HnswIndex::build(ds, params, 2);

    double sum = 0.0;
    for (std::uint32_t qi = 0; qi < qs.n(); ++qi) {
      const auto res = index.knn_search(qs.row(qi), 10, 200);
      const auto truth = brute_force_knn(ds, qs.row(qi), params.metric, 10);
      sum += recall(ids_of(res), ids_of(truth));
    }
    INFO("base metric p=" << p);
    CHECK(sum / qs.n() >= 0.95);
  }
}

TEST_CASE("t = n returns the exhaustive ranking") {
  const Dataset ds = gen_synthetic(50, 6, SyntheticDistribution::kGaussian, 17);
  HnswParams params;
  params.M = 8;
  params.ef_construction = 32;
  params.metric = MetricParam(1.0);
  const HnswIndex index = HnswIndex::build(ds, params);
  const Dataset qs = gen_synthetic(10, 6, SyntheticDistribution::kGaussian, 18);
  for (std::uint32_t qi = 0; qi < qs.n(); ++qi) {
    const auto res = index.knn_search(qs.row(qi), 50, 50);
    REQUIRE(res.size() == 50);
    const auto truth = brute_force_knn(ds, qs.row(qi), params.metric, 50);
    for (std::size_t i = 0; i < 50; ++i) CHECK(res[i].id == truth[i].id);
  }
}

TEST_CASE("distance evaluations grow sub-linearly in t") {
  // 1e5-point corpus; the graph search shares most of its traversal work
  // between t=100 and t=300, so N_b must grow by far less than 3x.
  const Dataset ds = gen_synthetic(100000, 8, SyntheticDistribution::kGaussian, 55);
  HnswParams params;
  params.M = 8;
  params.ef_construction = 40;
  params.metric = MetricParam(2.0);
  const HnswIndex index = HnswIndex::build(ds, params, 4);

  const Dataset qs = gen_synthetic(20, 8, SyntheticDistribution::kGaussian, 56);
  std::uint64_t evals_100 = 0, evals_300 = 0;
  for (std::uint32_t qi = 0; qi < qs.n(); ++qi) {
    SearchStats a, b;
    index.knn_search(qs.row(qi), 100, 100, a);
    index.knn_search(qs.row(qi), 300, 300, b);
    evals_100 += a.n_base;
    evals_300 += b.n_base;
  }
  CHECK(evals_300 > evals_100);
  CHECK(static_cast<double>(evals_300) / static_cast<double>(evals_100) < 3.0);
}

TEST_CASE("snapshot save/load round-trip") {
  const Dataset ds = gen_synthetic(500, 8, SyntheticDistribution::kGaussian, 61);
  HnswParams params;
  params.M = 8;
  params.ef_construction = 60;
  params.metric = MetricParam(1.0);
  params.seed = 9;
  const HnswIndex index = HnswIndex::build(ds, params);

  const auto dir = fs::temp_directory_path() /
                   ("uhnsw-idx-test-" + std::to_string(std::random_device{}()));
  fs::create_directories(dir);
  const auto path = dir / "g1.uhnsw";
  index.save(path);

  const HnswIndex loaded = HnswIndex::load(path, ds);
  CHECK(same_adjacency(index, loaded));
  CHECK(loaded.params().M == 8);
  CHECK(loaded.params().ef_construction == 60);
  CHECK(loaded.params().seed == 9);
  CHECK(loaded.params().metric.p() == 1.0);

  // re-saving the loaded index reproduces the file byte for byte
  const auto path2 = dir / "g1b.uhnsw";
  loaded.save(path2);
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  const std::string b1((std::istreambuf_iterator<char>(f1)),
                       std::istreambuf_iterator<char>());
  const std::string b2((std::istreambuf_iterator<char>(f2)),
                       std::istreambuf_iterator<char>());
  CHECK(b1 == b2);

  // loading against a mismatched dataset fails
  const Dataset other = gen_synthetic(400, 8, SyntheticDistribution::kGaussian, 62);
  CHECK_THROWS_AS(HnswIndex::load(path, other), std::runtime_error);

  fs::remove_all(dir);
}
