#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace uhnsw {

/// A (point id, distance) pair; the unit of candidate lists and result sets.
/// Ordering is lexicographic on (dist, id): ties always break toward the
/// lower id so that every ranked surface in the library is deterministic.
struct ScoredId {
  std::uint32_t id = 0;
  float dist = 0.0f;

  friend bool operator<(const ScoredId& a, const ScoredId& b) noexcept {
    return a.dist < b.dist || (a.dist == b.dist && a.id < b.id);
  }
  friend bool operator==(const ScoredId& a, const ScoredId& b) noexcept {
    return a.id == b.id && a.dist == b.dist;
  }
};

inline std::vector<std::uint32_t> ids_of(std::span<const ScoredId> scored) {
  std::vector<std::uint32_t> out;
  out.reserve(scored.size());
  for (const auto& s : scored) out.push_back(s.id);
  return out;
}

}  // namespace uhnsw
