#include "uhnsw/dataset.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace uhnsw {

Dataset::Dataset(std::string name, std::uint32_t d, std::vector<float> data)
    : name_(std::move(name)), d_(d), data_(std::move(data)) {
  if (d_ == 0) throw std::invalid_argument("Dataset: d must be >= 1");
  if (data_.empty() || data_.size() % d_ != 0) {
    throw std::invalid_argument("Dataset: data size " +
                                std::to_string(data_.size()) +
                                " is not a positive multiple of d=" +
                                std::to_string(d_));
  }
  n_ = static_cast<std::uint32_t>(data_.size() / d_);
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      throw std::invalid_argument("Dataset: non-finite component in row " +
                                  std::to_string(i / d_));
    }
  }
}

std::uint64_t dataset_hash(const Dataset& data) noexcept {
  constexpr std::uint64_t kOffset = 14695981039346656037ull;
  constexpr std::uint64_t kPrime = 1099511628211ull;
  std::uint64_t h = kOffset;
  auto mix = [&h](const void* bytes, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(bytes);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= p[i];
      h *= kPrime;
    }
  };
  const std::uint32_t n = data.n();
  const std::uint32_t d = data.dim();
  mix(&n, sizeof(n));
  mix(&d, sizeof(d));
  mix(data.raw().data(), data.raw().size() * sizeof(float));
  return h;
}

}  // namespace uhnsw
