#pragma once

/// \file dataset.hpp
/// In-memory search corpus: a contiguous n x d single-precision matrix.
/// Rows are validated finite at ingestion so distance kernels can skip
/// per-call checks.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace uhnsw {

class Dataset {
 public:
  /// Takes ownership of `data` (row-major, n*d floats). Rejects n == 0,
  /// d == 0, size mismatch, and non-finite components.
  Dataset(std::string name, std::uint32_t d, std::vector<float> data);

  const std::string& name() const noexcept { return name_; }
  std::uint32_t n() const noexcept { return n_; }
  std::uint32_t dim() const noexcept { return d_; }

  std::span<const float> row(std::uint32_t i) const noexcept {
    return {data_.data() + static_cast<std::size_t>(i) * d_, d_};
  }

  std::span<const float> raw() const noexcept { return data_; }

 private:
  std::string name_;
  std::uint32_t n_ = 0;
  std::uint32_t d_ = 0;
  std::vector<float> data_;
};

/// FNV-1a over (n, d, raw float bytes); keys ground-truth cache files.
std::uint64_t dataset_hash(const Dataset& data) noexcept;

}  // namespace uhnsw
