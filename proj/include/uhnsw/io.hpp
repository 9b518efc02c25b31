#pragma once

/// \file io.hpp
/// Loaders for the fvecs/bvecs/ivecs vector-benchmark formats, plus seeded
/// synthetic dataset generation and subsampling.
///
/// All three formats are sequences of records [d: int32 LE][d components];
/// components are float32 (fvecs), uint8 widened to float (bvecs), or
/// int32 (ivecs). Every record in a file must share d. Parse errors carry
/// the byte offset or record index of the offending record.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "uhnsw/dataset.hpp"

namespace uhnsw {

Dataset load_fvecs(const std::filesystem::path& path);
Dataset load_bvecs(const std::filesystem::path& path);
std::vector<std::vector<std::int32_t>> load_ivecs(
    const std::filesystem::path& path);

void write_fvecs(const Dataset& data, const std::filesystem::path& path);
void write_ivecs(const std::vector<std::vector<std::int32_t>>& rows,
                 const std::filesystem::path& path);

/// m rows drawn uniformly without replacement; deterministic under seed.
Dataset subsample(const Dataset& data, std::uint32_t m, std::uint64_t seed);

enum class SyntheticDistribution { kUniform01, kGaussian };

Dataset gen_synthetic(std::uint32_t n, std::uint32_t d,
                      SyntheticDistribution distribution, std::uint64_t seed,
                      std::string name = "synthetic");

}  // namespace uhnsw
