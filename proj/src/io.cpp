#include "uhnsw/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>

namespace uhnsw {

namespace {

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open " + path.string());
  }
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0, std::ios::beg);
  std::vector<unsigned char> bytes(size);
  if (size > 0) {
    in.read(reinterpret_cast<char*>(bytes.data()),
            static_cast<std::streamsize>(size));
    if (!in) throw std::runtime_error("read failed on " + path.string());
  }
  return bytes;
}

std::uint32_t read_u32_le(const unsigned char* p) noexcept {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

void append_u32_le(std::vector<unsigned char>& out, std::uint32_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
}

void write_file(const std::filesystem::path& path,
                const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed on " + path.string());
}

// Shared record walk for the three *vecs layouts. `component_bytes` is the
// on-disk width of one component; `consume` converts one record's payload.
template <typename Consume>
void parse_vecs(const std::filesystem::path& path, std::size_t component_bytes,
                Consume&& consume) {
  const auto bytes = read_file(path);
  if (bytes.empty()) {
    throw std::runtime_error(path.string() + ": no records");
  }
  std::size_t off = 0;
  std::size_t record = 0;
  std::int64_t d = -1;
  while (off < bytes.size()) {
    if (bytes.size() - off < 4) {
      throw std::runtime_error(path.string() + ": truncated record " +
                               std::to_string(record) + " at byte offset " +
                               std::to_string(off));
    }
    const auto rec_d = static_cast<std::int32_t>(read_u32_le(&bytes[off]));
    if (rec_d <= 0) {
      throw std::runtime_error(path.string() + ": record " +
                               std::to_string(record) +
                               " has non-positive dimension " +
                               std::to_string(rec_d));
    }
    if (d < 0) {
      d = rec_d;
    } else if (rec_d != d) {
      throw std::runtime_error(
          path.string() + ": record " + std::to_string(record) +
          " has dimension " + std::to_string(rec_d) + ", expected " +
          std::to_string(d));
    }
    off += 4;
    const std::size_t payload = static_cast<std::size_t>(rec_d) * component_bytes;
    if (bytes.size() - off < payload) {
      throw std::runtime_error(path.string() + ": truncated record " +
                               std::to_string(record) + " at byte offset " +
                               std::to_string(off));
    }
    consume(&bytes[off], static_cast<std::uint32_t>(rec_d), record);
    off += payload;
    ++record;
  }
}

}  // namespace

Dataset load_fvecs(const std::filesystem::path& path) {
  std::vector<float> data;
  std::uint32_t dim = 0;
  parse_vecs(path, 4,
             [&](const unsigned char* p, std::uint32_t d, std::size_t record) {
               dim = d;
               for (std::uint32_t i = 0; i < d; ++i) {
                 const float v = std::bit_cast<float>(read_u32_le(p + 4 * i));
                 if (!std::isfinite(v)) {
                   throw std::runtime_error(
                       path.string() + ": non-finite component in record " +
                       std::to_string(record));
                 }
                 data.push_back(v);
               }
             });
  return Dataset(path.stem().string(), dim, std::move(data));
}

Dataset load_bvecs(const std::filesystem::path& path) {
  std::vector<float> data;
  std::uint32_t dim = 0;
  parse_vecs(path, 1,
             [&](const unsigned char* p, std::uint32_t d, std::size_t) {
               dim = d;
               for (std::uint32_t i = 0; i < d; ++i) {
                 data.push_back(static_cast<float>(p[i]));
               }
             });
  return Dataset(path.stem().string(), dim, std::move(data));
}

std::vector<std::vector<std::int32_t>> load_ivecs(
    const std::filesystem::path& path) {
  std::vector<std::vector<std::int32_t>> rows;
  parse_vecs(path, 4,
             [&](const unsigned char* p, std::uint32_t d, std::size_t) {
               std::vector<std::int32_t> row(d);
               for (std::uint32_t i = 0; i < d; ++i) {
                 row[i] = static_cast<std::int32_t>(read_u32_le(p + 4 * i));
               }
               rows.push_back(std::move(row));
             });
  return rows;
}

void write_fvecs(const Dataset& data, const std::filesystem::path& path) {
  std::vector<unsigned char> bytes;
  bytes.reserve(static_cast<std::size_t>(data.n()) * (4 + 4 * data.dim()));
  for (std::uint32_t i = 0; i < data.n(); ++i) {
    append_u32_le(bytes, data.dim());
    for (const float v : data.row(i)) {
      append_u32_le(bytes, std::bit_cast<std::uint32_t>(v));
    }
  }
  write_file(path, bytes);
}

void write_ivecs(const std::vector<std::vector<std::int32_t>>& rows,
                 const std::filesystem::path& path) {
  std::vector<unsigned char> bytes;
  for (const auto& row : rows) {
    append_u32_le(bytes, static_cast<std::uint32_t>(row.size()));
    for (const std::int32_t v : row) {
      append_u32_le(bytes, static_cast<std::uint32_t>(v));
    }
  }
  write_file(path, bytes);
}

Dataset subsample(const Dataset& data, std::uint32_t m, std::uint64_t seed) {
  if (m == 0) throw std::invalid_argument("subsample: m must be >= 1");
  if (m > data.n()) {
    throw std::invalid_argument("subsample: m=" + std::to_string(m) +
                                " exceeds n=" + std::to_string(data.n()));
  }
  std::vector<std::uint32_t> idx(data.n());
  std::iota(idx.begin(), idx.end(), 0u);
  std::mt19937_64 rng(seed);
  // partial Fisher-Yates: first m entries form a uniform ordered sample
  for (std::uint32_t i = 0; i < m; ++i) {
    std::uniform_int_distribution<std::uint32_t> pick(i, data.n() - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  std::vector<float> out;
  out.reserve(static_cast<std::size_t>(m) * data.dim());
  for (std::uint32_t i = 0; i < m; ++i) {
    const auto row = data.row(idx[i]);
    out.insert(out.end(), row.begin(), row.end());
  }
  return Dataset(data.name() + "-sub" + std::to_string(m), data.dim(),
                 std::move(out));
}

Dataset gen_synthetic(std::uint32_t n, std::uint32_t d,
                      SyntheticDistribution distribution, std::uint64_t seed,
                      std::string name) {
  if (n == 0 || d == 0) {
    throw std::invalid_argument("gen_synthetic: n and d must be >= 1");
  }
  std::mt19937_64 rng(seed);
  std::vector<float> data(static_cast<std::size_t>(n) * d);
  if (distribution == SyntheticDistribution::kUniform01) {
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    for (float& v : data) v = u(rng);
  } else {
    std::normal_distribution<float> g(0.0f, 1.0f);
    for (float& v : data) v = g(rng);
  }
  return Dataset(std::move(name), d, std::move(data));
}

}  // namespace uhnsw
