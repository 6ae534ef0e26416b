#include "safelens/tensor_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <optional>
#include <string>

#include "safelens/error.hpp"

namespace safelens {
namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> bytes, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[at + i]) << (8 * i);
  return v;
}

// Product of dims, or nullopt on 64-bit overflow.
std::optional<std::uint64_t> checked_product(std::span<const std::uint32_t> dims) {
  std::uint64_t product = 1;
  for (std::uint32_t d : dims) {
    if (d != 0 && product > std::numeric_limits<std::uint64_t>::max() / d) return std::nullopt;
    product *= d;
  }
  return product;
}

}  // namespace

std::uint64_t Tensor::element_count() const {
  auto p = checked_product(dims);
  if (!p) throw DataError("tensor dimension product overflows");
  return *p;
}

std::vector<std::uint8_t> encode_tensor(const Tensor& t) {
  if (t.element_count() != t.values.size()) {
    throw DataError("tensor holds " + std::to_string(t.values.size()) +
                    " values but dims describe " + std::to_string(t.element_count()));
  }
  std::vector<std::uint8_t> out;
  out.reserve(kTensorMagic.size() + 4 * (1 + t.dims.size() + t.values.size()));
  out.insert(out.end(), kTensorMagic.begin(), kTensorMagic.end());
  put_u32(out, static_cast<std::uint32_t>(t.dims.size()));
  for (std::uint32_t d : t.dims) put_u32(out, d);
  for (float f : t.values) put_u32(out, std::bit_cast<std::uint32_t>(f));
  return out;
}

Tensor decode_tensor(std::span<const std::uint8_t> bytes, std::size_t& offset) {
  auto need = [&](std::uint64_t count, const char* what) {
    if (offset > bytes.size() || bytes.size() - offset < count) {
      throw DataError(std::string("truncated tensor: missing ") + what);
    }
  };
  need(kTensorMagic.size(), "magic");
  if (std::memcmp(bytes.data() + offset, kTensorMagic.data(), kTensorMagic.size()) != 0) {
    throw DataError("tensor magic mismatch");
  }
  offset += kTensorMagic.size();
  need(4, "rank");
  const std::uint32_t rank = get_u32(bytes, offset);
  offset += 4;
  need(std::uint64_t{4} * rank, "dims");
  Tensor t;
  t.dims.resize(rank);
  for (std::uint32_t i = 0; i < rank; ++i) {
    t.dims[i] = get_u32(bytes, offset);
    offset += 4;
  }
  const auto count = checked_product(t.dims);
  if (!count || *count > std::numeric_limits<std::uint64_t>::max() / 4) {
    throw DataError("tensor dimension overflow");
  }
  need(*count * 4, "payload");
  t.values.resize(*count);
  for (std::uint64_t i = 0; i < *count; ++i) {
    t.values[i] = std::bit_cast<float>(get_u32(bytes, offset));
    offset += 4;
  }
  return t;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for " + path.string());
}

void write_tensor(const Tensor& t, const std::filesystem::path& path) {
  write_file_bytes(path, encode_tensor(t));
}

Tensor read_tensor(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  std::size_t offset = 0;
  Tensor t;
  try {
    t = decode_tensor(bytes, offset);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  if (offset != bytes.size()) {
    throw DataError(path.string() + ": " + std::to_string(bytes.size() - offset) +
                    " trailing bytes after tensor payload");
  }
  return t;
}

}  // namespace safelens
