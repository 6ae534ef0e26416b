#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace safelens {

/// Dense row-major float32 tensor as stored on disk.
///
/// File layout (all integers and floats little-endian):
///   5 bytes   magic "SLVF1"
///   u32       rank
///   rank*u32  dims
///   f32 * product(dims) payload
struct Tensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> values;

  [[nodiscard]] std::uint64_t element_count() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

inline constexpr std::string_view kTensorMagic = "SLVF1";

/// Serializes to the byte layout above. Throws DataError if values.size()
/// disagrees with dims.
std::vector<std::uint8_t> encode_tensor(const Tensor& t);

/// Decodes one tensor starting at bytes[offset]; advances offset past it.
/// Throws DataError on bad magic, truncation, or dimension overflow.
Tensor decode_tensor(std::span<const std::uint8_t> bytes, std::size_t& offset);

void write_tensor(const Tensor& t, const std::filesystem::path& path);

/// Reads a file holding exactly one tensor; trailing bytes are an error.
Tensor read_tensor(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace safelens
