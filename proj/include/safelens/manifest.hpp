#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "safelens/category.hpp"

namespace safelens {

enum class Split { train, val, test };
enum class PromptVariant { baseline, s1, s2 };

std::string_view to_string(Split s) noexcept;
std::string_view to_string(PromptVariant v) noexcept;
Split parse_split(std::string_view text);
PromptVariant parse_prompt_variant(std::string_view text);

/// One dataset row. Keys not named here are kept in `extra` and written back
/// unchanged.
struct SampleRecord {
  std::string id;
  Split split = Split::train;
  Category label = Category::safe;
  std::optional<std::string> media_uri;
  std::optional<std::vector<std::string>> frame_uris;
  std::optional<std::vector<std::string>> captions;
  std::optional<std::string> embedding_ref;
  std::optional<std::string> gradient_ref;
  PromptVariant prompt_variant = PromptVariant::baseline;
  nlohmann::json extra = nlohmann::json::object();

  friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

inline constexpr std::size_t kMinFrames = 2;
inline constexpr std::size_t kMaxFrames = 20;

nlohmann::json to_json(const SampleRecord& r);

/// Throws DataError describing the first violated field.
SampleRecord record_from_json(const nlohmann::json& j);

struct Manifest {
  std::vector<SampleRecord> records;
  /// Directory that relative embedding/gradient refs resolve against.
  std::filesystem::path base_dir;

  [[nodiscard]] std::filesystem::path resolve(const std::string& ref) const;
  [[nodiscard]] const SampleRecord* find(std::string_view id) const;
};

/// One JSON object per line; blank lines are skipped. Errors name the 1-based
/// line number, or the id for duplicates.
Manifest read_manifest(const std::filesystem::path& path);
Manifest parse_manifest(std::string_view text);

void write_manifest(const Manifest& m, const std::filesystem::path& path);
std::string format_manifest(const Manifest& m);

}  // namespace safelens
