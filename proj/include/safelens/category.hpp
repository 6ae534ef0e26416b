#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace safelens {

/// The seven-way label space. The six harm classes occupy ordinals 0..5 and
/// Safe is always last.
enum class Category : std::uint8_t {
  sexual = 0,
  abuse = 1,
  violence = 2,
  misinfo = 3,
  illegal = 4,
  extreme = 5,
  safe = 6,
};

inline constexpr std::size_t kNumCategories = 7;
inline constexpr std::size_t kNumHarmCategories = 6;

/// All categories in ordinal order.
std::span<const Category> canonical_categories() noexcept;

constexpr std::size_t ordinal(Category c) noexcept {
  return static_cast<std::size_t>(c);
}

/// Throws DataError when `ordinal` is outside [0, 6].
Category category_from_ordinal(std::size_t ordinal);

/// Short report name: "Sexual", "Abuse", ..., "Safe".
std::string_view category_name(Category c) noexcept;

/// Display string used inside prompt templates, e.g. "Sexual Content" or
/// "safe".
std::string_view prompt_alias(Category c) noexcept;

std::optional<Category> category_from_name(std::string_view name) noexcept;
std::optional<Category> category_from_alias(std::string_view alias) noexcept;

/// Parses a category given either its short name or its prompt alias; throws
/// DataError on anything else.
Category parse_category(std::string_view text);

/// A probability distribution over the seven categories, indexed by ordinal.
class ProbabilitySimplex {
 public:
  static constexpr double kTolerance = 1e-6;

  ProbabilitySimplex();  // uniform

  /// Validates each entry in [0, 1] and the sum within kTolerance of 1.
  explicit ProbabilitySimplex(const std::array<double, kNumCategories>& values);

  static ProbabilitySimplex uniform();
  static ProbabilitySimplex one_hot(Category c);

  [[nodiscard]] double operator[](Category c) const noexcept {
    return values_[ordinal(c)];
  }
  [[nodiscard]] const std::array<double, kNumCategories>& values() const noexcept {
    return values_;
  }

  friend bool operator==(const ProbabilitySimplex&, const ProbabilitySimplex&) = default;

 private:
  std::array<double, kNumCategories> values_;
};

/// Category with maximal probability; ties go to the lowest ordinal.
Category argmax_category(const ProbabilitySimplex& q) noexcept;

/// Last-n token embeddings of a (video, prompt) pair, row-major n x d.
/// mask[t] is false for padding rows.
struct HiddenStates {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<float> values;
  std::vector<bool> mask;

  /// All rows real.
  static HiddenStates dense(std::size_t n, std::size_t d, std::vector<float> values);

  [[nodiscard]] std::span<const float> row(std::size_t t) const {
    return {values.data() + t * d, d};
  }

  /// Throws DataError when dimensions disagree or every row is masked.
  void validate() const;

  friend bool operator==(const HiddenStates&, const HiddenStates&) = default;
};

/// Parsed structured guardrail answer. `predicted` is derived from `flags`
/// and never set independently.
class GuardrailVerdict {
 public:
  using Flags = std::array<bool, kNumHarmCategories>;

  GuardrailVerdict() = default;
  GuardrailVerdict(std::string description, std::string explanation, Flags flags);

  /// Verdict flagging exactly `c`, or nothing when `c` is Safe.
  static GuardrailVerdict for_category(Category c, std::string description = {},
                                       std::string explanation = {});

  [[nodiscard]] const std::string& description() const noexcept { return description_; }
  [[nodiscard]] const std::string& explanation() const noexcept { return explanation_; }
  [[nodiscard]] const Flags& flags() const noexcept { return flags_; }
  [[nodiscard]] Category predicted() const noexcept { return predicted_; }
  [[nodiscard]] std::size_t flag_count() const noexcept;
  [[nodiscard]] bool multiple_flags() const noexcept { return flag_count() > 1; }

  friend bool operator==(const GuardrailVerdict&, const GuardrailVerdict&) = default;

 private:
  std::string description_;
  std::string explanation_;
  Flags flags_{};
  Category predicted_ = Category::safe;
};

}  // namespace safelens
