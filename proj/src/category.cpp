#include "safelens/category.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "safelens/error.hpp"

namespace safelens {
namespace {

constexpr std::array<Category, kNumCategories> kCategories = {
    Category::sexual,  Category::abuse,   Category::violence, Category::misinfo,
    Category::illegal, Category::extreme, Category::safe,
};

constexpr std::array<std::string_view, kNumCategories> kNames = {
    "Sexual", "Abuse", "Violence", "Misinfo", "Illegal", "Extreme", "Safe",
};

constexpr std::array<std::string_view, kNumCategories> kAliases = {
    "Sexual Content",
    "Harassment & Bullying",
    "Threats, Violence & Harm",
    "False & Deceptive Information",
    "Illegal/Regulated Activities",
    "Hateful Content & Extremism",
    "safe",
};

}  // namespace

std::span<const Category> canonical_categories() noexcept { return kCategories; }

Category category_from_ordinal(std::size_t ordinal) {
  if (ordinal >= kNumCategories) {
    throw DataError("category ordinal out of range: " + std::to_string(ordinal));
  }
  return kCategories[ordinal];
}

std::string_view category_name(Category c) noexcept { return kNames[ordinal(c)]; }

std::string_view prompt_alias(Category c) noexcept { return kAliases[ordinal(c)]; }

std::optional<Category> category_from_name(std::string_view name) noexcept {
  for (std::size_t k = 0; k < kNumCategories; ++k) {
    if (kNames[k] == name) return kCategories[k];
  }
  return std::nullopt;
}

std::optional<Category> category_from_alias(std::string_view alias) noexcept {
  for (std::size_t k = 0; k < kNumCategories; ++k) {
    if (kAliases[k] == alias) return kCategories[k];
  }
  return std::nullopt;
}

Category parse_category(std::string_view text) {
  if (auto c = category_from_name(text)) return *c;
  if (auto c = category_from_alias(text)) return *c;
  throw DataError("unknown category '" + std::string(text) + "'");
}

ProbabilitySimplex::ProbabilitySimplex() : ProbabilitySimplex(uniform()) {}

ProbabilitySimplex::ProbabilitySimplex(const std::array<double, kNumCategories>& values)
    : values_(values) {
  double sum = 0.0;
  for (double v : values_) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      throw DataError("probability outside [0, 1]: " + std::to_string(v));
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > kTolerance) {
    throw DataError("probabilities sum to " + std::to_string(sum) + ", expected 1");
  }
}

ProbabilitySimplex ProbabilitySimplex::uniform() {
  std::array<double, kNumCategories> v;
  v.fill(1.0 / static_cast<double>(kNumCategories));
  return ProbabilitySimplex(v);
}

ProbabilitySimplex ProbabilitySimplex::one_hot(Category c) {
  std::array<double, kNumCategories> v{};
  v[ordinal(c)] = 1.0;
  return ProbabilitySimplex(v);
}

Category argmax_category(const ProbabilitySimplex& q) noexcept {
  const auto& v = q.values();
  std::size_t best = 0;
  for (std::size_t k = 1; k < kNumCategories; ++k) {
    if (v[k] > v[best]) best = k;
  }
  return kCategories[best];
}

HiddenStates HiddenStates::dense(std::size_t n, std::size_t d, std::vector<float> values) {
  HiddenStates h;
  h.n = n;
  h.d = d;
  h.values = std::move(values);
  h.mask.assign(n, true);
  h.validate();
  return h;
}

void HiddenStates::validate() const {
  if (values.size() != n * d) {
    throw DataError("hidden states hold " + std::to_string(values.size()) +
                    " values, expected " + std::to_string(n) + " x " + std::to_string(d));
  }
  if (mask.size() != n) {
    throw DataError("hidden-state mask length " + std::to_string(mask.size()) +
                    " does not match token count " + std::to_string(n));
  }
  if (std::none_of(mask.begin(), mask.end(), [](bool m) { return m; })) {
    throw DataError("hidden states have no unmasked token");
  }
}

GuardrailVerdict::GuardrailVerdict(std::string description, std::string explanation,
                                   Flags flags)
    : description_(std::move(description)),
      explanation_(std::move(explanation)),
      flags_(flags) {
  predicted_ = Category::safe;
  for (std::size_t k = 0; k < kNumHarmCategories; ++k) {
    if (flags_[k]) {
      predicted_ = kCategories[k];
      break;
    }
  }
}

GuardrailVerdict GuardrailVerdict::for_category(Category c, std::string description,
                                                std::string explanation) {
  Flags flags{};
  if (c != Category::safe) flags[ordinal(c)] = true;
  return GuardrailVerdict(std::move(description), std::move(explanation), flags);
}

std::size_t GuardrailVerdict::flag_count() const noexcept {
  return static_cast<std::size_t>(std::count(flags_.begin(), flags_.end(), true));
}

}  // namespace safelens
