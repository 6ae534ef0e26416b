#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "safelens/category.hpp"
#include "safelens/manifest.hpp"

namespace safelens {

inline constexpr std::string_view kFramesPlaceholder = "{FRAMES_SECTION}";
inline constexpr std::string_view kConfidencePlaceholder = "{CONFIDENCE_SECTION}";
inline constexpr std::string_view kFramesHeader = "FRAMES_LEVEL_ANALYSIS:";
inline constexpr std::string_view kConfidenceHeader = "INITIAL_CONFIDENCE_SCORES_FOR_GUIDANCE:";
inline constexpr std::string_view kOriginalResponseMarker = "ORIGINAL_RESPONSE:";

/// Policy prompt text for a variant. Baseline and s1 contain no placeholders;
/// s2 carries kFramesPlaceholder and kConfidencePlaceholder where the
/// screening outputs go. Byte-stable across calls.
const std::string& render_policy_prompt(PromptVariant variant);

/// Rounds to three decimals and drops trailing zeros, keeping at least one
/// fractional digit: 0.8031 -> "0.803", 0 -> "0.0", 0.5 -> "0.5".
std::string format_probability(double p);

/// "FRAMES_LEVEL_ANALYSIS:" followed by one "Frame-<k>: <caption>" line per
/// caption. Backslashes and line breaks inside captions are escaped so that
/// each caption stays on its own line.
std::string render_frames_section(const std::vector<std::string>& captions);

/// "INITIAL_CONFIDENCE_SCORES_FOR_GUIDANCE:" followed by seven
/// "<alias>: Probability = <value>" lines in canonical order.
std::string render_confidence_section(const ProbabilitySimplex& q);

/// X~ = [X; c; q].
struct AugmentedPrompt {
  std::string base;
  std::vector<std::string> captions;
  ProbabilitySimplex confidences;
  std::string rendered;

  friend bool operator==(const AugmentedPrompt&, const AugmentedPrompt&) = default;
};

/// Fills the placeholders of `base` when it has both; otherwise appends the
/// two sections after it. Throws DataError when `captions` is empty.
AugmentedPrompt assemble_augmented_prompt(std::string base, std::vector<std::string> captions,
                                          const ProbabilitySimplex& q);

/// A response that has no usable GUARDRAIL line.
struct MalformedResponse {
  std::string raw;
  std::string reason;
};

class MalformedResponseError : public std::runtime_error {
 public:
  explicit MalformedResponseError(MalformedResponse m)
      : std::runtime_error("malformed guardrail response: " + m.reason), response_(std::move(m)) {}

  [[nodiscard]] const MalformedResponse& response() const noexcept { return response_; }

 private:
  MalformedResponse response_;
};

using ParseResult = std::variant<GuardrailVerdict, MalformedResponse>;

/// Never throws. Picks the DESCRIPTION and EXPLANATION lines (optional) and the
/// first line starting with "GUARDRAIL:" whose remainder is a brace-delimited
/// map from category keys to booleans. Keys may be bare aliases
/// ("Sexual Content") or numbered ("C1(Sexual Content)"); absent keys mean
/// false.
ParseResult try_parse_guardrail_response(std::string_view text);

/// Throwing form of try_parse_guardrail_response.
GuardrailVerdict parse_guardrail_response(std::string_view text);

inline Category extract_label(const GuardrailVerdict& v) noexcept { return v.predicted(); }

/// DESCRIPTION / EXPLANATION / GUARDRAIL lines with all six keys in canonical
/// order. Description and explanation must be single-line for the round-trip
/// through the parser to be exact.
std::string render_response_skeleton(const GuardrailVerdict& v);

/// Input for the CoT generator: the augmented prompt together with the
/// original ground-truth response to be rewritten with reasoning.
struct CotRequest {
  std::string sample_id;
  AugmentedPrompt prompt;
  std::string original_response;
  std::string instruction;

  /// instruction, augmented prompt, then kOriginalResponseMarker and the
  /// original response.
  [[nodiscard]] std::string rendered() const;

  friend bool operator==(const CotRequest&, const CotRequest&) = default;
};

/// Throws DataError when `original` is empty.
CotRequest build_cot_request(const SampleRecord& sample, AugmentedPrompt prompt,
                             std::string original);

nlohmann::json to_json(const CotRequest& r);
CotRequest cot_request_from_json(const nlohmann::json& j);

}  // namespace safelens
