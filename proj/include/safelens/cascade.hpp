#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "safelens/backends.hpp"
#include "safelens/error.hpp"
#include "safelens/manifest.hpp"
#include "safelens/probe.hpp"
#include "safelens/prompts.hpp"

namespace safelens {

enum class MalformedPolicy { use_s1, error };
std::string_view to_string(MalformedPolicy p) noexcept;
MalformedPolicy parse_malformed_policy(std::string_view text);

inline constexpr double kDefaultTau = 0.9;
inline constexpr double kProbeSeconds = 0.04;

struct CascadeConfig {
  double tau = kDefaultTau;
  MalformedPolicy fallback_on_malformed = MalformedPolicy::use_s1;
  std::size_t retry_s2 = 0;
  /// Declared cost of one probe forward pass.
  double probe_seconds = kProbeSeconds;
  double probe_gflops = 0.0;
  /// Policy prompt paired with the video for the screening embedding.
  PromptVariant screen_variant = PromptVariant::s1;

  /// Throws ConfigError for a negative or non-finite tau or probe cost.
  void validate() const;
};

struct CascadeBackends {
  std::shared_ptr<Embedder> embedder;
  std::shared_ptr<Captioner> captioner;
  std::shared_ptr<Reasoner> reasoner;
  std::shared_ptr<const ProbeModel> probe;
};

struct S1Result {
  ProbabilitySimplex q;
  Category y_hat = Category::safe;
  double confidence = 0.0;
  CostRecord cost;
  FrameSet frames;
};

enum class DecisionPath { s1, s2, s2_fallback_s1 };
std::string_view to_string(DecisionPath p) noexcept;

enum class Route { s1, s2 };

/// s1 iff confidence >= tau.
constexpr Route route(double confidence, double tau) noexcept {
  return confidence >= tau ? Route::s1 : Route::s2;
}

/// Everything the slow path produced for one sample.
struct S2Outcome {
  std::string response;
  ParseResult parsed;
  CostRecord cost;
  std::size_t attempts = 0;
};

struct Decision {
  std::string id;
  DecisionPath path = DecisionPath::s1;
  Category predicted = Category::safe;
  S1Result s1;
  std::optional<std::string> s2_response;
  std::optional<GuardrailVerdict> verdict;
  std::vector<std::string> warnings;
  CostRecord cost;
};

/// {id, path, predicted, confidence, seconds, gflops, warnings}.
nlohmann::json to_json(const Decision& d);

/// A sample could not be moderated. Carries the cost spent before the failure
/// and keeps the kind of the underlying error.
class ModerationError : public Error {
 public:
  ModerationError(ErrorKind kind, const std::string& sample_id, const std::string& message,
                  CostRecord partial)
      : Error(kind, "sample '" + sample_id + "': " + message),
        sample_id_(sample_id),
        detail_(message),
        partial_(std::move(partial)) {}

  [[nodiscard]] const std::string& sample_id() const noexcept { return sample_id_; }
  /// The message without the sample prefix.
  [[nodiscard]] const std::string& detail() const noexcept { return detail_; }
  [[nodiscard]] const CostRecord& partial_cost() const noexcept { return partial_; }

 private:
  std::string sample_id_;
  std::string detail_;
  CostRecord partial_;
};

/// Probe screening with confidence-gated escalation to a captioning +
/// reasoning slow path. Holds no mutable state; moderate may be called from
/// several threads when the backends allow it.
class Cascade {
 public:
  /// Throws ConfigError when a required backend or the probe is missing.
  Cascade(CascadeConfig cfg, CascadeBackends backends);

  [[nodiscard]] const CascadeConfig& config() const noexcept { return cfg_; }
  [[nodiscard]] const CascadeBackends& backends() const noexcept { return backends_; }
  [[nodiscard]] Cascade with_tau(double tau) const;

  S1Result screen_s1(const SampleRecord& sample) const;
  /// Malformed replies come back inside the outcome; transport and timeout
  /// failures are retried retry_s2 times before propagating.
  S2Outcome deliberate_s2(const SampleRecord& sample, const S1Result& s1) const;

  /// Combines a screening result with the slow-path outcome (required when the
  /// sample routes to S2 under this config).
  Decision decide(const SampleRecord& sample, S1Result s1,
                  const std::optional<S2Outcome>& s2) const;

  /// Screen, route, and deliberate when needed. Backend and data failures
  /// surface as ModerationError.
  Decision moderate(const SampleRecord& sample) const;

 private:
  CascadeConfig cfg_;
  CascadeBackends backends_;
};

}  // namespace safelens
