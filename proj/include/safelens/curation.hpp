#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "safelens/backends.hpp"
#include "safelens/influence.hpp"
#include "safelens/manifest.hpp"
#include "safelens/probe.hpp"
#include "safelens/prompts.hpp"

namespace safelens {

struct CurationOptions {
  ProbeTrainConfig probe;
  /// Share of the retained samples the probe is trained on (seeded pick).
  double probe_subset_fraction = 0.5;
  /// Base prompt of the augmented training prompt.
  PromptVariant prompt_variant = PromptVariant::s2;
  /// Prompt paired with the video when hidden states come from the embedder.
  PromptVariant screen_variant = PromptVariant::s1;
  /// Overrides the default CoT instruction when nonempty.
  std::string instruction;
  std::size_t threads = 0;

  void validate() const;
};

struct CurationBackends {
  /// Used for records without an embedding_ref.
  std::shared_ptr<Embedder> embedder;
  /// Used for records without stored captions.
  std::shared_ptr<Captioner> captioner;
  /// Optional; when set, every request is sent to it.
  std::shared_ptr<Reasoner> cot_generator;
};

struct AugmentResult {
  ProbeModel probe;
  std::vector<CotRequest> requests;
  /// Parallel to `requests` when a generator is configured.
  std::vector<std::string> cot_responses;
  std::vector<std::string> warnings;
};

struct CurationResult {
  FilterReport report;
  Manifest filtered;
  AugmentResult augmented;
};

/// Hidden states of a record from its embedding_ref, or from the embedder.
HiddenStates hidden_states_for(const Manifest& m, const SampleRecord& r, Embedder* embedder,
                               PromptVariant screen_variant);

/// Influence filter over the gradients referenced by both manifests.
FilterReport influence_filter(const Manifest& train, const Manifest& val, std::size_t threads = 0);

/// Records of `train` the report keeps, in order.
Manifest apply_filter(const Manifest& train, const FilterReport& report);

/// Confidence-and-caption augmentation of already filtered data. Trains a
/// probe on a seeded subset unless `probe` is given, scores every record,
/// captions its frames, and builds one CoT request per record.
AugmentResult augment(const Manifest& data, const CurationOptions& opts,
                      const CurationBackends& backends,
                      std::optional<ProbeModel> probe = std::nullopt);

/// Influence filtering followed by augmentation of the retained samples.
/// Errors name the offending record.
CurationResult run_curation(const Manifest& train, const Manifest& val,
                            const CurationOptions& opts, const CurationBackends& backends);

/// {"id", "augmented_prompt", "response"} for one generated sample.
nlohmann::json cot_sample_json(const CotRequest& request, const std::string& response);

}  // namespace safelens
