#include "safelens/curation.hpp"

#include <algorithm>
#include <cmath>

#include "safelens/dataset.hpp"
#include "safelens/error.hpp"
#include "safelens/random.hpp"

namespace safelens {

void CurationOptions::validate() const {
  probe.validate();
  if (!(probe_subset_fraction > 0.0 && probe_subset_fraction <= 1.0)) {
    throw ConfigError("probe subset fraction must lie in (0, 1]");
  }
}

HiddenStates hidden_states_for(const Manifest& m, const SampleRecord& r, Embedder* embedder,
                               PromptVariant screen_variant) {
  if (r.embedding_ref) return load_hidden_states(m, r);
  if (!embedder) {
    throw DataError("record '" + r.id + "' has no embedding_ref and no embedder is configured");
  }
  HiddenStates h = embedder->embed(frames_for(r), render_policy_prompt(screen_variant));
  h.validate();
  return h;
}

FilterReport influence_filter(const Manifest& train, const Manifest& val, std::size_t threads) {
  const auto trains = load_gradients(train);
  const auto vals = load_gradients(val);
  return filter_training_set(influence_matrix(trains, vals, threads));
}

Manifest apply_filter(const Manifest& train, const FilterReport& report) {
  if (report.rows.size() != train.records.size()) {
    throw DataError("filter report has " + std::to_string(report.rows.size()) +
                    " rows for " + std::to_string(train.records.size()) + " records");
  }
  Manifest out;
  out.base_dir = train.base_dir;
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    if (report.rows[i].id != train.records[i].id) {
      throw DataError("filter report row " + std::to_string(i) + " is '" + report.rows[i].id +
                      "' but the record is '" + train.records[i].id + "'");
    }
    if (report.rows[i].kept) out.records.push_back(train.records[i]);
  }
  return out;
}

AugmentResult augment(const Manifest& data, const CurationOptions& opts,
                      const CurationBackends& backends, std::optional<ProbeModel> probe) {
  opts.validate();
  if (data.records.empty()) throw DataError("nothing to augment: no records");

  std::vector<LabeledStates> states;
  states.reserve(data.records.size());
  for (const auto& r : data.records) {
    states.push_back({hidden_states_for(data, r, backends.embedder.get(), opts.screen_variant),
                      r.label});
  }

  AugmentResult out;
  if (probe) {
    out.probe = std::move(*probe);
  } else {
    std::vector<std::size_t> order(states.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(opts.probe.seed ^ 0x9e3779b97f4a7c15ULL);
    shuffle(std::span<std::size_t>(order), rng);
    const auto take = std::max<std::size_t>(
        1, static_cast<std::size_t>(
               std::floor(opts.probe_subset_fraction * static_cast<double>(order.size()))));
    order.resize(take);
    std::sort(order.begin(), order.end());
    std::vector<LabeledStates> subset;
    subset.reserve(take);
    for (std::size_t i : order) subset.push_back(states[i]);
    out.probe = train_probe(subset, opts.probe);
  }

  const std::string& base = render_policy_prompt(opts.prompt_variant);
  for (std::size_t i = 0; i < data.records.size(); ++i) {
    const SampleRecord& r = data.records[i];
    const ProbabilitySimplex q = probe_forward(states[i].states, out.probe);
    std::vector<std::string> captions;
    if (r.captions && !r.captions->empty()) {
      captions = *r.captions;
    } else {
      if (!backends.captioner) {
        throw ConfigError("record '" + r.id + "' has no captions and no captioner is configured");
      }
      captions = caption_frames(*backends.captioner, frames_for(r));
    }
    CotRequest req = build_cot_request(r, assemble_augmented_prompt(base, std::move(captions), q),
                                       original_response(r));
    if (!opts.instruction.empty()) req.instruction = opts.instruction;
    if (backends.cot_generator) {
      std::string response = backends.cot_generator->complete(req.rendered(), std::nullopt);
      const ParseResult parsed = try_parse_guardrail_response(response);
      if (const auto* bad = std::get_if<MalformedResponse>(&parsed)) {
        out.warnings.push_back("cot_malformed:" + r.id + ": " + bad->reason);
      } else if (std::get<GuardrailVerdict>(parsed).predicted() != r.label) {
        out.warnings.push_back("cot_label_mismatch:" + r.id);
      }
      out.cot_responses.push_back(std::move(response));
    }
    out.requests.push_back(std::move(req));
  }
  return out;
}

CurationResult run_curation(const Manifest& train, const Manifest& val,
                            const CurationOptions& opts, const CurationBackends& backends) {
  opts.validate();
  CurationResult result;
  result.report = influence_filter(train, val, opts.threads);
  result.filtered = apply_filter(train, result.report);
  if (result.filtered.records.empty()) throw DataError("influence filter removed every sample");
  result.augmented = augment(result.filtered, opts, backends);
  return result;
}

nlohmann::json cot_sample_json(const CotRequest& request, const std::string& response) {
  return {{"id", request.sample_id},
          {"augmented_prompt", request.prompt.rendered},
          {"response", response}};
}

}  // namespace safelens
