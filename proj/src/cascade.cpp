#include "safelens/cascade.hpp"

#include <cmath>

#include "safelens/dataset.hpp"

namespace safelens {

std::string_view to_string(MalformedPolicy p) noexcept {
  return p == MalformedPolicy::use_s1 ? "use_s1" : "error";
}

MalformedPolicy parse_malformed_policy(std::string_view text) {
  if (text == "use_s1") return MalformedPolicy::use_s1;
  if (text == "error") return MalformedPolicy::error;
  throw ConfigError("unknown fallback_on_malformed '" + std::string(text) +
                    "' (expected use_s1 or error)");
}

std::string_view to_string(DecisionPath p) noexcept {
  switch (p) {
    case DecisionPath::s1: return "s1";
    case DecisionPath::s2: return "s2";
    case DecisionPath::s2_fallback_s1: return "s2_fallback_s1";
  }
  return "?";
}

void CascadeConfig::validate() const {
  if (!std::isfinite(tau) || tau < 0.0) throw ConfigError("tau must be finite and >= 0");
  if (!std::isfinite(probe_seconds) || probe_seconds < 0.0 || !std::isfinite(probe_gflops) ||
      probe_gflops < 0.0) {
    throw ConfigError("probe cost must be finite and >= 0");
  }
}

nlohmann::json to_json(const Decision& d) {
  return {{"id", d.id},
          {"path", to_string(d.path)},
          {"predicted", category_name(d.predicted)},
          {"confidence", d.s1.confidence},
          {"seconds", d.cost.seconds()},
          {"gflops", d.cost.gflops()},
          {"warnings", d.warnings}};
}

Cascade::Cascade(CascadeConfig cfg, CascadeBackends backends)
    : cfg_(std::move(cfg)), backends_(std::move(backends)) {
  cfg_.validate();
  if (!backends_.embedder) throw ConfigError("cascade needs an embedder backend");
  if (!backends_.captioner) throw ConfigError("cascade needs a captioner backend");
  if (!backends_.reasoner) throw ConfigError("cascade needs a reasoner backend");
  if (!backends_.probe) throw ConfigError("cascade needs a probe");
  backends_.probe->validate();
}

Cascade Cascade::with_tau(double tau) const {
  CascadeConfig c = cfg_;
  c.tau = tau;
  return Cascade(c, backends_);
}

S1Result Cascade::screen_s1(const SampleRecord& sample) const {
  S1Result r;
  r.frames = frames_for(sample);
  HiddenStates h = backends_.embedder->embed(r.frames, render_policy_prompt(cfg_.screen_variant));
  r.cost.add(call_cost(backends_.embedder->descriptor(), r.frames.frames.size()));
  h.validate();
  r.q = probe_forward(h, *backends_.probe);
  r.cost.add({"probe", "probe", 1, cfg_.probe_seconds, cfg_.probe_gflops});
  r.y_hat = argmax_category(r.q);
  r.confidence = probe_confidence(r.q);
  return r;
}

S2Outcome Cascade::deliberate_s2(const SampleRecord& sample, const S1Result& s1) const {
  S2Outcome out;
  const auto& cap_desc = backends_.captioner->descriptor();
  std::vector<std::string> captions = caption_frames(*backends_.captioner, s1.frames);
  for (std::size_t i = 0; i < captions.size(); ++i) out.cost.add(call_cost(cap_desc, 1));

  const AugmentedPrompt prompt =
      assemble_augmented_prompt(render_policy_prompt(PromptVariant::s2), std::move(captions), s1.q);
  const auto& reasoner_desc = backends_.reasoner->descriptor();
  for (;;) {
    ++out.attempts;
    out.cost.add(call_cost(reasoner_desc, s1.frames.frames.size()));
    try {
      out.response = backends_.reasoner->complete(prompt.rendered, s1.frames);
      break;
    } catch (const BackendError& e) {
      const bool retryable = e.failure() != BackendFailure::protocol;
      if (!retryable || out.attempts > cfg_.retry_s2) {
        throw ModerationError(ErrorKind::backend, sample.id,
                              "reasoner failed after " + std::to_string(out.attempts) +
                                  " attempt(s): " + e.what(),
                              out.cost);
      }
    }
  }
  out.parsed = try_parse_guardrail_response(out.response);
  return out;
}

Decision Cascade::decide(const SampleRecord& sample, S1Result s1,
                         const std::optional<S2Outcome>& s2) const {
  Decision d;
  d.id = sample.id;
  d.cost = s1.cost;
  if (route(s1.confidence, cfg_.tau) == Route::s1) {
    d.path = DecisionPath::s1;
    d.predicted = s1.y_hat;
    d.s1 = std::move(s1);
    return d;
  }
  if (!s2) throw std::logic_error("decide: sample routes to S2 but no S2 outcome was given");
  d.cost.merge(s2->cost);
  d.s2_response = s2->response;
  if (s2->attempts > 1) {
    d.warnings.push_back("s2_retried:" + std::to_string(s2->attempts - 1));
  }
  if (const auto* verdict = std::get_if<GuardrailVerdict>(&s2->parsed)) {
    d.path = DecisionPath::s2;
    d.predicted = verdict->predicted();
    if (verdict->multiple_flags()) d.warnings.push_back("multiple_flags");
    d.verdict = *verdict;
  } else {
    const auto& bad = std::get<MalformedResponse>(s2->parsed);
    if (cfg_.fallback_on_malformed == MalformedPolicy::error) {
      throw ModerationError(ErrorKind::backend, sample.id,
                            "malformed reasoner response: " + bad.reason, d.cost);
    }
    d.path = DecisionPath::s2_fallback_s1;
    d.predicted = s1.y_hat;
    d.warnings.push_back("malformed_s2_response: " + bad.reason);
  }
  d.s1 = std::move(s1);
  return d;
}

Decision Cascade::moderate(const SampleRecord& sample) const {
  S1Result s1;
  try {
    s1 = screen_s1(sample);
  } catch (const ModerationError&) {
    throw;
  } catch (const Error& e) {
    throw ModerationError(e.kind(), sample.id, e.what(), {});
  }
  std::optional<S2Outcome> s2;
  if (route(s1.confidence, cfg_.tau) == Route::s2) {
    try {
      s2 = deliberate_s2(sample, s1);
    } catch (const ModerationError& e) {
      CostRecord partial = s1.cost;
      partial.merge(e.partial_cost());
      throw ModerationError(e.kind(), sample.id, e.detail(), partial);
    } catch (const Error& e) {
      throw ModerationError(e.kind(), sample.id, e.what(), s1.cost);
    }
  }
  return decide(sample, std::move(s1), s2);
}

}  // namespace safelens
