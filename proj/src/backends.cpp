#include "safelens/backends.hpp"

#include <algorithm>
#include <cmath>
#include <future>

#include "safelens/error.hpp"
#include "safelens/prompts.hpp"
#include "safelens/random.hpp"

namespace safelens {

std::string_view to_string(BackendKind k) noexcept {
  switch (k) {
    case BackendKind::embedder: return "embedder";
    case BackendKind::captioner: return "captioner";
    case BackendKind::reasoner: return "reasoner";
  }
  return "embedder";
}

void CostModel::validate() const {
  for (double v : {fixed_seconds, per_frame_seconds, fixed_gflops, per_frame_gflops}) {
    if (!std::isfinite(v) || v < 0.0) throw ConfigError("cost model fields must be >= 0");
  }
}

void BackendDescriptor::validate() const {
  if (model_id.empty()) {
    throw ConfigError(std::string(to_string(kind)) + " descriptor needs a model_id");
  }
  cost.validate();
}

CostEntry call_cost(const BackendDescriptor& desc, std::size_t frames) {
  const auto f = static_cast<double>(frames);
  return CostEntry{
      std::string(to_string(desc.kind)),
      desc.model_id,
      1,
      desc.cost.fixed_seconds + desc.cost.per_frame_seconds * f,
      desc.cost.fixed_gflops + desc.cost.per_frame_gflops * f,
  };
}

void CostRecord::add(const CostEntry& entry) {
  seconds_ += entry.seconds;
  gflops_ += entry.gflops;
  for (auto& e : breakdown_) {
    if (e.component == entry.component && e.model_id == entry.model_id) {
      e.calls += entry.calls;
      e.seconds += entry.seconds;
      e.gflops += entry.gflops;
      return;
    }
  }
  breakdown_.push_back(entry);
}

void CostRecord::merge(const CostRecord& other) {
  for (const auto& e : other.breakdown_) add(e);
}

const CostEntry* CostRecord::find(std::string_view component) const {
  for (const auto& e : breakdown_) {
    if (e.component == component) return &e;
  }
  return nullptr;
}

std::vector<std::size_t> sample_frame_indices(double duration_seconds,
                                              std::size_t frame_count_available) {
  if (!(duration_seconds > 0.0) || !std::isfinite(duration_seconds)) {
    throw DataError("video duration must be positive");
  }
  if (frame_count_available < 2) {
    throw DataError("video has " + std::to_string(frame_count_available) +
                    " frames; at least 2 are required");
  }
  const double at_one_fps = std::floor(duration_seconds);
  std::size_t t = at_one_fps >= 20.0 ? 20 : static_cast<std::size_t>(at_one_fps);
  t = std::clamp<std::size_t>(t, 2, 20);
  t = std::min(t, frame_count_available);
  std::vector<std::size_t> idx(t);
  for (std::size_t k = 0; k < t; ++k) idx[k] = (2 * k + 1) * frame_count_available / (2 * t);
  return idx;
}

FrameSet sample_frames(double duration_seconds, std::size_t frame_count_available,
                       std::string source) {
  FrameSet fs;
  for (std::size_t i : sample_frame_indices(duration_seconds, frame_count_available)) {
    fs.frames.push_back(source + "#frame=" + std::to_string(i));
  }
  fs.sample_fps = static_cast<double>(fs.frames.size()) / duration_seconds;
  fs.source = std::move(source);
  return fs;
}

std::vector<std::string> caption_frames(Captioner& captioner, const FrameSet& frames,
                                        bool concurrent) {
  std::vector<std::string> out;
  out.reserve(frames.frames.size());
  if (!concurrent) {
    for (const auto& f : frames.frames) out.push_back(captioner.caption(f));
    return out;
  }
  std::vector<std::future<std::string>> pending;
  pending.reserve(frames.frames.size());
  for (const auto& f : frames.frames) {
    pending.push_back(std::async(std::launch::async, [&captioner, &f] { return captioner.caption(f); }));
  }
  // Drain every future before rethrowing so no task outlives the captioner.
  std::exception_ptr error;
  for (auto& p : pending) {
    try {
      out.push_back(p.get());
    } catch (...) {
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

HashEmbedder::HashEmbedder(BackendDescriptor desc, std::size_t tokens, std::size_t dim,
                           std::uint64_t seed)
    : desc_(std::move(desc)), tokens_(tokens), dim_(dim), seed_(seed) {
  if (tokens_ == 0 || dim_ == 0) throw ConfigError("hash embedder needs positive tokens and dim");
}

HiddenStates HashEmbedder::embed(const FrameSet& video, std::string_view prompt) {
  Fnv1a h;
  h.add(seed_).add(video.source);
  for (const auto& f : video.frames) h.add(f);
  h.add(prompt);
  Rng rng(h.digest());
  std::vector<float> values(tokens_ * dim_);
  for (float& v : values) v = static_cast<float>(standard_normal(rng));
  return HiddenStates::dense(tokens_, dim_, std::move(values));
}

TableEmbedder::TableEmbedder(BackendDescriptor desc,
                             std::map<std::string, HiddenStates, std::less<>> table)
    : desc_(std::move(desc)), table_(std::move(table)) {}

HiddenStates TableEmbedder::embed(const FrameSet& video, std::string_view /*prompt*/) {
  auto it = table_.find(video.source);
  if (it == table_.end()) {
    throw ProtocolError("embedder has no hidden states for '" + video.source + "'");
  }
  return it->second;
}

std::string MockCaptioner::caption(std::string_view frame_ref) {
  return "mock caption for frame " + std::string(frame_ref);
}

OracleReasoner::OracleReasoner(BackendDescriptor desc,
                               std::map<std::string, Category, std::less<>> gold, double accuracy,
                               std::uint64_t seed)
    : desc_(std::move(desc)), gold_(std::move(gold)), accuracy_(accuracy), seed_(seed) {
  if (!(accuracy_ >= 0.0 && accuracy_ <= 1.0)) {
    throw ConfigError("oracle accuracy must lie in [0, 1]");
  }
}

Category OracleReasoner::answer_for(std::string_view source) const {
  auto it = gold_.find(source);
  if (it == gold_.end()) {
    throw ProtocolError("oracle reasoner has no gold label for '" + std::string(source) + "'");
  }
  Rng rng(Fnv1a().add(seed_).add(source).digest());
  if (uniform_unit(rng) < accuracy_) return it->second;
  const auto shift = 1 + uniform_index(rng, kNumCategories - 1);
  return category_from_ordinal((ordinal(it->second) + shift) % kNumCategories);
}

std::string OracleReasoner::complete(std::string_view /*prompt*/,
                                     const std::optional<FrameSet>& media) {
  if (!media) throw ProtocolError("oracle reasoner needs the video frames");
  const Category answer = answer_for(media->source);
  return render_response_skeleton(GuardrailVerdict::for_category(
      answer, "mock description of " + media->source,
      "mock reasoning for " + media->source + " concludes " + std::string(category_name(answer))));
}

std::string GarbageReasoner::complete(std::string_view /*prompt*/,
                                      const std::optional<FrameSet>& /*media*/) {
  return "I am not sure what this video shows.\nGUARDRAIL: {\"Sexual Content\": maybe";
}

std::string EchoCotGenerator::complete(std::string_view prompt,
                                       const std::optional<FrameSet>& /*media*/) {
  const auto marker = prompt.rfind(kOriginalResponseMarker);
  if (marker == std::string_view::npos) {
    throw ProtocolError("CoT generator prompt has no original response section");
  }
  const std::string_view original = prompt.substr(marker + kOriginalResponseMarker.size());
  std::string guardrail;
  std::string description = "video content as described by the frame captions";
  constexpr std::string_view kDescription = "DESCRIPTION:";
  std::size_t pos = 0;
  while (pos <= original.size()) {
    auto end = original.find('\n', pos);
    if (end == std::string_view::npos) end = original.size();
    std::string_view line = original.substr(pos, end - pos);
    pos = end + 1;
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string_view::npos) continue;
    line.remove_prefix(first);
    if (guardrail.empty() && line.starts_with("GUARDRAIL:")) guardrail = std::string(line);
    if (line.starts_with(kDescription)) {
      auto rest = line.substr(kDescription.size());
      const auto b = rest.find_first_not_of(" \t");
      description = b == std::string_view::npos ? std::string() : std::string(rest.substr(b));
    }
  }
  if (guardrail.empty()) throw ProtocolError("original response has no GUARDRAIL line");
  std::string out = "DESCRIPTION: " + description + "\n";
  out += "EXPLANATION: Step 1: the frame captions describe the visual content. Step 2: the "
         "initial confidence scores point to the same policy assessment. Step 3: weighing both "
         "signals against the policy definitions supports the verdict below.\n";
  out += guardrail + "\n";
  return out;
}

}  // namespace safelens
