#include "safelens/dataset.hpp"

#include <cmath>

#include "safelens/error.hpp"
#include "safelens/prompts.hpp"
#include "safelens/tensor_io.hpp"

namespace safelens {

std::string media_key(const SampleRecord& r) {
  return r.media_uri ? *r.media_uri : r.id;
}

FrameSet frames_for(const SampleRecord& r) {
  const auto duration = r.extra.find(extra_keys::kDuration);
  const bool has_duration = duration != r.extra.end() && duration->is_number();
  if (r.frame_uris) {
    FrameSet fs;
    fs.source = media_key(r);
    fs.frames = *r.frame_uris;
    if (has_duration && duration->get<double>() > 0.0) {
      fs.sample_fps = static_cast<double>(fs.frames.size()) / duration->get<double>();
    }
    return fs;
  }
  const auto count = r.extra.find(extra_keys::kFrameCount);
  if (!has_duration || count == r.extra.end() || !count->is_number_unsigned()) {
    throw DataError("record '" + r.id + "' has neither frame_uris nor " +
                    extra_keys::kDuration + "/" + extra_keys::kFrameCount);
  }
  try {
    return sample_frames(duration->get<double>(), count->get<std::size_t>(), media_key(r));
  } catch (const DataError& e) {
    throw DataError("record '" + r.id + "': " + e.what());
  }
}

HiddenStates load_hidden_states(const Manifest& m, const SampleRecord& r) {
  if (!r.embedding_ref) throw DataError("record '" + r.id + "' has no embedding_ref");
  Tensor t;
  try {
    t = read_tensor(m.resolve(*r.embedding_ref));
  } catch (const DataError& e) {
    throw DataError("record '" + r.id + "': " + e.what());
  }
  if (t.dims.size() != 2) {
    throw DataError("record '" + r.id + "': embedding must have rank 2, got " +
                    std::to_string(t.dims.size()));
  }
  HiddenStates h = HiddenStates::dense(t.dims[0], t.dims[1], std::move(t.values));
  const auto valid = r.extra.find(extra_keys::kValidTokens);
  if (valid != r.extra.end()) {
    if (!valid->is_number_unsigned() || valid->get<std::size_t>() > h.n) {
      throw DataError("record '" + r.id + "': bad " + extra_keys::kValidTokens);
    }
    const std::size_t k = valid->get<std::size_t>();
    for (std::size_t t_ = 0; t_ < h.n; ++t_) h.mask[t_] = t_ >= h.n - k;
  }
  try {
    h.validate();
  } catch (const DataError& e) {
    throw DataError("record '" + r.id + "': " + e.what());
  }
  return h;
}

GradientVector load_gradient(const Manifest& m, const SampleRecord& r) {
  if (!r.gradient_ref) throw DataError("record '" + r.id + "' has no gradient_ref");
  Tensor t;
  try {
    t = read_tensor(m.resolve(*r.gradient_ref));
  } catch (const DataError& e) {
    throw DataError("record '" + r.id + "': " + e.what());
  }
  if (t.dims.size() != 1) {
    throw DataError("record '" + r.id + "': gradient must have rank 1");
  }
  GradientVector g;
  g.values = std::move(t.values);
  g.source_id = r.id;
  const auto ck = r.extra.find(extra_keys::kCheckpoint);
  g.checkpoint_id = (ck != r.extra.end() && ck->is_string()) ? ck->get<std::string>()
                                                              : kDefaultCheckpoint;
  return g;
}

std::vector<LabeledGradient> load_gradients(const Manifest& m) {
  std::vector<LabeledGradient> out;
  out.reserve(m.records.size());
  for (const auto& r : m.records) out.push_back({load_gradient(m, r), r.label});
  return out;
}

std::string original_response(const SampleRecord& r) {
  const auto it = r.extra.find(extra_keys::kResponse);
  if (it != r.extra.end() && it->is_string() && !it->get<std::string>().empty()) {
    return it->get<std::string>();
  }
  return render_response_skeleton(GuardrailVerdict::for_category(r.label));
}

}  // namespace safelens
