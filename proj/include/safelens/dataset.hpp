#pragma once

#include <string>

#include "safelens/backends.hpp"
#include "safelens/influence.hpp"
#include "safelens/manifest.hpp"

namespace safelens {

/// Manifest extension keys read by the pipeline.
namespace extra_keys {
inline constexpr const char* kDuration = "duration_seconds";
inline constexpr const char* kFrameCount = "frame_count";
inline constexpr const char* kValidTokens = "embedding_valid_tokens";
inline constexpr const char* kCheckpoint = "checkpoint_id";
inline constexpr const char* kResponse = "response";
}  // namespace extra_keys

inline constexpr const char* kDefaultCheckpoint = "default";

/// The key used to look a record up in per-video tables: its media URI, or its
/// id when it has none.
std::string media_key(const SampleRecord& r);

/// Frames of a record: its listed frame URIs when present, otherwise a
/// uniform sample driven by the duration_seconds and frame_count extras.
/// Throws DataError naming the record when neither is available.
FrameSet frames_for(const SampleRecord& r);

/// Reads the [n, d] tensor behind embedding_ref. When the record carries
/// embedding_valid_tokens = k, only the last k rows are marked real.
HiddenStates load_hidden_states(const Manifest& m, const SampleRecord& r);

/// Reads the rank-1 tensor behind gradient_ref, tagged with the record id and
/// its checkpoint_id extra.
GradientVector load_gradient(const Manifest& m, const SampleRecord& r);

/// Gradients of every record, labelled; errors name the record.
std::vector<LabeledGradient> load_gradients(const Manifest& m);

/// The stored ground-truth response, or a skeleton verdict for the label.
std::string original_response(const SampleRecord& r);

}  // namespace safelens
