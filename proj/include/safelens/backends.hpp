#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "safelens/category.hpp"

namespace safelens {

enum class BackendKind { embedder, captioner, reasoner };
std::string_view to_string(BackendKind k) noexcept;

/// Declared per-call cost. Seconds and GFLOPs are configured, not measured.
struct CostModel {
  double fixed_seconds = 0.0;
  double per_frame_seconds = 0.0;
  double fixed_gflops = 0.0;
  double per_frame_gflops = 0.0;

  /// Throws ConfigError on negative or non-finite fields.
  void validate() const;
};

struct BackendDescriptor {
  BackendKind kind = BackendKind::embedder;
  std::string model_id;
  CostModel cost;

  void validate() const;
};

/// One component's share of a decision's cost.
struct CostEntry {
  std::string component;
  std::string model_id;
  std::size_t calls = 0;
  double seconds = 0.0;
  double gflops = 0.0;
};

/// fixed + per_frame * frames for one call.
CostEntry call_cost(const BackendDescriptor& desc, std::size_t frames);

/// Accumulated cost; totals always equal the sum of the breakdown.
class CostRecord {
 public:
  /// Merges into an existing entry with the same component and model id.
  void add(const CostEntry& entry);
  void merge(const CostRecord& other);

  [[nodiscard]] double seconds() const noexcept { return seconds_; }
  [[nodiscard]] double gflops() const noexcept { return gflops_; }
  [[nodiscard]] const std::vector<CostEntry>& breakdown() const noexcept { return breakdown_; }
  [[nodiscard]] const CostEntry* find(std::string_view component) const;

 private:
  double seconds_ = 0.0;
  double gflops_ = 0.0;
  std::vector<CostEntry> breakdown_;
};

inline constexpr int kFrameSide = 384;

/// Ordered frame references of one video. `source` identifies the video (its
/// media URI, or the sample id when there is none).
struct FrameSet {
  std::string source;
  std::vector<std::string> frames;
  double sample_fps = 1.0;
  int image_side = kFrameSide;
};

/// Picks T = clamp(floor(duration * 1 fps), 2, 20) frame indices (never more
/// than are available), evenly spaced over the video, and names them
/// "<source>#frame=<index>". The lower clamp can push the rate above 1 fps
/// for clips shorter than two seconds.
///
/// Throws DataError for a non-positive duration or fewer than two frames.
FrameSet sample_frames(double duration_seconds, std::size_t frame_count_available,
                       std::string source = {});

/// Indices chosen by sample_frames, exposed for testing.
std::vector<std::size_t> sample_frame_indices(double duration_seconds,
                                              std::size_t frame_count_available);

class Embedder {
 public:
  virtual ~Embedder() = default;
  [[nodiscard]] virtual const BackendDescriptor& descriptor() const = 0;
  /// Final-layer hidden states of the embedding model on (video, prompt).
  virtual HiddenStates embed(const FrameSet& video, std::string_view prompt) = 0;
};

class Captioner {
 public:
  virtual ~Captioner() = default;
  [[nodiscard]] virtual const BackendDescriptor& descriptor() const = 0;
  virtual std::string caption(std::string_view frame_ref) = 0;
};

class Reasoner {
 public:
  virtual ~Reasoner() = default;
  [[nodiscard]] virtual const BackendDescriptor& descriptor() const = 0;
  virtual std::string complete(std::string_view prompt, const std::optional<FrameSet>& media) = 0;
};

/// Captions every frame, possibly concurrently; results keep frame order.
std::vector<std::string> caption_frames(Captioner& captioner, const FrameSet& frames,
                                        bool concurrent = true);

// ---- deterministic mocks ----

/// Gaussian hidden states seeded by a hash of (seed, frames, prompt).
class HashEmbedder final : public Embedder {
 public:
  HashEmbedder(BackendDescriptor desc, std::size_t tokens, std::size_t dim, std::uint64_t seed);
  const BackendDescriptor& descriptor() const override { return desc_; }
  HiddenStates embed(const FrameSet& video, std::string_view prompt) override;

 private:
  BackendDescriptor desc_;
  std::size_t tokens_;
  std::size_t dim_;
  std::uint64_t seed_;
};

/// Returns stored hidden states keyed by FrameSet::source.
class TableEmbedder final : public Embedder {
 public:
  TableEmbedder(BackendDescriptor desc, std::map<std::string, HiddenStates, std::less<>> table);
  const BackendDescriptor& descriptor() const override { return desc_; }
  HiddenStates embed(const FrameSet& video, std::string_view prompt) override;

 private:
  BackendDescriptor desc_;
  std::map<std::string, HiddenStates, std::less<>> table_;
};

/// caption(k) == "mock caption for frame k".
class MockCaptioner final : public Captioner {
 public:
  explicit MockCaptioner(BackendDescriptor desc) : desc_(std::move(desc)) {}
  const BackendDescriptor& descriptor() const override { return desc_; }
  std::string caption(std::string_view frame_ref) override;

 private:
  BackendDescriptor desc_;
};

/// Answers with the gold label of the video (looked up by FrameSet::source)
/// with probability `accuracy`, and with a different, hash-chosen class
/// otherwise. The outcome is a pure function of (seed, source).
class OracleReasoner final : public Reasoner {
 public:
  OracleReasoner(BackendDescriptor desc, std::map<std::string, Category, std::less<>> gold,
                 double accuracy = 1.0, std::uint64_t seed = 0);
  const BackendDescriptor& descriptor() const override { return desc_; }
  std::string complete(std::string_view prompt, const std::optional<FrameSet>& media) override;

  /// The class the oracle answers for `source`.
  [[nodiscard]] Category answer_for(std::string_view source) const;

 private:
  BackendDescriptor desc_;
  std::map<std::string, Category, std::less<>> gold_;
  double accuracy_;
  std::uint64_t seed_;
};

/// Replies with text that never parses as a guardrail verdict.
class GarbageReasoner final : public Reasoner {
 public:
  explicit GarbageReasoner(BackendDescriptor desc) : desc_(std::move(desc)) {}
  const BackendDescriptor& descriptor() const override { return desc_; }
  std::string complete(std::string_view prompt, const std::optional<FrameSet>& media) override;

 private:
  BackendDescriptor desc_;
};

/// Stand-in CoT generator: reads the original response after the
/// ORIGINAL_RESPONSE marker of a CoT request and rewrites it with a reasoning
/// line, keeping its GUARDRAIL line verbatim.
class EchoCotGenerator final : public Reasoner {
 public:
  explicit EchoCotGenerator(BackendDescriptor desc) : desc_(std::move(desc)) {}
  const BackendDescriptor& descriptor() const override { return desc_; }
  std::string complete(std::string_view prompt, const std::optional<FrameSet>& media) override;

 private:
  BackendDescriptor desc_;
};

}  // namespace safelens
