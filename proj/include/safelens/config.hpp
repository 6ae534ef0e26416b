#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "safelens/cascade.hpp"
#include "safelens/curation.hpp"
#include "safelens/manifest.hpp"

namespace safelens {

/// One backend entry: {"type", "model_id", "cost": {...}} plus type-specific
/// fields (tokens, dim, seed, accuracy, endpoint).
struct BackendSpec {
  std::string type;
  std::string model_id;
  CostModel cost;
  nlohmann::json options = nlohmann::json::object();
};

struct RunConfig {
  std::optional<BackendSpec> embedder;
  std::optional<BackendSpec> captioner;
  std::optional<BackendSpec> reasoner;
  std::optional<BackendSpec> cot_generator;

  CascadeConfig cascade;
  ProbeTrainConfig probe_training;
  double probe_subset_fraction = 0.5;
  std::optional<std::filesystem::path> probe_path;

  std::optional<std::filesystem::path> train_manifest;
  std::optional<std::filesystem::path> val_manifest;
  std::optional<std::filesystem::path> manifest;
  std::optional<std::filesystem::path> out_dir;

  std::uint64_t seed = 0;
  double timeout_seconds = 30.0;
  std::size_t threads = 0;

  /// Throws ConfigError on invalid values.
  void validate() const;
};

/// Sections: backends, cascade, probe, paths, plus top-level seed, timeout_seconds
/// and threads. Unknown keys are rejected; relative paths resolve against
/// `base_dir`.
RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

/// Throws ConfigError when `path` does not exist; `what` names the setting.
void require_existing(const std::filesystem::path& path, const std::string& what);

/// Backend instances for a config. Table-driven mocks ("manifest" embedder,
/// "oracle" reasoner) read their per-video data from `context`.
struct BackendSet {
  std::shared_ptr<Embedder> embedder;
  std::shared_ptr<Captioner> captioner;
  std::shared_ptr<Reasoner> reasoner;
  std::shared_ptr<Reasoner> cot_generator;
};

/// Supported types: embedder hash|manifest|remote, captioner mock|remote,
/// reasoner oracle|garbage|remote, cot_generator echo|remote.
BackendSet make_backends(const RunConfig& cfg, const Manifest* context = nullptr);

}  // namespace safelens
