#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "safelens/backends.hpp"

namespace safelens {

inline constexpr double kDefaultTimeoutSeconds = 30.0;

struct RemoteSettings {
  /// Base URL, e.g. "http://127.0.0.1:8080".
  std::string endpoint;
  /// Sent as "Authorization: Bearer <token>" when nonempty.
  std::string token;
  double timeout_seconds = kDefaultTimeoutSeconds;

  /// endpoint from SAFELENS_ENDPOINT, token from SAFELENS_API_TOKEN.
  static RemoteSettings from_environment();
};

/// JSON request/response client for inference endpoints. Every failure is
/// reported as exactly one of TransportError, ProtocolError, or TimeoutError.
///
/// Request body: {"model": string, "prompt": string, "frames": [string]}.
/// Routes: /v1/embed -> {"tensor_ref": string}; /v1/caption and
/// /v1/complete -> {"text": string}.
class RemoteClient {
 public:
  explicit RemoteClient(RemoteSettings settings);
  ~RemoteClient();
  RemoteClient(const RemoteClient&) = delete;
  RemoteClient& operator=(const RemoteClient&) = delete;

  nlohmann::json post(const std::string& route, const std::string& model,
                      const std::string& prompt, const std::vector<std::string>& frames);

  [[nodiscard]] const RemoteSettings& settings() const noexcept { return settings_; }

 private:
  RemoteSettings settings_;
};

/// Reads a string field or throws ProtocolError.
std::string require_string_field(const nlohmann::json& body, const char* field);

class RemoteEmbedder final : public Embedder {
 public:
  RemoteEmbedder(BackendDescriptor desc, std::shared_ptr<RemoteClient> client)
      : desc_(std::move(desc)), client_(std::move(client)) {}
  const BackendDescriptor& descriptor() const override { return desc_; }
  /// Loads the [n, d] tensor named by "tensor_ref" (a path or file:// URI).
  HiddenStates embed(const FrameSet& video, std::string_view prompt) override;

 private:
  BackendDescriptor desc_;
  std::shared_ptr<RemoteClient> client_;
};

class RemoteCaptioner final : public Captioner {
 public:
  RemoteCaptioner(BackendDescriptor desc, std::shared_ptr<RemoteClient> client)
      : desc_(std::move(desc)), client_(std::move(client)) {}
  const BackendDescriptor& descriptor() const override { return desc_; }
  std::string caption(std::string_view frame_ref) override;

 private:
  BackendDescriptor desc_;
  std::shared_ptr<RemoteClient> client_;
};

class RemoteReasoner final : public Reasoner {
 public:
  RemoteReasoner(BackendDescriptor desc, std::shared_ptr<RemoteClient> client)
      : desc_(std::move(desc)), client_(std::move(client)) {}
  const BackendDescriptor& descriptor() const override { return desc_; }
  std::string complete(std::string_view prompt, const std::optional<FrameSet>& media) override;

 private:
  BackendDescriptor desc_;
  std::shared_ptr<RemoteClient> client_;
};

}  // namespace safelens
