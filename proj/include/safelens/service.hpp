#pragma once

#include <memory>
#include <string>

#include <json.hpp>

#include "safelens/cascade.hpp"

namespace safelens {

/// Builds the record a classify request describes. The body follows the
/// remote request shape {"model", "prompt", "frames"} and may add "id" and
/// "media_uri". The id defaults to the first frame reference.
/// Throws DataError on a malformed body.
SampleRecord record_from_request(const nlohmann::json& body);

/// Decision fields plus the screening probabilities.
nlohmann::json classify(const Cascade& cascade, const nlohmann::json& body);

/// HTTP front end: POST /classify and GET /health. Requests are served
/// concurrently.
class ModerationServer {
 public:
  explicit ModerationServer(std::shared_ptr<const Cascade> cascade);
  ~ModerationServer();
  ModerationServer(const ModerationServer&) = delete;
  ModerationServer& operator=(const ModerationServer&) = delete;

  /// Binds `host`; port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  /// Blocks until stop() is called.
  void serve();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace safelens
