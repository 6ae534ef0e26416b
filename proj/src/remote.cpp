#include "safelens/remote.hpp"

#include <cmath>
#include <cstdlib>

#include <httplib.h>

#include "safelens/error.hpp"
#include "safelens/tensor_io.hpp"

namespace safelens {
namespace {

struct Endpoint {
  std::string scheme_host_port;
  std::string path_prefix;
};

Endpoint split_endpoint(const std::string& url) {
  const auto scheme = url.find("://");
  const auto path_start = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  if (path_start == std::string::npos) return {url, ""};
  std::string prefix = url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {url.substr(0, path_start), prefix};
}

template <typename Client>
void apply_timeouts(Client& client, double seconds) {
  const auto whole = static_cast<time_t>(std::floor(seconds));
  const auto micros = static_cast<time_t>((seconds - std::floor(seconds)) * 1e6);
  client.set_connection_timeout(whole, micros);
  client.set_read_timeout(whole, micros);
  client.set_write_timeout(whole, micros);
}

}  // namespace

RemoteSettings RemoteSettings::from_environment() {
  RemoteSettings s;
  if (const char* e = std::getenv("SAFELENS_ENDPOINT")) s.endpoint = e;
  if (const char* t = std::getenv("SAFELENS_API_TOKEN")) s.token = t;
  return s;
}

RemoteClient::RemoteClient(RemoteSettings settings) : settings_(std::move(settings)) {
  if (settings_.endpoint.empty()) {
    throw ConfigError("remote backend needs an endpoint (set SAFELENS_ENDPOINT)");
  }
  if (!(settings_.timeout_seconds > 0.0)) throw ConfigError("remote timeout must be positive");
}

RemoteClient::~RemoteClient() = default;

nlohmann::json RemoteClient::post(const std::string& route, const std::string& model,
                                  const std::string& prompt,
                                  const std::vector<std::string>& frames) {
  const Endpoint ep = split_endpoint(settings_.endpoint);
  httplib::Client client(ep.scheme_host_port);
  if (!client.is_valid()) throw TransportError("invalid endpoint '" + settings_.endpoint + "'");
  apply_timeouts(client, settings_.timeout_seconds);
  if (!settings_.token.empty()) client.set_bearer_token_auth(settings_.token);

  const nlohmann::json request = {{"model", model}, {"prompt", prompt}, {"frames", frames}};
  const std::string path = ep.path_prefix + route;
  const auto started = std::chrono::steady_clock::now();
  auto result = client.Post(path, request.dump(), "application/json");
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  if (!result) {
    const auto err = result.error();
    const std::string what = path + ": " + httplib::to_string(err);
    const bool timed_out =
        err == httplib::Error::ConnectionTimeout ||
        ((err == httplib::Error::Read || err == httplib::Error::Write) &&
         elapsed >= 0.9 * settings_.timeout_seconds);
    if (timed_out) {
      throw TimeoutError(what + " (budget " + std::to_string(settings_.timeout_seconds) + " s)",
                         settings_.timeout_seconds);
    }
    throw TransportError(what);
  }
  if (result->status != 200) {
    throw ProtocolError(path + ": HTTP status " + std::to_string(result->status));
  }
  try {
    auto body = nlohmann::json::parse(result->body);
    if (!body.is_object()) throw ProtocolError(path + ": response is not a JSON object");
    return body;
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(path + ": response is not JSON: " + e.what());
  }
}

std::string require_string_field(const nlohmann::json& body, const char* field) {
  auto it = body.find(field);
  if (it == body.end() || !it->is_string()) {
    throw ProtocolError(std::string("response lacks string field '") + field + "'");
  }
  return it->get<std::string>();
}

HiddenStates RemoteEmbedder::embed(const FrameSet& video, std::string_view prompt) {
  const auto body = client_->post("/v1/embed", desc_.model_id, std::string(prompt), video.frames);
  std::string ref = require_string_field(body, "tensor_ref");
  if (ref.starts_with("file://")) ref.erase(0, 7);
  Tensor t;
  try {
    t = read_tensor(ref);
  } catch (const DataError& e) {
    throw ProtocolError(std::string("embedder tensor_ref unreadable: ") + e.what());
  }
  if (t.dims.size() != 2 || t.dims[0] == 0 || t.dims[1] == 0) {
    throw ProtocolError("embedder tensor must have shape [n, d] with n, d > 0");
  }
  return HiddenStates::dense(t.dims[0], t.dims[1], std::move(t.values));
}

std::string RemoteCaptioner::caption(std::string_view frame_ref) {
  const auto body = client_->post("/v1/caption", desc_.model_id,
                                  "Describe this video frame in detail.",
                                  {std::string(frame_ref)});
  auto text = require_string_field(body, "text");
  if (text.empty()) throw ProtocolError("captioner returned an empty caption");
  return text;
}

std::string RemoteReasoner::complete(std::string_view prompt,
                                     const std::optional<FrameSet>& media) {
  const auto body = client_->post("/v1/complete", desc_.model_id, std::string(prompt),
                                  media ? media->frames : std::vector<std::string>{});
  return require_string_field(body, "text");
}

}  // namespace safelens
