#include "safelens/service.hpp"

#include <httplib.h>

#include "safelens/error.hpp"

namespace safelens {

SampleRecord record_from_request(const nlohmann::json& body) {
  if (!body.is_object()) throw DataError("request body must be a JSON object");
  const auto frames = body.find("frames");
  if (frames == body.end() || !frames->is_array()) {
    throw DataError("request needs a 'frames' array");
  }
  SampleRecord r;
  r.split = Split::test;
  std::vector<std::string> refs;
  for (const auto& f : *frames) {
    if (!f.is_string()) throw DataError("request frames must be strings");
    refs.push_back(f.get<std::string>());
  }
  if (refs.size() < kMinFrames || refs.size() > kMaxFrames) {
    throw DataError("request must carry between 2 and 20 frames, got " +
                    std::to_string(refs.size()));
  }
  r.frame_uris = std::move(refs);
  if (const auto id = body.find("id"); id != body.end()) {
    if (!id->is_string() || id->get<std::string>().empty()) {
      throw DataError("request 'id' must be a nonempty string");
    }
    r.id = id->get<std::string>();
  } else {
    r.id = r.frame_uris->front();
  }
  if (const auto m = body.find("media_uri"); m != body.end()) {
    if (!m->is_string()) throw DataError("request 'media_uri' must be a string");
    r.media_uri = m->get<std::string>();
  }
  return r;
}

nlohmann::json classify(const Cascade& cascade, const nlohmann::json& body) {
  const Decision d = cascade.moderate(record_from_request(body));
  nlohmann::json out = to_json(d);
  nlohmann::json q = nlohmann::json::object();
  for (Category c : canonical_categories()) q[std::string(category_name(c))] = d.s1.q[c];
  out["probabilities"] = q;
  return out;
}

struct ModerationServer::Impl {
  std::shared_ptr<const Cascade> cascade;
  httplib::Server server;
};

namespace {

void reply_error(httplib::Response& res, int status, std::string_view kind, const std::string& msg) {
  res.status = status;
  res.set_content(nlohmann::json{{"error", msg}, {"kind", kind}}.dump(), "application/json");
}

}  // namespace

ModerationServer::ModerationServer(std::shared_ptr<const Cascade> cascade)
    : impl_(std::make_unique<Impl>()) {
  if (!cascade) throw ConfigError("server needs a cascade");
  impl_->cascade = std::move(cascade);
  impl_->server.Get("/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"status":"ok"})", "application/json");
  });
  impl_->server.Post("/classify", [this](const httplib::Request& req, httplib::Response& res) {
    nlohmann::json body;
    try {
      body = nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::exception& e) {
      reply_error(res, 400, "data", std::string("body is not JSON: ") + e.what());
      return;
    }
    try {
      res.set_content(classify(*impl_->cascade, body).dump(), "application/json");
    } catch (const Error& e) {
      switch (e.kind()) {
        case ErrorKind::backend: reply_error(res, 502, "backend", e.what()); break;
        case ErrorKind::data: reply_error(res, 400, "data", e.what()); break;
        case ErrorKind::usage: reply_error(res, 500, "usage", e.what()); break;
      }
    } catch (const std::exception& e) {
      reply_error(res, 500, "internal", e.what());
    }
  });
}

ModerationServer::~ModerationServer() { stop(); }

int ModerationServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw ConfigError("cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) {
    throw ConfigError("cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void ModerationServer::serve() { impl_->server.listen_after_bind(); }

void ModerationServer::stop() { impl_->server.stop(); }

}  // namespace safelens
