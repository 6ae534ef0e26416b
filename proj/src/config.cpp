#include "safelens/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "safelens/dataset.hpp"
#include "safelens/error.hpp"
#include "safelens/remote.hpp"

namespace safelens {
namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& allowed,
                    const std::string& section) {
  if (!j.is_object()) throw ConfigError("config section '" + section + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) {
      throw ConfigError("unknown config key '" + (section.empty() ? key : section + "." + key) +
                        "'");
    }
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback, const std::string& section) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + section + "." + key + "' has the wrong type");
  }
}

std::optional<std::filesystem::path> get_path(const json& j, const char* key,
                                              const std::filesystem::path& base,
                                              const std::string& section) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw ConfigError("config key '" + section + "." + key + "' must be a path");
  std::filesystem::path p = it->get<std::string>();
  return p.is_relative() && !base.empty() ? base / p : p;
}

BackendSpec parse_backend(const json& j, const std::string& name) {
  const std::string section = "backends." + name;
  if (!j.is_object()) throw ConfigError("config section '" + section + "' must be an object");
  BackendSpec spec;
  spec.type = get_or<std::string>(j, "type", "", section);
  if (spec.type.empty()) throw ConfigError("config key '" + section + ".type' is required");
  spec.model_id = get_or<std::string>(j, "model_id", spec.type, section);
  if (const auto c = j.find("cost"); c != j.end()) {
    reject_unknown(*c, {"fixed_seconds", "per_frame_seconds", "fixed_gflops", "per_frame_gflops"},
                   section + ".cost");
    spec.cost.fixed_seconds = get_or<double>(*c, "fixed_seconds", 0.0, section + ".cost");
    spec.cost.per_frame_seconds = get_or<double>(*c, "per_frame_seconds", 0.0, section + ".cost");
    spec.cost.fixed_gflops = get_or<double>(*c, "fixed_gflops", 0.0, section + ".cost");
    spec.cost.per_frame_gflops = get_or<double>(*c, "per_frame_gflops", 0.0, section + ".cost");
  }
  static const std::set<std::string> kOptionKeys = {"tokens", "dim", "seed", "accuracy", "endpoint"};
  for (const auto& [key, value] : j.items()) {
    if (key == "type" || key == "model_id" || key == "cost") continue;
    if (!kOptionKeys.contains(key)) {
      throw ConfigError("unknown config key '" + section + "." + key + "'");
    }
    spec.options[key] = value;
  }
  spec.cost.validate();
  return spec;
}

}  // namespace

void RunConfig::validate() const {
  cascade.validate();
  probe_training.validate();
  if (!(probe_subset_fraction > 0.0 && probe_subset_fraction <= 1.0)) {
    throw ConfigError("probe.subset_fraction must lie in (0, 1]");
  }
  if (!(timeout_seconds > 0.0) || !std::isfinite(timeout_seconds)) {
    throw ConfigError("timeout_seconds must be positive");
  }
}

RunConfig parse_run_config(const json& j, const std::filesystem::path& base_dir) {
  reject_unknown(j, {"backends", "cascade", "probe", "paths", "seed", "timeout_seconds", "threads"},
                 "");
  RunConfig cfg;
  cfg.seed = get_or<std::uint64_t>(j, "seed", 0, "");
  cfg.timeout_seconds = get_or<double>(j, "timeout_seconds", kDefaultTimeoutSeconds, "");
  cfg.threads = get_or<std::size_t>(j, "threads", 0, "");
  cfg.probe_training.seed = cfg.seed;

  if (const auto b = j.find("backends"); b != j.end()) {
    reject_unknown(*b, {"embedder", "captioner", "reasoner", "cot_generator"}, "backends");
    if (b->contains("embedder")) cfg.embedder = parse_backend(b->at("embedder"), "embedder");
    if (b->contains("captioner")) cfg.captioner = parse_backend(b->at("captioner"), "captioner");
    if (b->contains("reasoner")) cfg.reasoner = parse_backend(b->at("reasoner"), "reasoner");
    if (b->contains("cot_generator")) {
      cfg.cot_generator = parse_backend(b->at("cot_generator"), "cot_generator");
    }
  }
  if (const auto c = j.find("cascade"); c != j.end()) {
    reject_unknown(*c,
                   {"tau", "fallback_on_malformed", "retry_s2", "probe_seconds", "probe_gflops",
                    "screen_variant"},
                   "cascade");
    cfg.cascade.tau = get_or<double>(*c, "tau", kDefaultTau, "cascade");
    cfg.cascade.fallback_on_malformed = parse_malformed_policy(
        get_or<std::string>(*c, "fallback_on_malformed", "use_s1", "cascade"));
    cfg.cascade.retry_s2 = get_or<std::size_t>(*c, "retry_s2", 0, "cascade");
    cfg.cascade.probe_seconds = get_or<double>(*c, "probe_seconds", kProbeSeconds, "cascade");
    cfg.cascade.probe_gflops = get_or<double>(*c, "probe_gflops", 0.0, "cascade");
    try {
      cfg.cascade.screen_variant =
          parse_prompt_variant(get_or<std::string>(*c, "screen_variant", "s1", "cascade"));
    } catch (const DataError& e) {
      throw ConfigError(std::string("cascade.screen_variant: ") + e.what());
    }
  }
  if (const auto p = j.find("probe"); p != j.end()) {
    reject_unknown(*p,
                   {"path", "learning_rate", "epochs", "batch_size", "seed", "holdout_fraction",
                    "subset_fraction"},
                   "probe");
    cfg.probe_path = get_path(*p, "path", base_dir, "probe");
    auto& t = cfg.probe_training;
    t.learning_rate = get_or<double>(*p, "learning_rate", t.learning_rate, "probe");
    t.epochs = get_or<std::size_t>(*p, "epochs", t.epochs, "probe");
    t.batch_size = get_or<std::size_t>(*p, "batch_size", t.batch_size, "probe");
    t.seed = get_or<std::uint64_t>(*p, "seed", t.seed, "probe");
    t.holdout_fraction = get_or<double>(*p, "holdout_fraction", t.holdout_fraction, "probe");
    cfg.probe_subset_fraction =
        get_or<double>(*p, "subset_fraction", cfg.probe_subset_fraction, "probe");
  }
  if (const auto p = j.find("paths"); p != j.end()) {
    reject_unknown(*p, {"train", "val", "manifest", "out"}, "paths");
    cfg.train_manifest = get_path(*p, "train", base_dir, "paths");
    cfg.val_manifest = get_path(*p, "val", base_dir, "paths");
    cfg.manifest = get_path(*p, "manifest", base_dir, "paths");
    cfg.out_dir = get_path(*p, "out", base_dir, "paths");
  }
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_run_config(j, path.parent_path());
}

void require_existing(const std::filesystem::path& path, const std::string& what) {
  if (!std::filesystem::exists(path)) {
    throw ConfigError(what + " '" + path.string() + "' does not exist");
  }
}

namespace {

BackendDescriptor descriptor_of(const BackendSpec& spec, BackendKind kind) {
  BackendDescriptor d{kind, spec.model_id, spec.cost};
  d.validate();
  return d;
}

std::shared_ptr<RemoteClient> remote_client(const RunConfig& cfg, const BackendSpec& spec) {
  RemoteSettings s = RemoteSettings::from_environment();
  if (spec.options.contains("endpoint")) s.endpoint = spec.options.at("endpoint").get<std::string>();
  s.timeout_seconds = cfg.timeout_seconds;
  return std::make_shared<RemoteClient>(std::move(s));
}

const Manifest& need_context(const Manifest* m, const std::string& what) {
  if (!m) throw ConfigError(what + " needs a manifest to read from");
  return *m;
}

template <typename T>
T option(const BackendSpec& spec, const char* key, T fallback) {
  const auto it = spec.options.find(key);
  if (it == spec.options.end()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError("backend option '" + std::string(key) + "' has the wrong type");
  }
}

}  // namespace

BackendSet make_backends(const RunConfig& cfg, const Manifest* context) {
  BackendSet set;
  if (cfg.embedder) {
    const auto& s = *cfg.embedder;
    auto desc = descriptor_of(s, BackendKind::embedder);
    if (s.type == "hash") {
      set.embedder = std::make_shared<HashEmbedder>(
          desc, option<std::size_t>(s, "tokens", 8), option<std::size_t>(s, "dim", 32),
          option<std::uint64_t>(s, "seed", cfg.seed));
    } else if (s.type == "manifest") {
      const Manifest& m = need_context(context, "the manifest embedder");
      std::map<std::string, HiddenStates, std::less<>> table;
      for (const auto& r : m.records) table.emplace(media_key(r), load_hidden_states(m, r));
      set.embedder = std::make_shared<TableEmbedder>(desc, std::move(table));
    } else if (s.type == "remote") {
      set.embedder = std::make_shared<RemoteEmbedder>(desc, remote_client(cfg, s));
    } else {
      throw ConfigError("unknown embedder type '" + s.type + "'");
    }
  }
  if (cfg.captioner) {
    const auto& s = *cfg.captioner;
    auto desc = descriptor_of(s, BackendKind::captioner);
    if (s.type == "mock") {
      set.captioner = std::make_shared<MockCaptioner>(desc);
    } else if (s.type == "remote") {
      set.captioner = std::make_shared<RemoteCaptioner>(desc, remote_client(cfg, s));
    } else {
      throw ConfigError("unknown captioner type '" + s.type + "'");
    }
  }
  auto make_reasoner = [&](const BackendSpec& s, bool generator) -> std::shared_ptr<Reasoner> {
    auto desc = descriptor_of(s, BackendKind::reasoner);
    if (s.type == "remote") return std::make_shared<RemoteReasoner>(desc, remote_client(cfg, s));
    if (generator && s.type == "echo") return std::make_shared<EchoCotGenerator>(desc);
    if (!generator && s.type == "oracle") {
      const Manifest& m = need_context(context, "the oracle reasoner");
      std::map<std::string, Category, std::less<>> gold;
      for (const auto& r : m.records) gold.emplace(media_key(r), r.label);
      return std::make_shared<OracleReasoner>(desc, std::move(gold),
                                              option<double>(s, "accuracy", 1.0),
                                              option<std::uint64_t>(s, "seed", cfg.seed));
    }
    if (!generator && s.type == "garbage") return std::make_shared<GarbageReasoner>(desc);
    throw ConfigError(std::string("unknown ") + (generator ? "cot_generator" : "reasoner") +
                      " type '" + s.type + "'");
  };
  if (cfg.reasoner) set.reasoner = make_reasoner(*cfg.reasoner, false);
  if (cfg.cot_generator) set.cot_generator = make_reasoner(*cfg.cot_generator, true);
  return set;
}

}  // namespace safelens
