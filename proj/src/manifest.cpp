#include "safelens/manifest.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "safelens/error.hpp"

namespace safelens {
namespace {

constexpr std::string_view kKnownKeys[] = {
    "id",           "split",         "label",         "media_uri",     "frame_uris",
    "captions",     "embedding_ref", "gradient_ref",  "prompt_variant",
};

bool is_known_key(std::string_view key) {
  for (auto k : kKnownKeys) {
    if (k == key) return true;
  }
  return false;
}

const nlohmann::json& require(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw DataError(std::string("missing field '") + key + "'");
  return *it;
}

std::string get_string(const nlohmann::json& v, const char* key) {
  if (!v.is_string()) throw DataError(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

std::optional<std::string> optional_string(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return get_string(*it, key);
}

std::optional<std::vector<std::string>> optional_strings(const nlohmann::json& j,
                                                         const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_array()) throw DataError(std::string("field '") + key + "' must be an array");
  std::vector<std::string> out;
  out.reserve(it->size());
  for (const auto& v : *it) out.push_back(get_string(v, key));
  return out;
}

}  // namespace

std::string_view to_string(Split s) noexcept {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "train";
}

std::string_view to_string(PromptVariant v) noexcept {
  switch (v) {
    case PromptVariant::baseline: return "baseline";
    case PromptVariant::s1: return "s1";
    case PromptVariant::s2: return "s2";
  }
  return "baseline";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::train;
  if (text == "val") return Split::val;
  if (text == "test") return Split::test;
  throw DataError("unknown split '" + std::string(text) + "'");
}

PromptVariant parse_prompt_variant(std::string_view text) {
  if (text == "baseline") return PromptVariant::baseline;
  if (text == "s1") return PromptVariant::s1;
  if (text == "s2") return PromptVariant::s2;
  throw DataError("unknown prompt variant '" + std::string(text) + "'");
}

nlohmann::json to_json(const SampleRecord& r) {
  nlohmann::json j = r.extra.is_object() ? r.extra : nlohmann::json::object();
  j["id"] = r.id;
  j["split"] = to_string(r.split);
  j["label"] = category_name(r.label);
  if (r.media_uri) j["media_uri"] = *r.media_uri;
  if (r.frame_uris) j["frame_uris"] = *r.frame_uris;
  if (r.captions) j["captions"] = *r.captions;
  if (r.embedding_ref) j["embedding_ref"] = *r.embedding_ref;
  if (r.gradient_ref) j["gradient_ref"] = *r.gradient_ref;
  j["prompt_variant"] = to_string(r.prompt_variant);
  return j;
}

SampleRecord record_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw DataError("record must be a JSON object");
  SampleRecord r;
  r.id = get_string(require(j, "id"), "id");
  if (r.id.empty()) throw DataError("field 'id' must be nonempty");
  r.split = parse_split(get_string(require(j, "split"), "split"));
  r.label = parse_category(get_string(require(j, "label"), "label"));
  r.media_uri = optional_string(j, "media_uri");
  r.frame_uris = optional_strings(j, "frame_uris");
  if (r.frame_uris &&
      (r.frame_uris->size() < kMinFrames || r.frame_uris->size() > kMaxFrames)) {
    throw DataError("record '" + r.id + "' lists " + std::to_string(r.frame_uris->size()) +
                    " frames; expected between 2 and 20");
  }
  r.captions = optional_strings(j, "captions");
  r.embedding_ref = optional_string(j, "embedding_ref");
  r.gradient_ref = optional_string(j, "gradient_ref");
  if (auto v = optional_string(j, "prompt_variant")) {
    r.prompt_variant = parse_prompt_variant(*v);
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!is_known_key(it.key())) r.extra[it.key()] = it.value();
  }
  return r;
}

std::filesystem::path Manifest::resolve(const std::string& ref) const {
  std::string_view view = ref;
  if (view.starts_with("file://")) view.remove_prefix(7);
  std::filesystem::path p{std::string(view)};
  if (p.is_relative() && !base_dir.empty()) return base_dir / p;
  return p;
}

const SampleRecord* Manifest::find(std::string_view id) const {
  for (const auto& r : records) {
    if (r.id == id) return &r;
  }
  return nullptr;
}

Manifest parse_manifest(std::string_view text) {
  Manifest m;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    SampleRecord r;
    try {
      r = record_from_json(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw DataError("manifest line " + std::to_string(line_no) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError("manifest line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!seen.insert(r.id).second) {
      throw DataError("manifest line " + std::to_string(line_no) + ": duplicate id '" +
                      r.id + "'");
    }
    m.records.push_back(std::move(r));
  }
  return m;
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open manifest " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  Manifest m;
  try {
    m = parse_manifest(buf.str());
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  m.base_dir = path.parent_path();
  return m;
}

std::string format_manifest(const Manifest& m) {
  std::string out;
  for (const auto& r : m.records) {
    out += to_json(r).dump();
    out += '\n';
  }
  return out;
}

void write_manifest(const Manifest& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write manifest " + path.string());
  out << format_manifest(m);
  if (!out) throw DataError("write failed for " + path.string());
}

}  // namespace safelens
