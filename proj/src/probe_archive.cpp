#include "safelens/probe_archive.hpp"

#include <cstring>
#include <string>

#include <json.hpp>

#include "safelens/error.hpp"
#include "safelens/tensor_io.hpp"

namespace safelens {
namespace {

nlohmann::json metadata(const ProbeModel& p) {
  const auto& t = p.training;
  nlohmann::json training = {
      {"learning_rate", t.config.learning_rate},
      {"epochs", t.config.epochs},
      {"batch_size", t.config.batch_size},
      {"seed", t.config.seed},
      {"holdout_fraction", t.config.holdout_fraction},
      {"loss_trace", t.loss_trace},
      {"train_count", t.train_count},
      {"holdout_count", t.holdout_count},
      {"holdout_accuracy", t.holdout_accuracy ? nlohmann::json(*t.holdout_accuracy)
                                              : nlohmann::json(nullptr)},
  };
  return {
      {"n", p.window},
      {"d", p.d},
      {"p", kNumCategories},
      {"pooling", "attention"},
      {"temperature", p.temperature},
      {"training", training},
  };
}

void apply_metadata(const nlohmann::json& j, ProbeModel& p) {
  if (j.at("p").get<std::size_t>() != kNumCategories) {
    throw DataError("probe archive has p != 7");
  }
  if (j.at("pooling").get<std::string>() != "attention") {
    throw DataError("unsupported probe pooling '" + j.at("pooling").get<std::string>() + "'");
  }
  p.window = j.at("n").get<std::size_t>();
  p.d = j.at("d").get<std::size_t>();
  p.temperature = j.at("temperature").get<double>();
  const auto& t = j.at("training");
  p.training.config.learning_rate = t.at("learning_rate").get<double>();
  p.training.config.epochs = t.at("epochs").get<std::size_t>();
  p.training.config.batch_size = t.at("batch_size").get<std::size_t>();
  p.training.config.seed = t.at("seed").get<std::uint64_t>();
  p.training.config.holdout_fraction = t.at("holdout_fraction").get<double>();
  p.training.loss_trace = t.at("loss_trace").get<std::vector<double>>();
  p.training.train_count = t.at("train_count").get<std::size_t>();
  p.training.holdout_count = t.at("holdout_count").get<std::size_t>();
  if (t.at("holdout_accuracy").is_null()) {
    p.training.holdout_accuracy.reset();
  } else {
    p.training.holdout_accuracy = t.at("holdout_accuracy").get<double>();
  }
}

}  // namespace

std::vector<std::uint8_t> encode_probe(const ProbeModel& probe) {
  probe.validate();
  const std::string meta = metadata(probe).dump();
  std::vector<std::uint8_t> out(kProbeMagic.begin(), kProbeMagic.end());
  const auto len = static_cast<std::uint32_t>(meta.size());
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(len >> (8 * i)));
  out.insert(out.end(), meta.begin(), meta.end());
  const auto d = static_cast<std::uint32_t>(probe.d);
  const auto p = static_cast<std::uint32_t>(kNumCategories);
  for (const Tensor& t : {Tensor{{d}, probe.attention_weights},
                          Tensor{{p, d}, probe.classifier_weights},
                          Tensor{{p}, probe.classifier_bias}}) {
    auto bytes = encode_tensor(t);
    out.insert(out.end(), bytes.begin(), bytes.end());
  }
  return out;
}

ProbeModel decode_probe(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kProbeMagic.size() + 4 ||
      std::memcmp(bytes.data(), kProbeMagic.data(), kProbeMagic.size()) != 0) {
    throw DataError("probe archive magic mismatch");
  }
  std::size_t offset = kProbeMagic.size();
  std::uint32_t len = 0;
  for (int i = 0; i < 4; ++i) len |= static_cast<std::uint32_t>(bytes[offset + i]) << (8 * i);
  offset += 4;
  if (bytes.size() - offset < len) throw DataError("truncated probe archive metadata");

  ProbeModel probe;
  try {
    const auto meta = nlohmann::json::parse(bytes.begin() + static_cast<std::ptrdiff_t>(offset),
                                            bytes.begin() + static_cast<std::ptrdiff_t>(offset + len));
    apply_metadata(meta, probe);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad probe archive metadata: ") + e.what());
  }
  offset += len;
  probe.attention_weights = decode_tensor(bytes, offset).values;
  probe.classifier_weights = decode_tensor(bytes, offset).values;
  probe.classifier_bias = decode_tensor(bytes, offset).values;
  if (offset != bytes.size()) throw DataError("trailing bytes after probe archive");
  probe.validate();
  return probe;
}

void save_probe(const ProbeModel& probe, const std::filesystem::path& path) {
  write_file_bytes(path, encode_probe(probe));
}

ProbeModel load_probe(const std::filesystem::path& path) {
  try {
    return decode_probe(read_file_bytes(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace safelens
