#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "safelens/probe.hpp"

namespace safelens {

/// Probe archive layout:
///   5 bytes  magic "SLPA1"
///   u32 LE   metadata length m
///   m bytes  UTF-8 JSON metadata (n, d, p, pooling, temperature, training)
///   three tensors in the SLVF1 layout: attention [d], classifier [p, d],
///   bias [p]
inline constexpr std::string_view kProbeMagic = "SLPA1";

std::vector<std::uint8_t> encode_probe(const ProbeModel& probe);
ProbeModel decode_probe(std::span<const std::uint8_t> bytes);

void save_probe(const ProbeModel& probe, const std::filesystem::path& path);
ProbeModel load_probe(const std::filesystem::path& path);

}  // namespace safelens
