#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "interir/tensor.hpp"

namespace interir {

/// "IIRW" container:
///   magic "IIRW" | version u32 | count u32 |
///   count x (name_len u32 | name bytes | rank u32 | dims u32... | f64 payload)
/// All integers and floats little-endian.
inline constexpr std::uint32_t kWeightsVersion = 1;

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

std::vector<std::uint8_t> encode_tensors(const NamedTensors& tensors);
/// Throws ParseError with the failing byte offset on bad magic, version,
/// rank, or truncation.
NamedTensors decode_tensors(std::span<const std::uint8_t> bytes);

void save_tensors(const NamedTensors& tensors, const std::filesystem::path& path);
NamedTensors load_tensors(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

/// FNV-1a over the encoded container, as 16 hex digits.
std::string content_hash(std::span<const std::uint8_t> bytes);

}  // namespace interir
