#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace biometaphor {

/// SHA-256 digest as 32 raw bytes.
std::vector<std::uint8_t> sha256(std::string_view data);

/// SHA-256 digest as a lowercase hex string.
std::string sha256_hex(std::string_view data);

/// First 8 digest bytes interpreted as a big-endian unsigned integer.
/// Used to derive per-cell seeds from a global seed and a cell key.
std::uint64_t sha256_prefix_u64(std::string_view data);

}  // namespace biometaphor
