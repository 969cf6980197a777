#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace biometaphor {

/// Standard-alphabet base64 with '=' padding.
std::string base64_encode(const std::vector<std::uint8_t>& data);
std::string base64_encode(std::string_view data);

/// Throws DecodeError naming the offset of the first illegal character.
std::vector<std::uint8_t> base64_decode(std::string_view text);

}  // namespace biometaphor
