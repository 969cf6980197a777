#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace biometaphor {

struct ImageDims {
    int width = 0;
    int height = 0;
};

/// Encode 8-bit RGB pixels (row-major, 3 bytes per pixel) as a PNG stream.
std::vector<std::uint8_t> png_encode_rgb(const std::vector<std::uint8_t>& rgb,
                                         int width, int height);

/// Parse the dimensions of a PNG or JPEG stream without full decoding.
/// Throws DecodeError for unrecognized or truncated containers.
ImageDims image_dims(const std::vector<std::uint8_t>& bytes);

/// "png" or "jpeg" by magic bytes, nullopt otherwise.
std::optional<std::string> sniff_image_format(const std::vector<std::uint8_t>& bytes);

}  // namespace biometaphor
