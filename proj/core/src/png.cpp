#include "biometaphor/png.hpp"

#include <zlib.h>

#include <cstring>

#include "biometaphor/errors.hpp"

namespace biometaphor {

namespace {

void put_u32_be(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
}

std::uint32_t read_u32_be(const std::uint8_t* p) {
    return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
           (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

void write_chunk(std::vector<std::uint8_t>& out, const char type[4],
                 const std::vector<std::uint8_t>& payload) {
    put_u32_be(out, static_cast<std::uint32_t>(payload.size()));
    const size_t crc_start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), payload.begin(), payload.end());
    const uLong crc = crc32(0L, out.data() + crc_start, static_cast<uInt>(out.size() - crc_start));
    put_u32_be(out, static_cast<std::uint32_t>(crc));
}

constexpr std::uint8_t kPngSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};

}  // namespace

std::vector<std::uint8_t> png_encode_rgb(const std::vector<std::uint8_t>& rgb,
                                         int width, int height) {
    if (width <= 0 || height <= 0) {
        throw ValidationError("png dimensions must be positive");
    }
    const size_t expected = static_cast<size_t>(width) * static_cast<size_t>(height) * 3;
    if (rgb.size() != expected) {
        throw ValidationError("pixel buffer size does not match dimensions");
    }

    // Raw scanlines, filter byte 0 per row.
    std::vector<std::uint8_t> raw;
    raw.reserve(expected + static_cast<size_t>(height));
    const size_t stride = static_cast<size_t>(width) * 3;
    for (int y = 0; y < height; ++y) {
        raw.push_back(0);
        const auto* row = rgb.data() + static_cast<size_t>(y) * stride;
        raw.insert(raw.end(), row, row + stride);
    }

    uLongf comp_size = compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> compressed(comp_size);
    if (compress2(compressed.data(), &comp_size, raw.data(), static_cast<uLong>(raw.size()),
                  Z_BEST_SPEED) != Z_OK) {
        throw Error("zlib compression failed");
    }
    compressed.resize(comp_size);

    std::vector<std::uint8_t> ihdr;
    put_u32_be(ihdr, static_cast<std::uint32_t>(width));
    put_u32_be(ihdr, static_cast<std::uint32_t>(height));
    ihdr.push_back(8);   // bit depth
    ihdr.push_back(2);   // color type: truecolor
    ihdr.push_back(0);   // compression
    ihdr.push_back(0);   // filter
    ihdr.push_back(0);   // interlace

    std::vector<std::uint8_t> out;
    out.insert(out.end(), kPngSignature, kPngSignature + 8);
    write_chunk(out, "IHDR", ihdr);
    write_chunk(out, "IDAT", compressed);
    write_chunk(out, "IEND", {});
    return out;
}

std::optional<std::string> sniff_image_format(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSignature, 8) == 0) {
        return "png";
    }
    if (bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF) {
        return "jpeg";
    }
    return std::nullopt;
}

ImageDims image_dims(const std::vector<std::uint8_t>& bytes) {
    auto fmt = sniff_image_format(bytes);
    if (!fmt) {
        throw DecodeError("unrecognized image container");
    }
    if (*fmt == "png") {
        // Signature (8) + IHDR length/type (8) + width/height (8).
        if (bytes.size() < 24) {
            throw DecodeError("truncated PNG header");
        }
        if (std::memcmp(bytes.data() + 12, "IHDR", 4) != 0) {
            throw DecodeError("PNG missing IHDR chunk");
        }
        ImageDims dims;
        dims.width = static_cast<int>(read_u32_be(bytes.data() + 16));
        dims.height = static_cast<int>(read_u32_be(bytes.data() + 20));
        if (dims.width <= 0 || dims.height <= 0) {
            throw DecodeError("PNG declares non-positive dimensions");
        }
        return dims;
    }
    // JPEG: walk markers until a SOF frame header.
    size_t i = 2;
    while (i + 4 <= bytes.size()) {
        if (bytes[i] != 0xFF) {
            throw DecodeError("malformed JPEG marker stream");
        }
        const std::uint8_t marker = bytes[i + 1];
        if (marker == 0xD8 || (marker >= 0xD0 && marker <= 0xD7)) {
            i += 2;
            continue;
        }
        const size_t seg_len = (static_cast<size_t>(bytes[i + 2]) << 8) | bytes[i + 3];
        const bool is_sof = (marker >= 0xC0 && marker <= 0xCF) && marker != 0xC4 &&
                            marker != 0xC8 && marker != 0xCC;
        if (is_sof) {
            if (i + 9 > bytes.size()) {
                throw DecodeError("truncated JPEG frame header");
            }
            ImageDims dims;
            dims.height = (bytes[i + 5] << 8) | bytes[i + 6];
            dims.width = (bytes[i + 7] << 8) | bytes[i + 8];
            return dims;
        }
        i += 2 + seg_len;
    }
    throw DecodeError("JPEG frame header not found");
}

}  // namespace biometaphor
