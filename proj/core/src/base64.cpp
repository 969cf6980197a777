#include "biometaphor/base64.hpp"

#include <array>

#include "biometaphor/errors.hpp"

namespace biometaphor {

namespace {

constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::array<int, 256> build_reverse() {
    std::array<int, 256> rev{};
    rev.fill(-1);
    for (int i = 0; i < 64; ++i) {
        rev[static_cast<unsigned char>(kAlphabet[i])] = i;
    }
    return rev;
}

const std::array<int, 256> kReverse = build_reverse();

}  // namespace

std::string base64_encode(const std::vector<std::uint8_t>& data) {
    return base64_encode(std::string_view(reinterpret_cast<const char*>(data.data()), data.size()));
}

std::string base64_encode(std::string_view data) {
    std::string out;
    out.reserve((data.size() + 2) / 3 * 4);
    size_t i = 0;
    while (i + 3 <= data.size()) {
        std::uint32_t n = (static_cast<std::uint8_t>(data[i]) << 16) |
                          (static_cast<std::uint8_t>(data[i + 1]) << 8) |
                          static_cast<std::uint8_t>(data[i + 2]);
        out.push_back(kAlphabet[(n >> 18) & 63]);
        out.push_back(kAlphabet[(n >> 12) & 63]);
        out.push_back(kAlphabet[(n >> 6) & 63]);
        out.push_back(kAlphabet[n & 63]);
        i += 3;
    }
    const size_t rest = data.size() - i;
    if (rest == 1) {
        std::uint32_t n = static_cast<std::uint8_t>(data[i]) << 16;
        out.push_back(kAlphabet[(n >> 18) & 63]);
        out.push_back(kAlphabet[(n >> 12) & 63]);
        out.push_back('=');
        out.push_back('=');
    } else if (rest == 2) {
        std::uint32_t n = (static_cast<std::uint8_t>(data[i]) << 16) |
                          (static_cast<std::uint8_t>(data[i + 1]) << 8);
        out.push_back(kAlphabet[(n >> 18) & 63]);
        out.push_back(kAlphabet[(n >> 12) & 63]);
        out.push_back(kAlphabet[(n >> 6) & 63]);
        out.push_back('=');
    }
    return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
    if (text.size() % 4 != 0) {
        throw DecodeError("base64 length " + std::to_string(text.size()) +
                          " is not a multiple of 4");
    }
    std::vector<std::uint8_t> out;
    out.reserve(text.size() / 4 * 3);
    size_t pad = 0;
    for (size_t i = 0; i < text.size(); i += 4) {
        std::uint32_t n = 0;
        int chars = 0;
        for (size_t j = 0; j < 4; ++j) {
            const size_t pos = i + j;
            const char c = text[pos];
            if (c == '=') {
                // Padding only in the last two slots of the final group.
                if (pos + 2 < text.size() || (j == 2 && text[pos + 1] != '=')) {
                    throw DecodeError("illegal base64 padding at offset " + std::to_string(pos));
                }
                ++pad;
                n <<= 6;
                continue;
            }
            if (pad > 0) {
                throw DecodeError("base64 data after padding at offset " + std::to_string(pos));
            }
            const int v = kReverse[static_cast<unsigned char>(c)];
            if (v < 0) {
                throw DecodeError("illegal base64 character at offset " + std::to_string(pos));
            }
            n = (n << 6) | static_cast<std::uint32_t>(v);
            ++chars;
        }
        if (chars < 2) {
            throw DecodeError("illegal base64 group at offset " + std::to_string(i));
        }
        out.push_back(static_cast<std::uint8_t>((n >> 16) & 0xFF));
        if (chars >= 3) out.push_back(static_cast<std::uint8_t>((n >> 8) & 0xFF));
        if (chars == 4) out.push_back(static_cast<std::uint8_t>(n & 0xFF));
    }
    return out;
}

}  // namespace biometaphor
