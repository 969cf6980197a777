#include "biometaphor/hash.hpp"

#include <openssl/sha.h>

namespace biometaphor {

std::vector<std::uint8_t> sha256(std::string_view data) {
    std::vector<std::uint8_t> digest(SHA256_DIGEST_LENGTH);
    SHA256(reinterpret_cast<const unsigned char*>(data.data()), data.size(), digest.data());
    return digest;
}

std::string sha256_hex(std::string_view data) {
    static const char* hex = "0123456789abcdef";
    auto digest = sha256(data);
    std::string out;
    out.reserve(digest.size() * 2);
    for (auto b : digest) {
        out.push_back(hex[b >> 4]);
        out.push_back(hex[b & 0xF]);
    }
    return out;
}

std::uint64_t sha256_prefix_u64(std::string_view data) {
    auto digest = sha256(data);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
        v = (v << 8) | digest[static_cast<size_t>(i)];
    }
    return v;
}

}  // namespace biometaphor
