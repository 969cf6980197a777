#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "biometaphor/reasoning.hpp"  // Transport

namespace biometaphor {

inline constexpr double kDefaultInitStrength = 0.55;
inline constexpr int kDefaultPanoramaWidth = 2048;
inline constexpr int kDefaultPanoramaHeight = 1024;

/// Text-to-image request. Panorama requests are equirectangular: width must
/// be exactly twice the height. init_strength travels with init_image.
struct GenerationRequest {
    std::string prompt_text;
    std::uint64_t seed = 0;
    int width = kDefaultPanoramaWidth;
    int height = kDefaultPanoramaHeight;
    bool panorama = true;
    std::optional<std::string> init_image;  // base64 payload of the anchor
    std::optional<double> init_strength;

    void validate() const;
};

struct ImageResult {
    std::string payload_b64;
    std::string format;  // "png" or "jpeg"
    int width = 0;
    int height = 0;
    std::uint64_t seed_used = 0;
    std::string backend_id;
};

struct ImageBackendConfig {
    std::string backend_id = "stub";
    std::string endpoint_url;
    int timeout_ms = 120000;
    int max_retries = 1;
    std::string api_key_env;
};

ImageBackendConfig image_backend_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ImageBackendConfig& config);

class ImageBackend {
public:
    virtual ~ImageBackend() = default;
    virtual ImageResult generate(const GenerationRequest& request) = 0;
    virtual const std::string& backend_id() const = 0;
    virtual std::uint64_t call_count() const = 0;
};

/// Digest that drives the stub's pixel pattern; exposed so tests can check it
/// against an independent hashing oracle.
std::string stub_digest_hex(const GenerationRequest& request);

/// Deterministic offline generator: a PNG whose pixels derive from a
/// cryptographic hash of (prompt, seed, width, height).
class StubImageBackend : public ImageBackend {
public:
    explicit StubImageBackend(std::string backend_id = "stub");

    ImageResult generate(const GenerationRequest& request) override;
    const std::string& backend_id() const override { return backend_id_; }
    std::uint64_t call_count() const override { return calls_.load(); }

private:
    std::string backend_id_;
    std::atomic<std::uint64_t> calls_{0};
};

ImageResult stub_generate(const GenerationRequest& request);

/// Remote diffusion service speaking JSON POST {prompt, seed, width, height,
/// init_image?, strength?} -> {image: base64, seed}.
class HttpImageBackend : public ImageBackend {
public:
    HttpImageBackend(ImageBackendConfig config, std::shared_ptr<Transport> transport);

    ImageResult generate(const GenerationRequest& request) override;
    const std::string& backend_id() const override { return config_.backend_id; }
    std::uint64_t call_count() const override { return calls_.load(); }

    static nlohmann::json wire_body(const GenerationRequest& request);

private:
    ImageBackendConfig config_;
    std::shared_ptr<Transport> transport_;
    std::atomic<std::uint64_t> calls_{0};
};

/// Image-to-image anchoring: reuse `base` as the init image for a follow-up
/// request, preserving every other field.
GenerationRequest anchor_chain(const ImageResult& base, GenerationRequest request,
                               double init_strength = kDefaultInitStrength);

}  // namespace biometaphor
