#include "biometaphor/image.hpp"

#include "biometaphor/base64.hpp"
#include "biometaphor/errors.hpp"
#include "biometaphor/hash.hpp"
#include "biometaphor/png.hpp"

namespace biometaphor {

void GenerationRequest::validate() const {
    if (prompt_text.empty()) {
        throw ValidationError("generation prompt must be nonempty");
    }
    if (width <= 0 || height <= 0) {
        throw ValidationError("image dimensions must be positive");
    }
    if (panorama && width != 2 * height) {
        throw ValidationError("panorama aspect must be 2:1, got " + std::to_string(width) +
                              "x" + std::to_string(height));
    }
    if (init_strength.has_value() != init_image.has_value()) {
        throw ValidationError("init_strength must be present exactly when init_image is");
    }
    if (init_strength && (*init_strength < 0.0 || *init_strength > 1.0)) {
        throw ValidationError("init_strength must lie in [0,1]");
    }
}

ImageBackendConfig image_backend_config_from_json(const nlohmann::json& j) {
    ImageBackendConfig c;
    c.backend_id = j.value("backend_id", std::string("stub"));
    c.endpoint_url = j.value("endpoint_url", std::string{});
    c.timeout_ms = j.value("timeout_ms", 120000);
    c.max_retries = j.value("max_retries", 1);
    c.api_key_env = j.value("api_key_env", std::string{});
    return c;
}

nlohmann::json to_json(const ImageBackendConfig& config) {
    return nlohmann::json{{"backend_id", config.backend_id},
                          {"endpoint_url", config.endpoint_url},
                          {"timeout_ms", config.timeout_ms},
                          {"max_retries", config.max_retries},
                          {"api_key_env", config.api_key_env}};
}

std::string stub_digest_hex(const GenerationRequest& request) {
    const std::string material = request.prompt_text + "\n" + std::to_string(request.seed) +
                                 "\n" + std::to_string(request.width) + "\n" +
                                 std::to_string(request.height);
    return sha256_hex(material);
}

namespace {

ImageResult render_stub(const GenerationRequest& request, const std::string& backend_id) {
    request.validate();
    const auto digest = sha256(stub_digest_hex(request));

    // splitmix64 seeded from the digest drives a smooth per-tile color field.
    std::uint64_t state = 0;
    for (int i = 0; i < 8; ++i) state = (state << 8) | digest[static_cast<size_t>(i)];
    auto next = [&state]() {
        state += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    };

    constexpr int kTile = 64;
    const int tiles_x = (request.width + kTile - 1) / kTile;
    const int tiles_y = (request.height + kTile - 1) / kTile;
    std::vector<std::uint8_t> tile_colors(static_cast<size_t>(tiles_x * tiles_y) * 3);
    for (auto& b : tile_colors) b = static_cast<std::uint8_t>(next() & 0xFF);

    std::vector<std::uint8_t> rgb(static_cast<size_t>(request.width) *
                                  static_cast<size_t>(request.height) * 3);
    for (int y = 0; y < request.height; ++y) {
        const int ty = y / kTile;
        for (int x = 0; x < request.width; ++x) {
            const int tx = x / kTile;
            const size_t t = (static_cast<size_t>(ty) * tiles_x + tx) * 3;
            const size_t p = (static_cast<size_t>(y) * request.width + x) * 3;
            rgb[p] = tile_colors[t];
            rgb[p + 1] = tile_colors[t + 1];
            rgb[p + 2] = tile_colors[t + 2];
        }
    }

    const auto png = png_encode_rgb(rgb, request.width, request.height);
    ImageResult result;
    result.payload_b64 = base64_encode(png);
    result.format = "png";
    result.width = request.width;
    result.height = request.height;
    result.seed_used = request.seed;
    result.backend_id = backend_id;
    return result;
}

}  // namespace

StubImageBackend::StubImageBackend(std::string backend_id) : backend_id_(std::move(backend_id)) {}

ImageResult StubImageBackend::generate(const GenerationRequest& request) {
    calls_.fetch_add(1);
    return render_stub(request, backend_id_);
}

ImageResult stub_generate(const GenerationRequest& request) {
    return render_stub(request, "stub");
}

HttpImageBackend::HttpImageBackend(ImageBackendConfig config, std::shared_ptr<Transport> transport)
    : config_(std::move(config)), transport_(std::move(transport)) {
    if (config_.endpoint_url.empty()) {
        throw ConfigError("remote image backend needs an endpoint_url");
    }
}

nlohmann::json HttpImageBackend::wire_body(const GenerationRequest& request) {
    nlohmann::json body = {
        {"prompt", request.prompt_text},
        {"seed", request.seed},
        {"width", request.width},
        {"height", request.height},
    };
    if (request.init_image) {
        body["init_image"] = *request.init_image;
        body["strength"] = *request.init_strength;
    }
    return body;
}

ImageResult HttpImageBackend::generate(const GenerationRequest& request) {
    // Aspect gate runs before any transport activity.
    request.validate();
    calls_.fetch_add(1);

    std::vector<std::pair<std::string, std::string>> headers;
    if (!config_.api_key_env.empty()) {
        const char* key = std::getenv(config_.api_key_env.c_str());
        if (key == nullptr || *key == '\0') {
            throw ConfigError("credential environment variable " + config_.api_key_env +
                              " is not set");
        }
        headers.emplace_back("Authorization", std::string("Bearer ") + key);
    }

    const std::string body = wire_body(request).dump();
    std::string last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        try {
            auto res = transport_->post(config_.endpoint_url, headers, body, config_.timeout_ms);
            if (res.status < 200 || res.status >= 300) {
                throw BackendError(res.status, res.body.substr(0, 200));
            }
            constexpr size_t kMaxResponseBytes = 64ULL * 1024 * 1024;
            if (res.body.size() > kMaxResponseBytes) {
                throw Error("image response exceeds the size limit");
            }
            auto j = nlohmann::json::parse(res.body);
            ImageResult result;
            result.payload_b64 = j.at("image").get<std::string>();
            result.seed_used = j.value("seed", request.seed);
            result.backend_id = config_.backend_id;
            const auto bytes = base64_decode(result.payload_b64);
            const auto fmt = sniff_image_format(bytes);
            if (!fmt) {
                throw DecodeError("image backend returned an unrecognized container");
            }
            result.format = *fmt;
            const auto dims = image_dims(bytes);
            result.width = dims.width;
            result.height = dims.height;
            return result;
        } catch (const TransportError& e) {
            last_error = e.what();
            if (attempt == config_.max_retries) throw;
        }
    }
    throw TransportError("giving up: " + last_error);
}

GenerationRequest anchor_chain(const ImageResult& base, GenerationRequest request,
                               double init_strength) {
    if (base.payload_b64.empty()) {
        throw ValidationError("anchor image payload must be nonempty");
    }
    request.init_image = base.payload_b64;
    request.init_strength = init_strength;
    request.validate();
    return request;
}

}  // namespace biometaphor
