#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace biometaphor {

/// Connection settings for one chat-completion backend. The credential is
/// referenced by environment-variable name and never stored in the value.
struct BackendConfig {
    std::string backend_id;
    std::string endpoint_url;
    std::string model_name;
    double temperature = 1.0;
    int max_tokens = 2048;
    int timeout_ms = 60000;
    int max_retries = 2;
    std::string api_key_env;

    void validate() const;
};

BackendConfig backend_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const BackendConfig& config);

/// One chat exchange: a system prompt plus ordered user turns.
/// `fixture_hint` carries (step, octant, scene) routing data for scripted
/// backends; remote transports ignore it and it never goes on the wire.
struct ChatRequest {
    std::string system_text;
    std::vector<std::string> user_turns;
    double temperature = 1.0;
    int max_tokens = 2048;

    struct FixtureHint {
        int step_id = 0;
        std::string octant;
        std::string scene_id;
    };
    std::optional<FixtureHint> fixture_hint;

    void validate() const;
};

/// Chat-completion surface shared by remote and scripted backends.
class ReasoningBackend {
public:
    virtual ~ReasoningBackend() = default;
    virtual std::string complete(const ChatRequest& request) = 0;
    virtual const std::string& backend_id() const = 0;
    /// Total complete() invocations served, for cache-contract assertions.
    virtual std::uint64_t call_count() const = 0;
};

/// Canned responses keyed by "step|octant|scene".
class ScriptedFixture {
public:
    ScriptedFixture() = default;

    static std::string make_key(int step_id, const std::string& octant,
                                const std::string& scene_id);

    /// Duplicate keys reject at insertion.
    void add(int step_id, const std::string& octant, const std::string& scene_id,
             std::string response);

    /// Throws FixtureMissError naming the missing key.
    const std::string& lookup(int step_id, const std::string& octant,
                              const std::string& scene_id) const;

    bool contains(int step_id, const std::string& octant, const std::string& scene_id) const;
    size_t size() const { return entries_.size(); }

    /// JSON map from composite "step|octant|scene" keys to response strings.
    static ScriptedFixture from_json(const nlohmann::json& j);
    static ScriptedFixture load(const std::string& path);
    nlohmann::json to_json() const;

private:
    std::map<std::string, std::string> entries_;
};

/// Deterministic backend over a fixture: a pure function of the
/// request-derived key. Unknown keys raise instead of fabricating text.
class ScriptedBackend : public ReasoningBackend {
public:
    ScriptedBackend(std::string backend_id, ScriptedFixture fixture);

    std::string complete(const ChatRequest& request) override;
    const std::string& backend_id() const override { return backend_id_; }
    std::uint64_t call_count() const override { return calls_.load(); }

private:
    std::string backend_id_;
    ScriptedFixture fixture_;
    std::atomic<std::uint64_t> calls_{0};
};

std::shared_ptr<ReasoningBackend> make_scripted(std::string backend_id, ScriptedFixture fixture);

/// HTTP POST abstraction so tests can record or fail calls deterministically.
class Transport {
public:
    struct Response {
        int status = 0;
        std::string body;
    };

    virtual ~Transport() = default;
    /// Throws TransportError on network-level failure.
    virtual Response post(const std::string& url,
                          const std::vector<std::pair<std::string, std::string>>& headers,
                          const std::string& body, int timeout_ms) = 0;
};

/// Real transport backed by cpp-httplib.
std::shared_ptr<Transport> make_http_transport();

/// Chat-completions client: JSON {model, messages, temperature, max_tokens},
/// bearer auth from the env var named in the config, exponential backoff with
/// full jitter (250 ms base) on transport failures and 5xx.
class HttpReasoningBackend : public ReasoningBackend {
public:
    HttpReasoningBackend(BackendConfig config, std::shared_ptr<Transport> transport);

    std::string complete(const ChatRequest& request) override;
    const std::string& backend_id() const override { return config_.backend_id; }
    std::uint64_t call_count() const override { return calls_.load(); }

    /// Outgoing JSON body for a request; exposed for wire-contract tests.
    static nlohmann::json wire_body(const BackendConfig& config, const ChatRequest& request);

private:
    BackendConfig config_;
    std::shared_ptr<Transport> transport_;
    std::atomic<std::uint64_t> calls_{0};
};

}  // namespace biometaphor
