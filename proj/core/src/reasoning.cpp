#include "biometaphor/reasoning.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <random>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "biometaphor/errors.hpp"

namespace biometaphor {

void BackendConfig::validate() const {
    if (backend_id.empty()) throw ConfigError("backend_id must be nonempty");
    if (model_name.empty()) throw ConfigError("model_name must be nonempty");
    if (temperature < 0.0) throw ConfigError("temperature must be >= 0");
    if (max_tokens <= 0) throw ConfigError("max_tokens must be positive");
    if (timeout_ms <= 0) throw ConfigError("timeout_ms must be positive");
    if (max_retries < 0) throw ConfigError("max_retries must be nonnegative");
}

BackendConfig backend_config_from_json(const nlohmann::json& j) {
    BackendConfig c;
    c.backend_id = j.at("backend_id").get<std::string>();
    c.endpoint_url = j.value("endpoint_url", std::string{});
    c.model_name = j.at("model_name").get<std::string>();
    c.temperature = j.value("temperature", 1.0);
    c.max_tokens = j.value("max_tokens", 2048);
    c.timeout_ms = j.value("timeout_ms", 60000);
    c.max_retries = j.value("max_retries", 2);
    c.api_key_env = j.value("api_key_env", std::string{});
    c.validate();
    return c;
}

nlohmann::json to_json(const BackendConfig& config) {
    return nlohmann::json{
        {"backend_id", config.backend_id},   {"endpoint_url", config.endpoint_url},
        {"model_name", config.model_name},   {"temperature", config.temperature},
        {"max_tokens", config.max_tokens},   {"timeout_ms", config.timeout_ms},
        {"max_retries", config.max_retries}, {"api_key_env", config.api_key_env},
    };
}

void ChatRequest::validate() const {
    if (user_turns.empty()) {
        throw ValidationError("chat request needs at least one user turn");
    }
    bool any_text = !system_text.empty();
    for (const auto& t : user_turns) {
        if (!t.empty()) any_text = true;
    }
    if (!any_text) {
        throw ValidationError("chat request text must be nonempty");
    }
}

std::string ScriptedFixture::make_key(int step_id, const std::string& octant,
                                      const std::string& scene_id) {
    return std::to_string(step_id) + "|" + octant + "|" + scene_id;
}

void ScriptedFixture::add(int step_id, const std::string& octant, const std::string& scene_id,
                          std::string response) {
    auto key = make_key(step_id, octant, scene_id);
    auto [it, inserted] = entries_.emplace(std::move(key), std::move(response));
    if (!inserted) {
        throw ValidationError("duplicate fixture key: " + it->first);
    }
}

const std::string& ScriptedFixture::lookup(int step_id, const std::string& octant,
                                           const std::string& scene_id) const {
    auto key = make_key(step_id, octant, scene_id);
    auto it = entries_.find(key);
    if (it == entries_.end()) {
        throw FixtureMissError("no fixture entry for key \"" + key + "\"");
    }
    return it->second;
}

bool ScriptedFixture::contains(int step_id, const std::string& octant,
                               const std::string& scene_id) const {
    return entries_.count(make_key(step_id, octant, scene_id)) > 0;
}

ScriptedFixture ScriptedFixture::from_json(const nlohmann::json& j) {
    if (!j.is_object()) {
        throw ValidationError("fixture file must be a JSON object");
    }
    ScriptedFixture f;
    for (const auto& [key, value] : j.items()) {
        const auto first = key.find('|');
        const auto last = key.rfind('|');
        if (first == std::string::npos || first == last) {
            throw ValidationError("fixture key must be \"step|octant|scene\": " + key);
        }
        f.add(std::stoi(key.substr(0, first)), key.substr(first + 1, last - first - 1),
              key.substr(last + 1), value.get<std::string>());
    }
    return f;
}

ScriptedFixture ScriptedFixture::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open fixture file: " + path);
    }
    nlohmann::json j;
    in >> j;
    return from_json(j);
}

nlohmann::json ScriptedFixture::to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [key, value] : entries_) {
        j[key] = value;
    }
    return j;
}

ScriptedBackend::ScriptedBackend(std::string backend_id, ScriptedFixture fixture)
    : backend_id_(std::move(backend_id)), fixture_(std::move(fixture)) {}

std::string ScriptedBackend::complete(const ChatRequest& request) {
    request.validate();
    calls_.fetch_add(1);
    if (!request.fixture_hint) {
        throw FixtureMissError("scripted backend requires a fixture hint on the request");
    }
    const auto& h = *request.fixture_hint;
    return fixture_.lookup(h.step_id, h.octant, h.scene_id);
}

std::shared_ptr<ReasoningBackend> make_scripted(std::string backend_id, ScriptedFixture fixture) {
    return std::make_shared<ScriptedBackend>(std::move(backend_id), std::move(fixture));
}

namespace {

class HttplibTransport : public Transport {
public:
    Response post(const std::string& url,
                  const std::vector<std::pair<std::string, std::string>>& headers,
                  const std::string& body, int timeout_ms) override {
        const auto scheme_end = url.find("://");
        if (scheme_end == std::string::npos) {
            throw ConfigError("endpoint URL must carry a scheme: " + url);
        }
        const auto path_start = url.find('/', scheme_end + 3);
        const std::string origin = path_start == std::string::npos ? url : url.substr(0, path_start);
        const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

        httplib::Client client(origin);
        client.set_connection_timeout(0, timeout_ms * 1000LL);
        client.set_read_timeout(0, timeout_ms * 1000LL);
        httplib::Headers h;
        for (const auto& [k, v] : headers) {
            h.emplace(k, v);
        }
        auto res = client.Post(path, h, body, "application/json");
        if (!res) {
            throw TransportError("request to " + origin + " failed: " +
                                 httplib::to_string(res.error()));
        }
        return Response{res->status, res->body};
    }
};

std::string resolve_api_key(const BackendConfig& config) {
    if (config.api_key_env.empty()) {
        return {};
    }
    const char* value = std::getenv(config.api_key_env.c_str());
    if (value == nullptr || *value == '\0') {
        throw ConfigError("credential environment variable " + config.api_key_env + " is not set");
    }
    return value;
}

}  // namespace

std::shared_ptr<Transport> make_http_transport() {
    return std::make_shared<HttplibTransport>();
}

HttpReasoningBackend::HttpReasoningBackend(BackendConfig config,
                                           std::shared_ptr<Transport> transport)
    : config_(std::move(config)), transport_(std::move(transport)) {
    config_.validate();
    if (config_.endpoint_url.empty()) {
        throw ConfigError("remote backend needs an endpoint_url");
    }
}

nlohmann::json HttpReasoningBackend::wire_body(const BackendConfig& config,
                                               const ChatRequest& request) {
    nlohmann::json messages = nlohmann::json::array();
    if (!request.system_text.empty()) {
        messages.push_back({{"role", "system"}, {"content", request.system_text}});
    }
    for (const auto& turn : request.user_turns) {
        messages.push_back({{"role", "user"}, {"content", turn}});
    }
    return nlohmann::json{
        {"model", config.model_name},
        {"messages", messages},
        {"temperature", config.temperature},
        {"max_tokens", config.max_tokens},
    };
}

std::string HttpReasoningBackend::complete(const ChatRequest& request) {
    request.validate();
    const std::string api_key = resolve_api_key(config_);
    calls_.fetch_add(1);

    std::vector<std::pair<std::string, std::string>> headers;
    if (!api_key.empty()) {
        headers.emplace_back("Authorization", "Bearer " + api_key);
    }
    const std::string body = wire_body(config_, request).dump();

    std::mt19937_64 jitter_rng(std::random_device{}());
    std::string last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0) {
            const double cap = 250.0 * static_cast<double>(1 << (attempt - 1));
            std::uniform_real_distribution<double> dist(0.0, cap);
            std::this_thread::sleep_for(
                std::chrono::milliseconds(static_cast<long>(dist(jitter_rng))));
        }
        try {
            auto res = transport_->post(config_.endpoint_url, headers, body, config_.timeout_ms);
            if (res.status >= 200 && res.status < 300) {
                auto j = nlohmann::json::parse(res.body);
                // Chat-completions shape first, flat {text} as fallback.
                if (j.contains("choices")) {
                    return j.at("choices").at(0).at("message").at("content").get<std::string>();
                }
                if (j.contains("text")) {
                    return j.at("text").get<std::string>();
                }
                throw BackendError(res.status, "response carries neither choices nor text");
            }
            if (res.status >= 500 && attempt < config_.max_retries) {
                last_error = "status " + std::to_string(res.status);
                continue;
            }
            throw BackendError(res.status, res.body.substr(0, 200));
        } catch (const TransportError& e) {
            last_error = e.what();
            if (attempt == config_.max_retries) {
                throw TransportError("giving up after " + std::to_string(attempt + 1) +
                                     " attempts: " + last_error);
            }
        }
    }
    throw TransportError("giving up: " + last_error);
}

}  // namespace biometaphor
