#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace biometaphor {

/// Default flatten budget; fits the longest demonstration prompt with headroom.
inline constexpr int kDefaultMaxPromptChars = 1000;

/// Three-layer text-to-image prompt: main scene, metaphorical elements,
/// detailed modifiers. The metaphorical layer is mandatory.
struct LayeredPrompt {
    std::string main_scene;
    std::vector<std::string> metaphorical_elements;
    std::vector<std::string> detailed_modifiers;

    bool operator==(const LayeredPrompt&) const = default;
};

/// Validate and whitespace-normalize the three sections into a LayeredPrompt.
LayeredPrompt assemble(const std::string& main_scene,
                       const std::vector<std::string>& metaphorical_elements,
                       const std::vector<std::string>& detailed_modifiers);

LayeredPrompt assemble(const nlohmann::json& step4_parse);

/// Join layers with "; " under the character budget. Over budget, whole
/// segments drop from the tail: modifiers first, then metaphorical elements
/// beyond the first. Never truncates mid-segment.
std::string flatten(const LayeredPrompt& prompt, int max_chars = kDefaultMaxPromptChars);

nlohmann::json to_json(const LayeredPrompt& prompt);
LayeredPrompt layered_prompt_from_json(const nlohmann::json& j);

/// Collapse runs of whitespace to single spaces and trim the ends.
std::string normalize_whitespace(const std::string& text);

}  // namespace biometaphor
