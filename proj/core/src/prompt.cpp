#include "biometaphor/prompt.hpp"

#include <cctype>

#include "biometaphor/errors.hpp"

namespace biometaphor {

namespace {

constexpr const char* kSeparator = "; ";

std::vector<std::string> normalize_list(const std::vector<std::string>& in, bool drop_empty) {
    std::vector<std::string> out;
    out.reserve(in.size());
    for (const auto& s : in) {
        auto n = normalize_whitespace(s);
        if (n.empty()) {
            if (drop_empty) continue;
            throw ValidationError("prompt segment must be nonempty");
        }
        out.push_back(std::move(n));
    }
    return out;
}

}  // namespace

std::string normalize_whitespace(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    bool in_space = true;  // leading whitespace trimmed
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!in_space) out.push_back(' ');
            in_space = true;
        } else {
            out.push_back(c);
            in_space = false;
        }
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

LayeredPrompt assemble(const std::string& main_scene,
                       const std::vector<std::string>& metaphorical_elements,
                       const std::vector<std::string>& detailed_modifiers) {
    LayeredPrompt p;
    p.main_scene = normalize_whitespace(main_scene);
    if (p.main_scene.empty()) {
        throw ValidationError("main_scene must be nonempty");
    }
    p.metaphorical_elements = normalize_list(metaphorical_elements, /*drop_empty=*/true);
    if (p.metaphorical_elements.empty()) {
        throw ValidationError("metaphorical_elements must be nonempty");
    }
    p.detailed_modifiers = normalize_list(detailed_modifiers, /*drop_empty=*/true);
    return p;
}

LayeredPrompt assemble(const nlohmann::json& step4_parse) {
    if (!step4_parse.is_object() || !step4_parse.contains("main_scene") ||
        !step4_parse.contains("metaphorical_elements")) {
        throw ValidationError("step 4 structure must carry main_scene and metaphorical_elements");
    }
    std::vector<std::string> elements =
        step4_parse.at("metaphorical_elements").get<std::vector<std::string>>();
    std::vector<std::string> modifiers;
    if (step4_parse.contains("detailed_modifiers")) {
        modifiers = step4_parse.at("detailed_modifiers").get<std::vector<std::string>>();
    }
    return assemble(step4_parse.at("main_scene").get<std::string>(), elements, modifiers);
}

std::string flatten(const LayeredPrompt& prompt, int max_chars) {
    if (max_chars <= 0) {
        throw ValidationError("max_chars must be positive");
    }
    // Mandatory prefix: main scene plus the first metaphorical element.
    if (prompt.main_scene.empty() || prompt.metaphorical_elements.empty()) {
        throw ValidationError("flatten requires an assembled prompt");
    }

    std::vector<std::string> segments;
    segments.push_back(prompt.main_scene);
    segments.insert(segments.end(), prompt.metaphorical_elements.begin(),
                    prompt.metaphorical_elements.end());
    segments.insert(segments.end(), prompt.detailed_modifiers.begin(),
                    prompt.detailed_modifiers.end());

    auto joined_length = [&](size_t count) {
        size_t len = 0;
        for (size_t i = 0; i < count; ++i) {
            if (i > 0) len += 2;  // "; "
            len += segments[i].size();
        }
        return len;
    };

    size_t keep = segments.size();
    const size_t mandatory = 2;  // main scene + first metaphorical element
    while (keep > mandatory && joined_length(keep) > static_cast<size_t>(max_chars)) {
        --keep;
    }
    if (joined_length(keep) > static_cast<size_t>(max_chars)) {
        throw ValidationError("budget too small for main scene plus one metaphorical element");
    }

    std::string out;
    for (size_t i = 0; i < keep; ++i) {
        if (i > 0) out += kSeparator;
        out += segments[i];
    }
    return out;
}

nlohmann::json to_json(const LayeredPrompt& prompt) {
    return nlohmann::json{
        {"main_scene", prompt.main_scene},
        {"metaphorical_elements", prompt.metaphorical_elements},
        {"detailed_modifiers", prompt.detailed_modifiers},
    };
}

LayeredPrompt layered_prompt_from_json(const nlohmann::json& j) {
    return assemble(j);
}

}  // namespace biometaphor
