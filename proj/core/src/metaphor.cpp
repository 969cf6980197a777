#include "biometaphor/metaphor.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>

#include "biometaphor/errors.hpp"
#include "biometaphor/hash.hpp"

namespace biometaphor {

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open data file: " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Shortest round-trip decimal, so "0.14" stays "0.14" in prompt text.
std::string format_number(double v) { return nlohmann::json(v).dump(); }

std::string utc_now_rfc3339() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

std::string default_data_dir() {
    if (const char* env = std::getenv("BIOMETAPHOR_DATA_DIR"); env != nullptr && *env != '\0') {
        return env;
    }
#ifdef BIOMETAPHOR_DEFAULT_DATA_DIR
    return BIOMETAPHOR_DEFAULT_DATA_DIR;
#else
    return "data";
#endif
}

std::string to_string(MetaphorType type) {
    switch (type) {
        case MetaphorType::Orientational: return "Orientational";
        case MetaphorType::Ontological_EntitySubstance: return "Ontological_EntitySubstance";
        case MetaphorType::Ontological_Container: return "Ontological_Container";
        case MetaphorType::Ontological_Personification: return "Ontological_Personification";
        case MetaphorType::Ontological_Metonymy: return "Ontological_Metonymy";
        case MetaphorType::Structural: return "Structural";
    }
    return "?";
}

std::optional<MetaphorType> metaphor_type_from_string(const std::string& name) {
    for (auto t : kAllMetaphorTypes) {
        if (to_string(t) == name) return t;
    }
    return std::nullopt;
}

Taxonomy::Taxonomy(std::map<MetaphorType, std::string> definitions)
    : definitions_(std::move(definitions)) {
    for (auto t : kAllMetaphorTypes) {
        if (definitions_.find(t) == definitions_.end() || definitions_.at(t).empty()) {
            throw ValidationError("taxonomy missing definition for " + to_string(t));
        }
    }
}

Taxonomy Taxonomy::load(const std::string& path) {
    auto j = nlohmann::json::parse(read_file(path));
    std::map<MetaphorType, std::string> defs;
    for (const auto& [name, text] : j.items()) {
        auto type = metaphor_type_from_string(name);
        if (!type) {
            throw ValidationError("unknown metaphor type in taxonomy file: " + name);
        }
        defs[*type] = text.get<std::string>();
    }
    return Taxonomy(std::move(defs));
}

Taxonomy Taxonomy::load_default() { return load(default_data_dir() + "/taxonomy.json"); }

const std::string& Taxonomy::definition(MetaphorType type) const {
    return definitions_.at(type);
}

void VisualCue::validate() const {
    if (description.empty()) throw ValidationError("visual cue description must be nonempty");
    if (mapped_dimension != "valence" && mapped_dimension != "arousal" &&
        mapped_dimension != "both") {
        throw ValidationError("mapped_dimension must be valence, arousal or both");
    }
}

void MetaphorPlan::validate() const {
    if (types.empty()) throw ValidationError("metaphor plan needs at least one type");
    for (const auto& [type, rationale] : types) {
        if (rationale.empty()) {
            throw ValidationError("type " + to_string(type) + " lacks a rationale");
        }
    }
    if (cues.empty()) throw ValidationError("metaphor plan needs at least one cue");
    for (const auto& cue : cues) cue.validate();
    std::vector<bool> referenced(cues.size(), false);
    for (const auto& [aspect, index] : mapping) {
        if (aspect.empty()) throw ValidationError("mapping aspect must be nonempty");
        if (index >= cues.size()) throw ValidationError("mapping references cue out of range");
        referenced[index] = true;
    }
    for (size_t i = 0; i < referenced.size(); ++i) {
        if (!referenced[i]) {
            throw ValidationError("cue " + std::to_string(i) + " has no mapping entry");
        }
    }
}

void SceneContext::validate() const {
    if (scene_id.empty()) throw ValidationError("scene_id must be nonempty");
    if (primary_activity.empty()) throw ValidationError("primary_activity must be nonempty");
}

void AdaptedScene::validate() const {
    if (overall_description.empty() || emotional_atmosphere.empty() || details.empty()) {
        throw ValidationError("adapted scene needs description, atmosphere and details");
    }
    if (nonintrusion_statement.empty()) {
        throw ValidationError("adapted scene needs a nonintrusion statement");
    }
}

std::vector<SceneContext> builtin_scenes() {
    return {
        SceneContext{"gallery", "a quiet virtual art gallery with paintings along softly lit walls",
                     "viewing artworks", std::nullopt},
        SceneContext{"sports", "a virtual arena hosting a table tennis match under bright lights",
                     "watching the table tennis match", std::nullopt},
        SceneContext{"concert", "a virtual concert stage with performers and a gathered crowd",
                     "watching the live performance", std::nullopt},
    };
}

std::optional<SceneContext> builtin_scene(const std::string& scene_id) {
    for (auto& s : builtin_scenes()) {
        if (s.scene_id == scene_id) return s;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Step output validation
// ---------------------------------------------------------------------------

namespace {

/// First fenced code block, or the whole text when it already is a JSON object.
std::optional<std::string> extract_fenced_block(const std::string& raw) {
    const auto open = raw.find("```");
    if (open == std::string::npos) {
        const auto first = raw.find_first_not_of(" \t\r\n");
        if (first != std::string::npos && raw[first] == '{') {
            return raw.substr(first);
        }
        return std::nullopt;
    }
    auto content_start = raw.find('\n', open);
    if (content_start == std::string::npos) return std::nullopt;
    ++content_start;
    const auto close = raw.find("```", content_start);
    if (close == std::string::npos) return std::nullopt;
    return raw.substr(content_start, close - content_start);
}

std::string require_string(const nlohmann::json& j, const char* field,
                           std::vector<std::string>& violations) {
    if (!j.contains(field) || !j.at(field).is_string() ||
        j.at(field).get<std::string>().empty()) {
        violations.push_back(std::string("missing or empty field: ") + field);
        return {};
    }
    return j.at(field).get<std::string>();
}

StepValidation validate_step1(const nlohmann::json& j) {
    StepValidation result;
    Step1Claim claim;
    claim.family = require_string(j, "family", result.violations);
    claim.octant = require_string(j, "octant", result.violations);
    claim.intensity = require_string(j, "intensity", result.violations);
    claim.summary = require_string(j, "summary", result.violations);
    if (!claim.family.empty() && !family_from_string(claim.family)) {
        result.violations.push_back("unknown family: " + claim.family);
    }
    if (!claim.intensity.empty() && claim.intensity != "low" && claim.intensity != "medium" &&
        claim.intensity != "high") {
        result.violations.push_back("intensity must be low, medium or high");
    }
    if (result.violations.empty()) result.value = std::move(claim);
    return result;
}

StepValidation validate_step2(const nlohmann::json& j) {
    StepValidation result;
    MetaphorPlan plan;
    if (!j.contains("types") || !j.at("types").is_array() || j.at("types").empty()) {
        result.violations.push_back("missing or empty field: types");
    } else {
        for (const auto& t : j.at("types")) {
            std::vector<std::string> local;
            auto name = require_string(t, "type", local);
            auto rationale = require_string(t, "rationale", local);
            result.violations.insert(result.violations.end(), local.begin(), local.end());
            if (!name.empty()) {
                auto type = metaphor_type_from_string(name);
                if (!type) {
                    result.violations.push_back("unknown metaphor type: " + name);
                } else if (local.empty()) {
                    plan.types.emplace_back(*type, rationale);
                }
            }
        }
    }
    if (!j.contains("cues") || !j.at("cues").is_array() || j.at("cues").empty()) {
        result.violations.push_back("missing or empty field: cues");
    } else {
        for (const auto& c : j.at("cues")) {
            VisualCue cue;
            cue.description = require_string(c, "description", result.violations);
            cue.mapped_dimension = require_string(c, "mapped_dimension", result.violations);
            if (!cue.mapped_dimension.empty() && cue.mapped_dimension != "valence" &&
                cue.mapped_dimension != "arousal" && cue.mapped_dimension != "both") {
                result.violations.push_back("mapped_dimension must be valence, arousal or both");
            }
            if (c.contains("dynamics") && c.at("dynamics").is_string() &&
                !c.at("dynamics").get<std::string>().empty()) {
                cue.dynamics = c.at("dynamics").get<std::string>();
            }
            plan.cues.push_back(std::move(cue));
        }
    }
    if (!j.contains("mapping") || !j.at("mapping").is_array() || j.at("mapping").empty()) {
        result.violations.push_back("missing or empty field: mapping");
    } else {
        for (const auto& m : j.at("mapping")) {
            auto aspect = require_string(m, "aspect", result.violations);
            if (!m.contains("cue") || !m.at("cue").is_number_unsigned()) {
                result.violations.push_back("mapping entry lacks a cue index");
                continue;
            }
            const auto index = m.at("cue").get<size_t>();
            if (index >= plan.cues.size()) {
                result.violations.push_back("mapping references cue index out of range: " +
                                            std::to_string(index));
                continue;
            }
            plan.mapping.emplace_back(aspect, index);
        }
    }
    if (result.violations.empty()) {
        std::vector<bool> referenced(plan.cues.size(), false);
        for (const auto& [aspect, index] : plan.mapping) referenced[index] = true;
        for (size_t i = 0; i < referenced.size(); ++i) {
            if (!referenced[i]) {
                result.violations.push_back("cue " + std::to_string(i) +
                                            " has no mapping entry");
            }
        }
    }
    if (result.violations.empty()) result.value = std::move(plan);
    return result;
}

StepValidation validate_step3(const nlohmann::json& j) {
    StepValidation result;
    AdaptedScene scene;
    scene.overall_description = require_string(j, "overall_description", result.violations);
    scene.emotional_atmosphere = require_string(j, "emotional_atmosphere", result.violations);
    scene.nonintrusion_statement = require_string(j, "nonintrusion_statement", result.violations);
    if (!j.contains("details") || !j.at("details").is_array() || j.at("details").empty()) {
        result.violations.push_back("missing or empty field: details");
    } else {
        for (const auto& d : j.at("details")) {
            if (!d.is_string() || d.get<std::string>().empty()) {
                result.violations.push_back("details entries must be nonempty strings");
            } else {
                scene.details.push_back(d.get<std::string>());
            }
        }
    }
    if (result.violations.empty()) result.value = std::move(scene);
    return result;
}

StepValidation validate_step4(const nlohmann::json& j) {
    StepValidation result;
    auto main_scene = require_string(j, "main_scene", result.violations);
    std::vector<std::string> elements;
    if (!j.contains("metaphorical_elements") || !j.at("metaphorical_elements").is_array() ||
        j.at("metaphorical_elements").empty()) {
        result.violations.push_back("missing or empty field: metaphorical_elements");
    } else {
        for (const auto& e : j.at("metaphorical_elements")) {
            if (!e.is_string() || e.get<std::string>().empty()) {
                result.violations.push_back("metaphorical_elements entries must be nonempty");
            } else {
                elements.push_back(e.get<std::string>());
            }
        }
    }
    std::vector<std::string> modifiers;
    if (j.contains("detailed_modifiers")) {
        if (!j.at("detailed_modifiers").is_array()) {
            result.violations.push_back("detailed_modifiers must be an array");
        } else {
            for (const auto& m : j.at("detailed_modifiers")) {
                if (m.is_string() && !m.get<std::string>().empty()) {
                    modifiers.push_back(m.get<std::string>());
                }
            }
        }
    }
    if (result.violations.empty()) {
        try {
            result.value = assemble(main_scene, elements, modifiers);
        } catch (const ValidationError& e) {
            result.violations.push_back(e.what());
        }
    }
    return result;
}

}  // namespace

StepValidation validate_step_output(int step_id, const std::string& raw) {
    if (step_id < 1 || step_id > 4) {
        throw ValidationError("step_id must be in 1..4");
    }
    StepValidation result;
    auto block = extract_fenced_block(raw);
    if (!block) {
        result.violations.push_back("missing fenced structured block");
        return result;
    }
    nlohmann::json j = nlohmann::json::parse(*block, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object()) {
        result.violations.push_back("fenced block is not a JSON object");
        return result;
    }
    switch (step_id) {
        case 1: return validate_step1(j);
        case 2: return validate_step2(j);
        case 3: return validate_step3(j);
        default: return validate_step4(j);
    }
}

// ---------------------------------------------------------------------------
// Prompt templates
// ---------------------------------------------------------------------------

namespace {

constexpr const char* kSystemText =
    "You translate biosensory valence-arousal readings into metaphorical visual "
    "cues for co-present virtual events. Answer each step with brief reasoning "
    "followed by exactly one fenced ```json block holding the requested fields.";

std::string circumplex_definition() {
    return "The circumplex model of affect locates inner states on two axes: "
           "valence runs from displeasure (0) to pleasure (1), and arousal runs "
           "from deactivation (0) to activation (1); the neutral center sits at "
           "(0.5, 0.5).";
}

std::string step1_body(const StepContext& ctx) {
    std::ostringstream out;
    out << "Step 1 - Inner State Inference.\n"
        << circumplex_definition() << "\n"
        << "Input V-A pair: valence " << format_number(ctx.va.valence()) << ", arousal "
        << format_number(ctx.va.arousal()) << ".\n"
        << "As a consistency anchor, a local geometric reading gives: family "
        << to_string(ctx.local_state.family) << ", octant " << ctx.local_state.octant_label
        << ", intensity " << to_string(ctx.local_state.intensity_label) << ".\n"
        << "Infer the emotional range and emotional intensity. Output a json object "
           "with fields: family (one of positive-activated, positive-deactivated, "
           "negative-activated, negative-deactivated, neutral), octant, intensity "
           "(low, medium or high) and summary.";
    return out.str();
}

std::string step2_body(const StepContext& ctx) {
    std::ostringstream out;
    out << "Step 2 - Metaphor Construction.\n"
        << "Convert the inferred state into metaphorical visual cues suitable for the "
        << ctx.scene.scene_id << " scene. Choose from these metaphor types; there is "
        << "no preference for any specific metaphor type:\n";
    for (auto type : kAllMetaphorTypes) {
        out << "- " << to_string(type) << ": " << ctx.taxonomy.definition(type) << "\n";
    }
    out << "Inferred state: " << ctx.step1->summary << " (family " << ctx.step1->family
        << ", intensity " << ctx.step1->intensity << ").\n"
        << "Output a json object with fields: types (array of {type, rationale}), cues "
           "(array of {description, dynamics, mapped_dimension}), and mapping (array of "
           "{aspect, cue} pairs linking every cue to a state aspect).";
    return out.str();
}

std::string step3_body(const StepContext& ctx) {
    std::ostringstream out;
    out << "Step 3 - Event Adaptation.\n"
        << "Target scene \"" << ctx.scene.scene_id << "\": " << ctx.scene.description << ".\n"
        << "The main activity is " << ctx.scene.primary_activity << ".\n";
    if (ctx.scene.style_notes) {
        out << "Style notes: " << *ctx.scene.style_notes << "\n";
    }
    out << "Integrate the visual cues from step 2 into this scene. The cues must not "
           "affect the main activity; the nonintrusion_statement must contain the exact "
           "phrase \""
        << ctx.scene.primary_activity << "\".\n"
        << "Output a json object with fields: overall_description, emotional_atmosphere, "
           "details (array of strings) and nonintrusion_statement.";
    return out.str();
}

std::string step4_body(const StepContext& ctx) {
    (void)ctx;
    return "Step 4 - Prompt Generation.\n"
           "Convert the adapted scene into a text-to-image prompt with a three-layer "
           "structure. Output a json object with fields: main_scene (string), "
           "metaphorical_elements (array of strings) and detailed_modifiers (array of "
           "strings).";
}

std::string step_body(int step_id, const StepContext& ctx) {
    switch (step_id) {
        case 1: return step1_body(ctx);
        case 2: return step2_body(ctx);
        case 3: return step3_body(ctx);
        default: return step4_body(ctx);
    }
}

std::string isolated_context_prefix(int step_id, const StepContext& ctx) {
    nlohmann::json prior = nlohmann::json::object();
    if (step_id > 1) prior["step1"] = to_json(*ctx.step1);
    if (step_id > 2) prior["step2"] = to_json(*ctx.step2);
    if (step_id > 3) prior["step3"] = to_json(*ctx.step3);
    return "Context from earlier steps:\n" + prior.dump(2) + "\n\n";
}

}  // namespace

ChatRequest build_step_prompt(int step_id, const StepContext& ctx) {
    if (step_id < 1 || step_id > 4) {
        throw ValidationError("step_id must be in 1..4");
    }
    if ((step_id > 1 && !ctx.step1) || (step_id > 2 && !ctx.step2) ||
        (step_id > 3 && !ctx.step3)) {
        throw SequencingError("step " + std::to_string(step_id) +
                              " requested before prior step outputs are available");
    }

    ChatRequest req;
    req.system_text = kSystemText;
    if (ctx.chain_mode == ChainMode::Conversational) {
        for (size_t i = 0; i < ctx.prior_prompts.size(); ++i) {
            req.user_turns.push_back(ctx.prior_prompts[i] + "\n\n[Your step " +
                                     std::to_string(i + 1) + " answer]\n" +
                                     ctx.prior_responses[i]);
        }
        req.user_turns.push_back(step_body(step_id, ctx));
    } else {
        std::string body = step_body(step_id, ctx);
        if (step_id > 1) body = isolated_context_prefix(step_id, ctx) + body;
        req.user_turns.push_back(body);
    }
    req.fixture_hint = ChatRequest::FixtureHint{step_id, ctx.local_state.octant_label,
                                                ctx.scene.scene_id};
    return req;
}

// ---------------------------------------------------------------------------
// Chain execution
// ---------------------------------------------------------------------------

namespace {

std::string serialize_request(const ChatRequest& req) {
    nlohmann::json turns = nlohmann::json::array();
    for (const auto& t : req.user_turns) turns.push_back(t);
    return nlohmann::json{{"system", req.system_text}, {"user_turns", turns}}.dump();
}

nlohmann::json parsed_json_of(const StepOutput& value) {
    return std::visit([](const auto& v) { return to_json(v); }, value);
}

std::string compute_trace_id(const CoTTrace& trace, const std::string& template_version) {
    std::ostringstream content;
    content << format_number(trace.va.valence()) << "|" << format_number(trace.va.arousal())
            << "|" << trace.scene.scene_id << "|" << trace.backend_id << "|"
            << template_version;
    for (const auto& step : trace.steps) {
        content << "|" << step.raw_response;
    }
    if (trace.final_prompt) {
        content << "|" << to_json(*trace.final_prompt).dump();
    }
    return sha256_hex(content.str());
}

}  // namespace

CoTTrace run_cot(const VAPair& va, const SceneContext& scene, ReasoningBackend& backend,
                 const CoTOptions& options) {
    scene.validate();

    StepContext ctx{va, infer_state(va, options.geometry, options.table), scene,
                    options.taxonomy, options.chain_mode};
    ctx.template_version = options.template_version;

    CoTTrace trace;
    trace.va = va;
    trace.scene = scene;
    trace.backend_id = backend.backend_id();
    trace.local_state = ctx.local_state;
    trace.created_at = utc_now_rfc3339();

    for (int step_id = 1; step_id <= 4; ++step_id) {
        const std::string body = step_body(step_id, ctx);
        ChatRequest req = build_step_prompt(step_id, ctx);
        std::string raw = backend.complete(req);
        StepValidation val = validate_step_output(step_id, raw);
        int repairs = 0;
        while (!val.ok() && repairs < options.policy.max_repairs) {
            ChatRequest repair = req;
            std::ostringstream msg;
            msg << "Your step " << step_id
                << " answer failed validation with these violations:\n";
            for (const auto& v : val.violations) msg << "- " << v << "\n";
            msg << "Previous answer:\n" << raw
                << "\nResend the full corrected fenced json block.";
            repair.user_turns.push_back(msg.str());
            raw = backend.complete(repair);
            val = validate_step_output(step_id, raw);
            ++repairs;
        }

        StepRecord record;
        record.step_id = step_id;
        record.request_text = serialize_request(req);
        record.raw_response = raw;
        record.repair_count = repairs;
        record.validation_status = val.ok() ? "ok" : "failed";
        if (val.ok()) record.parsed = parsed_json_of(*val.value);
        trace.steps.push_back(record);

        if (!val.ok()) {
            std::string joined;
            for (const auto& v : val.violations) {
                if (!joined.empty()) joined += "; ";
                joined += v;
            }
            trace.trace_id = compute_trace_id(trace, options.template_version);
            throw CoTStepError(step_id, joined, raw, repairs, std::move(trace));
        }

        switch (step_id) {
            case 1:
                ctx.step1 = std::get<Step1Claim>(*val.value);
                trace.llm_claim = ctx.step1;
                break;
            case 2: ctx.step2 = std::get<MetaphorPlan>(*val.value); break;
            case 3: ctx.step3 = std::get<AdaptedScene>(*val.value); break;
            case 4: trace.final_prompt = std::get<LayeredPrompt>(*val.value); break;
        }
        ctx.prior_prompts.push_back(body);
        ctx.prior_responses.push_back(raw);
    }

    trace.trace_id = compute_trace_id(trace, options.template_version);
    return trace;
}

// ---------------------------------------------------------------------------
// Rule table
// ---------------------------------------------------------------------------

namespace {

std::string substitute_placeholders(std::string text, const SceneContext& scene) {
    auto replace_all = [&text](const std::string& from, const std::string& to) {
        size_t pos = 0;
        while ((pos = text.find(from, pos)) != std::string::npos) {
            text.replace(pos, from.size(), to);
            pos += to.size();
        }
    };
    replace_all("{primary_activity}", scene.primary_activity);
    replace_all("{scene_id}", scene.scene_id);
    replace_all("{scene_description}", scene.description);
    return text;
}

}  // namespace

RuleTable::RuleTable(nlohmann::json table) : table_(std::move(table)) {
    if (!table_.is_object()) {
        throw ValidationError("rule table must be a JSON object");
    }
    // Totality over families x intensities x built-in scenes plus the fallback.
    const std::array<Family, 5> families = {Family::PositiveActivated, Family::PositiveDeactivated,
                                            Family::NegativeActivated, Family::NegativeDeactivated,
                                            Family::Neutral};
    const std::array<Band, 3> bands = {Band::Low, Band::Medium, Band::High};
    std::vector<std::string> scenes = {"gallery", "sports", "concert", "default"};
    for (auto f : families) {
        for (auto b : bands) {
            for (const auto& s : scenes) {
                const auto key = to_string(f) + "|" + to_string(b) + "|" + s;
                if (!table_.contains(key)) {
                    throw ValidationError("rule table missing entry: " + key);
                }
            }
        }
    }
}

RuleTable RuleTable::load(const std::string& path) {
    return RuleTable(nlohmann::json::parse(read_file(path)));
}

RuleTable RuleTable::load_default() { return load(default_data_dir() + "/rule_table.json"); }

const nlohmann::json& RuleTable::entry_for(Family family, Band intensity,
                                           const std::string& scene_id) const {
    auto key = to_string(family) + "|" + to_string(intensity) + "|" + scene_id;
    if (!table_.contains(key)) {
        key = to_string(family) + "|" + to_string(intensity) + "|default";
    }
    return table_.at(key);
}

std::pair<MetaphorPlan, AdaptedScene> RuleTable::plan(const InferredState& state,
                                                      const SceneContext& scene) const {
    scene.validate();
    const auto& entry = entry_for(state.family, state.intensity_label, scene.scene_id);

    MetaphorPlan plan;
    for (const auto& t : entry.at("types")) {
        auto type = metaphor_type_from_string(t.at("type").get<std::string>());
        if (!type) {
            throw ValidationError("rule table names unknown metaphor type");
        }
        plan.types.emplace_back(*type, substitute_placeholders(
                                           t.at("rationale").get<std::string>(), scene));
    }
    for (const auto& c : entry.at("cues")) {
        VisualCue cue;
        cue.description = substitute_placeholders(c.at("description").get<std::string>(), scene);
        if (c.contains("dynamics") && !c.at("dynamics").get<std::string>().empty()) {
            cue.dynamics = c.at("dynamics").get<std::string>();
        }
        cue.mapped_dimension = c.at("mapped_dimension").get<std::string>();
        plan.cues.push_back(std::move(cue));
    }
    for (const auto& m : entry.at("mapping")) {
        plan.mapping.emplace_back(m.at("aspect").get<std::string>(), m.at("cue").get<size_t>());
    }
    plan.validate();

    const auto& a = entry.at("adapted");
    AdaptedScene adapted;
    adapted.overall_description =
        substitute_placeholders(a.at("overall_description").get<std::string>(), scene);
    adapted.emotional_atmosphere =
        substitute_placeholders(a.at("emotional_atmosphere").get<std::string>(), scene);
    for (const auto& d : a.at("details")) {
        adapted.details.push_back(substitute_placeholders(d.get<std::string>(), scene));
    }
    adapted.nonintrusion_statement =
        substitute_placeholders(a.at("nonintrusion_statement").get<std::string>(), scene);
    adapted.validate();
    return {std::move(plan), std::move(adapted)};
}

std::pair<MetaphorPlan, AdaptedScene> rule_based_plan(const InferredState& state,
                                                      const SceneContext& scene) {
    static const RuleTable table = RuleTable::load_default();
    return table.plan(state, scene);
}

// ---------------------------------------------------------------------------
// Rule-engine chain and demo fixture
// ---------------------------------------------------------------------------

namespace {

Step1Claim claim_from_state(const InferredState& state) {
    Step1Claim claim;
    claim.family = to_string(state.family);
    claim.octant = state.octant_label;
    claim.intensity = to_string(state.intensity_label);
    claim.summary = "The pair reads as " + state.octant_label + " within the " +
                    to_string(state.family) + " family at " +
                    to_string(state.intensity_label) + " intensity.";
    return claim;
}

LayeredPrompt prompt_from_rule_outputs(const MetaphorPlan& plan, const AdaptedScene& adapted) {
    std::vector<std::string> elements;
    for (const auto& cue : plan.cues) {
        std::string e = cue.description;
        if (cue.dynamics) e += ", " + *cue.dynamics;
        elements.push_back(std::move(e));
    }
    std::vector<std::string> modifiers = adapted.details;
    modifiers.push_back(adapted.emotional_atmosphere);
    return assemble(adapted.overall_description, elements, modifiers);
}

std::string render_response(int step_id, const std::string& octant, const std::string& scene_id,
                            const nlohmann::json& payload) {
    std::ostringstream out;
    out << "Step " << step_id << " reasoning for the " << octant << " state in the " << scene_id
        << " scenario follows the circumplex reading and the chosen metaphors.\n\n```json\n"
        << payload.dump(2) << "\n```\n";
    return out.str();
}

}  // namespace

CoTTrace run_rule_engine(const VAPair& va, const SceneContext& scene, const CoTOptions& options) {
    scene.validate();
    const InferredState state = infer_state(va, options.geometry, options.table);
    auto [plan, adapted] = rule_based_plan(state, scene);
    const Step1Claim claim = claim_from_state(state);
    const LayeredPrompt prompt = prompt_from_rule_outputs(plan, adapted);

    CoTTrace trace;
    trace.va = va;
    trace.scene = scene;
    trace.backend_id = "rule-engine";
    trace.local_state = state;
    trace.created_at = utc_now_rfc3339();
    trace.llm_claim = claim;
    trace.final_prompt = prompt;

    const std::array<nlohmann::json, 4> payloads = {to_json(claim), to_json(plan),
                                                    to_json(adapted), to_json(prompt)};
    for (int step_id = 1; step_id <= 4; ++step_id) {
        StepRecord record;
        record.step_id = step_id;
        record.request_text = nlohmann::json{{"rule_engine_step", step_id}}.dump();
        record.raw_response =
            render_response(step_id, state.octant_label, scene.scene_id,
                            payloads[static_cast<size_t>(step_id - 1)]);
        record.parsed = payloads[static_cast<size_t>(step_id - 1)];
        record.validation_status = "ok";
        trace.steps.push_back(std::move(record));
    }
    trace.trace_id = compute_trace_id(trace, options.template_version);
    return trace;
}

ScriptedFixture make_demo_fixture() {
    ScriptedFixture fixture;
    const CircumplexGeometry geometry;
    const OctantTable table = OctantTable::standard();
    const auto pairs = prototypical_va_pairs(8, geometry);
    for (const auto& va : pairs) {
        const InferredState state = infer_state(va, geometry, table);
        for (const auto& scene : builtin_scenes()) {
            auto [plan, adapted] = rule_based_plan(state, scene);
            const Step1Claim claim = claim_from_state(state);
            const LayeredPrompt prompt = prompt_from_rule_outputs(plan, adapted);
            const std::array<nlohmann::json, 4> payloads = {to_json(claim), to_json(plan),
                                                            to_json(adapted), to_json(prompt)};
            for (int step_id = 1; step_id <= 4; ++step_id) {
                fixture.add(step_id, state.octant_label, scene.scene_id,
                            render_response(step_id, state.octant_label, scene.scene_id,
                                            payloads[static_cast<size_t>(step_id - 1)]));
            }
        }
    }
    return fixture;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

nlohmann::json to_json(const MetaphorPlan& plan) {
    nlohmann::json types = nlohmann::json::array();
    for (const auto& [type, rationale] : plan.types) {
        types.push_back({{"type", to_string(type)}, {"rationale", rationale}});
    }
    nlohmann::json cues = nlohmann::json::array();
    for (const auto& cue : plan.cues) {
        nlohmann::json c = {{"description", cue.description},
                            {"mapped_dimension", cue.mapped_dimension}};
        if (cue.dynamics) c["dynamics"] = *cue.dynamics;
        cues.push_back(std::move(c));
    }
    nlohmann::json mapping = nlohmann::json::array();
    for (const auto& [aspect, index] : plan.mapping) {
        mapping.push_back({{"aspect", aspect}, {"cue", index}});
    }
    return nlohmann::json{{"types", types}, {"cues", cues}, {"mapping", mapping}};
}

nlohmann::json to_json(const AdaptedScene& scene) {
    return nlohmann::json{{"overall_description", scene.overall_description},
                          {"emotional_atmosphere", scene.emotional_atmosphere},
                          {"details", scene.details},
                          {"nonintrusion_statement", scene.nonintrusion_statement}};
}

nlohmann::json to_json(const SceneContext& scene) {
    nlohmann::json j = {{"scene_id", scene.scene_id},
                        {"description", scene.description},
                        {"primary_activity", scene.primary_activity}};
    if (scene.style_notes) j["style_notes"] = *scene.style_notes;
    return j;
}

SceneContext scene_context_from_json(const nlohmann::json& j) {
    SceneContext scene;
    scene.scene_id = j.at("scene_id").get<std::string>();
    scene.description = j.value("description", std::string{});
    scene.primary_activity = j.at("primary_activity").get<std::string>();
    if (j.contains("style_notes")) scene.style_notes = j.at("style_notes").get<std::string>();
    scene.validate();
    return scene;
}

nlohmann::json to_json(const Step1Claim& claim) {
    return nlohmann::json{{"family", claim.family},
                          {"octant", claim.octant},
                          {"intensity", claim.intensity},
                          {"summary", claim.summary}};
}

nlohmann::json to_json(const InferredState& state) {
    return nlohmann::json{{"angle_deg", state.angle_deg},
                          {"extremity", state.extremity},
                          {"valence_band", to_string(state.valence_band)},
                          {"arousal_band", to_string(state.arousal_band)},
                          {"intensity_label", to_string(state.intensity_label)},
                          {"octant_label", state.octant_label},
                          {"family", to_string(state.family)}};
}

nlohmann::json to_json(const CoTTrace& trace) {
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& step : trace.steps) {
        steps.push_back({{"step_id", step.step_id},
                         {"request", step.request_text},
                         {"response", step.raw_response},
                         {"parsed", step.parsed},
                         {"validation_status", step.validation_status},
                         {"repair_count", step.repair_count}});
    }
    nlohmann::json j = {
        {"trace_id", trace.trace_id},
        {"va", {{"valence", trace.va.valence()}, {"arousal", trace.va.arousal()}}},
        {"scene", to_json(trace.scene)},
        {"backend_id", trace.backend_id},
        {"created_at", trace.created_at},
        {"local_state", to_json(trace.local_state)},
        {"steps", steps},
    };
    j["llm_claim"] = trace.llm_claim ? to_json(*trace.llm_claim) : nlohmann::json(nullptr);
    j["final_prompt"] =
        trace.final_prompt ? to_json(*trace.final_prompt) : nlohmann::json(nullptr);
    return j;
}

CoTTrace trace_from_json(const nlohmann::json& j) {
    CoTTrace trace;
    trace.trace_id = j.at("trace_id").get<std::string>();
    trace.va = VAPair(j.at("va").at("valence").get<double>(),
                      j.at("va").at("arousal").get<double>());
    trace.scene = scene_context_from_json(j.at("scene"));
    trace.backend_id = j.at("backend_id").get<std::string>();
    trace.created_at = j.value("created_at", std::string{});
    trace.local_state = infer_state(trace.va);
    for (const auto& s : j.at("steps")) {
        StepRecord record;
        record.step_id = s.at("step_id").get<int>();
        record.request_text = s.at("request").get<std::string>();
        record.raw_response = s.at("response").get<std::string>();
        record.parsed = s.at("parsed");
        record.validation_status = s.at("validation_status").get<std::string>();
        record.repair_count = s.at("repair_count").get<int>();
        trace.steps.push_back(std::move(record));
    }
    if (j.contains("llm_claim") && !j.at("llm_claim").is_null()) {
        Step1Claim claim;
        const auto& c = j.at("llm_claim");
        claim.family = c.at("family").get<std::string>();
        claim.octant = c.at("octant").get<std::string>();
        claim.intensity = c.at("intensity").get<std::string>();
        claim.summary = c.at("summary").get<std::string>();
        trace.llm_claim = claim;
    }
    if (j.contains("final_prompt") && !j.at("final_prompt").is_null()) {
        trace.final_prompt = layered_prompt_from_json(j.at("final_prompt"));
    }
    return trace;
}

}  // namespace biometaphor
