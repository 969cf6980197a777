#pragma once

#include <array>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "biometaphor/affect.hpp"
#include "biometaphor/errors.hpp"
#include "biometaphor/prompt.hpp"
#include "biometaphor/reasoning.hpp"

namespace biometaphor {

/// Data directory holding taxonomy, rule table, scene and fixture files.
/// Env var BIOMETAPHOR_DATA_DIR overrides the compiled-in default.
std::string default_data_dir();

/// Closed taxonomy of metaphor types. Parsing unknown names fails.
enum class MetaphorType {
    Orientational,
    Ontological_EntitySubstance,
    Ontological_Container,
    Ontological_Personification,
    Ontological_Metonymy,
    Structural,
};

inline constexpr std::array<MetaphorType, 6> kAllMetaphorTypes = {
    MetaphorType::Orientational,          MetaphorType::Ontological_EntitySubstance,
    MetaphorType::Ontological_Container,  MetaphorType::Ontological_Personification,
    MetaphorType::Ontological_Metonymy,   MetaphorType::Structural,
};

std::string to_string(MetaphorType type);
std::optional<MetaphorType> metaphor_type_from_string(const std::string& name);

/// Type name -> definition text, shipped as taxonomy.json.
class Taxonomy {
public:
    static Taxonomy load(const std::string& path);
    static Taxonomy load_default();

    explicit Taxonomy(std::map<MetaphorType, std::string> definitions);
    const std::string& definition(MetaphorType type) const;
    const std::map<MetaphorType, std::string>& definitions() const { return definitions_; }

private:
    std::map<MetaphorType, std::string> definitions_;
};

struct VisualCue {
    std::string description;
    std::optional<std::string> dynamics;
    std::string mapped_dimension;  // "valence", "arousal" or "both"

    void validate() const;
};

struct MetaphorPlan {
    std::vector<std::pair<MetaphorType, std::string>> types;  // type + rationale
    std::vector<VisualCue> cues;
    std::vector<std::pair<std::string, size_t>> mapping;  // state aspect -> cue index

    /// Nonempty types with rationales, nonempty cues, every cue mapped.
    void validate() const;
};

struct SceneContext {
    std::string scene_id;
    std::string description;
    std::string primary_activity;
    std::optional<std::string> style_notes;

    void validate() const;
};

/// The three built-in co-present scenarios (gallery, sports, concert).
std::vector<SceneContext> builtin_scenes();
std::optional<SceneContext> builtin_scene(const std::string& scene_id);

struct AdaptedScene {
    std::string overall_description;
    std::string emotional_atmosphere;
    std::vector<std::string> details;
    std::string nonintrusion_statement;

    void validate() const;
};

/// The LLM's own reading of the input pair, recorded alongside the locally
/// computed InferredState for the divergence audit.
struct Step1Claim {
    std::string family;
    std::string octant;
    std::string intensity;
    std::string summary;
};

using StepOutput = std::variant<Step1Claim, MetaphorPlan, AdaptedScene, LayeredPrompt>;

/// Outcome of validating one raw step response.
struct StepValidation {
    std::optional<StepOutput> value;
    std::vector<std::string> violations;  // one entry per missing/invalid field

    bool ok() const { return value.has_value() && violations.empty(); }
};

/// Extract the fenced JSON block from a step response and check the step's
/// required fields. Never throws on bad content; violations are reported.
StepValidation validate_step_output(int step_id, const std::string& raw);

enum class ChainMode { Conversational, Isolated };

struct RepairPolicy {
    int max_repairs = 2;
};

/// Inputs accumulated while walking the four-step chain.
struct StepContext {
    VAPair va;
    InferredState local_state;
    SceneContext scene;
    Taxonomy taxonomy;
    ChainMode chain_mode = ChainMode::Conversational;
    std::string template_version = "1";

    // Filled in as steps complete.
    std::optional<Step1Claim> step1;
    std::optional<MetaphorPlan> step2;
    std::optional<AdaptedScene> step3;
    std::vector<std::string> prior_prompts;
    std::vector<std::string> prior_responses;
};

/// Deterministic template instantiation for one step. Requires all prior
/// steps' parsed outputs for step_id > 1.
ChatRequest build_step_prompt(int step_id, const StepContext& context);

struct StepRecord {
    int step_id = 0;
    std::string request_text;
    std::string raw_response;
    nlohmann::json parsed;  // null when validation failed
    std::string validation_status;  // "ok" or "failed"
    int repair_count = 0;
};

struct CoTTrace {
    std::string trace_id;  // content hash, timestamp-independent
    VAPair va{0.5, 0.5};
    SceneContext scene;
    std::string backend_id;
    std::vector<StepRecord> steps;
    std::string created_at;  // UTC, RFC 3339
    std::optional<LayeredPrompt> final_prompt;
    std::optional<Step1Claim> llm_claim;
    InferredState local_state;

    bool succeeded() const { return final_prompt.has_value(); }
};

nlohmann::json to_json(const CoTTrace& trace);
CoTTrace trace_from_json(const nlohmann::json& j);

/// Thrown when a step stays invalid after the repair budget. Carries the
/// partial trace whose last record holds the failing raw response.
class CoTStepError : public StepError {
public:
    CoTStepError(int step_id, const std::string& what, std::string raw, int repair_attempts,
                 CoTTrace partial_trace)
        : StepError(step_id, what, std::move(raw)),
          repair_attempts_(repair_attempts),
          partial_trace_(std::move(partial_trace)) {}

    int repair_attempts() const { return repair_attempts_; }
    const CoTTrace& partial_trace() const { return partial_trace_; }

private:
    int repair_attempts_;
    CoTTrace partial_trace_;
};

struct CoTOptions {
    CircumplexGeometry geometry{};
    OctantTable table = OctantTable::standard();
    Taxonomy taxonomy = Taxonomy::load_default();
    ChainMode chain_mode = ChainMode::Conversational;
    RepairPolicy policy{};
    std::string template_version = "1";
};

/// Execute the four-step chain against a backend. Validation failures trigger
/// repair prompts up to policy.max_repairs; an unrecoverable step throws
/// StepError with the raw text preserved.
CoTTrace run_cot(const VAPair& va, const SceneContext& scene, ReasoningBackend& backend,
                 const CoTOptions& options = {});

/// Rule table keyed by "family|intensity|scene", shipped as rule_table.json.
class RuleTable {
public:
    static RuleTable load(const std::string& path);
    static RuleTable load_default();

    explicit RuleTable(nlohmann::json table);

    /// Deterministic plan + adapted scene. Total: unknown scene ids fall back
    /// to the "default" scene column.
    std::pair<MetaphorPlan, AdaptedScene> plan(const InferredState& state,
                                               const SceneContext& scene) const;

private:
    const nlohmann::json& entry_for(Family family, Band intensity,
                                    const std::string& scene_id) const;
    nlohmann::json table_;
};

std::pair<MetaphorPlan, AdaptedScene> rule_based_plan(const InferredState& state,
                                                      const SceneContext& scene);

/// Run the whole chain through the rule table instead of an LLM, producing a
/// trace with the same shape as run_cot.
CoTTrace run_rule_engine(const VAPair& va, const SceneContext& scene,
                         const CoTOptions& options = {});

/// Scripted fixture covering all 4 steps x 8 octants x built-in scenes,
/// rendered from the rule table so every entry parses.
ScriptedFixture make_demo_fixture();

nlohmann::json to_json(const MetaphorPlan& plan);
nlohmann::json to_json(const AdaptedScene& scene);
nlohmann::json to_json(const SceneContext& scene);
nlohmann::json to_json(const Step1Claim& claim);
nlohmann::json to_json(const InferredState& state);
SceneContext scene_context_from_json(const nlohmann::json& j);

}  // namespace biometaphor
