#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "biometaphor/affect.hpp"
#include "biometaphor/image.hpp"
#include "biometaphor/metaphor.hpp"
#include "biometaphor/packaging.hpp"
#include "biometaphor/reasoning.hpp"

namespace biometaphor {

struct PipelineConfig {
    std::vector<BackendConfig> reasoning_backends;
    ImageBackendConfig image_backend;
    CircumplexGeometry geometry{};
    std::vector<SceneContext> scenes = builtin_scenes();
    std::optional<int> dataset_count = 8;      // prototypical pairs, or
    std::vector<VAPair> dataset_pairs;         // an explicit list
    std::filesystem::path output_dir = "out";
    std::filesystem::path cache_dir;           // defaults to output_dir/cache
    std::uint64_t seed = 0;
    int concurrency = 2;
    bool use_rule_engine = false;
    ChainMode chain_mode = ChainMode::Conversational;
    int panorama_width = kDefaultPanoramaWidth;
    int panorama_height = kDefaultPanoramaHeight;
    std::string template_version = "1";

    std::vector<VAPair> resolve_dataset() const;
    void validate() const;
};

PipelineConfig pipeline_config_from_json(const nlohmann::json& j);

struct CellResult {
    std::string backend_id;
    VAPair va{0.5, 0.5};
    std::string scene_id;
    std::string status;  // "ok", "cached" or "failed"
    std::optional<int> failed_step;
    std::string package_id;  // empty on failure
    std::string error;       // empty unless failed
};

struct RunReport {
    std::vector<CellResult> cells;
    int ok = 0;
    int cached = 0;
    int failed = 0;
    double wall_seconds = 0.0;

    nlohmann::json to_json() const;
};

/// Backends assembled for one run; injectable so tests can substitute
/// scripted reasoning and stub image generation with call recorders.
struct PipelineBackends {
    std::vector<std::shared_ptr<ReasoningBackend>> reasoning;
    std::shared_ptr<ImageBackend> image;
};

/// Build backends from the config: remote HTTP clients, or scripted + stub
/// replacements when `mock` is set.
PipelineBackends make_backends(const PipelineConfig& config, bool mock);

/// Run every (backend x VA pair x scene) cell: chain, flatten, generate,
/// package. Failures stay isolated per cell. Previously completed cells are
/// served from the cache and reported "cached". Writes report.json and
/// appends traces to runs.jsonl under output_dir.
RunReport run_batch(const PipelineConfig& config, const PipelineBackends& backends);

/// Cache key for one cell; any change to backend identity, model settings,
/// inputs, template version or image request changes the key.
std::string cell_cache_key(const PipelineConfig& config, const std::string& backend_id,
                           const std::string& model_name, double temperature, const VAPair& va,
                           const SceneContext& scene);

/// Per-cell seed derived from the global seed and the cell key.
std::uint64_t derive_cell_seed(std::uint64_t global_seed, const std::string& cell_key);

}  // namespace biometaphor
