#include "biometaphor/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <mutex>
#include <thread>

#include "biometaphor/errors.hpp"
#include "biometaphor/hash.hpp"
#include "biometaphor/prompt.hpp"

namespace biometaphor {

namespace fs = std::filesystem;

std::vector<VAPair> PipelineConfig::resolve_dataset() const {
    if (!dataset_pairs.empty()) {
        return dataset_pairs;
    }
    if (!dataset_count || *dataset_count < 1) {
        throw ConfigError("dataset needs a positive count or an explicit pair list");
    }
    return prototypical_va_pairs(*dataset_count, geometry);
}

void PipelineConfig::validate() const {
    if (reasoning_backends.empty() && !use_rule_engine) {
        throw ConfigError("config needs at least one reasoning backend or use_rule_engine");
    }
    for (const auto& b : reasoning_backends) b.validate();
    if (scenes.empty()) {
        throw ConfigError("config needs at least one scene");
    }
    for (const auto& s : scenes) s.validate();
    if (concurrency < 1) {
        throw ConfigError("concurrency must be positive");
    }
    resolve_dataset();  // throws on an empty dataset
}

PipelineConfig pipeline_config_from_json(const nlohmann::json& j) {
    PipelineConfig c;
    if (j.contains("reasoning_backends")) {
        for (const auto& b : j.at("reasoning_backends")) {
            c.reasoning_backends.push_back(backend_config_from_json(b));
        }
    }
    if (j.contains("image_backend")) {
        c.image_backend = image_backend_config_from_json(j.at("image_backend"));
    }
    if (j.contains("geometry")) {
        const auto& g = j.at("geometry");
        c.geometry = CircumplexGeometry(
            VAPair(g.at("center").at("valence").get<double>(),
                   g.at("center").at("arousal").get<double>()),
            g.at("radius").get<double>());
    }
    if (j.contains("scenes")) {
        c.scenes.clear();
        for (const auto& s : j.at("scenes")) {
            c.scenes.push_back(scene_context_from_json(s));
        }
    }
    if (j.contains("dataset")) {
        const auto& d = j.at("dataset");
        if (d.contains("pairs")) {
            for (const auto& p : d.at("pairs")) {
                c.dataset_pairs.emplace_back(p.at("valence").get<double>(),
                                             p.at("arousal").get<double>());
            }
            c.dataset_count.reset();
        } else if (d.contains("count")) {
            c.dataset_count = d.at("count").get<int>();
        }
    }
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("cache_dir")) c.cache_dir = j.at("cache_dir").get<std::string>();
    c.seed = j.value("seed", 0ULL);
    c.concurrency = j.value("concurrency", 2);
    c.use_rule_engine = j.value("use_rule_engine", false);
    if (j.contains("chain_mode")) {
        const auto mode = j.at("chain_mode").get<std::string>();
        if (mode == "conversational") {
            c.chain_mode = ChainMode::Conversational;
        } else if (mode == "isolated") {
            c.chain_mode = ChainMode::Isolated;
        } else {
            throw ConfigError("chain_mode must be conversational or isolated");
        }
    }
    c.panorama_width = j.value("panorama_width", kDefaultPanoramaWidth);
    c.panorama_height = j.value("panorama_height", kDefaultPanoramaHeight);
    return c;
}

nlohmann::json RunReport::to_json() const {
    nlohmann::json cell_array = nlohmann::json::array();
    for (const auto& c : cells) {
        nlohmann::json j = {
            {"backend_id", c.backend_id},
            {"va", {{"valence", c.va.valence()}, {"arousal", c.va.arousal()}}},
            {"scene_id", c.scene_id},
            {"status", c.status},
            {"package_id", c.package_id},
        };
        if (c.failed_step) j["failed_step"] = *c.failed_step;
        if (!c.error.empty()) j["error"] = c.error;
        cell_array.push_back(std::move(j));
    }
    return nlohmann::json{{"cells", cell_array},
                          {"ok", ok},
                          {"cached", cached},
                          {"failed", failed},
                          {"wall_seconds", wall_seconds}};
}

PipelineBackends make_backends(const PipelineConfig& config, bool mock) {
    PipelineBackends backends;
    if (mock) {
        auto fixture = make_demo_fixture();
        if (config.reasoning_backends.empty()) {
            backends.reasoning.push_back(make_scripted("scripted", fixture));
        } else {
            for (const auto& b : config.reasoning_backends) {
                backends.reasoning.push_back(make_scripted(b.backend_id, fixture));
            }
        }
        backends.image = std::make_shared<StubImageBackend>();
        return backends;
    }
    auto transport = make_http_transport();
    for (const auto& b : config.reasoning_backends) {
        backends.reasoning.push_back(std::make_shared<HttpReasoningBackend>(b, transport));
    }
    if (config.image_backend.endpoint_url.empty()) {
        backends.image = std::make_shared<StubImageBackend>(config.image_backend.backend_id);
    } else {
        backends.image = std::make_shared<HttpImageBackend>(config.image_backend, transport);
    }
    return backends;
}

std::string cell_cache_key(const PipelineConfig& config, const std::string& backend_id,
                           const std::string& model_name, double temperature, const VAPair& va,
                           const SceneContext& scene) {
    nlohmann::json material = {
        {"backend_id", backend_id},
        {"model", model_name},
        {"temperature", temperature},
        {"va", {{"valence", va.valence()}, {"arousal", va.arousal()}}},
        {"scene", to_json(scene)},
        {"template_version", config.template_version},
        {"chain_mode", config.chain_mode == ChainMode::Conversational ? "conversational"
                                                                      : "isolated"},
        {"image",
         {{"backend", config.image_backend.backend_id},
          {"width", config.panorama_width},
          {"height", config.panorama_height},
          {"seed", config.seed}}},
    };
    return sha256_hex(material.dump());
}

std::uint64_t derive_cell_seed(std::uint64_t global_seed, const std::string& cell_key) {
    return sha256_prefix_u64(std::to_string(global_seed) + "|" + cell_key);
}

namespace {

struct Cell {
    size_t backend_index;
    VAPair va;
    SceneContext scene;
    double angle;
    std::string cache_key;
};

std::optional<BackendConfig> config_for_backend(const PipelineConfig& config,
                                                const std::string& backend_id) {
    for (const auto& b : config.reasoning_backends) {
        if (b.backend_id == backend_id) return b;
    }
    return std::nullopt;
}

}  // namespace

RunReport run_batch(const PipelineConfig& config, const PipelineBackends& backends) {
    config.validate();
    if (backends.reasoning.empty() && !config.use_rule_engine) {
        throw ConfigError("run_batch needs reasoning backends or the rule engine");
    }
    if (!backends.image) {
        throw ConfigError("run_batch needs an image backend");
    }

    const auto start = std::chrono::steady_clock::now();
    fs::create_directories(config.output_dir);
    {
        std::ofstream probe(config.output_dir / ".writable");
        if (!probe) {
            throw ConfigError("output directory is not writable: " + config.output_dir.string());
        }
    }
    fs::remove(config.output_dir / ".writable");
    const fs::path cache_dir =
        config.cache_dir.empty() ? config.output_dir / "cache" : config.cache_dir;
    fs::create_directories(cache_dir);

    const auto dataset = config.resolve_dataset();
    const CircumplexGeometry geometry = config.geometry;

    // Rule-engine mode runs as a pseudo-backend when no reasoning backends exist.
    const size_t backend_count = backends.reasoning.empty() ? 1 : backends.reasoning.size();

    std::vector<Cell> cells;
    for (size_t bi = 0; bi < backend_count; ++bi) {
        const std::string backend_id = backends.reasoning.empty()
                                           ? std::string("rule-engine")
                                           : backends.reasoning[bi]->backend_id();
        auto bc = config_for_backend(config, backend_id);
        for (const auto& va : dataset) {
            const auto [angle, extremity] = polar_of(va, geometry);
            for (const auto& scene : config.scenes) {
                Cell cell{bi, va, scene, angle, {}};
                cell.cache_key = cell_cache_key(
                    config, backend_id, bc ? bc->model_name : backend_id,
                    bc ? bc->temperature : 0.0, va, scene);
                cells.push_back(std::move(cell));
            }
        }
    }
    // Deterministic ordering: backend, angle, scene.
    std::stable_sort(cells.begin(), cells.end(), [&](const Cell& a, const Cell& b) {
        const auto& ida = backends.reasoning.empty() ? std::string("rule-engine")
                                                     : backends.reasoning[a.backend_index]->backend_id();
        const auto& idb = backends.reasoning.empty() ? std::string("rule-engine")
                                                     : backends.reasoning[b.backend_index]->backend_id();
        if (ida != idb) return ida < idb;
        if (a.angle != b.angle) return a.angle < b.angle;
        return a.scene.scene_id < b.scene.scene_id;
    });

    std::vector<CellResult> results(cells.size());
    std::vector<nlohmann::json> trace_lines(cells.size());

    CoTOptions cot_options;
    cot_options.geometry = geometry;
    cot_options.chain_mode = config.chain_mode;
    cot_options.template_version = config.template_version;

    std::atomic<size_t> next{0};
    auto worker = [&]() {
        while (true) {
            const size_t i = next.fetch_add(1);
            if (i >= cells.size()) return;
            const Cell& cell = cells[i];
            const std::string backend_id =
                backends.reasoning.empty() ? std::string("rule-engine")
                                           : backends.reasoning[cell.backend_index]->backend_id();
            CellResult result;
            result.backend_id = backend_id;
            result.va = cell.va;
            result.scene_id = cell.scene.scene_id;

            const fs::path cache_entry = cache_dir / (cell.cache_key + ".json");
            if (fs::exists(cache_entry)) {
                try {
                    std::ifstream in(cache_entry);
                    nlohmann::json cached_j;
                    in >> cached_j;
                    result.status = "cached";
                    result.package_id = cached_j.at("package_id").get<std::string>();
                    results[i] = std::move(result);
                    continue;
                } catch (...) {
                    // Unreadable cache entry: fall through and recompute.
                }
            }

            try {
                CoTTrace trace;
                if (backends.reasoning.empty()) {
                    trace = run_rule_engine(cell.va, cell.scene, cot_options);
                } else {
                    trace = run_cot(cell.va, cell.scene, *backends.reasoning[cell.backend_index],
                                    cot_options);
                }
                const std::string prompt_text = flatten(*trace.final_prompt);

                GenerationRequest request;
                request.prompt_text = prompt_text;
                request.width = config.panorama_width;
                request.height = config.panorama_height;
                request.panorama = true;
                request.seed = derive_cell_seed(config.seed, cell.cache_key);
                const ImageResult image = backends.image->generate(request);

                const ScenePackage pkg = package(image, trace, cell.scene, config.output_dir);

                result.status = "ok";
                result.package_id = pkg.package_id;
                trace_lines[i] = to_json(trace);

                nlohmann::json cache_record = {{"package_id", pkg.package_id},
                                               {"trace_id", trace.trace_id}};
                std::ofstream out(cache_entry);
                out << cache_record.dump() << "\n";
            } catch (const CoTStepError& e) {
                result.status = "failed";
                result.failed_step = e.step_id();
                result.error = e.what();
                trace_lines[i] = to_json(e.partial_trace());
            } catch (const std::exception& e) {
                result.status = "failed";
                result.error = e.what();
            }
            results[i] = std::move(result);
        }
    };

    const int n_threads = std::min<int>(config.concurrency, static_cast<int>(cells.size()));
    std::vector<std::thread> threads;
    for (int t = 0; t < std::max(1, n_threads); ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();

    RunReport report;
    report.cells = std::move(results);
    for (const auto& c : report.cells) {
        if (c.status == "ok") ++report.ok;
        else if (c.status == "cached") ++report.cached;
        else ++report.failed;
    }
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    // Single-writer output: workers only fill their own slots above.
    std::ofstream runs(config.output_dir / "runs.jsonl", std::ios::app);
    for (const auto& line : trace_lines) {
        if (!line.is_null()) runs << line.dump() << "\n";
    }
    std::ofstream report_out(config.output_dir / "report.json");
    report_out << report.to_json().dump(2) << "\n";
    return report;
}

}  // namespace biometaphor
