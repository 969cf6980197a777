// Command-line surface for the biodata-to-skybox pipeline.
//
// Subcommands: dataset, infer, generate, batch, validate-package.
// Exit codes: 0 ok, 1 usage error, 2 runtime error.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "biometaphor/pipeline.hpp"

using namespace biometaphor;

namespace {

PipelineConfig load_config(const std::string& config_path) {
    if (config_path.empty()) {
        return PipelineConfig{};
    }
    std::ifstream in(config_path);
    if (!in) {
        throw ConfigError("cannot open config file: " + config_path);
    }
    nlohmann::json j;
    in >> j;
    return pipeline_config_from_json(j);
}

SceneContext resolve_scene(const std::string& scene_id, const std::string& scene_file) {
    if (!scene_file.empty()) {
        std::ifstream in(scene_file);
        if (!in) {
            throw ConfigError("cannot open scene file: " + scene_file);
        }
        nlohmann::json j;
        in >> j;
        return scene_context_from_json(j);
    }
    auto scene = builtin_scene(scene_id);
    if (!scene) {
        throw ValidationError("unknown scene id \"" + scene_id +
                              "\"; pass --scene-file for custom scenes");
    }
    return *scene;
}

int cmd_dataset(int count, double center_v, double center_a, double radius) {
    const CircumplexGeometry geometry(VAPair(center_v, center_a), radius);
    nlohmann::json out = nlohmann::json::array();
    for (const auto& pair : prototypical_va_pairs(count, geometry)) {
        out.push_back({pair.valence(), pair.arousal()});
    }
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_infer(double valence, double arousal) {
    const auto state = infer_state(VAPair(valence, arousal));
    std::cout << to_json(state).dump(2) << "\n";
    return 0;
}

struct GenerateArgs {
    double valence = 0.5;
    double arousal = 0.5;
    std::string scene_id = "concert";
    std::string scene_file;
    std::string config_path;
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    bool mock = false;
    bool dry_run = false;
    bool rule_engine = false;
};

int cmd_generate(const GenerateArgs& args) {
    const VAPair va(args.valence, args.arousal);
    const SceneContext scene = resolve_scene(args.scene_id, args.scene_file);

    CoTOptions options;
    if (args.dry_run) {
        StepContext ctx{va, infer_state(va), scene, options.taxonomy, options.chain_mode};
        const ChatRequest req = build_step_prompt(1, ctx);
        std::cout << req.system_text << "\n\n" << req.user_turns.front() << "\n";
        return 0;
    }

    PipelineConfig config = load_config(args.config_path);
    config.output_dir = args.out_dir;
    config.seed = args.seed;
    config.use_rule_engine = args.rule_engine;

    CoTTrace trace;
    std::shared_ptr<ImageBackend> image_backend;
    if (args.rule_engine) {
        trace = run_rule_engine(va, scene, options);
        image_backend = std::make_shared<StubImageBackend>();
    } else {
        if (!args.mock && config.reasoning_backends.empty()) {
            throw ConfigError("no reasoning backend configured; pass --mock or --config");
        }
        auto backends = make_backends(config, args.mock);
        trace = run_cot(va, scene, *backends.reasoning.front(), options);
        image_backend = backends.image;
    }

    GenerationRequest request;
    request.prompt_text = flatten(*trace.final_prompt);
    request.seed = args.seed;
    const ImageResult image = image_backend->generate(request);
    const ScenePackage pkg = package(image, trace, scene, config.output_dir);

    std::cout << nlohmann::json{{"package_id", pkg.package_id},
                                {"scene_id", pkg.scene_id},
                                {"trace_id", pkg.trace_id},
                                {"path", pkg.root.string()}}
                     .dump(2)
              << "\n";
    return 0;
}

int cmd_batch(const std::string& config_path, const std::string& out_dir, bool mock,
              std::optional<std::uint64_t> seed, bool rule_engine) {
    PipelineConfig config = load_config(config_path);
    if (!out_dir.empty()) config.output_dir = out_dir;
    if (seed) config.seed = *seed;
    if (rule_engine) config.use_rule_engine = true;
    if (mock && config.reasoning_backends.empty() && !config.use_rule_engine) {
        // A bare --mock run exercises one scripted backend over the defaults.
        BackendConfig b;
        b.backend_id = "scripted";
        b.model_name = "scripted";
        config.reasoning_backends.push_back(b);
    }

    const auto backends =
        config.use_rule_engine && config.reasoning_backends.empty()
            ? PipelineBackends{{}, std::make_shared<StubImageBackend>()}
            : make_backends(config, mock);
    const RunReport report = run_batch(config, backends);
    std::cout << nlohmann::json{{"cells", report.cells.size()},
                                {"ok", report.ok},
                                {"cached", report.cached},
                                {"failed", report.failed},
                                {"wall_seconds", report.wall_seconds},
                                {"report", (config.output_dir / "report.json").string()}}
                     .dump(2)
              << "\n";
    return report.failed == 0 ? 0 : 2;
}

int cmd_validate_package(const std::string& dir) {
    const ScenePackage pkg = load_and_validate_package(dir);
    std::cout << nlohmann::json{{"package_id", pkg.package_id},
                                {"scene_id", pkg.scene_id},
                                {"trace_id", pkg.trace_id},
                                {"panorama", pkg.panorama_file},
                                {"valid", true}}
                     .dump(2)
              << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Biodata-driven metaphorical skybox generation pipeline"};
    app.require_subcommand(1);

    // dataset
    auto* dataset = app.add_subcommand("dataset", "Print prototypical V-A pairs");
    int count = 8;
    double center_v = 0.5, center_a = 0.5, radius = 0.5;
    dataset->add_option("--count", count, "Number of evenly spaced pairs")
        ->check(CLI::PositiveNumber);
    dataset->add_option("--center-valence", center_v, "Circumplex center valence");
    dataset->add_option("--center-arousal", center_a, "Circumplex center arousal");
    dataset->add_option("--radius", radius, "Circumplex radius");

    // infer
    auto* infer = app.add_subcommand("infer", "Infer the inner state of one V-A pair");
    double valence = 0.5, arousal = 0.5;
    infer->add_option("valence", valence, "Valence in [0,1]")->required();
    infer->add_option("arousal", arousal, "Arousal in [0,1]")->required();

    // generate
    auto* generate = app.add_subcommand("generate", "Run one cell end to end");
    GenerateArgs gen;
    generate->add_option("valence", gen.valence, "Valence in [0,1]")->required();
    generate->add_option("arousal", gen.arousal, "Arousal in [0,1]")->required();
    generate->add_option("--scene", gen.scene_id, "Scene id (gallery, sports, concert)");
    generate->add_option("--scene-file", gen.scene_file, "Custom scene JSON file");
    generate->add_option("--config", gen.config_path, "Pipeline config JSON");
    generate->add_option("--out", gen.out_dir, "Output directory");
    generate->add_option("--seed", gen.seed, "Generation seed");
    generate->add_flag("--mock", gen.mock, "Use scripted reasoning and the stub image backend");
    generate->add_flag("--dry-run", gen.dry_run, "Print the step-1 prompt and exit");
    generate->add_flag("--rule-engine", gen.rule_engine, "Use the rule table instead of an LLM");

    // batch
    auto* batch = app.add_subcommand("batch", "Run the full backend x pair x scene grid");
    std::string batch_config, batch_out;
    std::optional<std::uint64_t> batch_seed;
    bool batch_mock = false, batch_rule = false;
    batch->add_option("--config", batch_config, "Pipeline config JSON");
    batch->add_option("--out", batch_out, "Output directory");
    batch->add_option("--seed", batch_seed, "Global seed");
    batch->add_flag("--mock", batch_mock, "Use scripted reasoning and the stub image backend");
    batch->add_flag("--rule-engine", batch_rule, "Use the rule table instead of an LLM");

    // validate-package
    auto* validate = app.add_subcommand("validate-package", "Check an on-disk scene package");
    std::string package_dir;
    validate->add_option("dir", package_dir, "Package directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*dataset) return cmd_dataset(count, center_v, center_a, radius);
        if (*infer) return cmd_infer(valence, arousal);
        if (*generate) return cmd_generate(gen);
        if (*batch) return cmd_batch(batch_config, batch_out, batch_mock, batch_seed, batch_rule);
        if (*validate) return cmd_validate_package(package_dir);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
