#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "biometaphor/errors.hpp"
#include "biometaphor/pipeline.hpp"

using namespace biometaphor;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
    static std::mt19937_64 rng(std::random_device{}());
    const fs::path dir =
        fs::temp_directory_path() / ("biometaphor-pipe-" + tag + "-" + std::to_string(rng()));
    fs::create_directories(dir);
    return dir;
}

struct DirGuard {
    fs::path dir;
    explicit DirGuard(fs::path d) : dir(std::move(d)) {}
    ~DirGuard() {
        std::error_code ec;
        fs::remove_all(dir, ec);
    }
};

PipelineConfig mock_config(const fs::path& out_dir, int backends = 1) {
    PipelineConfig config;
    for (int i = 0; i < backends; ++i) {
        BackendConfig b;
        b.backend_id = "scripted-" + std::to_string(i);
        b.model_name = "scripted";
        config.reasoning_backends.push_back(b);
    }
    config.output_dir = out_dir;
    config.panorama_width = 128;  // keep the stub render cheap
    config.panorama_height = 64;
    return config;
}

}  // namespace

TEST_CASE("config resolves the dataset from a count or explicit pairs") {
    PipelineConfig config = mock_config(fs::temp_directory_path());
    CHECK(config.resolve_dataset().size() == 8);

    config.dataset_count = 4;
    CHECK(config.resolve_dataset().size() == 4);

    config.dataset_pairs = {VAPair(0.2, 0.8)};
    CHECK(config.resolve_dataset().size() == 1);

    config.dataset_pairs.clear();
    config.dataset_count.reset();
    CHECK_THROWS_AS(config.resolve_dataset(), ConfigError);
}

TEST_CASE("config json parsing covers chain mode and dataset shapes") {
    const nlohmann::json j = {
        {"reasoning_backends",
         {{{"backend_id", "b0"}, {"model_name", "m0"}, {"temperature", 1.3}}}},
        {"dataset", {{"pairs", {{{"valence", 0.854}, {"arousal", 0.854}}}}}},
        {"chain_mode", "isolated"},
        {"seed", 9},
        {"concurrency", 3},
    };
    const auto config = pipeline_config_from_json(j);
    CHECK(config.reasoning_backends.size() == 1);
    CHECK(config.reasoning_backends[0].temperature == doctest::Approx(1.3));
    CHECK(config.chain_mode == ChainMode::Isolated);
    CHECK(config.seed == 9);
    CHECK(config.concurrency == 3);
    CHECK(config.resolve_dataset().size() == 1);

    CHECK_THROWS_AS(pipeline_config_from_json({{"chain_mode", "telepathic"}}), ConfigError);
}

TEST_CASE("cell cache keys react to every cache-relevant input") {
    const auto config = mock_config(fs::temp_directory_path());
    const auto scene = *builtin_scene("concert");
    const VAPair va(0.854, 0.854);
    const auto base = cell_cache_key(config, "b0", "m0", 1.0, va, scene);
    CHECK(base == cell_cache_key(config, "b0", "m0", 1.0, va, scene));  // stable

    CHECK(base != cell_cache_key(config, "b1", "m0", 1.0, va, scene));
    CHECK(base != cell_cache_key(config, "b0", "m1", 1.0, va, scene));
    CHECK(base != cell_cache_key(config, "b0", "m0", 0.7, va, scene));
    CHECK(base != cell_cache_key(config, "b0", "m0", 1.0, VAPair(0.146, 0.146), scene));
    CHECK(base != cell_cache_key(config, "b0", "m0", 1.0, va, *builtin_scene("gallery")));

    auto reseeded = config;
    reseeded.seed = 99;
    CHECK(base != cell_cache_key(reseeded, "b0", "m0", 1.0, va, scene));
    auto retemplated = config;
    retemplated.template_version = "2";
    CHECK(base != cell_cache_key(retemplated, "b0", "m0", 1.0, va, scene));
}

TEST_CASE("cell seeds derive deterministically and spread across cells") {
    const auto a = derive_cell_seed(0, "key-a");
    CHECK(a == derive_cell_seed(0, "key-a"));
    CHECK(a != derive_cell_seed(1, "key-a"));
    CHECK(a != derive_cell_seed(0, "key-b"));
}

TEST_CASE("mock batch runs all 24 cells offline and writes the artifacts") {
    DirGuard out(fresh_dir("batch"));
    auto config = mock_config(out.dir);
    const auto backends = make_backends(config, /*mock=*/true);
    const auto report = run_batch(config, backends);

    CHECK(report.cells.size() == 24);  // 1 backend x 8 pairs x 3 scenes
    CHECK(report.ok == 24);
    CHECK(report.cached == 0);
    CHECK(report.failed == 0);

    std::set<std::string> package_ids;
    for (const auto& cell : report.cells) {
        CHECK(cell.status == "ok");
        CHECK(cell.package_id.size() == 64);
        package_ids.insert(cell.package_id);
        const fs::path pkg_root =
            out.dir / "packages" / cell.scene_id / cell.package_id;
        CHECK_NOTHROW(load_and_validate_package(pkg_root));
    }
    CHECK(package_ids.size() == 24);  // every cell yields a distinct package

    CHECK(fs::exists(out.dir / "report.json"));
    std::ifstream report_in(out.dir / "report.json");
    nlohmann::json report_json;
    report_in >> report_json;
    CHECK(report_json.at("cells").size() == 24);
    CHECK(report_json.at("ok") == 24);

    // Every runs.jsonl line parses back into a full trace.
    std::ifstream runs(out.dir / "runs.jsonl");
    REQUIRE(runs);
    std::string line;
    int lines = 0;
    while (std::getline(runs, line)) {
        const auto trace = trace_from_json(nlohmann::json::parse(line));
        CHECK(trace.steps.size() == 4);
        ++lines;
    }
    CHECK(lines == 24);
}

TEST_CASE("a rerun serves every cell from the cache without backend calls") {
    DirGuard out(fresh_dir("cache"));
    auto config = mock_config(out.dir);
    const auto backends = make_backends(config, /*mock=*/true);

    const auto first = run_batch(config, backends);
    CHECK(first.ok == 24);
    const auto reasoning_calls = backends.reasoning.front()->call_count();
    const auto image_calls = backends.image->call_count();
    CHECK(reasoning_calls == 24 * 4);

    const auto second = run_batch(config, backends);
    CHECK(second.cached == 24);
    CHECK(second.ok == 0);
    CHECK(backends.reasoning.front()->call_count() == reasoning_calls);
    CHECK(backends.image->call_count() == image_calls);

    // Cached cells report the same package ids as the first run.
    std::set<std::string> first_ids, second_ids;
    for (const auto& c : first.cells) first_ids.insert(c.package_id);
    for (const auto& c : second.cells) second_ids.insert(c.package_id);
    CHECK(first_ids == second_ids);

    // A seed change invalidates the whole cache.
    config.seed = 7;
    const auto reseeded = run_batch(config, backends);
    CHECK(reseeded.ok == 24);
    CHECK(reseeded.cached == 0);
}

TEST_CASE("two backends fan out to 48 cells") {
    DirGuard out(fresh_dir("fanout"));
    auto config = mock_config(out.dir, /*backends=*/2);
    const auto backends = make_backends(config, /*mock=*/true);
    const auto report = run_batch(config, backends);
    CHECK(report.cells.size() == 48);
    CHECK(report.ok == 48);
    std::set<std::string> ids;
    for (const auto& cell : report.cells) ids.insert(cell.backend_id);
    CHECK(ids == std::set<std::string>{"scripted-0", "scripted-1"});
}

TEST_CASE("a failing cell stays isolated from its siblings") {
    DirGuard out(fresh_dir("isolation"));
    auto config = mock_config(out.dir);

    // A fixture whose step-2 entry for one octant/scene never validates.
    ScriptedFixture broken;
    const auto full = make_demo_fixture();
    const auto table = OctantTable::standard();
    for (int step = 1; step <= 4; ++step) {
        for (const auto& entry : table.entries()) {
            for (const auto& scene : builtin_scenes()) {
                std::string body = full.lookup(step, entry.label, scene.scene_id);
                if (step == 2 && entry.label == "excitement" && scene.scene_id == "concert") {
                    body = "no structured block in this answer";
                }
                broken.add(step, entry.label, scene.scene_id, body);
            }
        }
    }
    PipelineBackends backends;
    backends.reasoning.push_back(make_scripted("scripted-0", std::move(broken)));
    backends.image = std::make_shared<StubImageBackend>();

    const auto report = run_batch(config, backends);
    CHECK(report.cells.size() == 24);
    CHECK(report.failed == 1);
    CHECK(report.ok == 23);
    for (const auto& cell : report.cells) {
        if (cell.status == "failed") {
            CHECK(cell.scene_id == "concert");
            CHECK(cell.failed_step == 2);
            CHECK(cell.package_id.empty());
            CHECK_FALSE(cell.error.empty());
        }
    }

    // The partial trace of the failed cell still lands in runs.jsonl.
    std::ifstream runs(out.dir / "runs.jsonl");
    std::string line;
    int lines = 0, partial = 0;
    while (std::getline(runs, line)) {
        const auto j = nlohmann::json::parse(line);
        if (j.at("final_prompt").is_null()) ++partial;
        ++lines;
    }
    CHECK(lines == 24);
    CHECK(partial == 1);
}

TEST_CASE("rule-engine batches run without any reasoning backend") {
    DirGuard out(fresh_dir("rule"));
    PipelineConfig config;
    config.use_rule_engine = true;
    config.output_dir = out.dir;
    config.panorama_width = 128;
    config.panorama_height = 64;
    config.dataset_count = 4;

    PipelineBackends backends;
    backends.image = std::make_shared<StubImageBackend>();
    const auto report = run_batch(config, backends);
    CHECK(report.cells.size() == 12);
    CHECK(report.ok == 12);
    for (const auto& cell : report.cells) CHECK(cell.backend_id == "rule-engine");
}

TEST_CASE("run_batch validates its inputs") {
    PipelineConfig config;  // no backends, no rule engine
    config.output_dir = fs::temp_directory_path() / "biometaphor-unused";
    PipelineBackends backends;
    backends.image = std::make_shared<StubImageBackend>();
    CHECK_THROWS_AS(run_batch(config, backends), ConfigError);

    auto ok_config = mock_config(fs::temp_directory_path() / "biometaphor-unused2");
    const auto ok_backends = make_backends(ok_config, true);
    PipelineBackends no_image{ok_backends.reasoning, nullptr};
    CHECK_THROWS_AS(run_batch(ok_config, no_image), ConfigError);
}
