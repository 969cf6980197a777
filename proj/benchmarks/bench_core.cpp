#include <benchmark/benchmark.h>

#include <random>

#include "biometaphor/hash.hpp"
#include "biometaphor/image.hpp"
#include "biometaphor/metaphor.hpp"
#include "biometaphor/prompt.hpp"

using namespace biometaphor;

namespace {

void BM_InferState(benchmark::State& state) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(infer_state(VAPair(dist(rng), dist(rng))));
    }
}
BENCHMARK(BM_InferState);

void BM_PolarRoundTrip(benchmark::State& state) {
    const CircumplexGeometry g;
    double theta = 0.0;
    for (auto _ : state) {
        theta += 0.37;
        if (theta >= 360.0) theta -= 360.0;
        benchmark::DoNotOptimize(polar_of(g.point_at(theta), g));
    }
}
BENCHMARK(BM_PolarRoundTrip);

void BM_Flatten(benchmark::State& state) {
    const LayeredPrompt p{
        "a virtual concert stage with performers and a gathered crowd",
        {"subtle star-like sparkles among the audience", "softly rising wisps of light"},
        {"vibrant colors", "high energy yet harmonious atmosphere", "cinematic lighting"}};
    for (auto _ : state) {
        benchmark::DoNotOptimize(flatten(p));
    }
}
BENCHMARK(BM_Flatten);

void BM_ValidateStep2(benchmark::State& state) {
    const auto fixture = make_demo_fixture();
    const std::string raw = fixture.lookup(2, "excitement", "concert");
    for (auto _ : state) {
        benchmark::DoNotOptimize(validate_step_output(2, raw));
    }
}
BENCHMARK(BM_ValidateStep2);

void BM_RuleEngineChain(benchmark::State& state) {
    const auto scene = *builtin_scene("concert");
    const VAPair va(0.854, 0.854);
    for (auto _ : state) {
        benchmark::DoNotOptimize(run_rule_engine(va, scene));
    }
}
BENCHMARK(BM_RuleEngineChain);

void BM_Sha256_4K(benchmark::State& state) {
    const std::string data(4096, 'x');
    for (auto _ : state) {
        benchmark::DoNotOptimize(sha256_hex(data));
    }
    state.SetBytesProcessed(static_cast<int64_t>(state.iterations()) * 4096);
}
BENCHMARK(BM_Sha256_4K);

void BM_StubPanorama(benchmark::State& state) {
    GenerationRequest req;
    req.prompt_text = "benchmark prompt";
    req.width = static_cast<int>(state.range(0));
    req.height = static_cast<int>(state.range(0) / 2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(stub_generate(req));
    }
}
BENCHMARK(BM_StubPanorama)->Arg(256)->Arg(1024)->Arg(2048)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
