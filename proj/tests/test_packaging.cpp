#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "biometaphor/base64.hpp"
#include "biometaphor/errors.hpp"
#include "biometaphor/packaging.hpp"

using namespace biometaphor;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
    static std::mt19937_64 rng(std::random_device{}());
    const fs::path dir =
        fs::temp_directory_path() / ("biometaphor-test-" + tag + "-" + std::to_string(rng()));
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

CoTTrace demo_trace() {
    return run_rule_engine(VAPair(0.854, 0.854), *builtin_scene("concert"));
}

ImageResult demo_image(const CoTTrace& trace) {
    GenerationRequest req;
    req.prompt_text = flatten(*trace.final_prompt);
    req.width = 128;
    req.height = 64;
    req.seed = 11;
    return stub_generate(req);
}

}  // namespace

TEST_CASE("base64 encodes and decodes reference vectors") {
    // RFC 4648 test vectors.
    CHECK(base64_encode("") == "");
    CHECK(base64_encode("f") == "Zg==");
    CHECK(base64_encode("fo") == "Zm8=");
    CHECK(base64_encode("foo") == "Zm9v");
    CHECK(base64_encode("foobar") == "Zm9vYmFy");

    const auto hello = base64_decode("aGVsbG8=");
    CHECK(std::string(hello.begin(), hello.end()) == "hello");
}

TEST_CASE("base64 decode names the offset of the first illegal character") {
    try {
        base64_decode("Zm9v!mFy");
        FAIL("expected DecodeError");
    } catch (const DecodeError& e) {
        CHECK(std::string(e.what()).find("4") != std::string::npos);
    }
    CHECK_THROWS_AS(base64_decode("Zg="), DecodeError);   // bad padding length
    CHECK_THROWS_AS(base64_decode("Z===") , DecodeError);
}

TEST_CASE("base64 round trips a megabyte of arbitrary bytes") {
    std::mt19937_64 rng(2024);
    std::vector<std::uint8_t> data(1 << 20);
    for (auto& b : data) b = static_cast<std::uint8_t>(rng() & 0xFF);
    const auto text = base64_encode(data);
    CHECK(base64_decode(text) == data);
}

TEST_CASE("validate_panorama enforces the 2:1 aspect") {
    std::vector<std::uint8_t> rgb(64 * 32 * 3, 0x40);
    const auto good = png_encode_rgb(rgb, 64, 32);
    const auto dims = validate_panorama(good);
    CHECK(dims.width == 64);

    std::vector<std::uint8_t> square_rgb(32 * 32 * 3, 0x40);
    const auto square = png_encode_rgb(square_rgb, 32, 32);
    CHECK_THROWS_AS(validate_panorama(square), ValidationError);
    CHECK_THROWS_AS(validate_panorama({0x01, 0x02}), DecodeError);
}

TEST_CASE("package writes the content-addressed layout") {
    DirGuard out(fresh_dir("layout"));
    const auto trace = demo_trace();
    const auto image = demo_image(trace);
    const auto pkg = package(image, trace, trace.scene, out.dir);

    CHECK(pkg.scene_id == "concert");
    CHECK(pkg.trace_id == trace.trace_id);
    CHECK(pkg.package_id.size() == 64);
    CHECK(pkg.root == out.dir / "packages" / "concert" / pkg.package_id);
    CHECK(fs::exists(pkg.root / "panorama.png"));
    CHECK(fs::exists(pkg.root / "trace.json"));
    CHECK(fs::exists(pkg.root / "manifest.json"));

    // No stray temp staging directories remain.
    for (const auto& entry : fs::directory_iterator(pkg.root.parent_path())) {
        CHECK(entry.path().filename().string().rfind(".tmp-", 0) != 0);
    }

    std::ifstream in(pkg.root / "manifest.json");
    nlohmann::json manifest;
    in >> manifest;
    CHECK(manifest.at("package_id") == pkg.package_id);
    CHECK(manifest.at("image").at("width") == 128);
    CHECK(manifest.at("image").at("height") == 64);
    CHECK(manifest.at("va").at("valence") == doctest::Approx(0.854));
}

TEST_CASE("packaging the same inputs twice is idempotent") {
    DirGuard out(fresh_dir("idempotent"));
    const auto trace = demo_trace();
    const auto image = demo_image(trace);
    const auto first = package(image, trace, trace.scene, out.dir);
    const auto second = package(image, trace, trace.scene, out.dir);
    CHECK(first.package_id == second.package_id);
    CHECK(first.root == second.root);

    size_t package_dirs = 0;
    for (const auto& entry : fs::directory_iterator(out.dir / "packages" / "concert")) {
        (void)entry;
        ++package_dirs;
    }
    CHECK(package_dirs == 1);
}

TEST_CASE("package ids do not depend on the output location") {
    DirGuard a(fresh_dir("loc-a"));
    DirGuard b(fresh_dir("loc-b"));
    const auto trace = demo_trace();
    const auto image = demo_image(trace);
    CHECK(package(image, trace, trace.scene, a.dir).package_id ==
          package(image, trace, trace.scene, b.dir).package_id);
}

TEST_CASE("package rejects a non-panoramic image and writes nothing") {
    DirGuard out(fresh_dir("reject"));
    const auto trace = demo_trace();
    GenerationRequest req;
    req.prompt_text = "square";
    req.panorama = false;
    req.width = 32;
    req.height = 32;
    const auto square = stub_generate(req);
    CHECK_THROWS_AS(package(square, trace, trace.scene, out.dir), ValidationError);
    CHECK_FALSE(fs::exists(out.dir / "packages" / "concert"));
}

TEST_CASE("load_and_validate_package round trips a written package") {
    DirGuard out(fresh_dir("load"));
    const auto trace = demo_trace();
    const auto pkg = package(demo_image(trace), trace, trace.scene, out.dir);
    const auto loaded = load_and_validate_package(pkg.root);
    CHECK(loaded.package_id == pkg.package_id);
    CHECK(loaded.scene_id == "concert");
    CHECK(loaded.trace_id == trace.trace_id);
    CHECK(loaded.panorama_file == "panorama.png");
}

TEST_CASE("validation rejects manifest paths escaping the package root") {
    DirGuard out(fresh_dir("traversal"));
    const auto trace = demo_trace();
    const auto pkg = package(demo_image(trace), trace, trace.scene, out.dir);

    std::ifstream in(pkg.root / "manifest.json");
    nlohmann::json manifest;
    in >> manifest;
    in.close();

    auto rewrite = [&](const nlohmann::json& m) {
        std::ofstream outf(pkg.root / "manifest.json");
        outf << m.dump(2) << "\n";
    };

    auto traversal = manifest;
    traversal["image"]["file"] = "../../../etc/passwd";
    rewrite(traversal);
    CHECK_THROWS_AS(load_and_validate_package(pkg.root), ValidationError);

    auto absolute = manifest;
    absolute["trace_file"] = "/etc/passwd";
    rewrite(absolute);
    CHECK_THROWS_AS(load_and_validate_package(pkg.root), ValidationError);

    rewrite(manifest);
    CHECK_NOTHROW(load_and_validate_package(pkg.root));
}

TEST_CASE("validation rejects a manifest whose declared dimensions mismatch") {
    DirGuard out(fresh_dir("dims"));
    const auto trace = demo_trace();
    const auto pkg = package(demo_image(trace), trace, trace.scene, out.dir);

    std::ifstream in(pkg.root / "manifest.json");
    nlohmann::json manifest;
    in >> manifest;
    in.close();
    manifest["image"]["width"] = 9999;
    std::ofstream outf(pkg.root / "manifest.json");
    outf << manifest.dump(2) << "\n";
    outf.close();
    CHECK_THROWS_AS(load_and_validate_package(pkg.root), ValidationError);
}
