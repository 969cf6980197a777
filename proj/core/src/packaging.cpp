#include "biometaphor/packaging.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <random>

#include "biometaphor/errors.hpp"
#include "biometaphor/hash.hpp"

namespace biometaphor {

namespace fs = std::filesystem;

namespace {

std::string utc_now_rfc3339() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) {
        throw Error("short write to " + path.string());
    }
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot read " + path.string());
    }
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

/// A relative path that stays inside the package root: no absolute paths,
/// no leading-or-embedded parent traversal.
void check_contained(const std::string& rel) {
    fs::path p(rel);
    if (p.is_absolute()) {
        throw ValidationError("manifest path must be relative: " + rel);
    }
    for (const auto& part : p) {
        if (part == "..") {
            throw ValidationError("manifest path escapes the package root: " + rel);
        }
    }
}

}  // namespace

std::vector<std::uint8_t> decode_image(const std::string& payload_b64) {
    return base64_decode(payload_b64);
}

ImageDims validate_panorama(const std::vector<std::uint8_t>& bytes) {
    const auto dims = image_dims(bytes);
    if (dims.width != 2 * dims.height) {
        throw ValidationError("panorama aspect must be 2:1, got " + std::to_string(dims.width) +
                              "x" + std::to_string(dims.height));
    }
    return dims;
}

ScenePackage package(const ImageResult& result, const CoTTrace& trace, const SceneContext& scene,
                     const fs::path& out_dir) {
    scene.validate();
    const auto bytes = decode_image(result.payload_b64);
    const auto dims = validate_panorama(bytes);

    const std::string panorama_name = result.format == "jpeg" ? "panorama.jpg" : "panorama.png";
    const std::string bytes_view(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    const std::string package_id = sha256_hex(bytes_view + "|" + trace.trace_id);

    ScenePackage pkg;
    pkg.package_id = package_id;
    pkg.scene_id = scene.scene_id;
    pkg.panorama_file = panorama_name;
    pkg.manifest_file = "manifest.json";
    pkg.trace_id = trace.trace_id;
    pkg.created_at = utc_now_rfc3339();
    pkg.root = out_dir / "packages" / scene.scene_id / package_id;

    nlohmann::json manifest = {
        {"package_id", package_id},
        {"scene_id", scene.scene_id},
        {"va", {{"valence", trace.va.valence()}, {"arousal", trace.va.arousal()}}},
        {"prompt", trace.final_prompt ? to_json(*trace.final_prompt) : nlohmann::json(nullptr)},
        {"backends", {{"reasoning", trace.backend_id}, {"image", result.backend_id}}},
        {"image",
         {{"file", panorama_name},
          {"width", dims.width},
          {"height", dims.height},
          {"format", result.format},
          {"seed", result.seed_used}}},
        {"trace_file", "trace.json"},
        {"created_at", pkg.created_at},
    };

    // Stage in a sibling temp dir, then rename into place.
    fs::create_directories(pkg.root.parent_path());
    std::mt19937_64 rng(std::random_device{}());
    const fs::path tmp = pkg.root.parent_path() / (".tmp-" + package_id.substr(0, 12) + "-" +
                                                   std::to_string(rng()));
    try {
        fs::create_directories(tmp);
        write_file(tmp / panorama_name, bytes_view);
        write_file(tmp / "trace.json", to_json(trace).dump(2) + "\n");
        write_file(tmp / "manifest.json", manifest.dump(2) + "\n");
        if (fs::exists(pkg.root)) {
            // Content-addressed: an existing directory already holds this package.
            fs::remove_all(tmp);
        } else {
            fs::rename(tmp, pkg.root);
        }
    } catch (...) {
        std::error_code ec;
        fs::remove_all(tmp, ec);
        throw;
    }
    return pkg;
}

ScenePackage load_and_validate_package(const fs::path& package_dir) {
    const auto manifest_path = package_dir / "manifest.json";
    nlohmann::json manifest = nlohmann::json::parse(read_file(manifest_path));

    ScenePackage pkg;
    pkg.package_id = manifest.at("package_id").get<std::string>();
    pkg.scene_id = manifest.at("scene_id").get<std::string>();
    pkg.panorama_file = manifest.at("image").at("file").get<std::string>();
    pkg.manifest_file = "manifest.json";
    pkg.created_at = manifest.value("created_at", std::string{});
    pkg.root = fs::absolute(package_dir);

    check_contained(pkg.panorama_file);
    const std::string trace_file = manifest.at("trace_file").get<std::string>();
    check_contained(trace_file);

    const auto image_bytes_str = read_file(package_dir / pkg.panorama_file);
    std::vector<std::uint8_t> bytes(image_bytes_str.begin(), image_bytes_str.end());
    const auto dims = validate_panorama(bytes);
    if (dims.width != manifest.at("image").at("width").get<int>() ||
        dims.height != manifest.at("image").at("height").get<int>()) {
        throw ValidationError("panorama dimensions do not match the manifest");
    }

    const auto trace = trace_from_json(nlohmann::json::parse(read_file(package_dir / trace_file)));
    pkg.trace_id = trace.trace_id;
    return pkg;
}

}  // namespace biometaphor
