#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "biometaphor/base64.hpp"
#include "biometaphor/image.hpp"
#include "biometaphor/metaphor.hpp"
#include "biometaphor/png.hpp"

namespace biometaphor {

/// One engine-loadable skybox package on disk:
///   packages/<scene_id>/<package_id>/{panorama.png, trace.json, manifest.json}
struct ScenePackage {
    std::string package_id;  // hash of (panorama bytes, trace_id)
    std::string scene_id;
    std::string panorama_file;  // relative, forward slashes
    std::string manifest_file;
    std::string trace_id;
    std::string created_at;
    std::filesystem::path root;  // absolute package directory
};

/// Decode a base64 image payload to raw bytes.
std::vector<std::uint8_t> decode_image(const std::string& payload_b64);

/// Dimensions iff the bytes parse as PNG/JPEG with a 2:1 aspect.
ImageDims validate_panorama(const std::vector<std::uint8_t>& bytes);

/// Write panorama + trace + manifest atomically (temp dir then rename) under
/// out_dir/packages/<scene_id>/<package_id>/. Identical inputs give identical
/// package ids; nothing is written when validation fails.
ScenePackage package(const ImageResult& result, const CoTTrace& trace, const SceneContext& scene,
                     const std::filesystem::path& out_dir);

/// Re-check an on-disk package: manifest parses, referenced paths stay inside
/// the package root, panorama decodes at the declared 2:1 dimensions.
ScenePackage load_and_validate_package(const std::filesystem::path& package_dir);

}  // namespace biometaphor
