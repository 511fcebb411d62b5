#pragma once

#include <texsr/camera.hpp>
#include <texsr/formation.hpp>
#include <texsr/geometry.hpp>
#include <texsr/retrieval.hpp>

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace texsr {

inline constexpr int kManifestVersion = 1;

enum class SceneSubset { ETH3D, Collection, MiddleBury, SyB3R, Custom };

std::string_view to_string(SceneSubset subset);
SceneSubset parse_scene_subset(std::string_view text);

/// Files of one resolution level. Paths are relative to the manifest's
/// directory; empty strings mean "not produced yet".
struct ScaleEntry
{
    int scale = 1;
    int atlas_width = 0;
    int atlas_height = 0;
    std::vector<std::string> images;
    std::vector<std::string> cameras;
    std::string texture;
    std::string mask;
    std::string normals;

    bool operator==(const ScaleEntry&) const = default;
};

struct SceneManifest
{
    int format_version = kManifestVersion;
    std::string scene;
    SceneSubset subset = SceneSubset::Custom;
    std::string mesh;
    int atlas_width = 0;
    int atlas_height = 0;
    RetrievalMode retrieval_mode = RetrievalMode::Backprojection;
    std::vector<ScaleEntry> scales;

    /// Directory the relative paths are resolved against (not serialized).
    std::filesystem::path root;

    std::filesystem::path resolve(const std::string& relative) const { return root / relative; }
    const ScaleEntry* find_scale(int scale) const;
    ScaleEntry* find_scale(int scale);
    /// Throws MissingFile when the manifest has no entry for the scale.
    const ScaleEntry& scale_entry(int scale) const;

    /// Field-wise equality; `root` is ignored.
    bool operator==(const SceneManifest& other) const;
};

std::string manifest_to_json(const SceneManifest& manifest);
/// Throws ParseError (with line and column), UnsupportedVersion.
SceneManifest parse_manifest(std::string_view json, const std::string& source_name = "<manifest>");

SceneManifest read_manifest(const std::filesystem::path& path);
/// Writes to a temporary sibling and renames it over the target.
void write_manifest(const std::filesystem::path& path, const SceneManifest& manifest);

/// Checks that the scale-1 entry exists, every referenced file exists
/// (MissingFile naming the path), image and camera sizes at scale s equal
/// floor(HR size / s), and per-scale atlas sizes equal floor(atlas / s).
void validate_manifest(const SceneManifest& manifest);

/// Bicubic (a = -0.5) anti-aliased down-sampling: output pixel x is centered
/// on source coordinate (x + 0.5) * factor - 0.5 and the kernel is stretched
/// by the factor; edge pixels are replicated. Output size is floor(w / f) x
/// floor(h / f), values are clamped to [0, 1]. Throws InvalidFactor unless
/// factor is 2, 3 or 4.
ViewImage downscale_image(const ViewImage& image, int factor);

std::vector<CameraView> load_cameras(const SceneManifest& manifest, const ScaleEntry& entry);
std::vector<ViewImage> load_images(const SceneManifest& manifest, const ScaleEntry& entry);
std::vector<SparseProjectionOperator> build_operators(const TexelAtlasMap& atlas, const TriangleMesh& mesh,
                                                      std::span<const CameraView> cameras,
                                                      const SplatConfig& config = {});

/// Retrieves the texture of one scale from its images and cameras on an atlas
/// of floor(atlas / scale) texels and writes `x<scale>/texture.png` (16-bit)
/// and `x<scale>/mask.png` under the manifest root. The entry's texture and mask
/// paths are updated (relative to the manifest root).
RetrievalResult retrieve_scale(SceneManifest& manifest, int scale, const RetrievalConfig& config,
                               const SplatConfig& splat = {});

/// Derives scale `factor` from the HR level: down-scaled images, cameras
/// with down-scaled intrinsics, and a texture retrieved with the manifest's
/// mode on the reduced atlas. Output is staged in a temporary directory and
/// renamed to `x<factor>` (PartialWrite if that fails); the updated manifest
/// is written to `<root>/manifest.json` and returned.
SceneManifest generate_lr_scene(const SceneManifest& manifest, int factor, const SplatConfig& splat = {},
                                const RetrievalConfig& retrieval = {});

/// Relative directory of a scale level, e.g. "x2".
std::string scale_dir(int scale);

inline constexpr const char* kManifestFileName = "manifest.json";

} // namespace texsr
