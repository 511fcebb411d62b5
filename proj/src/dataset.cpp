#include <texsr/dataset.hpp>

#include <texsr/error.hpp>
#include <texsr/image_io.hpp>
#include <texsr/parallel.hpp>

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace texsr {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

std::string_view to_string(SceneSubset subset)
{
    switch (subset) {
    case SceneSubset::ETH3D: return "ETH3D";
    case SceneSubset::Collection: return "Collection";
    case SceneSubset::MiddleBury: return "MiddleBury";
    case SceneSubset::SyB3R: return "SyB3R";
    case SceneSubset::Custom: return "custom";
    }
    return "custom";
}

SceneSubset parse_scene_subset(std::string_view text)
{
    for (SceneSubset s :
         {SceneSubset::ETH3D, SceneSubset::Collection, SceneSubset::MiddleBury, SceneSubset::SyB3R, SceneSubset::Custom}) {
        if (text == to_string(s)) return s;
    }
    fail(ErrorCode::ParseError, "unknown subset '" + std::string(text) + "'");
}

std::string scale_dir(int scale)
{
    return "x" + std::to_string(scale);
}

const ScaleEntry* SceneManifest::find_scale(int scale) const
{
    for (const auto& e : scales) {
        if (e.scale == scale) return &e;
    }
    return nullptr;
}

ScaleEntry* SceneManifest::find_scale(int scale)
{
    for (auto& e : scales) {
        if (e.scale == scale) return &e;
    }
    return nullptr;
}

const ScaleEntry& SceneManifest::scale_entry(int scale) const
{
    const ScaleEntry* e = find_scale(scale);
    if (!e) fail(ErrorCode::MissingFile, "manifest of '" + scene + "' has no x" + std::to_string(scale) + " entry");
    return *e;
}

bool SceneManifest::operator==(const SceneManifest& other) const
{
    return format_version == other.format_version && scene == other.scene && subset == other.subset &&
           mesh == other.mesh && atlas_width == other.atlas_width && atlas_height == other.atlas_height &&
           retrieval_mode == other.retrieval_mode && scales == other.scales;
}

std::string manifest_to_json(const SceneManifest& m)
{
    Json j;
    j["format_version"] = m.format_version;
    j["scene"] = m.scene;
    j["subset"] = std::string(to_string(m.subset));
    j["mesh"] = m.mesh;
    j["atlas"] = {{"width", m.atlas_width}, {"height", m.atlas_height}};
    j["retrieval_mode"] = std::string(to_string(m.retrieval_mode));
    j["scales"] = Json::array();
    for (const auto& e : m.scales) {
        Json s;
        s["scale"] = e.scale;
        s["atlas"] = {{"width", e.atlas_width}, {"height", e.atlas_height}};
        s["images"] = e.images;
        s["cameras"] = e.cameras;
        if (!e.texture.empty()) s["texture"] = e.texture;
        if (!e.mask.empty()) s["mask"] = e.mask;
        if (!e.normals.empty()) s["normals"] = e.normals;
        j["scales"].push_back(std::move(s));
    }
    return j.dump(2) + "\n";
}

namespace {

// The version may be written as a number or as a decimal string.
int read_version(const Json& value, const std::string& source_name)
{
    if (value.is_number_integer()) return value.get<int>();
    if (value.is_string()) {
        const auto text = value.get<std::string>();
        int version = 0;
        const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), version);
        if (ec == std::errc() && end == text.data() + text.size()) return version;
    }
    fail(ErrorCode::ParseError, source_name + ": format_version must be an integer");
}

} // namespace

SceneManifest parse_manifest(std::string_view text, const std::string& source_name)
{
    Json j;
    try {
        j = Json::parse(text.begin(), text.end());
    } catch (const Json::parse_error& e) {
        fail(ErrorCode::ParseError, source_name + ": " + e.what());
    }

    SceneManifest m;
    try {
        m.format_version = read_version(j.at("format_version"), source_name);
        if (m.format_version != kManifestVersion) {
            fail(ErrorCode::UnsupportedVersion, source_name + ": format version " + std::to_string(m.format_version));
        }
        m.scene = j.at("scene").get<std::string>();
        m.subset = parse_scene_subset(j.at("subset").get<std::string>());
        m.mesh = j.at("mesh").get<std::string>();
        m.atlas_width = j.at("atlas").at("width").get<int>();
        m.atlas_height = j.at("atlas").at("height").get<int>();
        m.retrieval_mode = parse_retrieval_mode(j.at("retrieval_mode").get<std::string>());
        for (const auto& s : j.at("scales")) {
            ScaleEntry e;
            e.scale = s.at("scale").get<int>();
            e.atlas_width = s.at("atlas").at("width").get<int>();
            e.atlas_height = s.at("atlas").at("height").get<int>();
            e.images = s.at("images").get<std::vector<std::string>>();
            e.cameras = s.at("cameras").get<std::vector<std::string>>();
            e.texture = s.value("texture", std::string());
            e.mask = s.value("mask", std::string());
            e.normals = s.value("normals", std::string());
            m.scales.push_back(std::move(e));
        }
    } catch (const Json::exception& e) {
        fail(ErrorCode::ParseError, source_name + ": " + e.what());
    } catch (const Error& e) {
        if (e.code() == ErrorCode::UnsupportedVersion) throw;
        fail(ErrorCode::ParseError, source_name + ": " + e.what());
    }
    return m;
}

SceneManifest read_manifest(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::FileNotFound, path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    SceneManifest m = parse_manifest(buffer.str(), path.string());
    m.root = path.parent_path();
    return m;
}

void write_manifest(const fs::path& path, const SceneManifest& manifest)
{
    const fs::path tmp = fs::path(path).concat(".tmp");
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) fail(ErrorCode::IoError, "cannot write " + tmp.string());
        out << manifest_to_json(manifest);
        if (!out) fail(ErrorCode::IoError, "cannot write " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        fail(ErrorCode::PartialWrite, "cannot move manifest into place at " + path.string());
    }
}

namespace {

void require_file(const SceneManifest& m, const std::string& relative)
{
    if (relative.empty()) return;
    const fs::path p = m.resolve(relative);
    if (!fs::is_regular_file(p)) fail(ErrorCode::MissingFile, p.string());
}

} // namespace

void validate_manifest(const SceneManifest& m)
{
    const ScaleEntry* hr = m.find_scale(1);
    if (!hr) fail(ErrorCode::MissingFile, "manifest of '" + m.scene + "' has no x1 entry");
    require_file(m, m.mesh);
    if (m.atlas_width < 1 || m.atlas_height < 1) fail(ErrorCode::InvalidSize, "manifest atlas size must be positive");

    std::vector<PngHeader> hr_sizes;
    for (const auto& image : hr->images) {
        require_file(m, image);
        hr_sizes.push_back(read_png_header(m.resolve(image)));
    }
    for (const auto& e : m.scales) {
        if (e.scale < 1 || e.scale > 4) fail(ErrorCode::InvalidFactor, "manifest scale " + std::to_string(e.scale));
        if (e.images.size() != e.cameras.size() || e.images.size() != hr->images.size()) {
            fail(ErrorCode::ViewMismatch, scale_dir(e.scale) + " lists " + std::to_string(e.images.size()) +
                                              " images and " + std::to_string(e.cameras.size()) + " cameras");
        }
        if (e.atlas_width != m.atlas_width / e.scale || e.atlas_height != m.atlas_height / e.scale) {
            fail(ErrorCode::DimensionMismatch, scale_dir(e.scale) + " atlas size is not floor(atlas / scale)");
        }
        for (const auto* file : {&e.texture, &e.mask, &e.normals}) require_file(m, *file);
        for (std::size_t v = 0; v < e.images.size(); ++v) {
            require_file(m, e.images[v]);
            require_file(m, e.cameras[v]);
            const PngHeader size = read_png_header(m.resolve(e.images[v]));
            if (size.width != hr_sizes[v].width / e.scale || size.height != hr_sizes[v].height / e.scale) {
                fail(ErrorCode::DimensionMismatch, e.images[v] + " is not floor(HR size / " +
                                                       std::to_string(e.scale) + ")");
            }
            const CameraView cam = read_camera(m.resolve(e.cameras[v]));
            if (cam.width != size.width || cam.height != size.height) {
                fail(ErrorCode::DimensionMismatch, e.cameras[v] + " size differs from " + e.images[v]);
            }
        }
        if (!e.texture.empty()) {
            const PngHeader t = read_png_header(m.resolve(e.texture));
            if (t.width != e.atlas_width || t.height != e.atlas_height) {
                fail(ErrorCode::DimensionMismatch, e.texture + " does not match the atlas size");
            }
        }
    }
}

namespace {

struct Contribution
{
    int first = 0;                 // unclamped index of the first tap
    std::vector<double> weights;   // normalized
};

double cubic(double x)
{
    constexpr double a = -0.5;
    x = std::abs(x);
    if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
    if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
    return 0.0;
}

std::vector<Contribution> downscale_contributions(int out_size, int factor)
{
    std::vector<Contribution> out(out_size);
    const double support = 2.0 * factor;
    for (int x = 0; x < out_size; ++x) {
        const double center = (x + 0.5) * factor - 0.5;
        Contribution& c = out[x];
        c.first = static_cast<int>(std::ceil(center - support));
        const int last = static_cast<int>(std::floor(center + support));
        double sum = 0.0;
        for (int i = c.first; i <= last; ++i) {
            c.weights.push_back(cubic((i - center) / factor));
            sum += c.weights.back();
        }
        for (double& w : c.weights) w /= sum;
    }
    return out;
}

} // namespace

ViewImage downscale_image(const ViewImage& image, int factor)
{
    if (factor < 2 || factor > 4) fail(ErrorCode::InvalidFactor, "down-scaling factor " + std::to_string(factor));
    const int out_w = image.width / factor;
    const int out_h = image.height / factor;
    if (out_w < 1 || out_h < 1) fail(ErrorCode::InvalidSize, "image too small for factor " + std::to_string(factor));
    const auto cols = downscale_contributions(out_w, factor);
    const auto rows = downscale_contributions(out_h, factor);

    // Horizontal pass, then vertical. An output pixel is covered when every
    // tap with a non-zero weight is.
    std::vector<Color> tmp(std::size_t(out_w) * image.height, Color::Zero());
    std::vector<std::uint8_t> tmp_cov(tmp.size(), 0);
    parallel_for(0, std::size_t(image.height), [&](std::size_t y) {
        for (int x = 0; x < out_w; ++x) {
            Color c = Color::Zero();
            std::uint8_t cov = 1;
            for (std::size_t k = 0; k < cols[x].weights.size(); ++k) {
                const int sx = std::clamp(cols[x].first + static_cast<int>(k), 0, image.width - 1);
                c += cols[x].weights[k] * image.rgb[y * image.width + sx];
                if (cols[x].weights[k] != 0.0) cov &= image.coverage[y * image.width + sx];
            }
            tmp[y * out_w + x] = c;
            tmp_cov[y * out_w + x] = cov;
        }
    });
    ViewImage out = make_view_image(out_w, out_h);
    parallel_for(0, std::size_t(out_h), [&](std::size_t y) {
        for (int x = 0; x < out_w; ++x) {
            Color c = Color::Zero();
            std::uint8_t cov = 1;
            for (std::size_t k = 0; k < rows[y].weights.size(); ++k) {
                const int sy = std::clamp(rows[y].first + static_cast<int>(k), 0, image.height - 1);
                c += rows[y].weights[k] * tmp[std::size_t(sy) * out_w + x];
                if (rows[y].weights[k] != 0.0) cov &= tmp_cov[std::size_t(sy) * out_w + x];
            }
            out.rgb[y * out_w + x] = c.cwiseMax(0.0).cwiseMin(1.0);
            out.coverage[y * out_w + x] = cov;
        }
    });
    return out;
}

std::vector<CameraView> load_cameras(const SceneManifest& manifest, const ScaleEntry& entry)
{
    std::vector<CameraView> cams;
    for (const auto& c : entry.cameras) cams.push_back(read_camera(manifest.resolve(c)));
    return cams;
}

std::vector<ViewImage> load_images(const SceneManifest& manifest, const ScaleEntry& entry)
{
    std::vector<ViewImage> images;
    for (const auto& i : entry.images) images.push_back(read_view_image(manifest.resolve(i)));
    return images;
}

std::vector<SparseProjectionOperator> build_operators(const TexelAtlasMap& atlas, const TriangleMesh& mesh,
                                                      std::span<const CameraView> cameras, const SplatConfig& config)
{
    std::vector<SparseProjectionOperator> ops;
    ops.reserve(cameras.size());
    for (const auto& cam : cameras) ops.push_back(build_operator(atlas, mesh, cam, config));
    return ops;
}

namespace {

RetrievalResult retrieve_into(const fs::path& dir, const TriangleMesh& mesh, int atlas_w, int atlas_h,
                              std::span<const CameraView> cameras, std::span<const ViewImage> images,
                              const RetrievalConfig& config, const SplatConfig& splat)
{
    const TexelAtlasMap atlas = rasterize_atlas(mesh, atlas_w, atlas_h);
    const auto ops = build_operators(atlas, mesh, cameras, splat);
    RetrievalResult result = retrieve(ops, images, atlas, config);
    write_texture_png(dir / "texture.png", result.texture, 16);
    write_mask_png(dir / "mask.png", atlas.width(), atlas.height(), result.texture.mask);
    return result;
}

} // namespace

RetrievalResult retrieve_scale(SceneManifest& manifest, int scale, const RetrievalConfig& config,
                               const SplatConfig& splat)
{
    ScaleEntry* entry = manifest.find_scale(scale);
    if (!entry) fail(ErrorCode::MissingFile, "manifest has no " + scale_dir(scale) + " entry");
    const TriangleMesh mesh = load_mesh(manifest.resolve(manifest.mesh));
    const auto cameras = load_cameras(manifest, *entry);
    const auto images = load_images(manifest, *entry);
    const fs::path dir = manifest.root / scale_dir(scale);
    fs::create_directories(dir);
    RetrievalResult result = retrieve_into(dir, mesh, manifest.atlas_width / scale, manifest.atlas_height / scale,
                                           cameras, images, config, splat);
    entry->atlas_width = manifest.atlas_width / scale;
    entry->atlas_height = manifest.atlas_height / scale;
    entry->texture = scale_dir(scale) + "/texture.png";
    entry->mask = scale_dir(scale) + "/mask.png";
    manifest.retrieval_mode = config.mode;
    return result;
}

SceneManifest generate_lr_scene(const SceneManifest& manifest, int factor, const SplatConfig& splat,
                                const RetrievalConfig& retrieval)
{
    if (factor < 2 || factor > 4) fail(ErrorCode::InvalidFactor, "LR factor " + std::to_string(factor));
    const ScaleEntry& hr = manifest.scale_entry(1);
    const std::string dir_name = scale_dir(factor);
    const fs::path final_dir = manifest.root / dir_name;
    const fs::path staging = manifest.root / (dir_name + ".tmp");

    std::error_code ec;
    fs::remove_all(staging, ec);
    fs::create_directories(staging / "images");
    fs::create_directories(staging / "cams");

    ScaleEntry lr;
    lr.scale = factor;
    lr.atlas_width = manifest.atlas_width / factor;
    lr.atlas_height = manifest.atlas_height / factor;
    try {
        std::vector<CameraView> cameras;
        std::vector<ViewImage> images;
        for (std::size_t v = 0; v < hr.images.size(); ++v) {
            const ViewImage hr_image = read_view_image(manifest.resolve(hr.images[v]));
            const CameraView hr_cam = read_camera(manifest.resolve(hr.cameras[v]));
            if (hr_cam.width != hr_image.width || hr_cam.height != hr_image.height) {
                fail(ErrorCode::DimensionMismatch, hr.cameras[v] + " size differs from " + hr.images[v]);
            }
            ViewImage lr_image = downscale_image(hr_image, factor);
            const CameraView lr_cam = scale_camera(hr_cam, factor);
            const std::string image_name = fs::path(hr.images[v]).filename().string();
            const std::string camera_name = fs::path(hr.cameras[v]).filename().string();
            write_view_image(staging / "images" / image_name, lr_image);
            write_camera(staging / "cams" / camera_name, lr_cam);
            // Retrieve from the quantized image exactly as stored on disk.
            images.push_back(read_view_image(staging / "images" / image_name));
            cameras.push_back(lr_cam);
            lr.images.push_back(dir_name + "/images/" + image_name);
            lr.cameras.push_back(dir_name + "/cams/" + camera_name);
        }
        const TriangleMesh mesh = load_mesh(manifest.resolve(manifest.mesh));
        RetrievalConfig config = retrieval;
        config.mode = manifest.retrieval_mode;
        retrieve_into(staging, mesh, lr.atlas_width, lr.atlas_height, cameras, images, config, splat);
        lr.texture = dir_name + "/texture.png";
        lr.mask = dir_name + "/mask.png";
    } catch (...) {
        fs::remove_all(staging, ec);
        throw;
    }

    fs::remove_all(final_dir, ec);
    fs::rename(staging, final_dir, ec);
    if (ec) {
        fs::remove_all(staging, ec);
        fail(ErrorCode::PartialWrite, "cannot move " + staging.string() + " to " + final_dir.string());
    }

    SceneManifest updated = manifest;
    if (ScaleEntry* existing = updated.find_scale(factor)) {
        *existing = lr;
    } else {
        updated.scales.push_back(lr);
        std::sort(updated.scales.begin(), updated.scales.end(),
                  [](const ScaleEntry& a, const ScaleEntry& b) { return a.scale < b.scale; });
    }
    write_manifest(updated.root / kManifestFileName, updated);
    return updated;
}

} // namespace texsr
