#include <doctest.h>

#include "oracles.hpp"
#include "scenes.hpp"

#include <texsr/dataset.hpp>
#include <texsr/error.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

using namespace texsr;
namespace fs = std::filesystem;

namespace {

ErrorCode error_of(auto&& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::IoError;
}

SceneManifest small_scene(const std::string& name, int views = 3)
{
    const fs::path dir = testing::scratch_dir(name);
    const TriangleMesh mesh = testing::centered_quad_mesh();
    const TexelAtlasMap atlas = rasterize_atlas(mesh, 48, 48);
    return testing::write_synthetic_scene(dir, mesh, testing::ring_cameras(views, 4.0, 25.0, 50.0, 65, 49),
                                          testing::smooth_pattern(atlas));
}

std::vector<fs::path> files_under(const fs::path& root)
{
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) files.push_back(fs::relative(e.path(), root));
    std::sort(files.begin(), files.end());
    return files;
}

} // namespace

TEST_CASE("downscaling a constant image keeps the constant")
{
    ViewImage img = make_view_image(2, 2);
    for (auto& c : img.rgb) c = Color(0.25, 0.5, 0.75);
    const ViewImage out = downscale_image(img, 2);
    REQUIRE(out.width == 1);
    REQUIRE(out.height == 1);
    CHECK((out.rgb[0] - Color(0.25, 0.5, 0.75)).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("downscaling matches a dense convolution")
{
    ViewImage ramp = make_view_image(4, 4);
    std::vector<double> plane(16);
    for (int y = 0; y < 4; ++y) {
        for (int x = 0; x < 4; ++x) {
            plane[y * 4 + x] = 0.1 + 0.2 * x;
            ramp.rgb[y * 4 + x] = Color::Constant(plane[y * 4 + x]);
        }
    }
    const ViewImage out = downscale_image(ramp, 2);
    const auto expected = testing::downscale_oracle(plane, 4, 4, 2);
    REQUIRE(out.width == 2);
    for (int i = 0; i < 4; ++i) CHECK(std::abs(out.rgb[i][0] - expected[i]) <= 1e-12);
    // Rows of a horizontal ramp stay equal.
    CHECK(out.rgb[0][0] == doctest::Approx(out.rgb[2][0]).epsilon(1e-15));

    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int f : {2, 3, 4}) {
        const int w = 23, h = 17;
        ViewImage img = make_view_image(w, h);
        std::vector<double> g(std::size_t(w) * h);
        for (std::size_t i = 0; i < g.size(); ++i) {
            g[i] = unit(rng);
            img.rgb[i] = Color(g[i], 0, 0);
        }
        const ViewImage small = downscale_image(img, f);
        CHECK(small.width == w / f);
        CHECK(small.height == h / f);
        const auto oracle = testing::downscale_oracle(g, w, h, f);
        for (std::size_t i = 0; i < oracle.size(); ++i) CHECK(std::abs(small.rgb[i][0] - oracle[i]) <= 1e-12);
    }
}

TEST_CASE("downscaled pixels are covered only when their whole footprint is")
{
    std::mt19937_64 rng(17);
    std::bernoulli_distribution hole(0.03);
    for (int f : {2, 3, 4}) {
        const int w = 29, h = 21;
        ViewImage img = make_view_image(w, h);
        for (auto& c : img.coverage) c = hole(rng) ? 0 : 1;
        const ViewImage small = downscale_image(img, f);
        for (int oy = 0; oy < small.height; ++oy) {
            for (int ox = 0; ox < small.width; ++ox) {
                const double cx = (ox + 0.5) * f - 0.5;
                const double cy = (oy + 0.5) * f - 0.5;
                bool covered = true;
                for (int sy = int(std::floor(cy)) - 3 * f; sy <= int(std::ceil(cy)) + 3 * f; ++sy) {
                    for (int sx = int(std::floor(cx)) - 3 * f; sx <= int(std::ceil(cx)) + 3 * f; ++sx) {
                        if (testing::keys_cubic((sx - cx) / f) == 0.0 || testing::keys_cubic((sy - cy) / f) == 0.0)
                            continue;
                        const int rx = std::clamp(sx, 0, w - 1);
                        const int ry = std::clamp(sy, 0, h - 1);
                        covered = covered && img.coverage[std::size_t(ry) * w + rx];
                    }
                }
                CHECK(bool(small.coverage[std::size_t(oy) * small.width + ox]) == covered);
            }
        }
    }
}

TEST_CASE("downscaling rejects unsupported factors")
{
    const ViewImage img = make_view_image(10, 10);
    for (int f : {1, 5}) CHECK(error_of([&] { downscale_image(img, f); }) == ErrorCode::InvalidFactor);
}

TEST_CASE("manifest json round trip")
{
    SceneManifest m;
    m.scene = "toad";
    m.subset = SceneSubset::SyB3R;
    m.mesh = "mesh.obj";
    m.atlas_width = 512;
    m.atlas_height = 256;
    m.retrieval_mode = RetrievalMode::LeastSquares;
    ScaleEntry e;
    e.scale = 1;
    e.atlas_width = 512;
    e.atlas_height = 256;
    e.images = {"x1/images/0000.png"};
    e.cameras = {"x1/cams/0000.txt"};
    e.texture = "x1/texture.png";
    m.scales.push_back(e);
    const SceneManifest back = parse_manifest(manifest_to_json(m));
    CHECK(back == m);

    const fs::path dir = testing::scratch_dir("manifest");
    write_manifest(dir / "manifest.json", m);
    const SceneManifest read = read_manifest(dir / "manifest.json");
    CHECK(read == m);
    CHECK(read.root == dir);
    CHECK_FALSE(fs::exists(dir / "manifest.json.tmp"));
}

TEST_CASE("manifest parse errors")
{
    CHECK(error_of([] { parse_manifest("{\"format_version\": 999, \"scene\": \"a\"}"); }) ==
          ErrorCode::UnsupportedVersion);
    CHECK(error_of([] { parse_manifest("{\"format_version\": \"999\"}"); }) == ErrorCode::UnsupportedVersion);
    CHECK(error_of([] { parse_manifest("{ not json"); }) == ErrorCode::ParseError);
    CHECK(error_of([] { parse_manifest("{\"format_version\": 1}"); }) == ErrorCode::ParseError);
    CHECK(error_of([] { read_manifest("/nonexistent/texsr/manifest.json"); }) == ErrorCode::FileNotFound);
}

TEST_CASE("manifest validation")
{
    SceneManifest m = small_scene("validate");
    CHECK_NOTHROW(validate_manifest(read_manifest(m.root / kManifestFileName)));

    fs::remove(m.resolve(m.scales[0].cameras[1]));
    try {
        validate_manifest(m);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MissingFile);
        CHECK(std::string(e.what()).find(m.scales[0].cameras[1]) != std::string::npos);
    }

    SceneManifest no_hr = small_scene("validate_nohr");
    no_hr.scales[0].scale = 2;
    CHECK(error_of([&] { validate_manifest(no_hr); }) == ErrorCode::MissingFile);
}

TEST_CASE("generated low-resolution levels")
{
    const SceneManifest hr = small_scene("genlr");
    const SceneManifest m = generate_lr_scene(hr, 2);
    const ScaleEntry& lr = m.scale_entry(2);
    CHECK(lr.atlas_width == 24);
    CHECK(lr.atlas_height == 24);
    CHECK(lr.images.size() == 3);
    CHECK(lr.cameras.size() == 3);
    CHECK(fs::exists(m.resolve(lr.texture)));
    CHECK(fs::exists(m.resolve(lr.mask)));
    CHECK_FALSE(fs::exists(m.root / "x2.tmp"));
    CHECK_NOTHROW(validate_manifest(read_manifest(m.root / kManifestFileName)));
    CHECK(read_manifest(m.root / kManifestFileName) == m);

    const auto hr_cams = load_cameras(m, m.scale_entry(1));
    const auto lr_cams = load_cameras(m, lr);
    const auto lr_images = load_images(m, lr);
    const TriangleMesh mesh = load_mesh(m.resolve(m.mesh));
    for (std::size_t v = 0; v < hr_cams.size(); ++v) {
        CHECK(lr_cams[v].width == 32);
        CHECK(lr_cams[v].height == 24);
        CHECK(lr_images[v].width == 32);
        CHECK(lr_images[v].height == 24);
        for (const auto& x : mesh.vertices) {
            const auto a = project_point(hr_cams[v], x);
            const auto b = project_point(lr_cams[v], x);
            CHECK((b.pixel - a.pixel / 2.0).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, a.pixel.norm()));
        }
    }
}

TEST_CASE("regenerating a level is byte-identical")
{
    const SceneManifest a = small_scene("regen_a");
    const SceneManifest b = small_scene("regen_b");
    generate_lr_scene(a, 3);
    generate_lr_scene(b, 3);
    const auto files = files_under(a.root);
    REQUIRE(files == files_under(b.root));
    for (const auto& f : files) {
        if (f.filename() == kManifestFileName) continue;
        CHECK_MESSAGE(testing::read_file(a.root / f) == testing::read_file(b.root / f), f.string());
    }
    // The manifest differs only in the scene name, which follows the directory.
    SceneManifest ma = read_manifest(a.root / kManifestFileName);
    SceneManifest mb = read_manifest(b.root / kManifestFileName);
    mb.scene = ma.scene;
    CHECK(ma == mb);

    // Generating the same level again in place gives the same files.
    const std::string before = testing::read_file(a.root / "x3" / "texture.png");
    generate_lr_scene(read_manifest(a.root / kManifestFileName), 3);
    CHECK(testing::read_file(a.root / "x3" / "texture.png") == before);
}

TEST_CASE("a scene with 38 views yields 38 low-resolution views")
{
    const fs::path dir = testing::scratch_dir("views38");
    const TriangleMesh mesh = testing::centered_quad_mesh();
    const TexelAtlasMap atlas = rasterize_atlas(mesh, 16, 16);
    const SceneManifest hr = testing::write_synthetic_scene(
        dir, mesh, testing::ring_cameras(38, 4.0, 30.0, 12.0, 32, 24), testing::smooth_pattern(atlas));
    const SceneManifest m = generate_lr_scene(hr, 2);
    const ScaleEntry& lr = m.scale_entry(2);
    CHECK(lr.images.size() == 38);
    CHECK(lr.cameras.size() == 38);
    std::size_t pngs = 0;
    for (const auto& e : fs::directory_iterator(dir / "x2" / "images")) pngs += e.path().extension() == ".png";
    CHECK(pngs == 38);
    const auto images = load_images(m, lr);
    for (const auto& img : images) {
        CHECK(img.width == 16);
        CHECK(img.height == 12);
    }
}

TEST_CASE("retrieving a scale updates the manifest entry")
{
    SceneManifest m = small_scene("retrieve_scale");
    const RetrievalResult r = retrieve_scale(m, 1, {});
    CHECK(m.scales[0].texture == "x1/texture.png");
    CHECK(m.scales[0].mask == "x1/mask.png");
    const TextureAtlas back = read_texture_png(m.resolve(m.scales[0].texture), m.resolve(m.scales[0].mask));
    CHECK(back.mask == r.texture.mask);
    for (std::size_t t = 0; t < back.texel_count(); ++t)
        CHECK((back.rgb[t] - r.texture.rgb[t]).cwiseAbs().maxCoeff() <= 0.5 / 65535.0 + 1e-15);
    CHECK(error_of([&] { retrieve_scale(m, 3, {}); }) == ErrorCode::MissingFile);
}
