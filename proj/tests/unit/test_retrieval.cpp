#include <doctest.h>

#include "oracles.hpp"
#include "scenes.hpp"

#include <texsr/error.hpp>
#include <texsr/retrieval.hpp>

#include <Eigen/Dense>

#include <random>

using namespace texsr;

namespace {

struct SmallScene
{
    TriangleMesh mesh = testing::centered_quad_mesh();
    TexelAtlasMap atlas = rasterize_atlas(mesh, 12, 12);
    std::vector<SparseProjectionOperator> ops;
    std::vector<ViewImage> images;
    TextureAtlas truth;

    explicit SmallScene(double noise)
    {
        std::mt19937_64 rng(21);
        truth = testing::random_texture(atlas, rng);
        std::normal_distribution<double> n(0.0, noise);
        for (const auto& cam : testing::ring_cameras(4, 4.0, 25.0, 40.0, 48, 40)) {
            ops.push_back(build_operator(atlas, mesh, cam));
            ViewImage img = apply_forward(ops.back(), truth);
            for (auto& c : img.rgb) c += Color(n(rng), n(rng), n(rng));
            images.push_back(img);
        }
    }
};

} // namespace

TEST_CASE("retrieval mode names")
{
    CHECK(parse_retrieval_mode("backprojection") == RetrievalMode::Backprojection);
    CHECK(parse_retrieval_mode("least_squares") == RetrievalMode::LeastSquares);
    CHECK(to_string(RetrievalMode::LeastSquares) == "least_squares");
    CHECK_THROWS_AS(parse_retrieval_mode("magic"), Error);
    CHECK_THROWS_AS((RetrievalConfig{RetrievalMode::LeastSquares, -1.0, 10, 1e-6}.validate()), Error);
}

TEST_CASE("single-entry rows give back the rendered colors")
{
    // 4 x 4 texels six pixels apart: every footprint row holds one texel.
    const TriangleMesh mesh = testing::unit_quad_mesh();
    const TexelAtlasMap atlas = rasterize_atlas(mesh, 4, 4);
    const CameraView cam = testing::top_down_camera({0.5, 0.5, 1.0}, 24.0, 12.5, 12.5, 25, 25);
    const auto op = build_operator(atlas, mesh, cam);
    for (std::size_t p = 0; p < op.pixel_count(); ++p) CHECK(op.row(p).size() <= 1);
    std::mt19937_64 rng(2);
    const TextureAtlas tex = testing::random_texture(atlas, rng);
    const std::vector<SparseProjectionOperator> ops = {op};
    const std::vector<ViewImage> images = {apply_forward(op, tex)};
    const RetrievalResult r = retrieve_backprojection(ops, images, atlas);
    CHECK(r.unseen_count == 0);
    for (std::size_t t = 0; t < tex.texel_count(); ++t)
        CHECK((r.texture.rgb[t] - tex.rgb[t]).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("two views with equal weights average their colors")
{
    const TriangleMesh mesh = testing::centered_quad_mesh();
    const TexelAtlasMap atlas = rasterize_atlas(mesh, 16, 16);
    const CameraView cam = testing::top_down_camera({0.0, 0.0, 3.0}, 60.0, 32.0, 32.0, 64, 64);
    const auto op = build_operator(atlas, mesh, cam);
    const std::vector<SparseProjectionOperator> ops = {op, op};
    std::vector<ViewImage> images = {make_view_image(64, 64), make_view_image(64, 64)};
    const Color c1(0.2, 0.4, 0.6), c2(0.6, 0.0, 1.0);
    std::fill(images[0].rgb.begin(), images[0].rgb.end(), c1);
    std::fill(images[1].rgb.begin(), images[1].rgb.end(), c2);
    for (auto& img : images) std::fill(img.coverage.begin(), img.coverage.end(), 1);
    const RetrievalResult r = retrieve_backprojection(ops, images, atlas);
    for (std::size_t t = 0; t < atlas.texel_count(); ++t)
        CHECK((r.texture.rgb[t] - (c1 + c2) / 2).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("backprojection stays within the observed colors")
{
    const SmallScene scene(0.05);
    const RetrievalResult r = retrieve_backprojection(scene.ops, scene.images, scene.atlas);
    for (std::size_t t = 0; t < scene.atlas.texel_count(); ++t) {
        if (!scene.atlas.active(t) || r.unseen[t]) continue;
        Color lo = Color::Constant(1e300), hi = Color::Constant(-1e300);
        for (std::size_t v = 0; v < scene.ops.size(); ++v) {
            for (const auto& e : scene.ops[v].column(t)) {
                lo = lo.cwiseMin(scene.images[v].rgb[e.pixel]);
                hi = hi.cwiseMax(scene.images[v].rgb[e.pixel]);
            }
        }
        for (int c = 0; c < 3; ++c) {
            CHECK(r.unclamped.rgb[t][c] >= lo[c] - 1e-12);
            CHECK(r.unclamped.rgb[t][c] <= hi[c] + 1e-12);
        }
    }
}

TEST_CASE("retrieval input errors")
{
    const SmallScene scene(0.0);
    try {
        retrieve_backprojection(scene.ops, std::span(scene.images).first(2), scene.atlas);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ViewMismatch);
    }
    const TexelAtlasMap other = rasterize_atlas(scene.mesh, 8, 8);
    CHECK_THROWS_AS(retrieve_backprojection(scene.ops, scene.images, other), Error);
    try {
        retrieve_backprojection({}, {}, scene.atlas);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NoObservations);
    }
}

TEST_CASE("zero iterations return the backprojection")
{
    const SmallScene scene(0.02);
    const RetrievalResult bp = retrieve_backprojection(scene.ops, scene.images, scene.atlas);
    const RetrievalResult ls =
        retrieve_least_squares(scene.ops, scene.images, scene.atlas, {RetrievalMode::LeastSquares, 1e-3, 0, 1e-6});
    CHECK(ls.iterations == 0);
    CHECK(ls.texture.rgb == bp.texture.rgb);
    CHECK(ls.unclamped.rgb == bp.unclamped.rgb);
}

TEST_CASE("unregularized least squares matches a dense normal-equation solve")
{
    const SmallScene scene(0.03);
    const RetrievalConfig cfg{RetrievalMode::LeastSquares, 0.0, 500, 1e-13};
    const RetrievalResult r = retrieve_least_squares(scene.ops, scene.images, scene.atlas, cfg);
    CHECK(r.unseen_count == 0);
    REQUIRE(scene.atlas.texel_count() <= 200);

    std::vector<Eigen::MatrixXd> blocks;
    Eigen::Index rows = 0;
    for (const auto& op : scene.ops) {
        blocks.push_back(testing::dense_matrix(op));
        rows += blocks.back().rows();
    }
    Eigen::MatrixXd a(rows, scene.atlas.texel_count());
    Eigen::Index at = 0;
    for (const auto& b : blocks) {
        a.middleRows(at, b.rows()) = b;
        at += b.rows();
    }
    const Eigen::MatrixXd normal = a.transpose() * a;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
    REQUIRE(ldlt.info() == Eigen::Success);
    for (int c = 0; c < 3; ++c) {
        Eigen::VectorXd b(rows);
        at = 0;
        for (std::size_t v = 0; v < scene.images.size(); ++v) {
            Eigen::VectorXd y = testing::channel_of(scene.images[v].rgb, c);
            // Uncovered pixels have empty rows and do not enter the residual.
            for (std::size_t p = 0; p < scene.ops[v].pixel_count(); ++p)
                if (scene.ops[v].row(p).empty()) y[p] = 0.0;
            b.segment(at, y.size()) = y;
            at += y.size();
        }
        const Eigen::VectorXd x = ldlt.solve(a.transpose() * b);
        const Eigen::VectorXd got = testing::channel_of(r.unclamped.rgb, c);
        CHECK((x - got).cwiseAbs().maxCoeff() <= 1e-6);

        const auto& norms = r.residual_norms[c];
        REQUIRE(norms.size() >= 2);
        for (std::size_t k = 1; k < norms.size(); ++k) CHECK(norms[k] <= norms[k - 1]);
    }
    CHECK(r.converged);
}

TEST_CASE("regularized solve lowers the objective and keeps unseen texels")
{
    const TriangleMesh mesh = testing::two_quad_mesh();
    const TexelAtlasMap atlas = rasterize_atlas(mesh, 32, 32);
    std::mt19937_64 rng(8);
    const TextureAtlas truth = testing::random_texture(atlas, rng);
    const std::vector<SparseProjectionOperator> ops = {build_operator(atlas, mesh, testing::two_quad_camera())};
    std::vector<ViewImage> images = {apply_forward(ops[0], truth)};
    std::normal_distribution<double> noise(0.0, 0.05);
    for (auto& c : images[0].rgb) c += Color(noise(rng), noise(rng), noise(rng));

    const RetrievalConfig cfg{RetrievalMode::LeastSquares, 1e-2, 50, 1e-8};
    const RetrievalResult bp = retrieve_backprojection(ops, images, atlas);
    const RetrievalResult ls = retrieve_least_squares(ops, images, atlas, cfg);
    REQUIRE(bp.unseen_count > 0);
    CHECK(ls.unseen == bp.unseen);
    std::vector<std::uint8_t> solved(atlas.texel_count());
    for (std::size_t t = 0; t < solved.size(); ++t) {
        solved[t] = atlas.active(t) && !bp.unseen[t];
        if (bp.unseen[t]) {
            CHECK(ls.unclamped.rgb[t] == bp.unclamped.rgb[t]);
            CHECK(ls.texture.rgb[t].isZero());
            CHECK(ls.texture.mask[t] == 1);
        }
    }
    const double before = least_squares_objective(ops, images, bp.unclamped, bp.unclamped, cfg.lambda, solved);
    const double after = least_squares_objective(ops, images, ls.unclamped, bp.unclamped, cfg.lambda, solved);
    CHECK(after <= before);
    for (int c = 0; c < 3; ++c) {
        const auto& norms = ls.residual_norms[c];
        for (std::size_t k = 1; k < norms.size(); ++k) CHECK(norms[k] <= norms[k - 1]);
    }
    CHECK(retrieve(ops, images, atlas, cfg).unclamped.rgb == ls.unclamped.rgb);
    CHECK(retrieve(ops, images, atlas).texture.rgb == bp.texture.rgb);
}

TEST_CASE("uncovered pixels carry no observation")
{
    const TriangleMesh mesh = testing::centered_quad_mesh();
    const TexelAtlasMap atlas = rasterize_atlas(mesh, 16, 16);
    const CameraView cam = testing::top_down_camera({0.0, 0.0, 3.0}, 60.0, 32.0, 32.0, 64, 64);
    const auto op = build_operator(atlas, mesh, cam);
    std::mt19937_64 rng(23);
    const TextureAtlas truth = testing::random_texture(atlas, rng);
    ViewImage clean = apply_forward(op, truth);
    ViewImage corrupted = clean;
    // Garbage in the left half, flagged as unobserved.
    for (int y = 0; y < 64; ++y) {
        for (int x = 0; x < 32; ++x) {
            corrupted.rgb[std::size_t(y) * 64 + x] = Color(1, 0, 1);
            corrupted.coverage[std::size_t(y) * 64 + x] = 0;
        }
    }
    ViewImage masked = clean;
    for (std::size_t p = 0; p < masked.pixel_count(); ++p) {
        if (!corrupted.coverage[p]) masked.coverage[p] = 0;
    }
    const std::vector<SparseProjectionOperator> ops = {op};
    const std::vector<ViewImage> a = {corrupted};
    const std::vector<ViewImage> b = {masked};
    RetrievalConfig cfg;
    cfg.mode = RetrievalMode::LeastSquares;
    cfg.max_iters = 50;
    const RetrievalResult ra = retrieve(ops, a, atlas, cfg);
    const RetrievalResult rb = retrieve(ops, b, atlas, cfg);
    CHECK(ra.unseen_count > 0);
    CHECK(ra.unseen_count == rb.unseen_count);
    for (std::size_t t = 0; t < atlas.texel_count(); ++t) CHECK(ra.texture.rgb[t] == rb.texture.rgb[t]);
}
