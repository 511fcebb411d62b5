#include <doctest.h>

#include "oracles.hpp"
#include "scenes.hpp"

#include <texsr/error.hpp>
#include <texsr/metrics.hpp>

#include <cmath>
#include <fstream>
#include <map>
#include <random>

using namespace texsr;

namespace {

TextureAtlas random_masked(int w, int h, std::mt19937_64& rng, double keep)
{
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    TextureAtlas t = make_texture(w, h);
    for (std::size_t i = 0; i < t.texel_count(); ++i) {
        t.mask[i] = unit(rng) < keep;
        if (t.mask[i]) t.rgb[i] = Color(unit(rng), unit(rng), unit(rng));
    }
    return t;
}

TextureAtlas perturbed(const TextureAtlas& a, std::mt19937_64& rng, double noise)
{
    std::normal_distribution<double> n(0.0, noise);
    TextureAtlas b = a;
    for (std::size_t i = 0; i < b.texel_count(); ++i)
        if (b.mask[i]) b.rgb[i] = (b.rgb[i] + Color(n(rng), n(rng), n(rng))).cwiseMax(0.0).cwiseMin(1.0);
    return b;
}

} // namespace

TEST_CASE("psnr hand case")
{
    TextureAtlas gt = make_texture(3, 2);
    TextureAtlas test = make_texture(3, 2);
    gt.mask[4] = test.mask[4] = 1;
    gt.rgb[4] = Color(100, 50, 200) / 255.0;
    test.rgb[4] = Color(110, 50, 200) / 255.0;
    // Inactive texels do not count even when they differ.
    test.rgb[0] = Color(1, 1, 1);
    const double psnr = masked_psnr(gt, test);
    CHECK(psnr == doctest::Approx(10.0 * std::log10(255.0 * 255.0 / (100.0 / 3.0))).epsilon(1e-12));
    CHECK(std::abs(psnr - 32.90) <= 0.01);
    CHECK(masked_psnr(test, gt) == psnr);
}

TEST_CASE("psnr of identical atlases is infinite")
{
    std::mt19937_64 rng(1);
    const TextureAtlas a = random_masked(16, 16, rng, 0.6);
    CHECK(std::isinf(masked_psnr(a, a)));
    CHECK(format_db(masked_psnr(a, a)) == "inf");
    CHECK(format_db(32.9019) == "32.9019");
    CHECK(std::isinf(psnr_from_mse(0.0)));
}

TEST_CASE("psnr errors")
{
    TextureAtlas a = make_texture(4, 4);
    TextureAtlas b = make_texture(4, 4);
    try {
        masked_psnr(a, b);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EmptyIntersection);
    }
    try {
        masked_psnr(a, make_texture(4, 5));
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DimensionMismatch);
    }
}

TEST_CASE("psnr over a sub-mask equals a brute-force subset evaluation")
{
    std::mt19937_64 rng(2);
    const TextureAtlas a = random_masked(20, 12, rng, 0.8);
    const TextureAtlas b = perturbed(a, rng, 0.1);
    TextureAtlas shrunk = b;
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t t = 0; t < shrunk.texel_count(); ++t) {
        if (t % 3 == 0) {
            shrunk.mask[t] = 0;
            shrunk.rgb[t].setZero();
        }
        if (!shrunk.mask[t] || !a.mask[t]) continue;
        for (int c = 0; c < 3; ++c) sum += std::pow(255.0 * (a.rgb[t][c] - b.rgb[t][c]), 2);
        n += 3;
    }
    CHECK(masked_psnr(a, shrunk) == doctest::Approx(10.0 * std::log10(255.0 * 255.0 / (sum / n))).epsilon(1e-12));
}

TEST_CASE("ssim of an atlas with itself is one")
{
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 5; ++trial) {
        const TextureAtlas a = random_masked(24, 17, rng, 0.3 + 0.15 * trial);
        CHECK(std::abs(masked_ssim(a, a) - 1.0) <= 1e-12);
    }
}

TEST_CASE("ssim matches the reference implementation and is symmetric")
{
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 10; ++trial) {
        const TextureAtlas a = random_masked(31, 23, rng, 0.7);
        TextureAtlas b = perturbed(a, rng, 0.05 + 0.02 * trial);
        for (std::size_t t = 0; t < b.texel_count(); t += 7) {
            b.mask[t] = 0;
            b.rgb[t].setZero();
        }
        const double s = masked_ssim(a, b);
        CHECK(std::abs(s - testing::reference_ssim(a, b)) <= 1e-6);
        CHECK(std::abs(s - masked_ssim(b, a)) <= 1e-12);
        CHECK(s < 1.0);
    }
}

TEST_CASE("image-domain evaluation")
{
    const TriangleMesh mesh = testing::centered_quad_mesh();
    const TexelAtlasMap atlas = rasterize_atlas(mesh, 32, 32);
    auto cams = testing::ring_cameras(3, 4.0, 20.0, 40.0, 48, 40);
    cams.push_back(testing::look_at_camera({0, 0, 4}, {0, 0, 8}, 40.0, 48, 40));
    std::vector<SparseProjectionOperator> ops;
    for (std::size_t v = 0; v < 3; ++v) ops.push_back(build_operator(atlas, mesh, cams[v]));
    const TextureAtlas tex = testing::smooth_pattern(atlas);

    std::vector<ViewImage> own;
    for (const auto& op : ops) own.push_back(apply_forward(op, tex));
    const MetricReport same = image_domain_eval(tex, own, ops);
    CHECK(std::isinf(same.psnr));
    CHECK(same.active_texel_count == 1024);

    std::vector<ViewImage> gray = own;
    for (auto& img : gray)
        for (auto& c : img.rgb) c = Color::Constant(0.5);
    const MetricReport zero = image_domain_eval(make_texture(atlas), gray, ops);
    for (const auto& p : zero.per_view_psnr) {
        REQUIRE(p.has_value());
        CHECK(*p == doctest::Approx(20.0 * std::log10(2.0)).epsilon(1e-12));
    }
    CHECK(std::abs(zero.psnr - 6.02) <= 0.005);

    // A view whose operator covers nothing is skipped, not averaged in.
    std::vector<OperatorEntry> none;
    std::vector<std::size_t> offsets(std::size_t(48) * 40 + 1, 0);
    std::vector<SparseProjectionOperator> with_empty = ops;
    with_empty.emplace_back(cams[3], 32, 32, offsets, none);
    std::vector<ViewImage> gray4 = gray;
    gray4.push_back(gray[0]);
    const MetricReport skipped = image_domain_eval(make_texture(atlas), gray4, with_empty);
    CHECK(skipped.skipped_views == 1);
    CHECK_FALSE(skipped.per_view_psnr[3].has_value());
    CHECK(skipped.psnr == doctest::Approx(zero.psnr).epsilon(1e-15));
    CHECK_THROWS_AS(image_domain_eval(tex, std::span(gray).first(2), ops), Error);
}

TEST_CASE("evaluation csv round trip")
{
    const auto dir = testing::scratch_dir("csv");
    const std::vector<EvaluationRow> rows = {{"courtyard", "ETH3D", "bilinear", 2, 21.5, 0.81, 1000},
                                             {"toad", "SyB3R", "bicubic", 4, INFINITY, 1.0, 12}};
    write_evaluation_csv(dir / "eval.csv", rows);
    const auto back = read_evaluation_csv(dir / "eval.csv");
    REQUIRE(back.size() == 2);
    CHECK(back[0].scene == "courtyard");
    CHECK(back[0].psnr_db == 21.5);
    CHECK(back[0].active_texels == 1000);
    CHECK(std::isinf(back[1].psnr_db));
    CHECK(format_evaluation_row(rows[1]).find(",inf,") != std::string::npos);
    std::ifstream in(dir / "eval.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == kEvaluationCsvHeader);
}

TEST_CASE("benchmark aggregation reproduces the published averages")
{
    // Per-subset means of the interpolation rows and the number of scenes
    // per subset; the average column is the mean over all scenes.
    const std::map<std::string, int> scenes = {{"ETH3D", 13}, {"Collection", 6}, {"MiddleBury", 2}, {"SyB3R", 3}};
    struct Row
    {
        const char* method;
        double values[4][3]; // subset x scale
    };
    const Row table[] = {
        {"nearest", {{19.06, 16.71, 14.68}, {24.22, 19.7, 16.92}, {10.08, 7.93, 7.08}, {30.84, 27.88, 25.82}}},
        {"bilinear", {{20.61, 18.24, 16.32}, {26.2, 21.48, 18.84}, {11.87, 8.88, 7.77}, {31.75, 28.83, 26.9}}},
        {"bicubic", {{20.21, 17.96, 15.88}, {25.67, 21.12, 18.29}, {11.32, 8.81, 7.73}, {31.77, 28.78, 26.73}}},
        {"lanczos", {{20.01, 17.74, 15.69}, {25.42, 20.86, 18.07}, {11.14, 8.81, 7.81}, {31.71, 28.7, 26.63}}},
    };
    const char* subsets[] = {"ETH3D", "Collection", "MiddleBury", "SyB3R"};
    std::vector<EvaluationRow> rows;
    for (const auto& r : table) {
        for (int s = 0; s < 4; ++s) {
            for (int k = 0; k < 3; ++k) {
                for (int n = 0; n < scenes.at(subsets[s]); ++n) {
                    rows.push_back({std::string(subsets[s]) + std::to_string(n), subsets[s], r.method, k + 2,
                                    r.values[s][k], 0.5, 100});
                }
            }
        }
    }
    const BenchmarkTable bench = aggregate_benchmark(rows);
    REQUIRE(bench.subsets.size() == 5);
    CHECK(bench.subsets.front() == "ETH3D");
    CHECK(bench.subsets.back() == "Average");
    CHECK(bench.scales == std::vector<int>{2, 3, 4});
    for (const auto& published : published_interpolation_baselines()) {
        const auto avg = bench.psnr_at(published.method, "Average", published.scale);
        REQUIRE(avg.has_value());
        // Inputs and published averages are both rounded to two decimals.
        CHECK(std::abs(*avg - published.psnr_db) <= 0.01);
    }
    CHECK(published_interpolation_baselines().size() == 12);
    const std::string text = format_benchmark_table(bench, false);
    CHECK(text.find("Average x4") != std::string::npos);
}

TEST_CASE("published bilinear x2 reference values")
{
    bool found = false;
    for (const auto& p : published_interpolation_baselines()) {
        if (std::string(p.method) == "bilinear" && p.scale == 2) {
            CHECK(p.psnr_db == 22.67);
            CHECK(p.ssim == 0.84);
            found = true;
        }
    }
    CHECK(found);
    CHECK(kPublishedPsnrToleranceDb == 0.5);
}
