#pragma once

#include <texsr/formation.hpp>

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace texsr {

/// Masked PSNR in dB over the intersection of both masks, using the 8-bit
/// peak (colors are scaled by 255) and the MSE of all three channels. Returns
/// +infinity for identical inputs. Throws DimensionMismatch or
/// EmptyIntersection.
double masked_psnr(const TextureAtlas& a, const TextureAtlas& b);

/// SSIM of the BT.601 luma (range 255) with an 11x11 Gaussian window,
/// sigma 1.5, K1 = 0.01, K2 = 0.03. Only windows centered on texels active in
/// both atlases are counted; inside a window, inactive texels get weight 0 and
/// the remaining Gaussian weights are renormalized. Returns the mean over the
/// counted windows.
double masked_ssim(const TextureAtlas& a, const TextureAtlas& b);

/// 10 log10(255^2 / mse) with mse on the 0..255 scale; +infinity for mse = 0.
double psnr_from_mse(double mse);

struct MetricReport
{
    double psnr = 0.0;
    std::optional<double> ssim;
    std::size_t active_texel_count = 0;
    /// One entry per view; empty for views without covered pixels.
    std::vector<std::optional<double>> per_view_psnr;
    std::size_t skipped_views = 0;
};

/// Renders the texture into each view and compares it with the ground-truth
/// images over covered pixels. Views without coverage are excluded from the
/// mean. Throws ViewMismatch.
MetricReport image_domain_eval(const TextureAtlas& texture, std::span<const ViewImage> gt_images,
                               std::span<const SparseProjectionOperator> ops);

/// Formats a dB value for reports; infinity is written as "inf".
std::string format_db(double value);

/// One line of the evaluation CSV.
struct EvaluationRow
{
    std::string scene;
    std::string subset;
    std::string method;
    int scale = 0;
    double psnr_db = 0.0;
    double ssim = 0.0;
    std::size_t active_texels = 0;
};

inline constexpr const char* kEvaluationCsvHeader = "scene,subset,method,scale,psnr_db,ssim,active_texels";

std::string format_evaluation_row(const EvaluationRow& row);
void write_evaluation_csv(const std::filesystem::path& path, std::span<const EvaluationRow> rows);
std::vector<EvaluationRow> read_evaluation_csv(const std::filesystem::path& path);

/// Method x (subset, scale) table of mean values over scenes, in the layout
/// of the benchmark tables: subsets in the order ETH3D, Collection,
/// MiddleBury, SyB3R, then "Average" taken over all scenes of a scale.
struct BenchmarkTable
{
    std::vector<std::string> methods;
    std::vector<std::string> subsets; // ends with "Average"
    std::vector<int> scales;
    /// value[method][subset][scale]; absent when no row contributed.
    std::vector<std::vector<std::vector<std::optional<double>>>> psnr;
    std::vector<std::vector<std::vector<std::optional<double>>>> ssim;

    std::optional<double> psnr_at(const std::string& method, const std::string& subset, int scale) const;
    std::optional<double> ssim_at(const std::string& method, const std::string& subset, int scale) const;
};

BenchmarkTable aggregate_benchmark(std::span<const EvaluationRow> rows);
std::string format_benchmark_table(const BenchmarkTable& table, bool ssim);

/// Published interpolation baselines (scene-weighted averages over the 24
/// scenes of the released dataset), for comparison with aggregate_benchmark.
struct PublishedBaseline
{
    const char* method;
    int scale;
    double psnr_db;
    double ssim;
};
std::span<const PublishedBaseline> published_interpolation_baselines();

/// Tolerance used when comparing a reproduction against the published values.
inline constexpr double kPublishedPsnrToleranceDb = 0.5;

} // namespace texsr
