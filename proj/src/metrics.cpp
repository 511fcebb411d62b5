#include <texsr/metrics.hpp>

#include <texsr/error.hpp>
#include <texsr/parallel.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

namespace texsr {

namespace {

std::vector<std::uint8_t> mask_intersection(const TextureAtlas& a, const TextureAtlas& b)
{
    if (a.width != b.width || a.height != b.height) {
        fail(ErrorCode::DimensionMismatch, std::to_string(a.width) + "x" + std::to_string(a.height) + " vs " +
                                               std::to_string(b.width) + "x" + std::to_string(b.height));
    }
    std::vector<std::uint8_t> both(a.texel_count());
    bool any = false;
    for (std::size_t t = 0; t < both.size(); ++t) {
        both[t] = a.mask[t] && b.mask[t];
        any = any || both[t];
    }
    if (!any) fail(ErrorCode::EmptyIntersection, "the two masks do not overlap");
    return both;
}

double luma(const Color& c)
{
    return 255.0 * (0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2]);
}

} // namespace

double psnr_from_mse(double mse)
{
    if (mse <= 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(255.0 * 255.0 / mse);
}

double masked_psnr(const TextureAtlas& a, const TextureAtlas& b)
{
    const auto both = mask_intersection(a, b);
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t t = 0; t < both.size(); ++t) {
        if (!both[t]) continue;
        sum += (255.0 * (a.rgb[t] - b.rgb[t])).squaredNorm();
        count += 3;
    }
    return psnr_from_mse(sum / double(count));
}

double masked_ssim(const TextureAtlas& a, const TextureAtlas& b)
{
    const auto both = mask_intersection(a, b);
    constexpr int kHalf = 5;
    constexpr double kSigma = 1.5;
    constexpr double kC1 = (0.01 * 255.0) * (0.01 * 255.0);
    constexpr double kC2 = (0.03 * 255.0) * (0.03 * 255.0);
    std::array<double, 2 * kHalf + 1> gauss;
    for (int d = -kHalf; d <= kHalf; ++d) gauss[d + kHalf] = std::exp(-(d * d) / (2.0 * kSigma * kSigma));

    const std::size_t n = a.texel_count();
    std::vector<double> ya(n);
    std::vector<double> yb(n);
    for (std::size_t t = 0; t < n; ++t) {
        ya[t] = luma(a.rgb[t]);
        yb[t] = luma(b.rgb[t]);
    }

    const int w = a.width;
    const int h = a.height;
    std::vector<double> window_ssim(n, 0.0);
    parallel_for(0, n, [&](std::size_t center) {
        if (!both[center]) return;
        const int cx = static_cast<int>(center % w);
        const int cy = static_cast<int>(center / w);
        const int x0 = std::max(cx - kHalf, 0);
        const int x1 = std::min(cx + kHalf, w - 1);
        const int y0 = std::max(cy - kHalf, 0);
        const int y1 = std::min(cy + kHalf, h - 1);

        double total = 0.0;
        double mean_a = 0.0;
        double mean_b = 0.0;
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const std::size_t t = std::size_t(y) * w + x;
                if (!both[t]) continue;
                const double g = gauss[x - cx + kHalf] * gauss[y - cy + kHalf];
                total += g;
                mean_a += g * ya[t];
                mean_b += g * yb[t];
            }
        }
        mean_a /= total;
        mean_b /= total;
        double var_a = 0.0;
        double var_b = 0.0;
        double cov = 0.0;
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const std::size_t t = std::size_t(y) * w + x;
                if (!both[t]) continue;
                const double g = gauss[x - cx + kHalf] * gauss[y - cy + kHalf] / total;
                const double da = ya[t] - mean_a;
                const double db = yb[t] - mean_b;
                var_a += g * da * da;
                var_b += g * db * db;
                cov += g * da * db;
            }
        }
        window_ssim[center] = ((2.0 * mean_a * mean_b + kC1) * (2.0 * cov + kC2)) /
                              ((mean_a * mean_a + mean_b * mean_b + kC1) * (var_a + var_b + kC2));
    });

    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t t = 0; t < n; ++t) {
        if (!both[t]) continue;
        sum += window_ssim[t];
        ++count;
    }
    return sum / double(count);
}

MetricReport image_domain_eval(const TextureAtlas& texture, std::span<const ViewImage> gt_images,
                               std::span<const SparseProjectionOperator> ops)
{
    if (gt_images.size() != ops.size()) {
        fail(ErrorCode::ViewMismatch, std::to_string(ops.size()) + " operators for " +
                                          std::to_string(gt_images.size()) + " images");
    }
    MetricReport report;
    report.active_texel_count = texture.active_count();
    double psnr_sum = 0.0;
    std::size_t counted = 0;
    for (std::size_t v = 0; v < ops.size(); ++v) {
        if (gt_images[v].width != ops[v].image_width() || gt_images[v].height != ops[v].image_height()) {
            fail(ErrorCode::ViewMismatch, "image " + std::to_string(v) + " does not match its operator");
        }
        const ViewImage rendered = apply_forward(ops[v], texture);
        double sum = 0.0;
        std::size_t samples = 0;
        for (std::size_t p = 0; p < rendered.pixel_count(); ++p) {
            if (!rendered.coverage[p] || !gt_images[v].coverage[p]) continue;
            sum += (255.0 * (rendered.rgb[p] - gt_images[v].rgb[p])).squaredNorm();
            samples += 3;
        }
        if (samples == 0) {
            report.per_view_psnr.emplace_back();
            ++report.skipped_views;
            continue;
        }
        const double psnr = psnr_from_mse(sum / double(samples));
        report.per_view_psnr.emplace_back(psnr);
        psnr_sum += psnr;
        ++counted;
    }
    if (counted == 0) fail(ErrorCode::NoObservations, "no view has covered pixels");
    report.psnr = psnr_sum / double(counted);
    return report;
}

std::string format_db(double value)
{
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    std::ostringstream out;
    out << std::fixed << std::setprecision(4) << value;
    return out.str();
}

std::string format_evaluation_row(const EvaluationRow& row)
{
    std::ostringstream out;
    out << row.scene << ',' << row.subset << ',' << row.method << ',' << row.scale << ',' << format_db(row.psnr_db)
        << ',' << std::fixed << std::setprecision(6) << row.ssim << ',' << row.active_texels;
    return out.str();
}

void write_evaluation_csv(const std::filesystem::path& path, std::span<const EvaluationRow> rows)
{
    std::ostringstream out;
    out << kEvaluationCsvHeader << '\n';
    for (const auto& row : rows) out << format_evaluation_row(row) << '\n';
    std::ofstream file(path, std::ios::binary);
    if (!file) fail(ErrorCode::IoError, "cannot write " + path.string());
    file << out.str();
}

std::vector<EvaluationRow> read_evaluation_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) fail(ErrorCode::FileNotFound, path.string());
    std::string line;
    if (!std::getline(in, line) || line != kEvaluationCsvHeader) {
        fail(ErrorCode::ParseError, path.string() + ":1: expected header '" + kEvaluationCsvHeader + "'");
    }
    std::vector<EvaluationRow> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 7) {
            fail(ErrorCode::ParseError, path.string() + ":" + std::to_string(line_no) + ": expected 7 fields");
        }
        try {
            EvaluationRow row;
            row.scene = fields[0];
            row.subset = fields[1];
            row.method = fields[2];
            row.scale = std::stoi(fields[3]);
            row.psnr_db = fields[4] == "inf" ? std::numeric_limits<double>::infinity() : std::stod(fields[4]);
            row.ssim = std::stod(fields[5]);
            row.active_texels = std::stoull(fields[6]);
            rows.push_back(row);
        } catch (const std::exception&) {
            fail(ErrorCode::ParseError, path.string() + ":" + std::to_string(line_no) + ": malformed number");
        }
    }
    return rows;
}

namespace {

const std::vector<std::string> kSubsetOrder = {"ETH3D", "Collection", "MiddleBury", "SyB3R"};

template <typename T>
std::size_t index_of(const std::vector<T>& items, const T& item)
{
    return static_cast<std::size_t>(std::find(items.begin(), items.end(), item) - items.begin());
}

} // namespace

std::optional<double> BenchmarkTable::psnr_at(const std::string& method, const std::string& subset, int scale) const
{
    const auto m = index_of(methods, method);
    const auto s = index_of(subsets, subset);
    const auto k = index_of(scales, scale);
    if (m == methods.size() || s == subsets.size() || k == scales.size()) return std::nullopt;
    return psnr[m][s][k];
}

std::optional<double> BenchmarkTable::ssim_at(const std::string& method, const std::string& subset, int scale) const
{
    const auto m = index_of(methods, method);
    const auto s = index_of(subsets, subset);
    const auto k = index_of(scales, scale);
    if (m == methods.size() || s == subsets.size() || k == scales.size()) return std::nullopt;
    return ssim[m][s][k];
}

BenchmarkTable aggregate_benchmark(std::span<const EvaluationRow> rows)
{
    BenchmarkTable table;
    for (const auto& row : rows) {
        if (index_of(table.methods, row.method) == table.methods.size()) table.methods.push_back(row.method);
        if (index_of(table.scales, row.scale) == table.scales.size()) table.scales.push_back(row.scale);
    }
    std::sort(table.scales.begin(), table.scales.end());
    table.subsets = kSubsetOrder;
    for (const auto& row : rows) {
        if (index_of(table.subsets, row.subset) == table.subsets.size()) table.subsets.push_back(row.subset);
    }
    table.subsets.push_back("Average");

    struct Sum
    {
        double psnr = 0.0;
        double ssim = 0.0;
        int count = 0;
    };
    const std::size_t nm = table.methods.size();
    const std::size_t ns = table.subsets.size();
    const std::size_t nk = table.scales.size();
    std::vector<std::vector<std::vector<Sum>>> sums(nm, std::vector<std::vector<Sum>>(ns, std::vector<Sum>(nk)));
    for (const auto& row : rows) {
        const auto m = index_of(table.methods, row.method);
        const auto k = index_of(table.scales, row.scale);
        for (const std::size_t s : {index_of(table.subsets, row.subset), ns - 1}) {
            sums[m][s][k].psnr += row.psnr_db;
            sums[m][s][k].ssim += row.ssim;
            ++sums[m][s][k].count;
        }
    }
    table.psnr.assign(nm, std::vector<std::vector<std::optional<double>>>(ns, std::vector<std::optional<double>>(nk)));
    table.ssim = table.psnr;
    for (std::size_t m = 0; m < nm; ++m) {
        for (std::size_t s = 0; s < ns; ++s) {
            for (std::size_t k = 0; k < nk; ++k) {
                if (sums[m][s][k].count == 0) continue;
                table.psnr[m][s][k] = sums[m][s][k].psnr / sums[m][s][k].count;
                table.ssim[m][s][k] = sums[m][s][k].ssim / sums[m][s][k].count;
            }
        }
    }
    return table;
}

std::string format_benchmark_table(const BenchmarkTable& table, bool ssim)
{
    std::ostringstream out;
    out << "method";
    for (const auto& subset : table.subsets) {
        for (int scale : table.scales) out << ',' << subset << " x" << scale;
    }
    out << '\n';
    const auto& values = ssim ? table.ssim : table.psnr;
    for (std::size_t m = 0; m < table.methods.size(); ++m) {
        out << table.methods[m];
        for (std::size_t s = 0; s < table.subsets.size(); ++s) {
            for (std::size_t k = 0; k < table.scales.size(); ++k) {
                out << ',';
                const auto& v = values[m][s][k];
                if (v) {
                    out << std::fixed << std::setprecision(2) << *v;
                } else {
                    out << "--";
                }
            }
        }
        out << '\n';
    }
    return out.str();
}

std::span<const PublishedBaseline> published_interpolation_baselines()
{
    static constexpr PublishedBaseline kBaselines[] = {
        {"nearest", 2, 21.07, 0.82},  {"nearest", 3, 18.12, 0.74},  {"nearest", 4, 16.0, 0.67},
        {"bilinear", 2, 22.67, 0.84}, {"bilinear", 3, 19.6, 0.77},  {"bilinear", 4, 17.56, 0.71},
        {"bicubic", 2, 22.28, 0.84},  {"bicubic", 3, 19.34, 0.76},  {"bicubic", 4, 17.16, 0.7},
        {"lanczos", 2, 22.09, 0.83},  {"lanczos", 3, 19.15, 0.75},  {"lanczos", 4, 17.0, 0.68},
    };
    return kBaselines;
}

} // namespace texsr
