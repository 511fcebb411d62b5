#include <texsr/appearance_sr.hpp>

#include <texsr/error.hpp>
#include <texsr/parallel.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

namespace texsr {

std::string_view to_string(KernelKind kind)
{
    switch (kind) {
    case KernelKind::Nearest: return "nearest";
    case KernelKind::Bilinear: return "bilinear";
    case KernelKind::Bicubic: return "bicubic";
    case KernelKind::Lanczos: return "lanczos";
    }
    return "unknown";
}

KernelKind parse_kernel_kind(std::string_view text)
{
    for (KernelKind k : {KernelKind::Nearest, KernelKind::Bilinear, KernelKind::Bicubic, KernelKind::Lanczos}) {
        if (text == to_string(k)) return k;
    }
    fail(ErrorCode::InvalidConfig, "unknown interpolation kernel '" + std::string(text) + "'");
}

double InterpKernel::support() const
{
    switch (kind) {
    case KernelKind::Nearest: return 0.5;
    case KernelKind::Bilinear: return 1.0;
    case KernelKind::Bicubic: return 2.0;
    case KernelKind::Lanczos: return 3.0;
    }
    return 0.0;
}

double InterpKernel::operator()(double offset) const
{
    const double x = std::abs(offset);
    switch (kind) {
    case KernelKind::Nearest:
        return (offset >= -0.5 && offset < 0.5) ? 1.0 : 0.0;
    case KernelKind::Bilinear:
        return x < 1.0 ? 1.0 - x : 0.0;
    case KernelKind::Bicubic: {
        constexpr double a = -0.5;
        if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
        if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
        return 0.0;
    }
    case KernelKind::Lanczos: {
        constexpr double a = 3.0;
        if (x == 0.0) return 1.0;
        if (x >= a) return 0.0;
        const double px = std::numbers::pi * x;
        return a * std::sin(px) * std::sin(px / a) / (px * px);
    }
    }
    return 0.0;
}

namespace {

struct Tap
{
    int index;
    double weight;
};

// Non-zero taps of the kernel centered at `source` inside [0, size).
std::vector<Tap> kernel_taps(const InterpKernel& kernel, double source, int size)
{
    std::vector<Tap> taps;
    const double support = kernel.support();
    const int first = static_cast<int>(std::ceil(source - support));
    const int last = static_cast<int>(std::floor(source + support));
    for (int i = std::max(first, 0); i <= std::min(last, size - 1); ++i) {
        const double w = kernel(i - source);
        if (w != 0.0) taps.push_back({i, w});
    }
    return taps;
}

void check_scale(int scale)
{
    if (scale < 2 || scale > 4) fail(ErrorCode::InvalidFactor, "scale must be 2, 3 or 4, got " + std::to_string(scale));
}

} // namespace

UpsampleResult upsample_interp(const TextureAtlas& lr, int scale, InterpKernel kernel,
                               const std::vector<std::uint8_t>& hr_mask)
{
    check_scale(scale);
    const int width = lr.width * scale;
    const int height = lr.height * scale;
    if (hr_mask.size() != std::size_t(width) * height) {
        fail(ErrorCode::MaskMismatch, "HR mask has " + std::to_string(hr_mask.size()) + " texels, expected " +
                                          std::to_string(width) + "x" + std::to_string(height));
    }

    std::vector<std::vector<Tap>> column_taps(width);
    std::vector<std::vector<Tap>> row_taps(height);
    for (int x = 0; x < width; ++x) column_taps[x] = kernel_taps(kernel, (x + 0.5) / scale - 0.5, lr.width);
    for (int y = 0; y < height; ++y) row_taps[y] = kernel_taps(kernel, (y + 0.5) / scale - 0.5, lr.height);

    UpsampleResult result;
    result.texture = make_texture(width, height);
    result.texture.mask = hr_mask;
    result.unseen.assign(hr_mask.size(), 0);
    parallel_for(0, std::size_t(height), [&](std::size_t row) {
        const int y = static_cast<int>(row);
        for (int x = 0; x < width; ++x) {
            const std::size_t t = std::size_t(y) * width + x;
            if (!hr_mask[t]) continue;
            Color sum = Color::Zero();
            double total = 0.0;
            for (const Tap& ty : row_taps[y]) {
                for (const Tap& tx : column_taps[x]) {
                    const std::size_t src = std::size_t(ty.index) * lr.width + tx.index;
                    if (!lr.mask[src]) continue;
                    const double w = ty.weight * tx.weight;
                    sum += w * lr.rgb[src];
                    total += w;
                }
            }
            if (total > 1e-12) {
                result.texture.rgb[t] = sum / total;
            } else {
                result.unseen[t] = 1;
            }
        }
    });
    for (auto u : result.unseen) result.unseen_count += u;
    sanitize(result.texture);
    return result;
}

void ModelSRConfig::validate() const
{
    check_scale(scale);
    if (!(lambda_tv >= 0.0)) fail(ErrorCode::InvalidConfig, "lambda_tv must be non-negative");
    if (!(step > 0.0)) fail(ErrorCode::InvalidConfig, "step must be positive");
    if (max_iters < 0) fail(ErrorCode::InvalidConfig, "max_iters must be non-negative");
}

std::string_view to_string(SolverStatus status)
{
    switch (status) {
    case SolverStatus::Converged: return "converged";
    case SolverStatus::MaxIterations: return "max_iterations";
    case SolverStatus::Diverged: return "diverged";
    }
    return "unknown";
}

namespace {

struct NeighborDiff
{
    Color dx;
    Color dy;
};

// Forward differences that are zero unless both texels are active.
NeighborDiff forward_diff(const TextureAtlas& tex, int x, int y)
{
    const std::size_t t = std::size_t(y) * tex.width + x;
    NeighborDiff d{Color::Zero(), Color::Zero()};
    if (x + 1 < tex.width && tex.mask[t + 1]) d.dx = tex.rgb[t + 1] - tex.rgb[t];
    if (y + 1 < tex.height && tex.mask[t + tex.width]) d.dy = tex.rgb[t + tex.width] - tex.rgb[t];
    return d;
}

// Gradient of the TV term (unweighted).
std::vector<Color> tv_gradient(const TextureAtlas& tex, double epsilon)
{
    const std::size_t n = tex.texel_count();
    std::vector<Color> ratio_x(n, Color::Zero());
    std::vector<Color> ratio_y(n, Color::Zero());
    parallel_for(0, n, [&](std::size_t t) {
        if (!tex.mask[t]) return;
        const int x = static_cast<int>(t % tex.width);
        const int y = static_cast<int>(t / tex.width);
        const NeighborDiff d = forward_diff(tex, x, y);
        const Color s = (d.dx.array().square() + d.dy.array().square() + epsilon).sqrt().matrix();
        ratio_x[t] = d.dx.cwiseQuotient(s);
        ratio_y[t] = d.dy.cwiseQuotient(s);
    });
    std::vector<Color> grad(n, Color::Zero());
    parallel_for(0, n, [&](std::size_t t) {
        if (!tex.mask[t]) return;
        const int x = static_cast<int>(t % tex.width);
        const int y = static_cast<int>(t / tex.width);
        Color g = -ratio_x[t] - ratio_y[t];
        if (x > 0) g += ratio_x[t - 1];
        if (y > 0) g += ratio_y[t - tex.width];
        grad[t] = g;
    });
    return grad;
}

void check_views(std::span<const ViewImage> views, std::span<const SparseProjectionOperator> ops,
                 const TextureAtlas& texture)
{
    if (views.size() != ops.size()) {
        fail(ErrorCode::ViewMismatch, std::to_string(ops.size()) + " operators for " + std::to_string(views.size()) +
                                          " views");
    }
    for (std::size_t v = 0; v < ops.size(); ++v) {
        if (ops[v].atlas_width() != texture.width || ops[v].atlas_height() != texture.height) {
            fail(ErrorCode::ViewMismatch, "operator " + std::to_string(v) + " was not built on the HR atlas");
        }
        if (views[v].width != ops[v].image_width() || views[v].height != ops[v].image_height()) {
            fail(ErrorCode::ViewMismatch, "view " + std::to_string(v) + " does not match its operator");
        }
    }
}

} // namespace

double total_variation(const TextureAtlas& texture, double epsilon)
{
    double tv = 0.0;
    for (int y = 0; y < texture.height; ++y) {
        for (int x = 0; x < texture.width; ++x) {
            if (!texture.mask[std::size_t(y) * texture.width + x]) continue;
            const NeighborDiff d = forward_diff(texture, x, y);
            tv += (d.dx.array().square() + d.dy.array().square() + epsilon).sqrt().sum();
        }
    }
    return tv;
}

ObjectiveTerms model_sr_objective(std::span<const ViewImage> views, std::span<const SparseProjectionOperator> ops,
                                  const TextureAtlas& texture, double lambda_tv)
{
    ObjectiveTerms terms;
    for (std::size_t v = 0; v < ops.size(); ++v) {
        const ViewImage rendered = apply_forward(ops[v], texture);
        for (std::size_t p = 0; p < rendered.pixel_count(); ++p) {
            if (rendered.coverage[p] && views[v].coverage[p]) {
                terms.data += (rendered.rgb[p] - views[v].rgb[p]).squaredNorm();
            }
        }
    }
    terms.tv = lambda_tv > 0.0 ? total_variation(texture) : 0.0;
    terms.total = terms.data + lambda_tv * terms.tv;
    return terms;
}

ModelSRResult model_sr_solve(std::span<const ViewImage> lr_views, std::span<const SparseProjectionOperator> lr_ops,
                             const TextureAtlas& init, const ModelSRConfig& config)
{
    config.validate();
    check_views(lr_views, lr_ops, init);

    constexpr int kMaxHalvings = 40;
    const std::size_t n = init.texel_count();

    ModelSRResult result;
    TextureAtlas current = init;
    ObjectiveTerms current_terms = model_sr_objective(lr_views, lr_ops, current, config.lambda_tv);
    result.trace.push_back(current_terms);
    if (!std::isfinite(current_terms.total)) {
        result.texture = init;
        result.status = SolverStatus::Diverged;
        return result;
    }

    TextureAtlas candidate = init;
    for (int it = 0; it < config.max_iters; ++it) {
        std::vector<Color> grad(n, Color::Zero());
        for (std::size_t v = 0; v < lr_ops.size(); ++v) {
            ViewImage residual = apply_forward(lr_ops[v], current);
            for (std::size_t p = 0; p < residual.pixel_count(); ++p) {
                residual.rgb[p] = residual.coverage[p] && lr_views[v].coverage[p]
                                     ? Color(residual.rgb[p] - lr_views[v].rgb[p])
                                     : Color::Zero();
            }
            const AdjointAccumulation back = apply_adjoint(lr_ops[v], residual);
            parallel_for(0, n, [&](std::size_t t) { grad[t] += 2.0 * back.color[t]; });
        }
        if (config.lambda_tv > 0.0) {
            const std::vector<Color> tv = tv_gradient(current, kTvEpsilon);
            parallel_for(0, n, [&](std::size_t t) { grad[t] += config.lambda_tv * tv[t]; });
        }

        bool accepted = false;
        bool finite = false;
        double alpha = config.step;
        ObjectiveTerms trial;
        for (int h = 0; h <= kMaxHalvings && !accepted; ++h, alpha *= 0.5) {
            parallel_for(0, n, [&](std::size_t t) {
                candidate.rgb[t] = init.mask[t] ? Color((current.rgb[t] - alpha * grad[t]).cwiseMax(0.0).cwiseMin(1.0))
                                                : Color::Zero();
            });
            trial = model_sr_objective(lr_views, lr_ops, candidate, config.lambda_tv);
            finite = finite || std::isfinite(trial.total);
            accepted = trial.total < current_terms.total;
        }
        if (!accepted) {
            result.status = finite ? SolverStatus::Converged : SolverStatus::Diverged;
            break;
        }
        std::swap(current, candidate);
        current_terms = trial;
        result.trace.push_back(current_terms);
        result.iterations = it + 1;
        if (it + 1 == config.max_iters) result.status = SolverStatus::MaxIterations;
    }
    if (config.max_iters == 0) result.status = SolverStatus::MaxIterations;
    result.texture = current;
    return result;
}

void write_trace_csv(const std::filesystem::path& path, const std::vector<ObjectiveTerms>& trace)
{
    std::ostringstream out;
    out << std::setprecision(17) << "iteration,data,tv,total\n";
    for (std::size_t k = 0; k < trace.size(); ++k) {
        out << k << ',' << trace[k].data << ',' << trace[k].tv << ',' << trace[k].total << '\n';
    }
    std::ofstream file(path, std::ios::binary);
    if (!file) fail(ErrorCode::IoError, "cannot write " + path.string());
    file << out.str();
}

} // namespace texsr
