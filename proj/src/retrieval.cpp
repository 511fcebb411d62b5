#include <texsr/retrieval.hpp>

#include <texsr/error.hpp>
#include <texsr/parallel.hpp>

#include <cmath>

namespace texsr {

std::string_view to_string(RetrievalMode mode)
{
    return mode == RetrievalMode::Backprojection ? "backprojection" : "least_squares";
}

RetrievalMode parse_retrieval_mode(std::string_view text)
{
    if (text == "backprojection") return RetrievalMode::Backprojection;
    if (text == "least_squares") return RetrievalMode::LeastSquares;
    fail(ErrorCode::InvalidConfig, "unknown retrieval mode '" + std::string(text) + "'");
}

void RetrievalConfig::validate() const
{
    if (!(lambda >= 0.0)) fail(ErrorCode::InvalidConfig, "lambda must be non-negative");
    if (max_iters < 0) fail(ErrorCode::InvalidConfig, "max_iters must be non-negative");
    if (!(tol > 0.0)) fail(ErrorCode::InvalidConfig, "tol must be positive");
}

namespace {

void check_inputs(std::span<const SparseProjectionOperator> ops, std::span<const ViewImage> images,
                  const TexelAtlasMap& atlas)
{
    if (ops.size() != images.size()) {
        fail(ErrorCode::ViewMismatch, std::to_string(ops.size()) + " operators for " + std::to_string(images.size()) +
                                          " images");
    }
    for (std::size_t v = 0; v < ops.size(); ++v) {
        if (ops[v].atlas_width() != atlas.width() || ops[v].atlas_height() != atlas.height()) {
            fail(ErrorCode::ViewMismatch, "operator " + std::to_string(v) + " was built on a different atlas");
        }
        if (images[v].width != ops[v].image_width() || images[v].height != ops[v].image_height()) {
            fail(ErrorCode::ViewMismatch, "image " + std::to_string(v) + " does not match its camera");
        }
    }
}

} // namespace

RetrievalResult retrieve_backprojection(std::span<const SparseProjectionOperator> ops,
                                        std::span<const ViewImage> images, const TexelAtlasMap& atlas)
{
    check_inputs(ops, images, atlas);
    const std::size_t texels = atlas.texel_count();
    std::vector<Color> color(texels, Color::Zero());
    std::vector<double> weight(texels, 0.0);
    // Pixels without coverage carry no observation.
    for (std::size_t v = 0; v < ops.size(); ++v) {
        const auto& op = ops[v];
        const auto& image = images[v];
        parallel_for(0, texels, [&](std::size_t t) {
            for (const auto& e : op.column(t)) {
                if (!image.coverage[e.pixel]) continue;
                color[t] += e.weight * image.rgb[e.pixel];
                weight[t] += e.weight;
            }
        });
    }

    RetrievalResult result;
    result.texture = make_texture(atlas);
    result.unseen.assign(texels, 0);
    for (std::size_t t = 0; t < texels; ++t) {
        if (!result.texture.mask[t]) continue;
        if (weight[t] > 0.0) {
            result.texture.rgb[t] = color[t] / weight[t];
        } else {
            result.unseen[t] = 1;
            ++result.unseen_count;
        }
    }
    if (result.unseen_count == result.texture.active_count()) {
        fail(ErrorCode::NoObservations, "no active texel is observed by any view");
    }
    result.unclamped = result.texture;
    sanitize(result.texture);
    return result;
}

namespace {

// Stacked system [M_1 P_1; ...; M_n P_n; sqrt(lambda) I_S] for one color
// channel, where M_v masks uncovered pixels and S is the set of observed texels.
class StackedSystem
{
public:
    StackedSystem(std::span<const SparseProjectionOperator> ops, std::span<const ViewImage> images,
                  const std::vector<std::uint8_t>& solved, double lambda)
        : m_ops(ops)
        , m_images(images)
        , m_solved(solved)
        , m_sqrt_lambda(std::sqrt(lambda))
    {}

    struct Residual
    {
        std::vector<std::vector<double>> views;
        std::vector<double> prior;
    };

    Residual make_residual() const
    {
        Residual r;
        for (const auto& op : m_ops) r.views.emplace_back(op.pixel_count(), 0.0);
        r.prior.assign(m_solved.size(), 0.0);
        return r;
    }

    void apply(const std::vector<double>& x, Residual& out) const
    {
        for (std::size_t v = 0; v < m_ops.size(); ++v) {
            const auto& op = m_ops[v];
            auto& y = out.views[v];
            const auto& coverage = m_images[v].coverage;
            parallel_for(0, op.pixel_count(), [&](std::size_t p) {
                double s = 0.0;
                if (coverage[p]) {
                    for (const auto& e : op.row(p)) s += e.weight * x[e.texel];
                }
                y[p] = s;
            });
        }
        parallel_for(0, x.size(), [&](std::size_t t) { out.prior[t] = m_solved[t] ? m_sqrt_lambda * x[t] : 0.0; });
    }

    void apply_transpose(const Residual& r, std::vector<double>& out) const
    {
        parallel_for(0, out.size(), [&](std::size_t t) {
            if (!m_solved[t]) {
                out[t] = 0.0;
                return;
            }
            double s = m_sqrt_lambda * r.prior[t];
            for (std::size_t v = 0; v < m_ops.size(); ++v) {
                const auto& coverage = m_images[v].coverage;
                for (const auto& e : m_ops[v].column(t)) {
                    if (coverage[e.pixel]) s += e.weight * r.views[v][e.pixel];
                }
            }
            out[t] = s;
        });
    }

private:
    std::span<const SparseProjectionOperator> m_ops;
    std::span<const ViewImage> m_images;
    const std::vector<std::uint8_t>& m_solved;
    double m_sqrt_lambda;
};

double squared_norm(const std::vector<double>& v)
{
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

double squared_norm(const StackedSystem::Residual& r)
{
    double s = squared_norm(r.prior);
    for (const auto& v : r.views) s += squared_norm(v);
    return s;
}

// ||r - alpha q||^2, summed in the same order as squared_norm(r).
double squared_norm_after_step(const StackedSystem::Residual& r, const StackedSystem::Residual& q, double alpha)
{
    auto partial = [alpha](const std::vector<double>& a, const std::vector<double>& b) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double e = a[i] - alpha * b[i];
            s += e * e;
        }
        return s;
    };
    double s = partial(r.prior, q.prior);
    for (std::size_t v = 0; v < r.views.size(); ++v) s += partial(r.views[v], q.views[v]);
    return s;
}

} // namespace

double least_squares_objective(std::span<const SparseProjectionOperator> ops, std::span<const ViewImage> images,
                               const TextureAtlas& texture, const TextureAtlas& prior, double lambda,
                               const std::vector<std::uint8_t>& solved)
{
    double total = 0.0;
    for (std::size_t v = 0; v < ops.size(); ++v) {
        const ViewImage rendered = apply_forward(ops[v], texture);
        for (std::size_t p = 0; p < rendered.pixel_count(); ++p) {
            if (rendered.coverage[p] && images[v].coverage[p]) {
                total += (rendered.rgb[p] - images[v].rgb[p]).squaredNorm();
            }
        }
    }
    for (std::size_t t = 0; t < texture.texel_count(); ++t) {
        if (solved[t]) total += lambda * (texture.rgb[t] - prior.rgb[t]).squaredNorm();
    }
    return total;
}

RetrievalResult retrieve_least_squares(std::span<const SparseProjectionOperator> ops,
                                       std::span<const ViewImage> images, const TexelAtlasMap& atlas,
                                       const RetrievalConfig& config)
{
    config.validate();
    RetrievalResult result = retrieve_backprojection(ops, images, atlas);
    const TextureAtlas initial = result.unclamped;
    const std::size_t texels = atlas.texel_count();

    std::vector<std::uint8_t> solved(texels, 0);
    for (std::size_t t = 0; t < texels; ++t) solved[t] = initial.mask[t] && !result.unseen[t];

    const StackedSystem system(ops, images, solved, config.lambda);
    TextureAtlas estimate = initial;
    result.converged = true;
    result.iterations = 0;

    for (int c = 0; c < 3; ++c) {
        auto& norms = result.residual_norms[c];
        std::vector<double> x(texels);
        for (std::size_t t = 0; t < texels; ++t) x[t] = initial.rgb[t][c];

        // b - A x0
        StackedSystem::Residual r = system.make_residual();
        system.apply(x, r);
        for (std::size_t v = 0; v < ops.size(); ++v) {
            auto& rv = r.views[v];
            for (std::size_t p = 0; p < rv.size(); ++p) {
                rv[p] = ops[v].row(p).empty() || !images[v].coverage[p] ? 0.0 : images[v].rgb[p][c] - rv[p];
            }
        }
        // The prior term is zero at x0 = T0.
        std::fill(r.prior.begin(), r.prior.end(), 0.0);

        std::vector<double> s(texels);
        system.apply_transpose(r, s);
        std::vector<double> dir = s;
        double gamma = squared_norm(s);
        const double gamma0 = gamma;
        norms.push_back(std::sqrt(squared_norm(r)));

        StackedSystem::Residual q = system.make_residual();
        bool channel_converged = gamma0 == 0.0;
        int k = 0;
        for (; k < config.max_iters && !channel_converged; ++k) {
            system.apply(dir, q);
            const double qq = squared_norm(q);
            if (!(qq > 0.0)) {
                channel_converged = true;
                break;
            }
            const double alpha = gamma / qq;
            // Once the residual sits at its minimum, rounding can make a step
            // increase it; such a step is dropped and the channel stops.
            const double next_norm = std::sqrt(squared_norm_after_step(r, q, alpha));
            if (next_norm > norms.back()) {
                channel_converged = true;
                break;
            }
            for (std::size_t t = 0; t < texels; ++t) x[t] += alpha * dir[t];
            for (std::size_t v = 0; v < ops.size(); ++v) {
                for (std::size_t p = 0; p < r.views[v].size(); ++p) r.views[v][p] -= alpha * q.views[v][p];
            }
            for (std::size_t t = 0; t < texels; ++t) r.prior[t] -= alpha * q.prior[t];
            system.apply_transpose(r, s);
            const double gamma_next = squared_norm(s);
            norms.push_back(next_norm);
            const double beta = gamma_next / gamma;
            gamma = gamma_next;
            for (std::size_t t = 0; t < texels; ++t) dir[t] = s[t] + beta * dir[t];
            if (std::sqrt(gamma) <= config.tol * std::sqrt(gamma0)) channel_converged = true;
        }
        result.converged = result.converged && channel_converged;
        result.iterations = std::max(result.iterations, k);
        for (std::size_t t = 0; t < texels; ++t) {
            if (solved[t]) estimate.rgb[t][c] = x[t];
        }
    }

    result.unclamped = estimate;
    result.texture = estimate;
    sanitize(result.texture);
    return result;
}

RetrievalResult retrieve(std::span<const SparseProjectionOperator> ops, std::span<const ViewImage> images,
                         const TexelAtlasMap& atlas, const RetrievalConfig& config)
{
    if (config.mode == RetrievalMode::LeastSquares) return retrieve_least_squares(ops, images, atlas, config);
    return retrieve_backprojection(ops, images, atlas);
}

} // namespace texsr
