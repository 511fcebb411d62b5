#include <texsr/formation.hpp>

#include <texsr/error.hpp>
#include <texsr/image_io.hpp>
#include <texsr/parallel.hpp>

#include "raster.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

namespace texsr {

void SplatConfig::validate() const
{
    if (!(sigma > 0.0)) fail(ErrorCode::InvalidConfig, "sigma must be positive");
    if (radius < 1) fail(ErrorCode::InvalidConfig, "radius must be at least 1");
    if (!(depth_epsilon > 0.0 && depth_epsilon < 0.1)) {
        fail(ErrorCode::InvalidConfig, "depth_epsilon must lie in (0, 0.1)");
    }
}

ViewImage make_view_image(int width, int height)
{
    if (width < 1 || height < 1) fail(ErrorCode::InvalidSize, "image size must be positive");
    ViewImage img;
    img.width = width;
    img.height = height;
    img.rgb.assign(std::size_t(width) * height, Color::Zero());
    img.coverage.assign(img.rgb.size(), 0);
    return img;
}

ViewImage read_view_image(const std::filesystem::path& path)
{
    const RasterImage raster = read_png(path);
    ViewImage img = make_view_image(raster.width, raster.height);
    const double peak = raster.max_value();
    for (std::size_t i = 0; i < img.rgb.size(); ++i) {
        for (int c = 0; c < 3; ++c) {
            const int channel = raster.channels >= 3 ? c : 0;
            img.rgb[i][c] = raster.samples[i * raster.channels + channel] / peak;
        }
    }
    std::fill(img.coverage.begin(), img.coverage.end(), 1);
    return img;
}

void write_view_image(const std::filesystem::path& path, const ViewImage& image)
{
    RasterImage raster = make_raster(image.width, image.height, 3, 8);
    for (std::size_t i = 0; i < image.rgb.size(); ++i) {
        for (int c = 0; c < 3; ++c) {
            raster.samples[3 * i + c] = static_cast<std::uint16_t>(std::lround(std::clamp(image.rgb[i][c], 0.0, 1.0) * 255.0));
        }
    }
    write_png(path, raster);
}

SparseProjectionOperator::SparseProjectionOperator(CameraView view, int atlas_width, int atlas_height,
                                                   std::vector<std::size_t> row_offsets,
                                                   std::vector<OperatorEntry> entries)
    : m_view(std::move(view))
    , m_atlas_width(atlas_width)
    , m_atlas_height(atlas_height)
    , m_row_offsets(std::move(row_offsets))
    , m_entries(std::move(entries))
{
    const std::size_t pixels = std::size_t(m_view.width) * m_view.height;
    if (m_row_offsets.size() != pixels + 1 || m_row_offsets.back() != m_entries.size()) {
        fail(ErrorCode::DimensionMismatch, "operator rows do not match the view size");
    }
    const std::size_t texels = texel_count();

    // Counting sort by texel; rows are visited in ascending pixel order.
    m_col_offsets.assign(texels + 1, 0);
    for (const auto& e : m_entries) {
        if (e.texel >= texels) fail(ErrorCode::DimensionMismatch, "operator references a texel outside the atlas");
        ++m_col_offsets[e.texel + 1];
    }
    for (std::size_t t = 0; t < texels; ++t) m_col_offsets[t + 1] += m_col_offsets[t];
    m_transpose.resize(m_entries.size());
    std::vector<std::size_t> cursor(m_col_offsets.begin(), m_col_offsets.end() - 1);
    for (std::size_t p = 0; p < pixels; ++p) {
        for (std::size_t k = m_row_offsets[p]; k < m_row_offsets[p + 1]; ++k) {
            const auto& e = m_entries[k];
            m_transpose[cursor[e.texel]++] = {static_cast<std::uint32_t>(p), e.weight};
        }
    }
}

std::vector<double> render_depth_buffer(const TriangleMesh& mesh, const CameraView& camera)
{
    const int width = camera.width;
    const int height = camera.height;
    std::vector<double> depth(std::size_t(width) * height, std::numeric_limits<double>::infinity());

    std::vector<std::optional<PixelProjection>> projected(mesh.vertices.size());
    parallel_for(0, mesh.vertices.size(), [&](std::size_t v) { projected[v] = try_project_point(camera, mesh.vertices[v]); });

    std::vector<detail::RasterTriangle> tris;
    std::vector<std::uint8_t> enabled(mesh.faces.size(), 1);
    tris.reserve(mesh.faces.size());
    const Eigen::Vector2d far(std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        const Face& face = mesh.faces[f];
        std::array<Eigen::Vector2d, 3> p;
        for (int k = 0; k < 3; ++k) {
            const auto& proj = projected[face[k].vertex];
            if (!proj) enabled[f] = 0;
            p[k] = proj ? proj->pixel : far;
        }
        tris.emplace_back(p[0], p[1], p[2]);
    }

    const auto rows = detail::bucket_rows(tris, enabled, height);
    parallel_for(0, std::size_t(height), [&](std::size_t row) {
        const int y = static_cast<int>(row);
        for (std::uint32_t f : rows[y]) {
            const auto& tri = tris[f];
            const Face& face = mesh.faces[f];
            const auto [first, last] = detail::center_range(tri.min_x(), tri.max_x(), width);
            for (int x = first; x <= last; ++x) {
                std::array<double, 3> b;
                if (!tri.cover(Eigen::Vector2d(x + 0.5, y + 0.5), b)) continue;
                double inv_depth = 0.0;
                for (int k = 0; k < 3; ++k) inv_depth += b[k] / projected[face[k].vertex]->depth;
                double& slot = depth[std::size_t(y) * width + x];
                slot = std::min(slot, 1.0 / inv_depth);
            }
        }
    });
    return depth;
}

namespace {

struct Splat
{
    std::uint32_t pixel;
    std::uint32_t texel;
    double weight;
};

constexpr std::size_t kTexelBlock = 4096;

} // namespace

SparseProjectionOperator build_operator(const TexelAtlasMap& atlas, const TriangleMesh& mesh,
                                        const CameraView& camera, const SplatConfig& config)
{
    config.validate();
    if (camera.width < 1 || camera.height < 1) fail(ErrorCode::InvalidSize, "camera has an empty image");
    const int width = camera.width;
    const int height = camera.height;
    const std::vector<double> zbuffer = render_depth_buffer(mesh, camera);

    // Splats are gathered in fixed texel blocks so the layout is independent
    // of the thread count.
    const std::size_t texels = atlas.texel_count();
    const std::size_t blocks = (texels + kTexelBlock - 1) / kTexelBlock;
    std::vector<std::vector<Splat>> gathered(blocks);
    const double inv_two_sigma2 = 1.0 / (2.0 * config.sigma * config.sigma);
    const double r = config.radius;
    parallel_for(0, blocks, [&](std::size_t block) {
        auto& out = gathered[block];
        const std::size_t end = std::min(texels, (block + 1) * kTexelBlock);
        for (std::size_t t = block * kTexelBlock; t < end; ++t) {
            const auto& sample = atlas.sample(t);
            if (!sample) continue;
            const auto proj = try_project_point(camera, sample->position);
            if (!proj) continue;
            const Eigen::Vector2d& p = proj->pixel;
            if (!p.allFinite()) continue;
            const auto [x0, x1] = detail::center_range(p.x() - r, p.x() + r, width);
            const auto [y0, y1] = detail::center_range(p.y() - r, p.y() + r, height);
            for (int y = y0; y <= y1; ++y) {
                for (int x = x0; x <= x1; ++x) {
                    const std::size_t q = std::size_t(y) * width + x;
                    if (proj->depth - zbuffer[q] > config.depth_epsilon * proj->depth) continue;
                    const double dx = p.x() - (x + 0.5);
                    const double dy = p.y() - (y + 0.5);
                    const double w = std::exp(-(dx * dx + dy * dy) * inv_two_sigma2);
                    if (w > 0.0) out.push_back({static_cast<std::uint32_t>(q), static_cast<std::uint32_t>(t), w});
                }
            }
        }
    });

    const std::size_t pixels = std::size_t(width) * height;
    std::vector<std::size_t> offsets(pixels + 1, 0);
    for (const auto& block : gathered) {
        for (const auto& s : block) ++offsets[s.pixel + 1];
    }
    for (std::size_t p = 0; p < pixels; ++p) offsets[p + 1] += offsets[p];
    if (offsets.back() == 0) fail(ErrorCode::EmptyOperator, "no texel is visible in the view");

    std::vector<OperatorEntry> entries(offsets.back());
    {
        std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
        for (const auto& block : gathered) {
            for (const auto& s : block) entries[cursor[s.pixel]++] = {s.texel, s.weight};
        }
    }
    gathered.clear();

    parallel_for(0, pixels, [&](std::size_t p) {
        double sum = 0.0;
        for (std::size_t k = offsets[p]; k < offsets[p + 1]; ++k) sum += entries[k].weight;
        for (std::size_t k = offsets[p]; k < offsets[p + 1]; ++k) entries[k].weight /= sum;
    });

    return SparseProjectionOperator(camera, atlas.width(), atlas.height(), std::move(offsets), std::move(entries));
}

ViewImage apply_forward(const SparseProjectionOperator& op, const TextureAtlas& texture)
{
    if (texture.width != op.atlas_width() || texture.height != op.atlas_height()) {
        fail(ErrorCode::DimensionMismatch, "texture size does not match the operator's atlas");
    }
    ViewImage img = make_view_image(op.image_width(), op.image_height());
    parallel_for(0, op.pixel_count(), [&](std::size_t p) {
        const auto row = op.row(p);
        if (row.empty()) return;
        Color c = Color::Zero();
        for (const auto& e : row) c += e.weight * texture.rgb[e.texel];
        img.rgb[p] = c;
        img.coverage[p] = 1;
    });
    return img;
}

AdjointAccumulation apply_adjoint(const SparseProjectionOperator& op, const ViewImage& image)
{
    if (image.width != op.image_width() || image.height != op.image_height()) {
        fail(ErrorCode::DimensionMismatch, "image size does not match the operator's view");
    }
    AdjointAccumulation acc;
    acc.width = op.atlas_width();
    acc.height = op.atlas_height();
    acc.color.assign(op.texel_count(), Color::Zero());
    acc.weight.assign(op.texel_count(), 0.0);
    parallel_for(0, op.texel_count(), [&](std::size_t t) {
        Color c = Color::Zero();
        double w = 0.0;
        for (const auto& e : op.column(t)) {
            c += e.weight * image.rgb[e.pixel];
            w += e.weight;
        }
        acc.color[t] = c;
        acc.weight[t] = w;
    });
    return acc;
}

namespace {

constexpr char kOperatorMagic[4] = {'T', 'X', 'O', 'P'};
constexpr std::uint32_t kOperatorVersion = 1;

template <typename T>
void put_le(std::vector<char>& out, T value)
{
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(std::begin(bytes), std::end(bytes));
    out.insert(out.end(), bytes, bytes + sizeof(T));
}

template <typename T>
T get_le(std::istream& in, const std::filesystem::path& path)
{
    unsigned char bytes[sizeof(T)];
    if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) {
        fail(ErrorCode::ParseError, path.string() + ": truncated operator file");
    }
    if constexpr (std::endian::native == std::endian::big) std::reverse(std::begin(bytes), std::end(bytes));
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
}

} // namespace

void save_operator(const std::filesystem::path& path, const SparseProjectionOperator& op)
{
    std::vector<char> out(std::begin(kOperatorMagic), std::end(kOperatorMagic));
    put_le<std::uint32_t>(out, kOperatorVersion);
    put_le<std::uint64_t>(out, op.pixel_count());
    put_le<std::uint64_t>(out, op.texel_count());
    for (std::size_t p = 0; p < op.pixel_count(); ++p) {
        const auto row = op.row(p);
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(row.size()));
        for (const auto& e : row) {
            put_le<std::uint32_t>(out, e.texel);
            put_le<double>(out, e.weight);
        }
    }
    std::ofstream file(path, std::ios::binary);
    if (!file) fail(ErrorCode::IoError, "cannot write " + path.string());
    file.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!file) fail(ErrorCode::IoError, "cannot write " + path.string());
}

SparseProjectionOperator load_operator(const std::filesystem::path& path, const CameraView& view, int atlas_width,
                                       int atlas_height)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::FileNotFound, path.string());
    char magic[4];
    if (!in.read(magic, 4) || !std::equal(magic, magic + 4, kOperatorMagic)) {
        fail(ErrorCode::ParseError, path.string() + ": not an operator file");
    }
    const auto version = get_le<std::uint32_t>(in, path);
    if (version != kOperatorVersion) {
        fail(ErrorCode::UnsupportedVersion, path.string() + ": operator format version " + std::to_string(version));
    }
    const auto pixels = get_le<std::uint64_t>(in, path);
    const auto texels = get_le<std::uint64_t>(in, path);
    if (pixels != std::uint64_t(view.width) * view.height || texels != std::uint64_t(atlas_width) * atlas_height) {
        fail(ErrorCode::DimensionMismatch, path.string() + ": operator size does not match the view and atlas");
    }
    std::vector<std::size_t> offsets(pixels + 1, 0);
    std::vector<OperatorEntry> entries;
    for (std::size_t p = 0; p < pixels; ++p) {
        const auto count = get_le<std::uint32_t>(in, path);
        for (std::uint32_t k = 0; k < count; ++k) {
            OperatorEntry e;
            e.texel = get_le<std::uint32_t>(in, path);
            e.weight = get_le<double>(in, path);
            entries.push_back(e);
        }
        offsets[p + 1] = entries.size();
    }
    return SparseProjectionOperator(view, atlas_width, atlas_height, std::move(offsets), std::move(entries));
}

} // namespace texsr
