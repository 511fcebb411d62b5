#include <texsr/geometry.hpp>

#include <texsr/error.hpp>
#include <texsr/image_io.hpp>
#include <texsr/parallel.hpp>

#include "raster.hpp"

#include <Eigen/Geometry>

#include <cmath>

namespace texsr {

MeshStats mesh_stats(const TriangleMesh& mesh)
{
    return {mesh.vertices.size(), mesh.uvs.size(), mesh.normals.size(), mesh.faces.size()};
}

void validate_mesh(const TriangleMesh& mesh)
{
    if (mesh.faces.empty()) fail(ErrorCode::EmptyMesh, "mesh has no faces");
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        for (const FaceCorner& c : mesh.faces[f]) {
            if (c.vertex >= mesh.vertices.size() || c.uv >= mesh.uvs.size() || c.normal >= mesh.normals.size()) {
                fail(ErrorCode::ParseError, "face " + std::to_string(f) + " has an out-of-range index");
            }
        }
    }
    for (std::size_t n = 0; n < mesh.normals.size(); ++n) {
        if (std::abs(mesh.normals[n].norm() - 1.0) > 1e-6) {
            fail(ErrorCode::ParseError, "normal " + std::to_string(n) + " is not unit length");
        }
    }
}

TexelAtlasMap::TexelAtlasMap(int width, int height)
    : m_width(width)
    , m_height(height)
{
    if (width < 1 || height < 1) {
        fail(ErrorCode::InvalidSize, "atlas size " + std::to_string(width) + "x" + std::to_string(height));
    }
    m_samples.resize(std::size_t(width) * height);
}

std::vector<std::uint8_t> TexelAtlasMap::mask() const
{
    std::vector<std::uint8_t> out(m_samples.size());
    for (std::size_t t = 0; t < m_samples.size(); ++t) out[t] = m_samples[t].has_value() ? 1 : 0;
    return out;
}

std::size_t TexelAtlasMap::active_count() const
{
    std::size_t n = 0;
    for (const auto& s : m_samples) n += s.has_value() ? 1 : 0;
    return n;
}

namespace {

Eigen::Vector3d interpolate_normal(const TriangleMesh& mesh, const Face& face, const std::array<double, 3>& b)
{
    Eigen::Vector3d n = Eigen::Vector3d::Zero();
    for (int k = 0; k < 3; ++k) n += b[k] * mesh.normals[face[k].normal];
    const double length = n.norm();
    if (length > 1e-12) return n / length;

    // Opposing corner normals cancel out; use the geometric face normal.
    const Eigen::Vector3d& p0 = mesh.vertices[face[0].vertex];
    const Eigen::Vector3d g = (mesh.vertices[face[1].vertex] - p0).cross(mesh.vertices[face[2].vertex] - p0);
    if (g.norm() > 0.0) return g.normalized();
    const int dominant = b[0] >= b[1] && b[0] >= b[2] ? 0 : (b[1] >= b[2] ? 1 : 2);
    return mesh.normals[face[dominant].normal];
}

} // namespace

TexelAtlasMap rasterize_atlas(const TriangleMesh& mesh, int width, int height)
{
    TexelAtlasMap atlas(width, height);
    validate_mesh(mesh);

    std::vector<detail::RasterTriangle> tris;
    std::vector<std::uint8_t> enabled(mesh.faces.size(), 1);
    tris.reserve(mesh.faces.size());
    const Eigen::Vector2d texel_scale(width, height);
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        const Face& face = mesh.faces[f];
        const Eigen::Vector2d& t0 = mesh.uvs[face[0].uv];
        const Eigen::Vector2d& t1 = mesh.uvs[face[1].uv];
        const Eigen::Vector2d& t2 = mesh.uvs[face[2].uv];
        const double uv_area = 0.5 * std::abs(detail::edge_function(t0, t1, t2));
        if (!(uv_area > kDegenerateUvArea)) {
            enabled[f] = 0;
            ++atlas.degenerate_faces;
        }
        tris.emplace_back(t0.cwiseProduct(texel_scale), t1.cwiseProduct(texel_scale), t2.cwiseProduct(texel_scale));
    }

    const auto rows = detail::bucket_rows(tris, enabled, height);
    parallel_for(0, std::size_t(height), [&](std::size_t row) {
        const int j = static_cast<int>(row);
        for (std::uint32_t f : rows[j]) {
            const auto& tri = tris[f];
            const auto [first, last] = detail::center_range(tri.min_x(), tri.max_x(), width);
            for (int i = first; i <= last; ++i) {
                auto& slot = atlas.sample(atlas.index(i, j));
                if (slot) continue; // lower face index already owns this texel
                std::array<double, 3> b;
                if (!tri.cover(Eigen::Vector2d(i + 0.5, j + 0.5), b)) continue;
                const Face& face = mesh.faces[f];
                TexelSample s;
                s.face = f;
                s.barycentric = b;
                s.position = b[0] * mesh.vertices[face[0].vertex] + b[1] * mesh.vertices[face[1].vertex] +
                             b[2] * mesh.vertices[face[2].vertex];
                s.normal = interpolate_normal(mesh, face, b);
                slot = s;
            }
        }
    });

    if (atlas.active_count() == 0) {
        fail(ErrorCode::DegenerateAtlas, "no texel center of the " + std::to_string(width) + "x" +
                                             std::to_string(height) + " atlas lies inside a UV triangle");
    }
    return atlas;
}

std::uint8_t encode_normal_component(double n)
{
    const double scaled = std::floor((n + 1.0) * 0.5 * 255.0 + 0.5);
    return static_cast<std::uint8_t>(std::clamp(scaled, 0.0, 255.0));
}

Eigen::Vector3d decode_normal(const std::array<std::uint8_t, 4>& texel)
{
    return {texel[0] / 255.0 * 2.0 - 1.0, texel[1] / 255.0 * 2.0 - 1.0, texel[2] / 255.0 * 2.0 - 1.0};
}

NormalMapImage bake_normal_map(const TexelAtlasMap& atlas)
{
    NormalMapImage img;
    img.width = atlas.width();
    img.height = atlas.height();
    img.texels.assign(atlas.texel_count(), {0, 0, 0, 0});
    parallel_for(0, atlas.texel_count(), [&](std::size_t t) {
        const auto& s = atlas.sample(t);
        if (!s) return;
        img.texels[t] = {encode_normal_component(s->normal.x()), encode_normal_component(s->normal.y()),
                         encode_normal_component(s->normal.z()), 255};
    });
    return img;
}

void write_normal_map(const std::filesystem::path& path, const NormalMapImage& image)
{
    RasterImage raster = make_raster(image.width, image.height, 4, 8);
    for (std::size_t t = 0; t < image.texels.size(); ++t) {
        for (int c = 0; c < 4; ++c) raster.samples[4 * t + c] = image.texels[t][c];
    }
    write_png(path, raster);
}

NormalMapImage read_normal_map(const std::filesystem::path& path)
{
    const RasterImage raster = read_png(path);
    if (raster.channels != 4 || raster.bit_depth != 8) {
        fail(ErrorCode::ParseError, path.string() + ": normal maps are 8-bit RGBA");
    }
    NormalMapImage img;
    img.width = raster.width;
    img.height = raster.height;
    img.texels.resize(std::size_t(raster.width) * raster.height);
    for (std::size_t t = 0; t < img.texels.size(); ++t) {
        for (int c = 0; c < 4; ++c) img.texels[t][c] = static_cast<std::uint8_t>(raster.samples[4 * t + c]);
    }
    return img;
}

} // namespace texsr
