#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <vector>

namespace texsr {

/// One triangle corner: indices into the position, texture-coordinate and
/// normal arrays of a TriangleMesh (zero-based).
struct FaceCorner
{
    std::uint32_t vertex = 0;
    std::uint32_t uv = 0;
    std::uint32_t normal = 0;

    bool operator==(const FaceCorner&) const = default;
};

using Face = std::array<FaceCorner, 3>;

/// UV-parameterized triangle mesh. Every face corner carries a position, a
/// texture coordinate and a unit normal.
struct TriangleMesh
{
    std::vector<Eigen::Vector3d> vertices;
    std::vector<Eigen::Vector2d> uvs;
    std::vector<Eigen::Vector3d> normals;
    std::vector<Face> faces;
};

struct MeshStats
{
    std::size_t vertex_count = 0;
    std::size_t uv_count = 0;
    std::size_t normal_count = 0;
    std::size_t face_count = 0;
};

/// Loads the Wavefront OBJ subset v / vt / vn / f. Polygons with more than
/// three corners are fan-triangulated, normals are renormalized, materials,
/// groups and other statements are ignored.
///
/// Throws FileNotFound, ParseError (with line number), MissingAttribute when a
/// face corner lacks vt or vn, EmptyMesh when no face is present.
TriangleMesh load_mesh(const std::filesystem::path& path);
TriangleMesh parse_obj(std::istream& in, const std::string& source_name = "<stream>");

/// Writes v / vt / vn / f records with 17 significant digits.
void write_obj(const std::filesystem::path& path, const TriangleMesh& mesh);

MeshStats mesh_stats(const TriangleMesh& mesh);

/// Checks the TriangleMesh invariants; throws ParseError describing the
/// first violation.
void validate_mesh(const TriangleMesh& mesh);

/// Surface correspondence of one texel center.
struct TexelSample
{
    std::uint32_t face = 0;
    std::array<double, 3> barycentric{};
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
};

/// Texel grid of an atlas and, per texel, the surface point its center maps
/// to. Texel (i, j) has index j * width + i and center
/// (u, v) = ((i + 0.5) / width, (j + 0.5) / height); row j is also row j of
/// every PNG written for the atlas.
class TexelAtlasMap
{
public:
    TexelAtlasMap(int width, int height);

    int width() const { return m_width; }
    int height() const { return m_height; }
    std::size_t texel_count() const { return m_samples.size(); }
    std::size_t index(int i, int j) const { return std::size_t(j) * m_width + i; }

    bool active(std::size_t texel) const { return m_samples[texel].has_value(); }
    const std::optional<TexelSample>& sample(std::size_t texel) const { return m_samples[texel]; }
    std::optional<TexelSample>& sample(std::size_t texel) { return m_samples[texel]; }

    /// 1 where a sample is present, 0 elsewhere.
    std::vector<std::uint8_t> mask() const;
    std::size_t active_count() const;

    /// UV triangles skipped because their area was below the degeneracy bound.
    std::size_t degenerate_faces = 0;

private:
    int m_width;
    int m_height;
    std::vector<std::optional<TexelSample>> m_samples;
};

/// UV triangles with area at or below this value never receive texels.
inline constexpr double kDegenerateUvArea = 1e-12;

/// Maps every texel center to the surface. A center belongs to a UV triangle
/// iff it lies inside it under the top-left fill rule; when charts overlap the
/// lowest face index wins. Throws InvalidSize for a zero dimension and
/// DegenerateAtlas when no texel is covered.
TexelAtlasMap rasterize_atlas(const TriangleMesh& mesh, int width, int height);

/// 4-channel 8-bit normal map: encoded nx, ny, nz and an alpha mask.
struct NormalMapImage
{
    int width = 0;
    int height = 0;
    std::vector<std::array<std::uint8_t, 4>> texels;
};

NormalMapImage bake_normal_map(const TexelAtlasMap& atlas);

/// round((n + 1) / 2 * 255) with halves rounded up.
std::uint8_t encode_normal_component(double n);
/// (c / 255) * 2 - 1 per channel.
Eigen::Vector3d decode_normal(const std::array<std::uint8_t, 4>& texel);

void write_normal_map(const std::filesystem::path& path, const NormalMapImage& image);
NormalMapImage read_normal_map(const std::filesystem::path& path);

} // namespace texsr
