#pragma once

#include <texsr/camera.hpp>
#include <texsr/geometry.hpp>
#include <texsr/texture.hpp>

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace texsr {

/// Free parameters of the Gaussian footprint used to splat texels to pixels.
struct SplatConfig
{
    double sigma = 0.5;           // pixels
    int radius = 2;               // Chebyshev truncation radius, pixels
    double depth_epsilon = 1e-3;  // relative depth tolerance of the visibility test

    /// Throws InvalidConfig if sigma <= 0, radius < 1 or depth_epsilon is
    /// outside (0, 0.1).
    void validate() const;
};

/// Camera image with continuous colors in [0, 1]. Pixel (x, y) is stored at
/// y * width + x.
struct ViewImage
{
    int width = 0;
    int height = 0;
    std::vector<Color> rgb;
    std::vector<std::uint8_t> coverage;

    std::size_t pixel_count() const { return rgb.size(); }
};

ViewImage make_view_image(int width, int height);
/// 8-bit RGB; coverage of a loaded image is all ones.
ViewImage read_view_image(const std::filesystem::path& path);
void write_view_image(const std::filesystem::path& path, const ViewImage& image);

struct OperatorEntry
{
    std::uint32_t texel = 0;
    double weight = 0.0;
};

struct TransposeEntry
{
    std::uint32_t pixel = 0;
    double weight = 0.0;
};

/// Sparse map from atlas texels to view pixels. Rows are pixels; every
/// non-empty row is a convex combination of texels (weights >= 0 summing to
/// one), listed in ascending texel order. The transpose is stored alongside so
/// that the adjoint can sum each texel in ascending pixel order.
class SparseProjectionOperator
{
public:
    SparseProjectionOperator(CameraView view, int atlas_width, int atlas_height, std::vector<std::size_t> row_offsets,
                             std::vector<OperatorEntry> entries);

    const CameraView& view() const { return m_view; }
    int image_width() const { return m_view.width; }
    int image_height() const { return m_view.height; }
    int atlas_width() const { return m_atlas_width; }
    int atlas_height() const { return m_atlas_height; }
    std::size_t pixel_count() const { return m_row_offsets.size() - 1; }
    std::size_t texel_count() const { return std::size_t(m_atlas_width) * m_atlas_height; }
    std::size_t nonzero_count() const { return m_entries.size(); }

    std::span<const OperatorEntry> row(std::size_t pixel) const
    {
        return {m_entries.data() + m_row_offsets[pixel], m_entries.data() + m_row_offsets[pixel + 1]};
    }
    std::span<const TransposeEntry> column(std::size_t texel) const
    {
        return {m_transpose.data() + m_col_offsets[texel], m_transpose.data() + m_col_offsets[texel + 1]};
    }

private:
    CameraView m_view;
    int m_atlas_width;
    int m_atlas_height;
    std::vector<std::size_t> m_row_offsets;
    std::vector<OperatorEntry> m_entries;
    std::vector<std::size_t> m_col_offsets;
    std::vector<TransposeEntry> m_transpose;
};

/// Per-pixel minimum camera-space depth of the mesh seen from `camera`
/// (+infinity where nothing is rasterized). Depth is interpolated
/// perspective-correctly at pixel centers; triangles with a corner behind the
/// camera are skipped.
std::vector<double> render_depth_buffer(const TriangleMesh& mesh, const CameraView& camera);

/// Builds the operator of one view.
///
/// Every active texel is projected; it contributes to the pixels whose
/// centers lie within Chebyshev distance `radius` of its projection, with
/// weight exp(-d^2 / (2 sigma^2)), unless it lies more than
/// depth_epsilon * depth behind the depth buffer at that pixel. Each pixel's
/// weights are then normalized to sum to one. Throws EmptyOperator when no
/// texel reaches the image.
SparseProjectionOperator build_operator(const TexelAtlasMap& atlas, const TriangleMesh& mesh,
                                        const CameraView& camera, const SplatConfig& config = {});

/// Renders a texture: each covered pixel is the weighted mean of its texels,
/// uncovered pixels are black. Throws DimensionMismatch.
ViewImage apply_forward(const SparseProjectionOperator& op, const TextureAtlas& texture);

/// Transposed operator applied to an image, plus the per-texel sum of weights.
struct AdjointAccumulation
{
    int width = 0;
    int height = 0;
    std::vector<Color> color;
    std::vector<double> weight;
};

AdjointAccumulation apply_adjoint(const SparseProjectionOperator& op, const ViewImage& image);

/// Binary operator cache ("TXOP", version, pixel and texel counts, then per
/// row an entry count and (texel u32, weight f64) pairs; little-endian).
void save_operator(const std::filesystem::path& path, const SparseProjectionOperator& op);
/// The view and atlas size are not stored; they are checked against the
/// counts in the header.
SparseProjectionOperator load_operator(const std::filesystem::path& path, const CameraView& view, int atlas_width,
                                       int atlas_height);

} // namespace texsr
