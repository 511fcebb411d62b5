#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <vector>

namespace texsr {

class TexelAtlasMap;

using Color = Eigen::Vector3d;

/// RGB texture over an atlas grid. Colors are in [0, 1] and zero wherever the
/// mask is 0. Texel (i, j) is stored at j * width + i.
struct TextureAtlas
{
    int width = 0;
    int height = 0;
    std::vector<Color> rgb;
    std::vector<std::uint8_t> mask;

    std::size_t texel_count() const { return rgb.size(); }
    std::size_t active_count() const;
};

TextureAtlas make_texture(int width, int height);
/// All-zero texture whose mask is the atlas' active set.
TextureAtlas make_texture(const TexelAtlasMap& atlas);

/// Clamps colors to [0, 1] and zeroes inactive texels.
void sanitize(TextureAtlas& texture);

/// Texture as 3-channel PNG (8 or 16 bit) plus a 1-channel 8-bit mask PNG
/// (255 = active).
void write_texture_png(const std::filesystem::path& path, const TextureAtlas& texture, int bit_depth = 16);
void write_mask_png(const std::filesystem::path& path, int width, int height, const std::vector<std::uint8_t>& mask);

/// Reads the colors and, when a mask path is given, the mask; without a mask
/// every texel is active. Throws DimensionMismatch if the two differ in size.
TextureAtlas read_texture_png(const std::filesystem::path& path, const std::filesystem::path& mask_path = {});
std::vector<std::uint8_t> read_mask_png(const std::filesystem::path& path, int& width, int& height);

} // namespace texsr
