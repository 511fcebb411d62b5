#include <texsr/texture.hpp>

#include <texsr/error.hpp>
#include <texsr/geometry.hpp>
#include <texsr/image_io.hpp>

#include <algorithm>
#include <cmath>

namespace texsr {

std::size_t TextureAtlas::active_count() const
{
    return static_cast<std::size_t>(std::count_if(mask.begin(), mask.end(), [](std::uint8_t m) { return m != 0; }));
}

TextureAtlas make_texture(int width, int height)
{
    if (width < 1 || height < 1) fail(ErrorCode::InvalidSize, "texture size must be positive");
    TextureAtlas t;
    t.width = width;
    t.height = height;
    t.rgb.assign(std::size_t(width) * height, Color::Zero());
    t.mask.assign(t.rgb.size(), 0);
    return t;
}

TextureAtlas make_texture(const TexelAtlasMap& atlas)
{
    TextureAtlas t = make_texture(atlas.width(), atlas.height());
    t.mask = atlas.mask();
    return t;
}

void sanitize(TextureAtlas& texture)
{
    for (std::size_t t = 0; t < texture.rgb.size(); ++t) {
        if (!texture.mask[t]) {
            texture.rgb[t].setZero();
        } else {
            texture.rgb[t] = texture.rgb[t].cwiseMax(0.0).cwiseMin(1.0);
        }
    }
}

void write_texture_png(const std::filesystem::path& path, const TextureAtlas& texture, int bit_depth)
{
    RasterImage raster = make_raster(texture.width, texture.height, 3, bit_depth);
    const double peak = raster.max_value();
    for (std::size_t t = 0; t < texture.rgb.size(); ++t) {
        for (int c = 0; c < 3; ++c) {
            const double v = texture.mask[t] ? std::clamp(texture.rgb[t][c], 0.0, 1.0) : 0.0;
            raster.samples[3 * t + c] = static_cast<std::uint16_t>(std::lround(v * peak));
        }
    }
    write_png(path, raster);
}

void write_mask_png(const std::filesystem::path& path, int width, int height, const std::vector<std::uint8_t>& mask)
{
    RasterImage raster = make_raster(width, height, 1, 8);
    for (std::size_t t = 0; t < mask.size(); ++t) raster.samples[t] = mask[t] ? 255 : 0;
    write_png(path, raster);
}

std::vector<std::uint8_t> read_mask_png(const std::filesystem::path& path, int& width, int& height)
{
    const RasterImage raster = read_png(path);
    width = raster.width;
    height = raster.height;
    std::vector<std::uint8_t> mask(std::size_t(width) * height);
    // Gray and gray+alpha use the first channel; RGB(A) masks are active where any channel is set.
    const int probe = raster.channels <= 2 ? 1 : std::min(raster.channels, 3);
    for (std::size_t t = 0; t < mask.size(); ++t) {
        bool on = false;
        for (int c = 0; c < probe; ++c) on = on || raster.samples[t * raster.channels + c] != 0;
        mask[t] = on ? 1 : 0;
    }
    return mask;
}

TextureAtlas read_texture_png(const std::filesystem::path& path, const std::filesystem::path& mask_path)
{
    const RasterImage raster = read_png(path);
    TextureAtlas t = make_texture(raster.width, raster.height);
    const double peak = raster.max_value();
    for (std::size_t i = 0; i < t.rgb.size(); ++i) {
        for (int c = 0; c < 3; ++c) {
            const int channel = raster.channels >= 3 ? c : 0;
            t.rgb[i][c] = raster.samples[i * raster.channels + channel] / peak;
        }
    }
    if (mask_path.empty()) {
        std::fill(t.mask.begin(), t.mask.end(), 1);
    } else {
        int w = 0;
        int h = 0;
        t.mask = read_mask_png(mask_path, w, h);
        if (w != t.width || h != t.height) {
            fail(ErrorCode::DimensionMismatch, mask_path.string() + " does not match the size of " + path.string());
        }
        sanitize(t);
    }
    return t;
}

} // namespace texsr
