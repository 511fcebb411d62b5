#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace texsr {

/// Interleaved PNG raster. Samples are kept in 16-bit storage for both 8-bit
/// and 16-bit files; `bit_depth` says which range they occupy.
struct RasterImage
{
    int width = 0;
    int height = 0;
    int channels = 0;  // 1 gray, 3 RGB, 4 RGBA
    int bit_depth = 8; // 8 or 16
    std::vector<std::uint16_t> samples;

    std::uint16_t& at(int x, int y, int c) { return samples[(std::size_t(y) * width + x) * channels + c]; }
    std::uint16_t at(int x, int y, int c) const { return samples[(std::size_t(y) * width + x) * channels + c]; }
    int max_value() const { return bit_depth == 16 ? 65535 : 255; }
};

RasterImage make_raster(int width, int height, int channels, int bit_depth);

/// Reads gray, gray+alpha, RGB, RGBA or palette PNGs. Palette images are
/// expanded to RGB(A), gray+alpha is returned with 2 channels.
RasterImage read_png(const std::filesystem::path& path);

/// Writes without timestamps or text chunks so equal rasters give equal bytes.
void write_png(const std::filesystem::path& path, const RasterImage& image);

struct PngHeader
{
    int width = 0;
    int height = 0;
};
PngHeader read_png_header(const std::filesystem::path& path);

} // namespace texsr
