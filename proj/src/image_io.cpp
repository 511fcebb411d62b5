#include <texsr/image_io.hpp>

#include <texsr/error.hpp>

#include <png.h>

#include <algorithm>
#include <cstdio>
#include <memory>

namespace texsr {

namespace {

struct FileCloser
{
    void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode)
{
    FilePtr file(std::fopen(path.c_str(), mode));
    if (!file) {
        if (mode[0] == 'r') fail(ErrorCode::FileNotFound, path.string());
        fail(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
    }
    return file;
}

[[noreturn]] void on_png_error(png_structp png, png_const_charp message)
{
    auto* what = static_cast<std::string*>(png_get_error_ptr(png));
    *what = message;
    png_longjmp(png, 1);
}

void on_png_warning(png_structp, png_const_charp) {}

} // namespace

RasterImage make_raster(int width, int height, int channels, int bit_depth)
{
    RasterImage img;
    img.width = width;
    img.height = height;
    img.channels = channels;
    img.bit_depth = bit_depth;
    img.samples.assign(std::size_t(width) * height * channels, 0);
    return img;
}

RasterImage read_png(const std::filesystem::path& path)
{
    FilePtr file = open_file(path, "rb");
    std::string message;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &message, on_png_error, on_png_warning);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(ErrorCode::IoError, "libpng initialization failed");
    }

    RasterImage img;
    std::vector<png_bytep> rows;
    std::vector<png_byte> buffer;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(ErrorCode::ParseError, path.string() + ": " + message);
    }

    png_init_io(png, file.get());
    png_read_info(png, info);
    const int color_type = png_get_color_type(png, info);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (png_get_bit_depth(png, info) < 8) {
        if (color_type == PNG_COLOR_TYPE_GRAY) png_set_expand_gray_1_2_4_to_8(png);
        else png_set_packing(png);
    }
    if (png_get_bit_depth(png, info) == 16) png_set_swap(png); // host order on little-endian
    png_read_update_info(png, info);

    img.width = static_cast<int>(png_get_image_width(png, info));
    img.height = static_cast<int>(png_get_image_height(png, info));
    img.channels = png_get_channels(png, info);
    img.bit_depth = png_get_bit_depth(png, info);
    const std::size_t row_bytes = png_get_rowbytes(png, info);
    buffer.resize(row_bytes * img.height);
    rows.resize(img.height);
    for (int y = 0; y < img.height; ++y) rows[y] = buffer.data() + row_bytes * y;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    img.samples.resize(std::size_t(img.width) * img.height * img.channels);
    if (img.bit_depth == 16) {
        for (std::size_t i = 0; i < img.samples.size(); ++i) {
            img.samples[i] = static_cast<std::uint16_t>(buffer[2 * i] | (buffer[2 * i + 1] << 8));
        }
    } else {
        for (std::size_t i = 0; i < img.samples.size(); ++i) img.samples[i] = buffer[i];
    }
    return img;
}

void write_png(const std::filesystem::path& path, const RasterImage& image)
{
    if (image.bit_depth != 8 && image.bit_depth != 16) {
        fail(ErrorCode::IoError, "unsupported bit depth for " + path.string());
    }
    int color_type = 0;
    switch (image.channels) {
    case 1: color_type = PNG_COLOR_TYPE_GRAY; break;
    case 2: color_type = PNG_COLOR_TYPE_GRAY_ALPHA; break;
    case 3: color_type = PNG_COLOR_TYPE_RGB; break;
    case 4: color_type = PNG_COLOR_TYPE_RGBA; break;
    default: fail(ErrorCode::IoError, "unsupported channel count for " + path.string());
    }

    // Big-endian byte buffer as stored in the file.
    const std::size_t bytes_per_sample = image.bit_depth / 8;
    const std::size_t row_bytes = std::size_t(image.width) * image.channels * bytes_per_sample;
    std::vector<png_byte> buffer(row_bytes * image.height);
    for (std::size_t i = 0; i < image.samples.size(); ++i) {
        if (bytes_per_sample == 2) {
            buffer[2 * i] = static_cast<png_byte>(image.samples[i] >> 8);
            buffer[2 * i + 1] = static_cast<png_byte>(image.samples[i] & 0xff);
        } else {
            buffer[i] = static_cast<png_byte>(image.samples[i]);
        }
    }
    std::vector<png_bytep> rows(image.height);
    for (int y = 0; y < image.height; ++y) rows[y] = buffer.data() + row_bytes * y;

    FilePtr file = open_file(path, "wb");
    std::string message;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &message, on_png_error, on_png_warning);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        fail(ErrorCode::IoError, "libpng initialization failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        fail(ErrorCode::IoError, path.string() + ": " + message);
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, image.width, image.height, image.bit_depth, color_type, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    if (std::fflush(file.get()) != 0) fail(ErrorCode::IoError, "flush failed for " + path.string());
}

PngHeader read_png_header(const std::filesystem::path& path)
{
    FilePtr file = open_file(path, "rb");
    unsigned char head[24];
    static constexpr unsigned char kSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    if (std::fread(head, 1, sizeof(head), file.get()) != sizeof(head) ||
        !std::equal(std::begin(kSignature), std::end(kSignature), head)) {
        fail(ErrorCode::ParseError, path.string() + ": not a PNG file");
    }
    auto be32 = [&](int offset) {
        return int(head[offset]) << 24 | int(head[offset + 1]) << 16 | int(head[offset + 2]) << 8 | int(head[offset + 3]);
    };
    return {be32(16), be32(20)};
}

} // namespace texsr
