#include <doctest.h>

#include "scenes.hpp"

#include <texsr/error.hpp>
#include <texsr/image_io.hpp>
#include <texsr/texture.hpp>

using namespace texsr;

TEST_CASE("png round trip keeps 8 and 16 bit samples")
{
    const auto dir = testing::scratch_dir("png");
    for (int depth : {8, 16}) {
        RasterImage img = make_raster(5, 3, 3, depth);
        for (std::size_t i = 0; i < img.samples.size(); ++i) img.samples[i] = std::uint16_t((i * 977) % (img.max_value() + 1));
        const auto path = dir / ("img" + std::to_string(depth) + ".png");
        write_png(path, img);
        const RasterImage back = read_png(path);
        CHECK(back.width == 5);
        CHECK(back.height == 3);
        CHECK(back.bit_depth == depth);
        CHECK(back.samples == img.samples);
    }
}

TEST_CASE("missing png reports FileNotFound")
{
    try {
        read_png("/nonexistent/texsr/none.png");
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::FileNotFound);
    }
}

TEST_CASE("texture png keeps mask and zeroes inactive texels")
{
    const auto dir = testing::scratch_dir("texpng");
    TextureAtlas t = make_texture(4, 2);
    for (std::size_t i = 0; i < t.texel_count(); ++i) {
        t.mask[i] = i % 3 != 0;
        t.rgb[i] = Color(i / 8.0, 0.5, 1.0);
    }
    sanitize(t);
    write_texture_png(dir / "t.png", t);
    write_mask_png(dir / "m.png", t.width, t.height, t.mask);
    const TextureAtlas back = read_texture_png(dir / "t.png", dir / "m.png");
    CHECK(back.mask == t.mask);
    for (std::size_t i = 0; i < t.texel_count(); ++i) {
        CHECK((back.rgb[i] - t.rgb[i]).cwiseAbs().maxCoeff() <= 0.5 / 65535.0);
        if (!t.mask[i]) CHECK(back.rgb[i].isZero());
    }
}
