#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace weblapse::render {

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;
    bool operator==(const Rgb&) const = default;
};

// Plain 8-bit RGB raster, row-major.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels; // width*height*3

    Image() = default;
    Image(int w, int h, Rgb fill = {0, 0, 0});

    bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
    Rgb at(int x, int y) const;
    void set(int x, int y, Rgb c);

    bool operator==(const Image&) const = default;
};

void fill_rect(Image& img, int x, int y, int w, int h, Rgb c);
void blend_rect(Image& img, int x, int y, int w, int h, Rgb c, double alpha);

// Bilinear resample to exactly (w, h).
Image resize(const Image& img, int w, int h);

// 5x7 bitmap font, uppercased ASCII. `scale` is the integer pixel size of
// one font cell unit; glyph advance is 6*scale.
int text_width(std::string_view text, int scale);
void draw_text(Image& img, int x, int y, std::string_view text, int scale, Rgb c,
               double alpha = 1.0);

// Middle-ellipsizes until the rendered text fits max_width.
std::string ellipsize_middle(std::string_view text, int scale, int max_width);

// PNG, 8-bit RGB (reader also accepts RGBA, alpha dropped), non-interlaced.
std::vector<std::uint8_t> encode_png(const Image& img);
Image decode_png(const std::uint8_t* data, std::size_t size);
void write_png(const std::filesystem::path& path, const Image& img);
Image read_png(const std::filesystem::path& path);

struct PngHeader {
    int width = 0;
    int height = 0;
    int bit_depth = 0;
    int color_type = 0;
};

// IHDR only; cheap dimension probe.
PngHeader probe_png(const std::filesystem::path& path);

} // namespace weblapse::render
