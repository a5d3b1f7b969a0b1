#include "weblapse/image.hpp"

#include "weblapse/error.hpp"

#include <algorithm>
#include <cmath>

namespace weblapse::render {

Image::Image(int w, int h, Rgb fill) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3) {
    for (std::size_t i = 0; i < pixels.size(); i += 3) {
        pixels[i] = fill.r;
        pixels[i + 1] = fill.g;
        pixels[i + 2] = fill.b;
    }
}

Rgb Image::at(int x, int y) const {
    std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
    return Rgb{pixels[i], pixels[i + 1], pixels[i + 2]};
}

void Image::set(int x, int y, Rgb c) {
    std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
    pixels[i] = c.r;
    pixels[i + 1] = c.g;
    pixels[i + 2] = c.b;
}

void fill_rect(Image& img, int x, int y, int w, int h, Rgb c) {
    for (int yy = std::max(0, y); yy < std::min(img.height, y + h); ++yy) {
        for (int xx = std::max(0, x); xx < std::min(img.width, x + w); ++xx) {
            img.set(xx, yy, c);
        }
    }
}

void blend_rect(Image& img, int x, int y, int w, int h, Rgb c, double alpha) {
    alpha = std::clamp(alpha, 0.0, 1.0);
    for (int yy = std::max(0, y); yy < std::min(img.height, y + h); ++yy) {
        for (int xx = std::max(0, x); xx < std::min(img.width, x + w); ++xx) {
            Rgb bg = img.at(xx, yy);
            auto mix = [&](std::uint8_t fg, std::uint8_t b) {
                return static_cast<std::uint8_t>(std::lround(alpha * fg + (1.0 - alpha) * b));
            };
            img.set(xx, yy, Rgb{mix(c.r, bg.r), mix(c.g, bg.g), mix(c.b, bg.b)});
        }
    }
}

Image resize(const Image& img, int w, int h) {
    if (img.width == w && img.height == h) return img;
    if (img.width <= 0 || img.height <= 0)
        throw Error(ErrorKind::UnsupportedImage, "cannot resize an empty image");
    Image out(w, h);
    const double sx = static_cast<double>(img.width) / w;
    const double sy = static_cast<double>(img.height) / h;
    for (int y = 0; y < h; ++y) {
        double fy = (y + 0.5) * sy - 0.5;
        int y0 = std::clamp(static_cast<int>(std::floor(fy)), 0, img.height - 1);
        int y1 = std::min(y0 + 1, img.height - 1);
        double wy = fy - y0;
        if (wy < 0) wy = 0;
        for (int x = 0; x < w; ++x) {
            double fx = (x + 0.5) * sx - 0.5;
            int x0 = std::clamp(static_cast<int>(std::floor(fx)), 0, img.width - 1);
            int x1 = std::min(x0 + 1, img.width - 1);
            double wx = fx - x0;
            if (wx < 0) wx = 0;
            Rgb p00 = img.at(x0, y0), p10 = img.at(x1, y0), p01 = img.at(x0, y1), p11 = img.at(x1, y1);
            auto lerp2 = [&](std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d) {
                double top = a + (b - a) * wx;
                double bottom = c + (d - c) * wx;
                return static_cast<std::uint8_t>(std::lround(top + (bottom - top) * wy));
            };
            out.set(x, y, Rgb{lerp2(p00.r, p10.r, p01.r, p11.r), lerp2(p00.g, p10.g, p01.g, p11.g),
                              lerp2(p00.b, p10.b, p01.b, p11.b)});
        }
    }
    return out;
}

} // namespace weblapse::render
