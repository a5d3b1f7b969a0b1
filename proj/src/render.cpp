#include "weblapse/render.hpp"

#include "weblapse/digest.hpp"
#include "weblapse/error.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

namespace weblapse::render {

Image MockRenderer::capture(const std::string& uri, int width, int height, int) {
    // The datetime half of the seed is carried in the URI for real archive
    // URLs; synthesizing from the URI alone keeps the mock a pure function.
    return synthesize(uri, "", width, height);
}

Image MockRenderer::synthesize(const std::string& uri, const std::string& stamp, int width,
                               int height) {
    auto seed = md5(uri + "|" + stamp);

    Rgb bg{static_cast<std::uint8_t>(64 + seed[0] / 2), static_cast<std::uint8_t>(64 + seed[1] / 2),
           static_cast<std::uint8_t>(64 + seed[2] / 2)};
    Image img(width, height, bg);

    // a fake masthead and a few content blocks, all placed from digest bytes
    Rgb banner{static_cast<std::uint8_t>(seed[3]), static_cast<std::uint8_t>(seed[4]),
               static_cast<std::uint8_t>(seed[5])};
    fill_rect(img, 0, 0, width, height / 8, banner);
    for (int i = 0; i < 4; ++i) {
        int bx = (seed[6 + i] * (width - 200)) / 255;
        int by = height / 6 + (seed[10 + i] * (height / 2)) / 255;
        int bw = 100 + seed[14 + (i % 2)] % 150;
        int bh = 40 + seed[12 + (i % 4)] % 80;
        Rgb block{static_cast<std::uint8_t>(255 - seed[6 + i]), static_cast<std::uint8_t>(seed[10 + i]),
                  static_cast<std::uint8_t>(128 ^ seed[14 + (i % 2)])};
        fill_rect(img, bx, by, bw, bh, block);
    }

    int scale = std::max(1, width / 512);
    std::string label = uri;
    if (!stamp.empty()) label += " @ " + stamp;
    label = ellipsize_middle(label, scale, width - 16 * scale);
    draw_text(img, 8 * scale, height - 12 * scale, label, scale, Rgb{255, 255, 255});
    return img;
}

Workdir::Workdir(std::filesystem::path root, std::string url_hash_hex)
    : path_(root / url_hash_hex), hash_(std::move(url_hash_hex)) {}

void Workdir::prepare() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
    if (!std::filesystem::create_directories(path_))
        throw Error(ErrorKind::IoFailure, "cannot create workdir " + path_.string());
}

std::filesystem::path Workdir::frame_path(int year, int key) const {
    char name[32];
    std::snprintf(name, sizeof name, "%04d.png", year);
    std::filesystem::path p = path_ / name;
    if (std::filesystem::exists(p)) {
        std::snprintf(name, sizeof name, "%04d_%d.png", year, key);
        p = path_ / name;
    }
    return p;
}

void Workdir::record_capture(int year, const std::string& uri_m) {
    std::ofstream out(urls_file(), std::ios::app);
    if (!out) throw Error(ErrorKind::IoFailure, "cannot append to " + urls_file().string());
    out << year << " " << uri_m << "\n";
}

Frame capture_frame(Renderer& renderer, const memento::ArchivedSnapshot& snapshot, Workdir& workdir,
                    int settle_seconds) {
    Image raw = renderer.capture(snapshot.uri_m, kFrameWidth, kFrameHeight, settle_seconds);
    if (raw.width <= 0 || raw.height <= 0)
        throw Error(ErrorKind::NavigationFailure, "renderer produced no image for " + snapshot.uri_m);

    Frame frame;
    frame.image = (raw.width == kFrameWidth && raw.height == kFrameHeight)
                      ? std::move(raw)
                      : resize(raw, kFrameWidth, kFrameHeight);
    frame.year = selection::capture_year(snapshot);
    frame.snapshot = snapshot;
    workdir.record_capture(frame.year, snapshot.uri_m);
    return frame;
}

void annotate_year(Frame& frame) {
    Image& img = frame.image;
    fill_rect(img, 0, 0, img.width, kYearBannerHeight, Rgb{24, 24, 24});
    char year[8];
    std::snprintf(year, sizeof year, "%04d", frame.year);
    const int scale = 5; // 5x7 glyphs at x5 = 35px tall in a 48px band
    int tw = text_width(year, scale);
    draw_text(img, (img.width - tw) / 2, (kYearBannerHeight - 7 * scale) / 2, year, scale,
              Rgb{255, 255, 255});
    frame.annotations.push_back(std::string("year:") + year);
}

void annotate_watermarks(Frame& frame) {
    Image& img = frame.image;
    const int scale = 2;
    const double alpha = 0.6;
    const int max_width = img.width / 2 - 20; // stay inside the bottom-left quadrant
    std::string stamp = format_14digit(frame.snapshot.capture_datetime);
    std::string host = ellipsize_middle(frame.snapshot.archive_host, scale, max_width);

    int line_h = 7 * scale + 4;
    int y_host = img.height - line_h - 6;
    int y_stamp = y_host - line_h;
    draw_text(img, 10, y_stamp, stamp, scale, Rgb{255, 255, 255}, alpha);
    draw_text(img, 10, y_host, host, scale, Rgb{255, 255, 255}, alpha);
    frame.annotations.push_back("watermark:" + stamp);
    frame.annotations.push_back("watermark:" + host);
}

Image make_title_slide(const std::string& target_uri, const selection::DateRange& range) {
    Image img(kFrameWidth, kFrameHeight, Rgb{16, 24, 40});
    fill_rect(img, 0, kFrameHeight / 2 - 90, kFrameWidth, 4, Rgb{90, 120, 180});

    const int url_scale = 3;
    std::string url = ellipsize_middle(target_uri, url_scale, kFrameWidth - 80);
    int url_w = text_width(url, url_scale);
    draw_text(img, (kFrameWidth - url_w) / 2, kFrameHeight / 2 - 60, url, url_scale,
              Rgb{255, 255, 255});

    if (range.present) {
        const int range_scale = 2;
        std::string text = format_civil(range.start) + " to " + format_civil(range.end);
        int tw = text_width(text, range_scale);
        draw_text(img, (kFrameWidth - tw) / 2, kFrameHeight / 2 + 10, text, range_scale,
                  Rgb{200, 210, 230});
    }
    return img;
}

} // namespace weblapse::render
