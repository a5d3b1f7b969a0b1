#pragma once

#include "weblapse/image.hpp"
#include "weblapse/memento.hpp"
#include "weblapse/selection.hpp"
#include "weblapse/urlnorm.hpp"

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace weblapse::render {

inline constexpr int kFrameWidth = 1024;
inline constexpr int kFrameHeight = 768;
inline constexpr int kSettleSeconds = 3; // post-load wait in the live renderer

struct Frame {
    Image image; // always kFrameWidth x kFrameHeight
    int year = 0;
    memento::ArchivedSnapshot snapshot;
    std::vector<std::string> annotations;
};

class Renderer {
public:
    virtual ~Renderer() = default;
    // Throws RenderTimeout / NavigationFailure. May return any size; callers resize.
    virtual Image capture(const std::string& uri, int width, int height, int settle_seconds) = 0;
};

// Deterministic stand-in: a synthetic page whose look is a pure function of
// (uri, 14-digit datetime). Identical snapshots render bit-identically.
class MockRenderer : public Renderer {
public:
    Image capture(const std::string& uri, int width, int height, int settle_seconds) override;

    // Renders what capture() would produce for a snapshot.
    static Image synthesize(const std::string& uri, const std::string& stamp, int width, int height);
};

// Per-request working directory: named by the hash of the canonicalized
// target URL until fulfillment renames it.
class Workdir {
public:
    Workdir(std::filesystem::path root, std::string url_hash_hex);

    // Creates (or wipes and recreates) the directory.
    void prepare();

    const std::filesystem::path& path() const { return path_; }
    const std::string& url_hash() const { return hash_; }

    // YYYY.png, suffixed _<key> when a year recurs under the change strategy.
    std::filesystem::path frame_path(int year, int key) const;
    void record_capture(int year, const std::string& uri_m); // appends to urlsFile.txt
    std::filesystem::path urls_file() const { return path_ / "urlsFile.txt"; }

private:
    std::filesystem::path path_;
    std::string hash_;
};

// Captures one snapshot at exactly kFrameWidth x kFrameHeight (captured
// larger then resized if needed) and records it in urlsFile.txt.
Frame capture_frame(Renderer& renderer, const memento::ArchivedSnapshot& snapshot, Workdir& workdir,
                    int settle_seconds = kSettleSeconds);

// Opaque banner across the top carrying the capture year. Dimensions unchanged.
void annotate_year(Frame& frame);

// Two semi-transparent labels (capture datetime, archive host) in the
// bottom-left quadrant. Dimensions unchanged.
void annotate_watermarks(Frame& frame);

// 1024x768 slide: target URL, plus the date range when present.
Image make_title_slide(const std::string& target_uri, const selection::DateRange& range);

inline constexpr int kYearBannerHeight = 48;

} // namespace weblapse::render
