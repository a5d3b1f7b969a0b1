#pragma once

#include "weblapse/audio.hpp"
#include "weblapse/gif.hpp"
#include "weblapse/image.hpp"
#include "weblapse/selection.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace weblapse::assemble {

struct Track {
    std::string track_id;
    std::string genre;
    double duration_s = 0;
    std::filesystem::path path;
};

struct CategoryRule {
    std::string name;
    std::vector<std::string> keywords; // case-insensitive substrings
    std::vector<std::string> genres;
};

struct SoundtrackLibrary {
    std::vector<Track> tracks;
    std::vector<CategoryRule> categories; // must contain an `other` rule

    const CategoryRule* rule_for(const std::string& category) const;
    std::vector<const Track*> tracks_in_genre(const std::string& genre) const;
};

// `track_id<>genre<>duration<>path` lines.
std::vector<Track> parse_track_manifest(const std::string& text,
                                        std::vector<std::string>* warnings = nullptr);
std::vector<Track> load_track_manifest(const std::filesystem::path& path,
                                       std::vector<std::string>* warnings = nullptr);

// Category keyword/genre map (JSON config). Falls back to the built-in
// default when path is empty.
std::vector<CategoryRule> load_category_rules(const std::filesystem::path& path);
std::vector<CategoryRule> default_category_rules();

// Ranked page search + page categories, as a Wikipedia-shaped lookup.
class KnowledgeClient {
public:
    virtual ~KnowledgeClient() = default;
    virtual std::vector<std::string> search(const std::string& text) = 0;
    virtual std::vector<std::string> categories(const std::string& page) = 0;
};

// One JSON file per query, keyed by md5(query):
//   {"query": "...", "results": [{"page": "...", "categories": ["...", ...]}, ...]}
class FixtureKnowledgeClient : public KnowledgeClient {
public:
    explicit FixtureKnowledgeClient(std::filesystem::path dir);
    std::vector<std::string> search(const std::string& text) override;
    std::vector<std::string> categories(const std::string& page) override;

    static void store(const std::filesystem::path& dir, const std::string& query,
                      const std::vector<std::pair<std::string, std::vector<std::string>>>& results);

private:
    std::filesystem::path dir_;
    std::map<std::string, std::vector<std::string>> category_cache_;
};

// First search result's categories decide: the first category containing any
// configured keyword names the bucket; no results / no hits / client failure
// mean `other`.
std::string categorize_url(const std::string& url, KnowledgeClient& client,
                           const std::vector<CategoryRule>& rules,
                           std::vector<std::string>* warnings = nullptr);

struct SoundtrackChoice {
    std::string track_id;
    double start_offset_s = 0;
    std::filesystem::path path;
};

// Deterministic in (inputs, seed): uniform genre among the category's mapped
// genres that hold a track long enough, uniform track within it, uniform
// millisecond start offset in [0, duration - video_duration]. Throws
// NoEligibleTrack when nothing fits.
SoundtrackChoice select_soundtrack(const std::string& category, const SoundtrackLibrary& library,
                                   double video_duration_s, std::uint64_t rng_seed);

struct VideoSpec {
    double frame_interval_s = 4.0;
    int fps = 5; // stills are expanded to this constant rate
};

// Title slide first, then each frame, every image held frame_interval_s.
// Soundtrack (when given) is trimmed to the video length with a fade-out.
// H.264/AAC in MP4. Throws NoFrames / EncoderFailure.
void encode_video(const std::filesystem::path& out_path, const render::Image& title_slide,
                  const std::vector<render::Image>& frames,
                  const std::optional<AudioClip>& soundtrack, const VideoSpec& spec = {});

struct TimelapseArtifact {
    std::filesystem::path gif_path;
    std::filesystem::path video_path;
    std::filesystem::path manifest_path;
    double total_duration_s = 0;
    int frame_count = 0;
    std::optional<SoundtrackChoice> soundtrack;
    std::uint64_t seed = 0;
};

// Full artifact manifest: the selection plan plus frame files, soundtrack
// choice and seed. Byte-deterministic.
std::string serialize_artifact_manifest(const selection::SelectionPlan& plan,
                                        const std::vector<std::pair<int, std::string>>& frame_files,
                                        const std::optional<SoundtrackChoice>& soundtrack,
                                        std::uint64_t seed);

} // namespace weblapse::assemble
