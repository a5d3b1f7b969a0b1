#include "weblapse/assemble.hpp"

#include "weblapse/digest.hpp"
#include "weblapse/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace weblapse::assemble {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::vector<std::string> split_delim(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t pos = 0;
    while (true) {
        std::size_t next = line.find("<>", pos);
        if (next == std::string::npos) {
            fields.push_back(line.substr(pos));
            break;
        }
        fields.push_back(line.substr(pos, next - pos));
        pos = next + 2;
    }
    return fields;
}

} // namespace

const CategoryRule* SoundtrackLibrary::rule_for(const std::string& category) const {
    const CategoryRule* other = nullptr;
    for (const auto& rule : categories) {
        if (rule.name == category) return &rule;
        if (rule.name == "other") other = &rule;
    }
    return other;
}

std::vector<const Track*> SoundtrackLibrary::tracks_in_genre(const std::string& genre) const {
    std::vector<const Track*> out;
    for (const auto& t : tracks) {
        if (t.genre == genre) out.push_back(&t);
    }
    return out;
}

std::vector<Track> parse_track_manifest(const std::string& text, std::vector<std::string>* warnings) {
    std::vector<Track> tracks;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        auto fields = split_delim(line);
        if (fields.size() != 4) {
            if (warnings) warnings->push_back("track manifest: expected 4 fields in '" + line + "'");
            continue;
        }
        Track t;
        t.track_id = fields[0];
        t.genre = fields[1];
        try {
            t.duration_s = std::stod(fields[2]);
        } catch (...) {
            t.duration_s = 0;
        }
        t.path = fields[3];
        if (t.track_id.empty() || t.genre.empty() || t.duration_s <= 0) {
            if (warnings) warnings->push_back("track manifest: bad record '" + line + "'");
            continue;
        }
        tracks.push_back(std::move(t));
    }
    return tracks;
}

std::vector<Track> load_track_manifest(const std::filesystem::path& path,
                                       std::vector<std::string>* warnings) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::MissingFile, "cannot read track manifest " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_track_manifest(buf.str(), warnings);
}

std::vector<CategoryRule> default_category_rules() {
    return {
        {"education", {"university", "college", "school", "education", "academic"}, {"acoustic", "classical"}},
        {"technology", {"technology", "software", "computer", "computing", "internet"}, {"electronic"}},
        {"news", {"news", "newspaper", "media", "broadcasting"}, {"cinematic"}},
        {"sports", {"sport", "sports", "football", "league", "athletic"}, {"upbeat"}},
        {"other", {}, {"ambient"}},
    };
}

std::vector<CategoryRule> load_category_rules(const std::filesystem::path& path) {
    if (path.empty()) return default_category_rules();
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::MissingFile, "cannot read category map " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ConfigError, std::string("category map: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("categories") || !doc["categories"].is_array())
        throw Error(ErrorKind::ConfigError, "category map needs a categories array");

    std::vector<CategoryRule> rules;
    for (const auto& item : doc["categories"]) {
        CategoryRule rule;
        rule.name = item.value("name", "");
        if (rule.name.empty()) throw Error(ErrorKind::ConfigError, "category rule without a name");
        for (const auto& k : item.value("keywords", nlohmann::json::array()))
            rule.keywords.push_back(lower(k.get<std::string>()));
        for (const auto& g : item.value("genres", nlohmann::json::array()))
            rule.genres.push_back(g.get<std::string>());
        rules.push_back(std::move(rule));
    }
    bool has_other = std::any_of(rules.begin(), rules.end(),
                                 [](const auto& r) { return r.name == "other"; });
    if (!has_other) throw Error(ErrorKind::ConfigError, "category map must define 'other'");
    return rules;
}

FixtureKnowledgeClient::FixtureKnowledgeClient(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::vector<std::string> FixtureKnowledgeClient::search(const std::string& text) {
    std::ifstream in(dir_ / (md5_hex(text) + ".json"));
    if (!in) throw Error(ErrorKind::NetworkFailure, "no knowledge fixture for query '" + text + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::NetworkFailure, std::string("bad knowledge fixture: ") + e.what());
    }
    std::vector<std::string> pages;
    for (const auto& item : doc.value("results", nlohmann::json::array())) {
        std::string page = item.value("page", "");
        if (page.empty()) continue;
        pages.push_back(page);
        std::vector<std::string> cats;
        for (const auto& c : item.value("categories", nlohmann::json::array()))
            cats.push_back(c.get<std::string>());
        category_cache_[page] = std::move(cats);
    }
    return pages;
}

std::vector<std::string> FixtureKnowledgeClient::categories(const std::string& page) {
    auto it = category_cache_.find(page);
    if (it == category_cache_.end())
        throw Error(ErrorKind::NetworkFailure, "no cached categories for page '" + page + "'");
    return it->second;
}

void FixtureKnowledgeClient::store(
    const std::filesystem::path& dir, const std::string& query,
    const std::vector<std::pair<std::string, std::vector<std::string>>>& results) {
    std::filesystem::create_directories(dir);
    nlohmann::json doc;
    doc["query"] = query;
    doc["results"] = nlohmann::json::array();
    for (const auto& [page, cats] : results) {
        doc["results"].push_back({{"page", page}, {"categories", cats}});
    }
    std::ofstream out(dir / (md5_hex(query) + ".json"));
    out << doc.dump(2) << "\n";
}

std::string categorize_url(const std::string& url, KnowledgeClient& client,
                           const std::vector<CategoryRule>& rules,
                           std::vector<std::string>* warnings) {
    std::vector<std::string> pages;
    try {
        pages = client.search(url);
    } catch (const std::exception& e) {
        if (warnings) warnings->push_back(std::string("categorization lookup failed: ") + e.what());
        return "other";
    }
    if (pages.empty()) return "other";

    std::vector<std::string> cats;
    try {
        cats = client.categories(pages.front());
    } catch (const std::exception& e) {
        if (warnings) warnings->push_back(std::string("categorization lookup failed: ") + e.what());
        return "other";
    }

    for (const auto& category_text : cats) {
        std::string haystack = lower(category_text);
        for (const auto& rule : rules) {
            for (const auto& keyword : rule.keywords) {
                if (!keyword.empty() && haystack.find(keyword) != std::string::npos) return rule.name;
            }
        }
    }
    return "other";
}

SoundtrackChoice select_soundtrack(const std::string& category, const SoundtrackLibrary& library,
                                   double video_duration_s, std::uint64_t rng_seed) {
    if (video_duration_s <= 0)
        throw Error(ErrorKind::NoEligibleTrack, "video duration must be positive");
    const CategoryRule* rule = library.rule_for(category);
    if (!rule || rule->genres.empty())
        throw Error(ErrorKind::NoEligibleTrack, "no genres mapped for category '" + category + "'");

    // Only genres that can actually cover the video take part in the draw.
    std::vector<std::pair<std::string, std::vector<const Track*>>> eligible;
    for (const auto& genre : rule->genres) {
        std::vector<const Track*> fits;
        for (const Track* t : library.tracks_in_genre(genre)) {
            if (t->duration_s >= video_duration_s) fits.push_back(t);
        }
        if (!fits.empty()) eligible.emplace_back(genre, std::move(fits));
    }
    if (eligible.empty())
        throw Error(ErrorKind::NoEligibleTrack,
                    "no track long enough for " + std::to_string(video_duration_s) + "s in any mapped genre");

    std::mt19937_64 rng(rng_seed);
    auto draw = [&rng](std::uint64_t n) { return n ? rng() % n : 0; };

    const auto& [genre, fits] = eligible[draw(eligible.size())];
    const Track* track = fits[draw(fits.size())];

    const auto max_offset_ms =
        static_cast<std::uint64_t>(std::llround((track->duration_s - video_duration_s) * 1000.0));
    const std::uint64_t offset_ms = draw(max_offset_ms + 1);

    SoundtrackChoice choice;
    choice.track_id = track->track_id;
    choice.start_offset_s = static_cast<double>(offset_ms) / 1000.0;
    choice.path = track->path;
    return choice;
}

std::string serialize_artifact_manifest(const selection::SelectionPlan& plan,
                                        const std::vector<std::pair<int, std::string>>& frame_files,
                                        const std::optional<SoundtrackChoice>& soundtrack,
                                        std::uint64_t seed) {
    std::string out = selection::serialize_plan(plan);
    for (const auto& [key, file] : frame_files) {
        out += "frame " + std::to_string(key) + " " + file + "\n";
    }
    if (soundtrack) {
        char offset[32];
        std::snprintf(offset, sizeof offset, "%.3f", soundtrack->start_offset_s);
        out += "soundtrack " + soundtrack->track_id + " " + offset + "\n";
    } else {
        out += "soundtrack none\n";
    }
    out += "seed " + std::to_string(seed) + "\n";
    return out;
}

} // namespace weblapse::assemble
