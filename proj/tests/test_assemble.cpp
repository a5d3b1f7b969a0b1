#include "weblapse/assemble.hpp"
#include "weblapse/render.hpp"
#include "weblapse/error.hpp"

#include "support/builders.hpp"
#include "support/probes.hpp"

#include <doctest.h>

#include <random>
#include <set>

using namespace weblapse;
using namespace weblapse::assemble;
namespace ts = weblapse::testsupport;

namespace {

std::vector<render::Image> sample_frames(int count, int w = 160, int h = 120) {
    std::vector<render::Image> frames;
    for (int i = 0; i < count; ++i) {
        frames.push_back(render::MockRenderer::synthesize("http://frame.test/" + std::to_string(i),
                                                          std::to_string(i), w, h));
    }
    return frames;
}

} // namespace

TEST_CASE("gif: delays, frame count, loop extension") {
    auto frames = sample_frames(10);
    auto bytes = encode_gif(frames, 4.0);
    auto probe = ts::probe_gif(bytes);

    CHECK(probe.width == 160);
    CHECK(probe.height == 120);
    CHECK(probe.frame_count() == 10);
    CHECK(probe.loop_count == 0); // forever
    for (int delay : probe.delays_cs) CHECK(delay == 400);
    for (auto [w, h] : probe.frame_sizes) {
        CHECK(w == 160);
        CHECK(h == 120);
    }
    // full LZW decode: every frame carries exactly w*h pixels
    for (auto count : probe.decoded_pixel_counts) CHECK(count == 160 * 120);
}

TEST_CASE("gif: single frame is valid, zero frames is an error") {
    auto one = encode_gif(sample_frames(1), 4.0);
    auto probe = ts::probe_gif(one);
    CHECK(probe.frame_count() == 1);
    CHECK(probe.decoded_pixel_counts[0] == 160 * 120);

    CHECK_THROWS_AS(encode_gif({}, 4.0), Error);
    try {
        encode_gif({}, 4.0);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NoFrames);
    }
}

TEST_CASE("gif: first frame decodes to palette entries near the source pixels") {
    render::Image flat(64, 64, render::Rgb{102, 153, 51}); // exact cube colors
    auto bytes = encode_gif({flat}, 4.0);
    auto probe = ts::probe_gif(bytes);
    REQUIRE(probe.first_frame_indices.size() == 1);
    const auto& indices = probe.first_frame_indices[0];
    REQUIRE(indices.size() == 64 * 64);
    REQUIRE(probe.palette.size() >= 3);
    for (std::uint8_t idx : indices) {
        CHECK(probe.palette[idx * 3 + 0] == 102);
        CHECK(probe.palette[idx * 3 + 1] == 153);
        CHECK(probe.palette[idx * 3 + 2] == 51);
    }
}

TEST_CASE("gif: encoding is deterministic") {
    auto frames = sample_frames(3);
    CHECK(encode_gif(frames, 4.0) == encode_gif(frames, 4.0));
}

TEST_CASE("track manifest parsing") {
    std::vector<std::string> warnings;
    auto tracks = parse_track_manifest(
        "# library\n"
        "calm1<>ambient<>120.5<>/tracks/calm1.wav\n"
        "bad line\n"
        "short<>upbeat<>0<>/tracks/short.wav\n"
        "rock2<>upbeat<>90<>/tracks/rock2.wav\n",
        &warnings);
    REQUIRE(tracks.size() == 2);
    CHECK(tracks[0].track_id == "calm1");
    CHECK(tracks[0].duration_s == doctest::Approx(120.5));
    CHECK(tracks[1].genre == "upbeat");
    CHECK(warnings.size() == 2);
}

TEST_CASE("category rules: defaults and keyword matching") {
    auto rules = default_category_rules();
    SoundtrackLibrary library;
    library.categories = rules;

    REQUIRE(library.rule_for("education") != nullptr);
    CHECK(library.rule_for("education")->genres ==
          std::vector<std::string>{"acoustic", "classical"});
    CHECK(library.rule_for("unmapped")->name == "other"); // falls back to other
}

TEST_CASE("the shipped category map matches the built-in default") {
    auto repo_root = std::filesystem::path(__FILE__).parent_path().parent_path();
    auto shipped = load_category_rules(repo_root / "share" / "category_genres.json");
    auto builtin = default_category_rules();
    REQUIRE(shipped.size() == builtin.size());
    for (std::size_t i = 0; i < shipped.size(); ++i) {
        CHECK(shipped[i].name == builtin[i].name);
        CHECK(shipped[i].keywords == builtin[i].keywords);
        CHECK(shipped[i].genres == builtin[i].genres);
    }

    // an edited map without `other` is rejected
    ts::TempDir dir("catmap");
    ts::write_text_file(dir.path() / "map.json",
                        R"({"categories": [{"name": "news", "keywords": ["news"], "genres": ["x"]}]})");
    CHECK_THROWS_AS(load_category_rules(dir.path() / "map.json"), Error);
}

namespace {

class ScriptedKnowledge : public KnowledgeClient {
public:
    std::vector<std::string> pages;
    std::map<std::string, std::vector<std::string>> cats;
    bool fail = false;

    std::vector<std::string> search(const std::string&) override {
        if (fail) throw Error(ErrorKind::NetworkFailure, "search down");
        return pages;
    }
    std::vector<std::string> categories(const std::string& page) override {
        if (fail) throw Error(ErrorKind::NetworkFailure, "categories down");
        return cats.at(page);
    }
};

} // namespace

TEST_CASE("categorize_url follows the first-result-first-keyword rule") {
    auto rules = default_category_rules();
    ScriptedKnowledge client;
    client.pages = {"Old Dominion University", "Unrelated Page"};
    client.cats["Old Dominion University"] = {"Universities and colleges in Virginia",
                                              "Educational institutions established in 1930"};
    client.cats["Unrelated Page"] = {"Technology companies"};

    CHECK(categorize_url("http://odu.edu", client, rules) == "education");

    // no results -> other
    ScriptedKnowledge empty;
    CHECK(categorize_url("http://nowhere.test", empty, rules) == "other");

    // categories with no keyword hits -> other
    ScriptedKnowledge nohit;
    nohit.pages = {"Some Page"};
    nohit.cats["Some Page"] = {"Completely unrelated bucket", "Another one"};
    CHECK(categorize_url("http://plain.test", nohit, rules) == "other");

    // client failure -> other, with a warning
    ScriptedKnowledge broken;
    broken.fail = true;
    std::vector<std::string> warnings;
    CHECK(categorize_url("http://down.test", broken, rules, &warnings) == "other");
    CHECK(warnings.size() == 1);
}

TEST_CASE("fixture knowledge client reads per-query files") {
    ts::TempDir dir("knowledge");
    FixtureKnowledgeClient::store(dir.path(), "http://odu.edu",
                                  {{"Old Dominion University",
                                    {"Universities and colleges in Virginia"}}});

    FixtureKnowledgeClient client(dir.path());
    auto pages = client.search("http://odu.edu");
    REQUIRE(pages.size() == 1);
    CHECK(client.categories(pages[0])[0] == "Universities and colleges in Virginia");

    CHECK_THROWS_AS(client.search("http://unknown.test"), Error);
}

namespace {

SoundtrackLibrary small_library() {
    SoundtrackLibrary library;
    library.categories = default_category_rules();
    library.tracks = {
        {"amb1", "ambient", 120.0, "/na/amb1.wav"},
        {"amb2", "ambient", 35.0, "/na/amb2.wav"},
        {"aco1", "acoustic", 200.0, "/na/aco1.wav"},
        {"cla1", "classical", 45.0, "/na/cla1.wav"},
    };
    return library;
}

} // namespace

TEST_CASE("select_soundtrack: deterministic, bounded offsets") {
    auto library = small_library();

    auto choice = select_soundtrack("other", library, 40.0, 1234);
    CHECK(choice.track_id == "amb1"); // only ambient track long enough for 40s
    CHECK(choice.start_offset_s >= 0.0);
    CHECK(choice.start_offset_s <= 80.0);

    auto again = select_soundtrack("other", library, 40.0, 1234);
    CHECK(again.track_id == choice.track_id);
    CHECK(again.start_offset_s == doctest::Approx(choice.start_offset_s));

    // track exactly as long as the video: offset pinned to 0
    auto exact = select_soundtrack("education", library, 45.0, 77);
    if (exact.track_id == "cla1") CHECK(exact.start_offset_s == doctest::Approx(0.0));

    // nothing long enough anywhere
    CHECK_THROWS_AS(select_soundtrack("other", library, 500.0, 1), Error);
    try {
        select_soundtrack("other", library, 500.0, 1);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NoEligibleTrack);
    }
}

TEST_CASE("select_soundtrack: a genre with no eligible track does not poison the draw") {
    SoundtrackLibrary library;
    library.categories = default_category_rules();
    library.tracks = {
        {"aco-short", "acoustic", 10.0, "/na/a.wav"},
        {"cla-long", "classical", 300.0, "/na/c.wav"},
    };
    // education maps to both; only classical can cover 60s
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        auto choice = select_soundtrack("education", library, 60.0, seed);
        CHECK(choice.track_id == "cla-long");
    }
}

TEST_CASE("select_soundtrack offsets cover the legal interval across seeds") {
    auto library = small_library();
    std::set<int> deciles;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        auto choice = select_soundtrack("other", library, 40.0, seed);
        CHECK(choice.track_id == "amb1");
        int decile = static_cast<int>(choice.start_offset_s / 80.0 * 10.0);
        if (decile == 10) decile = 9;
        deciles.insert(decile);
    }
    CHECK(deciles.size() >= 9); // >= 90% of deciles reached
}

TEST_CASE("wav io and trim_with_fade") {
    ts::TempDir dir("wav");
    auto path = dir.path() / "tone.wav";
    ts::write_sine_wav(path, 5.0, 22050, 2);

    auto clip = read_wav(path);
    CHECK(clip.sample_rate == 22050);
    CHECK(clip.channels == 2);
    CHECK(clip.duration_s() == doctest::Approx(5.0).epsilon(0.01));

    auto cut = trim_with_fade(clip, 1.0, 2.0, 0.5);
    CHECK(cut.duration_s() == doctest::Approx(2.0).epsilon(0.001));
    CHECK(cut.frame_count() == 2 * 22050);

    // sample-accurate start: the cut begins exactly at source frame 22050
    CHECK(cut.samples[0] == clip.samples[22050 * clip.channels]);

    // the fade zeroes the tail but leaves the pre-fade body untouched
    CHECK(cut.samples.back() == 0);
    std::size_t mid = (cut.frame_count() / 2) * cut.channels; // 1.0s, fade starts at 1.5s
    CHECK(cut.samples[mid] == clip.samples[(22050 + 22050) * clip.channels + 0]);

    // trimming past the end pads with silence
    auto padded = trim_with_fade(clip, 4.0, 3.0, 0.5);
    CHECK(padded.frame_count() == static_cast<std::size_t>(3 * 22050));
    CHECK(padded.samples.back() == 0);
}

TEST_CASE("video: duration follows (frames+1) x interval") {
    ts::TempDir dir("video");
    auto frames = sample_frames(5, 320, 240);
    render::Image title(320, 240, render::Rgb{0, 0, 60});

    auto path = dir.path() / "out.mp4";
    encode_video(path, title, frames, std::nullopt);

    auto probe = ts::probe_mp4_file(path);
    CHECK(probe.duration_s == doctest::Approx(24.0).epsilon(0.011)); // (5+1)*4
    CHECK(probe.video_width == 320);
    CHECK(probe.video_height == 240);
    CHECK(probe.track_count == 1);
    CHECK_FALSE(probe.has_audio);
}

TEST_CASE("video: one frame still satisfies the 3-second floor") {
    ts::TempDir dir("video1");
    auto frames = sample_frames(1, 320, 240);
    render::Image title(320, 240);

    auto path = dir.path() / "one.mp4";
    encode_video(path, title, frames, std::nullopt);
    auto probe = ts::probe_mp4_file(path);
    CHECK(probe.duration_s == doctest::Approx(8.0).epsilon(0.01)); // (1+1)*4
    CHECK(probe.duration_s >= 3.0);

    CHECK_THROWS_AS(encode_video(dir.path() / "none.mp4", title, {}, std::nullopt), Error);
}

TEST_CASE("video: soundtrack lands as an audio track") {
    ts::TempDir dir("videoa");
    ts::write_sine_wav(dir.path() / "tone.wav", 60.0, 44100, 1);
    auto clip = trim_with_fade(read_wav(dir.path() / "tone.wav"), 2.5, 12.0);

    auto frames = sample_frames(2, 320, 240);
    render::Image title(320, 240);
    auto path = dir.path() / "with_audio.mp4";
    encode_video(path, title, frames, clip);

    auto probe = ts::probe_mp4_file(path);
    CHECK(probe.duration_s == doctest::Approx(12.0).epsilon(0.05)); // (2+1)*4
    CHECK(probe.track_count == 2);
    CHECK(probe.has_audio);
}

TEST_CASE("artifact manifest includes frames, soundtrack and seed") {
    selection::SelectionPlan plan;
    plan.target_uri = "http://example.com";
    plan.strategy = selection::Strategy::per_year(1);
    plan.picks.push_back({1999, ts::make_snapshot("http://arc.test/web/19990101000000/x",
                                                  "19990101000000"),
                          "arc", 0});

    SoundtrackChoice choice;
    choice.track_id = "amb1";
    choice.start_offset_s = 12.345;

    auto manifest = serialize_artifact_manifest(plan, {{1999, "1999.png"}}, choice, 42);
    CHECK(manifest.find("frame 1999 1999.png\n") != std::string::npos);
    CHECK(manifest.find("soundtrack amb1 12.345\n") != std::string::npos);
    CHECK(manifest.find("seed 42\n") != std::string::npos);

    auto silent = serialize_artifact_manifest(plan, {{1999, "1999.png"}}, std::nullopt, 42);
    CHECK(silent.find("soundtrack none\n") != std::string::npos);
}
