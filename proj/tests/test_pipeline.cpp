#include "weblapse/error.hpp"
#include "weblapse/pipeline.hpp"

#include "support/builders.hpp"
#include "support/probes.hpp"

#include <doctest.h>
#include "weblapse/httplib_setup.hpp"
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <thread>

using namespace weblapse;
using namespace weblapse::cli;
namespace ts = weblapse::testsupport;

namespace {

struct PipelineHarness {
    ts::TempDir root{"pipeline"};
    Config config;
    ts::E2eFixture fixture;

    explicit PipelineHarness(bool with_soundtrack = false) {
        config.offline = true;
        config.memento_aggregator = "http://aggregator.local";
        config.store_dir = root.path() / "store";
        config.workdir_root = root.path() / "work";
        config.gallery_dir = root.path() / "gallery";
        config.fixtures_dir = root.path() / "fixtures";
        config.knowledge_dir = root.path() / "knowledge";
        config.rng_seed = 424242;
        config.daily_run_limit = 100;

        fixture = ts::write_e2e_fixtures(config.fixtures_dir);

        if (with_soundtrack) {
            auto tracks_dir = root.path() / "tracks";
            std::filesystem::create_directories(tracks_dir);
            ts::write_sine_wav(tracks_dir / "amb.wav", 90.0, 22050, 1);
            ts::write_sine_wav(tracks_dir / "aco.wav", 120.0, 22050, 1, 330.0);
            config.soundtrack_manifest = root.path() / "tracks.txt";
            ts::write_text_file(config.soundtrack_manifest,
                                "amb1<>ambient<>90<>" + (tracks_dir / "amb.wav").string() + "\n" +
                                    "aco1<>acoustic<>120<>" + (tracks_dir / "aco.wav").string() +
                                    "\n");
            assemble::FixtureKnowledgeClient::store(
                config.knowledge_dir, fixture.target_url,
                {{"Example Domain", {"University example pages"}}});
        }
    }

    PipelineEnv env(UtcSeconds fixed_now) {
        auto e = make_env(config);
        e.now = [fixed_now] { return fixed_now; };
        return e;
    }
};

} // namespace

TEST_CASE("offline run fulfills a request end to end") {
    PipelineHarness h;
    const UtcSeconds now = civil_to_epoch(2021, 2, 17, 12, 0, 0);

    auto report = run_pipeline(h.config, "#whatdiditlooklike example.com", h.env(now));
    REQUIRE(report.outcomes.size() == 1);
    const auto& outcome = report.outcomes[0];
    CHECK(outcome.status == RequestOutcome::Status::Fulfilled);
    CHECK(outcome.canonical_url == "http://example.com");
    REQUIRE(outcome.artifact.has_value());
    CHECK(outcome.artifact->frame_count == 10); // one per year 1997..2006

    // fulfilled workdir renamed hash+stamp and holding all outputs
    const std::string ref = render::url_hash("http://example.com") + format_14digit(now);
    CHECK(outcome.artifact_ref == ref);
    auto renamed = h.config.workdir_root / ref;
    CHECK(std::filesystem::is_directory(renamed));
    CHECK(std::filesystem::exists(renamed / "timelapse.gif"));
    CHECK(std::filesystem::exists(renamed / "timelapse.mp4"));
    CHECK(std::filesystem::exists(renamed / "manifest.txt"));
    CHECK(std::filesystem::exists(renamed / "urlsFile.txt"));
    for (int year = 1997; year <= 2006; ++year) {
        CHECK(std::filesystem::exists(renamed / (std::to_string(year) + ".png")));
    }

    // gallery holds a copy with an index entry
    CHECK(std::filesystem::exists(h.config.gallery_dir / ref / "timelapse.gif"));
    auto index_html = ts::read_text_file(h.config.gallery_dir / "index.html");
    CHECK(index_html.find(ref) != std::string::npos);

    // stores updated: nothing pending, one fulfilled, run counted
    auto store = request::load_store(h.config.store_dir);
    CHECK(store.pending.empty());
    REQUIRE(store.fulfilled.size() == 1);
    CHECK(store.fulfilled[0].request.target_uri == "http://example.com");
    CHECK(store.run_counts.at("20210217") == 1);

    // media sanity through the independent probes
    auto gif = ts::probe_gif_file(renamed / "timelapse.gif");
    CHECK(gif.frame_count() == 10);
    auto mp4 = ts::probe_mp4_file(renamed / "timelapse.mp4");
    CHECK(mp4.duration_s == doctest::Approx(44.0).epsilon(0.01));
}

TEST_CASE("same URL twice in one run: second becomes a fresh verdict") {
    PipelineHarness h;
    const UtcSeconds now = civil_to_epoch(2021, 3, 1, 9, 0, 0);

    auto report = run_pipeline(h.config, "#whatdiditlooklike example.com, example.com", h.env(now));
    REQUIRE(report.outcomes.size() == 2);
    CHECK(report.outcomes[0].status == RequestOutcome::Status::Fulfilled);
    CHECK(report.outcomes[1].status == RequestOutcome::Status::Fresh);
    CHECK(report.outcomes[1].days_remaining == 30);
    CHECK(report.outcomes[1].artifact_ref == report.outcomes[0].artifact_ref);
    CHECK(report.exit_code() == 0); // fresh is a handled outcome
}

TEST_CASE("date range filters the selection") {
    PipelineHarness h;
    auto report = run_pipeline(h.config, "#whatdiditlooklike example.com 1999 to 2002",
                               h.env(civil_to_epoch(2021, 3, 1)));
    REQUIRE(report.outcomes.size() == 1);
    REQUIRE(report.outcomes[0].artifact.has_value());
    CHECK(report.outcomes[0].artifact->frame_count == 4);
}

TEST_CASE("range excluding every snapshot reports an empty selection") {
    PipelineHarness h;
    auto report = run_pipeline(h.config, "#whatdiditlooklike example.com 1990 to 1991",
                               h.env(civil_to_epoch(2021, 3, 1)));
    REQUIRE(report.outcomes.size() == 1);
    CHECK(report.outcomes[0].status == RequestOutcome::Status::Failed);
    CHECK(report.outcomes[0].message.find("EmptySelection") != std::string::npos);
    CHECK(report.exit_code() == 1);
}

TEST_CASE("run limit blocks processing and touches only the counter") {
    PipelineHarness h;
    h.config.daily_run_limit = 1;
    const UtcSeconds now = civil_to_epoch(2021, 3, 2, 8, 0, 0);

    auto first = run_pipeline(h.config, "#whatdiditlooklike example.com", h.env(now));
    CHECK(first.outcomes.size() == 1);

    auto before = request::load_store(h.config.store_dir);
    auto second = run_pipeline(h.config, "#whatdiditlooklike other.example", h.env(now + 60));
    CHECK(second.run_limit_reached);
    CHECK(second.outcomes.empty());

    auto after = request::load_store(h.config.store_dir);
    CHECK(after.pending.size() == before.pending.size());
    CHECK(after.fulfilled.size() == before.fulfilled.size());
    CHECK(after.run_counts == before.run_counts);
}

TEST_CASE("one bad request never aborts the others") {
    PipelineHarness h;
    // nothing recorded for missing.example -> aggregation fails for it
    auto report = run_pipeline(h.config, "#whatdiditlooklike missing.example, example.com",
                               h.env(civil_to_epoch(2021, 3, 3)));
    REQUIRE(report.outcomes.size() == 2);
    CHECK(report.outcomes[0].status == RequestOutcome::Status::Failed);
    CHECK(report.outcomes[1].status == RequestOutcome::Status::Fulfilled);
    CHECK(report.exit_code() == 1);
}

TEST_CASE("external message ids respect and advance the cursor") {
    PipelineHarness h;
    const UtcSeconds now = civil_to_epoch(2021, 3, 4);

    IncomingMessage m1{"100", "user-a", "#whatdiditlooklike example.com", true};
    auto r1 = run_pipeline(h.config, {m1}, h.env(now));
    CHECK(r1.outcomes.size() == 1);
    CHECK(request::load_store(h.config.store_dir).cursor == "100");

    // the same id again is skipped outright
    auto r2 = run_pipeline(h.config, {m1}, h.env(now + 60));
    CHECK(r2.outcomes.empty());

    // an older id is also skipped; a newer one advances
    IncomingMessage m0{"99", "user-a", "#whatdiditlooklike example.com", true};
    IncomingMessage m2{"101", "user-a", "#whatdiditlooklike example.com", true};
    auto r3 = run_pipeline(h.config, {m0, m2}, h.env(now + 120));
    CHECK(r3.outcomes.size() == 1); // only message 101, which gates Fresh
    CHECK(r3.outcomes[0].status == RequestOutcome::Status::Fresh);
    CHECK(request::load_store(h.config.store_dir).cursor == "101");
}

TEST_CASE("soundtrack flows into the video and the manifest") {
    PipelineHarness h(true);
    const UtcSeconds now = civil_to_epoch(2021, 3, 5, 10, 0, 0);

    auto report = run_pipeline(h.config, "#whatdiditlooklike example.com", h.env(now));
    REQUIRE(report.outcomes.size() == 1);
    REQUIRE(report.outcomes[0].artifact.has_value());
    const auto& artifact = *report.outcomes[0].artifact;
    REQUIRE(artifact.soundtrack.has_value());

    // the knowledge fixture categorizes as education -> acoustic -> aco1
    CHECK(artifact.soundtrack->track_id == "aco1");

    auto manifest = ts::read_text_file(artifact.manifest_path);
    CHECK(manifest.find("soundtrack " + artifact.soundtrack->track_id) != std::string::npos);

    auto mp4 = ts::probe_mp4_file(artifact.video_path);
    CHECK(mp4.has_audio);
    CHECK(mp4.track_count == 2);
    CHECK(mp4.duration_s == doctest::Approx(44.0).epsilon(0.02));
}

TEST_CASE("two runs with one seed and clock produce identical manifests") {
    auto run_once = [](const std::string& tag) {
        PipelineHarness h(true);
        auto report = run_pipeline(h.config, "#whatdiditlooklike example.com",
                                   h.env(civil_to_epoch(2021, 3, 6, 7, 0, 0)));
        REQUIRE(report.outcomes.size() == 1);
        REQUIRE(report.outcomes[0].artifact.has_value());
        const auto& artifact = *report.outcomes[0].artifact;
        std::string manifest = ts::read_text_file(artifact.manifest_path);
        std::string track = artifact.soundtrack ? artifact.soundtrack->track_id : "";
        double offset = artifact.soundtrack ? artifact.soundtrack->start_offset_s : -1;
        (void)tag;
        return std::tuple{manifest, track, offset};
    };

    auto [m1, t1, o1] = run_once("a");
    auto [m2, t2, o2] = run_once("b");
    CHECK(m1 == m2);
    CHECK_FALSE(m1.empty());
    CHECK(t1 == t2);
    CHECK(o1 == doctest::Approx(o2));
}

TEST_CASE("simhash strategy picks change-significant snapshots only") {
    PipelineHarness h;
    h.config.strategy = StrategyKind::ChangeThreshold;
    h.config.change_threshold = 0;

    auto report = run_pipeline(h.config, "#whatdiditlooklike example.com",
                               h.env(civil_to_epoch(2021, 3, 7)));
    REQUIRE(report.outcomes.size() == 1);
    CHECK(report.outcomes[0].status == RequestOutcome::Status::Fulfilled);
    REQUIRE(report.outcomes[0].artifact.has_value());
    // fixture pages all differ (distinct year text), so every snapshot is kept
    CHECK(report.outcomes[0].artifact->frame_count == 10);

    // threshold 64 keeps only the first snapshot
    PipelineHarness h64;
    h64.config.strategy = StrategyKind::ChangeThreshold;
    h64.config.change_threshold = 64;
    auto r64 = run_pipeline(h64.config, "#whatdiditlooklike example.com",
                            h64.env(civil_to_epoch(2021, 3, 7)));
    REQUIRE(r64.outcomes.size() == 1);
    REQUIRE(r64.outcomes[0].artifact.has_value());
    CHECK(r64.outcomes[0].artifact->frame_count == 1);
}

TEST_CASE("publish_gallery is idempotent per artifact") {
    ts::TempDir dir("gallery");
    auto source = dir.path() / "src";
    std::filesystem::create_directories(source);
    ts::write_text_file(source / "manifest.txt",
                        "manifest-version 1\ntarget http://x\npick 1999 http://arc.test/m 19990101000000 arc 0\n");
    ts::write_text_file(source / "timelapse.gif", "gif");
    ts::write_text_file(source / "timelapse.mp4", "mp4");

    auto gallery = dir.path() / "gallery";
    auto index = publish_gallery({{"abc19990101000000", source}}, gallery);
    CHECK(std::filesystem::exists(index));
    CHECK(std::filesystem::exists(gallery / "abc19990101000000" / "manifest.txt"));

    // re-publishing the same ref keeps one entry
    publish_gallery({{"abc19990101000000", source}}, gallery);
    int entries = 0;
    for (const auto& item : std::filesystem::directory_iterator(gallery)) {
        if (item.is_directory()) ++entries;
    }
    CHECK(entries == 1);

    // a second artifact adds a second entry and both land in the index
    auto index2 = publish_gallery({{"def20000101000000", source}}, gallery);
    auto html = ts::read_text_file(index2);
    CHECK(html.find("abc19990101000000") != std::string::npos);
    CHECK(html.find("def20000101000000") != std::string::npos);
    CHECK(html.find("http://arc.test/m") != std::string::npos); // per-year snapshot link
}

TEST_CASE("config loading: defaults, overrides, errors") {
    ts::TempDir dir("config");

    // only the aggregator set: everything else defaults
    auto minimal = dir.path() / "minimal.json";
    ts::write_text_file(minimal, R"({"mementoAggregator": "http://agg.test"})");
    auto config = load_config(minimal);
    CHECK(config.memento_aggregator == "http://agg.test");
    CHECK(config.nomination_differential_days == 30);
    CHECK(config.fetch.max_parallel_fetches == 4);
    CHECK(config.fetch.per_request_timeout_s == 30);
    CHECK(config.fetch.max_redirect_hops == 10);
    CHECK(config.strategy == StrategyKind::PerYear);
    CHECK(config.warnings.empty());

    // empty file with offline flag is a valid fixture-backed config
    auto empty = dir.path() / "empty.json";
    ts::write_text_file(empty, "");
    auto offline = load_config(empty);
    offline.offline = true;
    CHECK(offline.nomination_differential_days == 30);

    // unknown keys warn but do not fail
    auto unknown = dir.path() / "unknown.json";
    ts::write_text_file(unknown, R"({"mementoAggregator": "http://a", "tumblrKey": "zzz"})");
    auto warned = load_config(unknown);
    REQUIRE(warned.warnings.size() == 1);
    CHECK(warned.warnings[0].find("tumblrKey") != std::string::npos);

    // type and range errors
    auto bad_type = dir.path() / "badtype.json";
    ts::write_text_file(bad_type, R"({"nominationDifferential": "thirty"})");
    CHECK_THROWS_AS(load_config(bad_type), Error);

    auto bad_threshold = dir.path() / "badthreshold.json";
    ts::write_text_file(bad_threshold, R"({"changeThreshold": 99})");
    CHECK_THROWS_AS(load_config(bad_threshold), Error);

    CHECK_THROWS_AS(load_config(dir.path() / "missing.json"), Error);
    try {
        load_config(dir.path() / "missing.json");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::MissingFile);
    }
}

TEST_CASE("ingestion endpoint nominates into the pending queue") {
    PipelineHarness h;
    // the serve handler logic, driven through a local httplib server the same
    // way the CLI wires it
    const UtcSeconds ingest_at = civil_to_epoch(2021, 3, 7, 22, 0, 0);
    httplib::Server server;
    server.Post("/", [&h, ingest_at](const httplib::Request& req, httplib::Response& res) {
        nlohmann::json out = nlohmann::json::array();
        auto store = request::load_store(h.config.store_dir);
        auto parsed = request::parse_request_text(req.body, ingest_at);
        int ordinal = 0;
        for (const auto& entry : parsed.entries) {
            request::TimelapseRequest candidate;
            candidate.target_uri = render::canonicalize_url(entry.raw_url);
            candidate.date_range = entry.range;
            candidate.requester_id = "ingest";
            candidate.nominated_at = entry.received_at;
            candidate.message_id = format_14digit(entry.received_at) + "-" + std::to_string(++ordinal);
            auto verdict =
                request::nomination_gate(candidate, store, h.config.nomination_differential_days);
            nlohmann::json item{{"url", candidate.target_uri}};
            if (verdict.nominated()) {
                store.pending.push_back(candidate);
                item["verdict"] = "nominate";
            } else {
                item["verdict"] = "fresh";
                item["days_remaining"] = verdict.days_remaining;
            }
            out.push_back(item);
        }
        request::save_store(h.config.store_dir, store);
        res.set_content(out.dump(), "application/json");
    });

    int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread runner([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    httplib::Client client("127.0.0.1", port);
    auto res = client.Post("/", "#whatdiditlooklike example.com", "text/plain");
    REQUIRE(res);
    CHECK(res->status == 200);
    auto body = nlohmann::json::parse(res->body);
    REQUIRE(body.size() == 1);
    CHECK(body[0]["verdict"] == "nominate");
    CHECK(body[0]["url"] == "http://example.com");

    server.stop();
    runner.join();

    // the queued request is processed by a later pending run
    auto store = request::load_store(h.config.store_dir);
    REQUIRE(store.pending.size() == 1);
    CHECK(store.pending[0].nominated_at == ingest_at);
    auto report = run_pending(h.config, h.env(civil_to_epoch(2021, 3, 8)));
    REQUIRE(report.outcomes.size() == 1);
    CHECK(report.outcomes[0].status == RequestOutcome::Status::Fulfilled);
    CHECK(request::load_store(h.config.store_dir).pending.empty());
}

TEST_CASE("diversified selection rotates across repeated fulfillments") {
    PipelineHarness h;
    h.config.nomination_differential_days = 0; // let every request through

    // 1997 has two candidates (alpha + gamma both hold it); capture which one
    // each successive run picks
    std::vector<std::string> first_year_picks;
    for (int round = 0; round < 2; ++round) {
        const UtcSeconds now = civil_to_epoch(2021, 3, 10 + 2 * round, 6, 0, 0);
        auto report = run_pipeline(h.config, "#whatdiditlooklike example.com", h.env(now));
        REQUIRE(report.outcomes.size() == 1);
        REQUIRE(report.outcomes[0].artifact.has_value());
        auto manifest = ts::read_text_file(report.outcomes[0].artifact->manifest_path);
        auto pos = manifest.find("pick 1997 ");
        REQUIRE(pos != std::string::npos);
        auto end = manifest.find(' ', pos + 10);
        first_year_picks.push_back(manifest.substr(pos + 10, end - (pos + 10)));
    }
    CHECK(first_year_picks[0] != first_year_picks[1]); // N=1 then N=2
}
