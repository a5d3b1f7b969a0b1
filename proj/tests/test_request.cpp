#include "weblapse/error.hpp"
#include "weblapse/request.hpp"
#include "weblapse/urlnorm.hpp"

#include "support/builders.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <fstream>
#include <random>
#include <thread>

using namespace weblapse;
using namespace weblapse::request;
namespace ts = weblapse::testsupport;

namespace {

TimelapseRequest make_request(const std::string& url, const std::string& message_id,
                              UtcSeconds nominated_at, selection::DateRange range = {}) {
    TimelapseRequest r;
    r.target_uri = url;
    r.date_range = range;
    r.requester_id = "user1";
    r.nominated_at = nominated_at;
    r.message_id = message_id;
    return r;
}

} // namespace

TEST_CASE("parse_request_text: multiple URLs share a trailing range") {
    auto parsed = parse_request_text("#whatdiditlooklike a.com, b.org 2004 to 2009-06",
                                     civil_to_epoch(2021, 1, 1));
    REQUIRE(parsed.entries.size() == 2);
    CHECK(parsed.entries[0].raw_url == "a.com");
    CHECK(parsed.entries[1].raw_url == "b.org");
    for (const auto& entry : parsed.entries) {
        REQUIRE(entry.range.present);
        CHECK(entry.range.start == CivilDate{2004, 1, 1});
        CHECK(entry.range.end == CivilDate{2009, 6, 30});
        CHECK(entry.received_at == civil_to_epoch(2021, 1, 1));
    }
    CHECK(parsed.warnings.empty());
}

TEST_CASE("parse_request_text: single URL, no range") {
    auto parsed = parse_request_text("please run #whatdiditlooklike a.com", 0);
    REQUIRE(parsed.entries.size() == 1);
    CHECK(parsed.entries[0].raw_url == "a.com");
    CHECK_FALSE(parsed.entries[0].range.present);
}

TEST_CASE("parse_request_text: inverted range falls back to no filtering") {
    auto parsed = parse_request_text("#whatdiditlooklike a.com 2009 to 2004", 0);
    REQUIRE(parsed.entries.size() == 1);
    CHECK_FALSE(parsed.entries[0].range.present);
    REQUIRE(parsed.warnings.size() == 1);
    CHECK(parsed.warnings[0].find("start after end") != std::string::npos);
}

TEST_CASE("parse_request_text: invalid date in range warns and ignores the range") {
    auto parsed = parse_request_text("#whatdiditlooklike a.com 2004-13 to 2009", 0);
    REQUIRE(parsed.entries.size() == 1);
    CHECK_FALSE(parsed.entries[0].range.present);
    CHECK(parsed.warnings.size() == 1);
}

TEST_CASE("parse_request_text: mixed formats and separators") {
    auto parsed = parse_request_text("#WhatDidItLookLike x.net 2004-06 - 2009", 0);
    REQUIRE(parsed.entries.size() == 1);
    REQUIRE(parsed.entries[0].range.present);
    CHECK(parsed.entries[0].range.start == CivilDate{2004, 6, 1});
    CHECK(parsed.entries[0].range.end == CivilDate{2009, 12, 31});
}

TEST_CASE("parse_request_text error cases") {
    CHECK_THROWS_AS(parse_request_text("no trigger here a.com", 0), Error);
    CHECK_THROWS_AS(parse_request_text("#whatdiditlooklike", 0), Error);
    CHECK_THROWS_AS(parse_request_text("#whatdiditlooklike   ,  , ", 0), Error);
    try {
        parse_request_text("nope", 0);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NoTrigger);
    }
    try {
        parse_request_text("#whatdiditlooklike", 0);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NoUrls);
    }
}

TEST_CASE("parse_request_text never yields an inverted present range (randomized)") {
    std::mt19937_64 rng(17);
    for (int i = 0; i < 200; ++i) {
        int y1 = 1995 + static_cast<int>(rng() % 20);
        int y2 = 1995 + static_cast<int>(rng() % 20);
        std::string text = "#whatdiditlooklike site.test " + std::to_string(y1) + " to " +
                           std::to_string(y2);
        auto parsed = parse_request_text(text, 0);
        for (const auto& entry : parsed.entries) {
            if (entry.range.present) CHECK_FALSE(entry.range.start > entry.range.end);
        }
    }
}

TEST_CASE("nomination_gate: the 30-day differential") {
    const UtcSeconds day0 = civil_to_epoch(2021, 1, 1, 10, 0, 0);
    RequestStore store;
    store.fulfilled.push_back({make_request("http://a.com", "1", day0), day0});

    // 31 days later: outdated, nominate
    auto v31 = nomination_gate(make_request("http://a.com", "2", day0 + 31 * 86400), store, 30);
    CHECK(v31.nominated());

    // 29 days later: fresh, one day remaining
    auto v29 = nomination_gate(make_request("http://a.com", "3", day0 + 29 * 86400), store, 30);
    CHECK_FALSE(v29.nominated());
    CHECK(v29.days_remaining == 1);
    CHECK(v29.last_artifact_ref ==
          render::url_hash("http://a.com") + format_14digit(day0));

    // exactly 30 days: still fresh (strict comparison)
    auto v30 = nomination_gate(make_request("http://a.com", "4", day0 + 30 * 86400), store, 30);
    CHECK_FALSE(v30.nominated());
    CHECK(v30.days_remaining == 0);

    // never requested before
    auto fresh_url = nomination_gate(make_request("http://b.com", "5", day0), store, 30);
    CHECK(fresh_url.nominated());
}

TEST_CASE("nomination_gate matches URLs by canonical form") {
    const UtcSeconds day0 = civil_to_epoch(2021, 1, 1);
    RequestStore store;
    store.fulfilled.push_back({make_request("http://apple.com", "1", day0), day0});

    auto verdict =
        nomination_gate(make_request("HTTP://Apple.COM:80/#x", "2", day0 + 86400), store, 30);
    CHECK_FALSE(verdict.nominated());

    // the artifact ref follows the configured workdir digest
    auto fnv = nomination_gate(make_request("http://apple.com", "3", day0 + 86400), store, 30,
                               render::HashAlgo::Fnv64);
    CHECK(fnv.last_artifact_ref ==
          render::url_hash("http://apple.com", render::HashAlgo::Fnv64) + format_14digit(day0));
}

TEST_CASE("nomination_gate day gap agrees with the epoch-arithmetic oracle") {
    std::mt19937_64 rng(31);
    for (int i = 0; i < 300; ++i) {
        UtcSeconds a = civil_to_epoch(2020, 1, 1) + static_cast<UtcSeconds>(rng() % (400LL * 86400));
        UtcSeconds b = a + static_cast<UtcSeconds>(rng() % (100LL * 86400));
        auto gap = days_between(civil_date_of(a), civil_date_of(b));
        CHECK(gap == ts::oracle_day_gap(a, b));
    }
}

TEST_CASE("no URL is nominated twice within the window (simulated stream)") {
    std::mt19937_64 rng(41);
    const int differential = 30;
    RequestStore store;
    UtcSeconds clock = civil_to_epoch(2021, 1, 1);
    int id = 0;

    for (int step = 0; step < 400; ++step) {
        clock += static_cast<UtcSeconds>(rng() % (5 * 86400));
        auto candidate = make_request("http://popular.test", std::to_string(++id), clock);
        auto verdict = nomination_gate(candidate, store, differential);
        if (verdict.nominated()) {
            // verify against every fulfilled entry, not just the latest
            for (const auto& f : store.fulfilled) {
                CHECK(ts::oracle_day_gap(f.fulfilled_at, clock) > differential);
            }
            store.fulfilled.push_back({candidate, clock});
        }
    }
    CHECK(store.fulfilled.size() > 1);
}

TEST_CASE("pending/fulfilled line formats") {
    auto range = selection::DateRange::of({2004, 1, 1}, {2009, 6, 30});
    auto r = make_request("http://a.com/page", "1361807543983624196",
                          civil_to_epoch(2021, 2, 17, 12, 0, 0), range);
    CHECK(serialize_pending_line(r) ==
          "http://a.com/page<>user1<>20210217120000<>1361807543983624196<>2004-01-01<>2009-06-30");

    auto no_range = make_request("http://b.com", "77", civil_to_epoch(2021, 2, 17, 12, 0, 0));
    CHECK(serialize_pending_line(no_range) == "http://b.com<>user1<>20210217120000<>77<>0<>0");

    auto parsed = parse_pending_line(serialize_pending_line(r));
    CHECK(parsed.target_uri == r.target_uri);
    CHECK(parsed.message_id == r.message_id);
    CHECK(parsed.nominated_at == r.nominated_at);
    CHECK(parsed.date_range.present);
    CHECK(parsed.date_range.start == range.start);
    CHECK(parsed.date_range.end == range.end);

    CHECK_THROWS_AS(parse_pending_line("only<>three<>fields"), Error);
    CHECK_THROWS_AS(parse_pending_line("u<>r<>baddate<>id<>0<>0"), Error);

    FulfilledRequest f{r, civil_to_epoch(2021, 3, 1)};
    auto fline = serialize_fulfilled_line(f);
    auto fparsed = parse_fulfilled_line(fline);
    CHECK(fparsed.fulfilled_at == f.fulfilled_at);
    CHECK(fparsed.request.target_uri == r.target_uri);
}

TEST_CASE("store round-trips through its files (randomized)") {
    std::mt19937_64 rng(53);
    ts::TempDir dir("store");

    RequestStore store;
    for (int i = 0; i < 20; ++i) {
        std::string url = "http://site" + std::to_string(rng() % 50) + ".test/p" +
                          std::to_string(rng() % 100);
        UtcSeconds at = civil_to_epoch(2020, 1, 1) + static_cast<UtcSeconds>(rng() % (86400LL * 700));
        selection::DateRange range;
        if (rng() % 2) {
            int y = 2000 + static_cast<int>(rng() % 10);
            range = selection::DateRange::of({y, 1, 1}, {y + static_cast<int>(rng() % 3), 12, 31});
        }
        auto r = make_request(url, std::to_string(1000 + i), at, range);
        if (rng() % 2) store.pending.push_back(r);
        else store.fulfilled.push_back({r, at + static_cast<UtcSeconds>(rng() % 86400)});
    }
    store.cursor = "1019";
    store.run_counts["20210217"] = 3;
    store.run_counts["20210218"] = 1;

    save_store(dir.path(), store);
    auto loaded = load_store(dir.path());
    CHECK(loaded.warnings.empty());
    REQUIRE(loaded.pending.size() == store.pending.size());
    REQUIRE(loaded.fulfilled.size() == store.fulfilled.size());
    for (std::size_t i = 0; i < store.pending.size(); ++i) {
        CHECK(serialize_pending_line(loaded.pending[i]) == serialize_pending_line(store.pending[i]));
    }
    for (std::size_t i = 0; i < store.fulfilled.size(); ++i) {
        CHECK(serialize_fulfilled_line(loaded.fulfilled[i]) ==
              serialize_fulfilled_line(store.fulfilled[i]));
    }
    CHECK(loaded.cursor == store.cursor);
    CHECK(loaded.run_counts == store.run_counts);

    // a second save/load reaches a fixed point
    save_store(dir.path(), loaded);
    auto again = load_store(dir.path());
    CHECK(again.pending.size() == loaded.pending.size());
    CHECK(ts::read_text_file(dir.path() / "requests_pending.txt") != "");
}

TEST_CASE("malformed store lines are skipped with warnings") {
    ts::TempDir dir("badstore");
    ts::write_text_file(dir.path() / "requests_pending.txt",
                        "http://ok.test<>u<>20210101000000<>1<>0<>0\n"
                        "garbage line without delimiters\n"
                        "http://ok2.test<>u<>20210102000000<>2<>0<>0\n");
    auto store = load_store(dir.path());
    CHECK(store.pending.size() == 2);
    REQUIRE(store.warnings.size() == 1);
    CHECK(store.warnings[0].find("pending") != std::string::npos);
}

TEST_CASE("cursor semantics") {
    RequestStore store;
    CHECK_FALSE(message_seen(store, "5")); // empty cursor: everything eligible

    store.cursor = "100";
    advance_cursor(store, {"101", "102"});
    CHECK(store.cursor == "102");

    advance_cursor(store, {"99"});
    CHECK(store.cursor == "102");
    CHECK(message_seen(store, "99"));
    CHECK(message_seen(store, "102"));
    CHECK_FALSE(message_seen(store, "103"));

    RequestStore empty;
    advance_cursor(empty, {"5", "7"});
    CHECK(empty.cursor == "7");

    // numeric ids compare numerically, not lexicographically
    RequestStore numeric;
    numeric.cursor = "99";
    CHECK_FALSE(message_seen(numeric, "100"));
    advance_cursor(numeric, {"100"});
    CHECK(numeric.cursor == "100");
}

TEST_CASE("compare_message_ids handles numeric and opaque ids") {
    CHECK(compare_message_ids("9", "10") < 0);
    CHECK(compare_message_ids("0010", "9") > 0);
    CHECK(compare_message_ids("100", "100") == 0);
    CHECK(compare_message_ids("abc", "abd") < 0);
    CHECK(compare_message_ids("2", "abc") < 0); // mixed falls back to lexicographic
}

TEST_CASE("run_count_gate") {
    RequestStore store;
    store.run_counts["20210217"] = 3;

    auto v1 = run_count_gate(store, "20210217", 4);
    CHECK(v1.proceed);
    CHECK(store.run_counts["20210217"] == 4);

    auto v2 = run_count_gate(store, "20210217", 4);
    CHECK_FALSE(v2.proceed);
    CHECK(store.run_counts["20210217"] == 4); // no increment on refusal

    auto v3 = run_count_gate(store, "20210218", 4);
    CHECK(v3.proceed);
    CHECK(store.run_counts["20210218"] == 1); // new day starts at 1
}

TEST_CASE("mark_fulfilled moves the request and renames the workdir") {
    ts::TempDir root("workdirs");
    const UtcSeconds at = civil_to_epoch(2021, 2, 17, 12, 0, 0);

    RequestStore store;
    auto r = make_request("http://a.com", "42", at);
    store.pending.push_back(r);

    std::filesystem::path workdir = root.path() / "ab12";
    std::filesystem::create_directories(workdir);
    ts::write_text_file(workdir / "1999.png", "fake");

    auto renamed = mark_fulfilled(store, r, workdir, at);
    CHECK(renamed.filename().string() == "ab1220210217120000");
    CHECK(std::filesystem::exists(renamed / "1999.png"));
    CHECK_FALSE(std::filesystem::exists(workdir));
    CHECK(store.pending.empty());
    REQUIRE(store.fulfilled.size() == 1);
    CHECK(store.fulfilled[0].fulfilled_at == at);

    // double fulfillment: store untouched
    CHECK_THROWS_AS(mark_fulfilled(store, r, renamed, at), Error);
    CHECK(store.fulfilled.size() == 1);
    CHECK(store.pending.empty());

    // missing workdir
    RequestStore store2;
    auto r2 = make_request("http://b.com", "43", at);
    store2.pending.push_back(r2);
    CHECK_THROWS_AS(mark_fulfilled(store2, r2, root.path() / "missing", at), Error);
    CHECK(store2.pending.size() == 1);
}

TEST_CASE("prior_request_count spans pending and fulfilled") {
    const UtcSeconds at = civil_to_epoch(2021, 1, 1);
    RequestStore store;
    store.pending.push_back(make_request("http://a.com", "1", at));
    store.fulfilled.push_back({make_request("http://a.com/", "2", at), at}); // same canonical URL
    store.fulfilled.push_back({make_request("http://other.com", "3", at), at});

    CHECK(prior_request_count("http://a.com", store) == 2);
    CHECK(prior_request_count("http://other.com", store) == 1);
    CHECK(prior_request_count("http://nothere.com", store) == 0);
}

TEST_CASE("store lock excludes a second writer") {
    ts::TempDir dir("lock");
    StoreLock first(dir.path());
    CHECK_THROWS_AS(StoreLock{dir.path()}, Error);
}
