#include "weblapse/archive_net.hpp"
#include "weblapse/error.hpp"

#include "support/builders.hpp"

#include <doctest.h>
#include "weblapse/httplib_setup.hpp"

#include <thread>

using namespace weblapse;
using namespace weblapse::net;
namespace ts = weblapse::testsupport;

TEST_CASE("split_url and resolve_reference") {
    auto parts = split_url("http://host.test:8080/a/b?q=1#frag");
    CHECK(parts.scheme == "http");
    CHECK(parts.host == "host.test");
    CHECK(parts.port == 8080);
    CHECK(parts.target == "/a/b?q=1");

    CHECK(split_url("https://host.test").port == 443);
    CHECK(split_url("http://host.test").target == "/");
    CHECK_THROWS_AS(split_url("notaurl"), Error);
    CHECK_THROWS_AS(split_url("ftp://host.test/x"), Error);

    CHECK(resolve_reference("http://a.test/x/y", "http://b.test/z") == "http://b.test/z");
    CHECK(resolve_reference("http://a.test/x/y", "/z") == "http://a.test/z");
    CHECK(resolve_reference("http://a.test/x/y", "z") == "http://a.test/x/z");
    CHECK(resolve_reference("http://a.test/x/y/", "../z") == "http://a.test/x/z");
    CHECK(resolve_reference("https://a.test/x", "//b.test/w") == "https://b.test/w");
    CHECK(resolve_reference("http://a.test:8080/x/y", "/z") == "http://a.test:8080/z");
}

TEST_CASE("redirect chain: single hop, identity, loop") {
    ts::ScriptedTransport transport;
    FetchPolicy policy;
    policy.retries = 0;

    transport.add("http://t.co/abc", 301, "", {{"Location", "http://example.com/page"}});
    transport.add("http://example.com/page", 200, "landed");
    CHECK(resolve_redirect_chain(transport, "http://t.co/abc", policy) == "http://example.com/page");

    transport.add("http://plain.test/", 200, "no redirect");
    CHECK(resolve_redirect_chain(transport, "http://plain.test/", policy) == "http://plain.test/");

    transport.add("http://loop.test/a", 302, "", {{"Location", "http://loop.test/b"}});
    transport.add("http://loop.test/b", 302, "", {{"Location", "http://loop.test/a"}});
    CHECK_THROWS_AS(resolve_redirect_chain(transport, "http://loop.test/a", policy), Error);
    try {
        resolve_redirect_chain(transport, "http://loop.test/a", policy);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::TooManyRedirects);
    }
}

TEST_CASE("redirect chain: hop cap boundary and relative locations") {
    ts::ScriptedTransport transport;
    FetchPolicy policy;
    policy.retries = 0;
    policy.max_redirect_hops = 3;

    // exactly 3 hops is fine
    transport.add("http://hop.test/0", 301, "", {{"Location", "/1"}});
    transport.add("http://hop.test/1", 301, "", {{"Location", "/2"}});
    transport.add("http://hop.test/2", 301, "", {{"Location", "/3"}});
    transport.add("http://hop.test/3", 200, "done");
    CHECK(resolve_redirect_chain(transport, "http://hop.test/0", policy) == "http://hop.test/3");

    // a 4th hop breaks the cap
    transport.add("http://hop.test/3", 301, "", {{"Location", "/4"}});
    transport.add("http://hop.test/4", 200, "done");
    CHECK_THROWS_AS(resolve_redirect_chain(transport, "http://hop.test/0", policy), Error);

    // terminal status codes are returned regardless of value
    transport.add("http://gone.test/", 404, "gone");
    CHECK(resolve_redirect_chain(transport, "http://gone.test/", policy) == "http://gone.test/");

    // 3xx without a Location header terminates the chain
    transport.add("http://odd.test/", 301, "no location");
    CHECK(resolve_redirect_chain(transport, "http://odd.test/", policy) == "http://odd.test/");
}

TEST_CASE("retries: one network failure is retried, persistent failure gives up") {
    ts::ScriptedTransport transport;
    FetchPolicy policy;
    policy.retries = 1;

    transport.add("http://flaky.test/", 200, "eventually");
    transport.fail("http://flaky.test/", 1);
    CHECK(resolve_redirect_chain(transport, "http://flaky.test/", policy) == "http://flaky.test/");
    CHECK(transport.calls("http://flaky.test/") == 2);

    transport.fail("http://dead.test/", 99);
    CHECK_THROWS_AS(resolve_redirect_chain(transport, "http://dead.test/", policy), Error);
    CHECK(transport.calls("http://dead.test/") == 2); // initial + one retry
}

namespace {

void add_index_and_timemaps(ts::ScriptedTransport& transport, const std::string& base,
                            const std::string& target) {
    transport.add(base + "/timemap/json/" + target, 200, R"([
        {"archive_id": "small", "timemap_uri": "http://small.test/tm"},
        {"archive_id": "big", "timemap_uri": "http://big.test/tm", "memento_compliant": false},
        {"archive_id": "broken", "timemap_uri": "http://broken.test/tm"}
    ])");
    transport.add("http://small.test/tm", 200,
                  ts::make_link_doc(target, {{"http://small.test/web/20000101000000/x", "memento",
                                              "20000101000000"}}));
    transport.add("http://big.test/tm", 200,
                  ts::make_link_doc(target, {{"http://big.test/web/20010101000000/x", "memento",
                                              "20010101000000"},
                                             {"http://big.test/web/20020101000000/x", "memento",
                                              "20020101000000"}}));
    transport.add("http://broken.test/tm", 500, "boom");
}

} // namespace

TEST_CASE("aggregation: per-archive failure becomes a warning, ordering is stable") {
    ts::ScriptedTransport transport;
    FetchPolicy policy;
    policy.retries = 0;
    add_index_and_timemaps(transport, "http://agg.test", "http://example.com");

    auto agg = fetch_aggregated_timemaps(transport, "http://agg.test", "http://example.com", policy);
    REQUIRE(agg.timemaps.size() == 2);
    CHECK(agg.timemaps[0].archive_id == "big");   // lexicographic
    CHECK(agg.timemaps[1].archive_id == "small"); // regardless of index order
    CHECK(agg.total_snapshots() == 3);
    REQUIRE(agg.warnings.size() == 1);
    CHECK(agg.warnings[0].archive_id == "broken");
}

TEST_CASE("aggregation: parallelism does not change the result") {
    ts::ScriptedTransport transport;
    FetchPolicy serial;
    serial.retries = 0;
    serial.max_parallel_fetches = 1;
    add_index_and_timemaps(transport, "http://agg.test", "http://example.com");
    auto one = fetch_aggregated_timemaps(transport, "http://agg.test", "http://example.com", serial);
    CHECK(transport.peak_concurrency() == 1);

    ts::ScriptedTransport transport4;
    FetchPolicy parallel;
    parallel.retries = 0;
    parallel.max_parallel_fetches = 4;
    add_index_and_timemaps(transport4, "http://agg.test", "http://example.com");
    auto four =
        fetch_aggregated_timemaps(transport4, "http://agg.test", "http://example.com", parallel);

    REQUIRE(one.timemaps.size() == four.timemaps.size());
    for (std::size_t i = 0; i < one.timemaps.size(); ++i) {
        CHECK(one.timemaps[i].archive_id == four.timemaps[i].archive_id);
        CHECK(one.timemaps[i].snapshots == four.timemaps[i].snapshots);
    }
}

TEST_CASE("aggregation: parallel fetches stay within the configured bound") {
    ts::ScriptedTransport transport;
    FetchPolicy policy;
    policy.retries = 0;
    policy.max_parallel_fetches = 2;

    std::string index = "[";
    for (int i = 0; i < 8; ++i) {
        if (i) index += ",";
        std::string id = "arc" + std::to_string(i);
        index += R"({"archive_id": ")" + id + R"(", "timemap_uri": "http://)" + id + R"(.test/tm"})";
        transport.add("http://" + id + ".test/tm", 200,
                      ts::make_link_doc("http://example.com",
                                        {{"http://" + id + ".test/web/20000101000000/x", "memento",
                                          "20000101000000"}}));
    }
    index += "]";
    transport.add("http://agg.test/timemap/json/http://example.com", 200, index);

    auto agg = fetch_aggregated_timemaps(transport, "http://agg.test", "http://example.com", policy);
    CHECK(agg.timemaps.size() == 8);
    CHECK(transport.peak_concurrency() <= 2);
}

TEST_CASE("aggregation error cases") {
    ts::ScriptedTransport transport;
    FetchPolicy policy;
    policy.retries = 0;

    // unreachable index
    CHECK_THROWS_AS(fetch_aggregated_timemaps(transport, "http://agg.test", "http://x", policy),
                    Error);

    // empty index
    transport.add("http://agg.test/timemap/json/http://x", 200, "[]");
    try {
        fetch_aggregated_timemaps(transport, "http://agg.test", "http://x", policy);
        FAIL("expected EmptyAggregation");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::EmptyAggregation);
    }

    // all archives failing
    transport.add("http://agg.test/timemap/json/http://y", 200,
                  R"([{"archive_id": "a", "timemap_uri": "http://a.test/tm"}])");
    transport.add("http://a.test/tm", 503, "down");
    try {
        fetch_aggregated_timemaps(transport, "http://agg.test", "http://y", policy);
        FAIL("expected EmptyAggregation");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::EmptyAggregation);
    }

    // duplicate archive ids collapse to the first entry
    transport.add("http://agg.test/timemap/json/http://z", 200, R"([
        {"archive_id": "dup", "timemap_uri": "http://a.test/tm1"},
        {"archive_id": "dup", "timemap_uri": "http://a.test/tm2"}
    ])");
    transport.add("http://a.test/tm1", 200,
                  ts::make_link_doc("http://z", {{"http://a.test/web/20000101000000/z", "memento",
                                                  "20000101000000"}}));
    auto agg = fetch_aggregated_timemaps(transport, "http://agg.test", "http://z", policy);
    CHECK(agg.timemaps.size() == 1);
    CHECK(transport.calls("http://a.test/tm2") == 0);
}

TEST_CASE("probe_memento_status classification") {
    ts::ScriptedTransport transport;
    FetchPolicy policy;
    policy.retries = 1;

    transport.add("http://alive.test/", 200, "ok");
    CHECK(probe_memento_status(transport, "http://alive.test/", policy) == selection::Liveness::Alive);

    transport.add("http://dead.test/", 404, "gone");
    CHECK(probe_memento_status(transport, "http://dead.test/", policy) == selection::Liveness::Dead);

    transport.add("http://moved.test/", 302, "", {{"Location", "http://alive.test/"}});
    CHECK(probe_memento_status(transport, "http://moved.test/", policy) == selection::Liveness::Alive);

    transport.fail("http://timeout.test/", 99); // both attempts fail
    CHECK(probe_memento_status(transport, "http://timeout.test/", policy) ==
          selection::Liveness::Unknown);
    CHECK(transport.calls("http://timeout.test/") == 2);

    transport.add("http://error.test/", 500, "boom");
    CHECK(probe_memento_status(transport, "http://error.test/", policy) ==
          selection::Liveness::Unknown);
}

TEST_CASE("fixture transport round-trips recorded responses") {
    ts::TempDir dir("fixtures");
    HttpResponse response;
    response.status = 200;
    response.headers = {{"Content-Type", "text/plain"}, {"X-Extra", "v"}};
    response.body = "hello\nworld\n";
    FixtureTransport::store(dir.path(), "http://recorded.test/page", response);

    FixtureTransport transport(dir.path());
    auto got = transport.get("http://recorded.test/page", FetchPolicy{});
    CHECK(got.status == 200);
    CHECK(got.body == "hello\nworld\n");
    CHECK(got.header("content-type") == std::string("text/plain"));

    CHECK_THROWS_AS(transport.get("http://unrecorded.test/", FetchPolicy{}), Error);
}

TEST_CASE("live transport speaks real HTTP against a local server") {
    httplib::Server server;
    server.Get("/ok", [](const httplib::Request&, httplib::Response& res) {
        res.set_content("live body", "text/plain");
    });
    server.Get("/jump", [](const httplib::Request&, httplib::Response& res) {
        res.set_redirect("/ok");
    });

    int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread runner([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    LiveTransport transport;
    FetchPolicy policy;
    policy.retries = 0;
    std::string base = "http://127.0.0.1:" + std::to_string(port);

    auto direct = transport.get(base + "/ok", policy);
    CHECK(direct.status == 200);
    CHECK(direct.body == "live body");

    // transports must not auto-follow; the chain resolver does
    auto hop = transport.get(base + "/jump", policy);
    CHECK(hop.is_redirect());
    CHECK(resolve_redirect_chain(transport, base + "/jump", policy) == base + "/ok");

    CHECK_THROWS_AS(transport.get("http://127.0.0.1:1/none", policy), Error);

    server.stop();
    runner.join();
}
