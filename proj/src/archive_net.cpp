#include "weblapse/archive_net.hpp"

#include "weblapse/error.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <set>
#include <thread>

namespace weblapse::net {

namespace {

HttpResponse get_with_retries(HttpTransport& transport, const std::string& url,
                              const FetchPolicy& policy) {
    int attempts = policy.retries + 1;
    for (int i = 0; i < attempts; ++i) {
        try {
            return transport.get(url, policy);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::NetworkFailure || i + 1 == attempts) throw;
        }
    }
    throw Error(ErrorKind::NetworkFailure, "unreachable: " + url);
}

struct RedirectResult {
    std::string final_url;
    HttpResponse response;
};

RedirectResult follow_redirects(HttpTransport& transport, const std::string& url,
                                const FetchPolicy& policy) {
    std::string current = url;
    HttpResponse response = get_with_retries(transport, current, policy);
    int hops = 0;
    while (response.is_redirect()) {
        auto location = response.header("Location");
        if (!location || location->empty()) break; // terminal: 3xx without a target
        if (++hops > policy.max_redirect_hops)
            throw Error(ErrorKind::TooManyRedirects,
                        "gave up after " + std::to_string(policy.max_redirect_hops) + " hops from " + url);
        current = resolve_reference(current, *location);
        response = get_with_retries(transport, current, policy);
    }
    return RedirectResult{current, std::move(response)};
}

} // namespace

std::string resolve_redirect_chain(HttpTransport& transport, const std::string& url,
                                   const FetchPolicy& policy) {
    return follow_redirects(transport, url, policy).final_url;
}

HttpResponse fetch_following_redirects(HttpTransport& transport, const std::string& url,
                                       const FetchPolicy& policy) {
    return follow_redirects(transport, url, policy).response;
}

std::string fetch_body(HttpTransport& transport, const std::string& url,
                       const FetchPolicy& policy) {
    HttpResponse response;
    try {
        response = fetch_following_redirects(transport, url, policy);
    } catch (const Error& e) {
        throw Error(ErrorKind::FetchFailure, std::string(e.what()));
    }
    if (!response.is_success())
        throw Error(ErrorKind::FetchFailure,
                    url + " answered HTTP " + std::to_string(response.status));
    return response.body;
}

std::string aggregator_index_url(const std::string& aggregator_base, const std::string& target) {
    std::string base = aggregator_base;
    while (!base.empty() && base.back() == '/') base.pop_back();
    return base + "/timemap/json/" + target;
}

memento::AggregatedTimeMaps fetch_aggregated_timemaps(HttpTransport& transport,
                                                      const std::string& aggregator_base,
                                                      const std::string& target,
                                                      const FetchPolicy& policy) {
    HttpResponse index_response;
    const std::string index_url = aggregator_index_url(aggregator_base, target);
    try {
        index_response = get_with_retries(transport, index_url, policy);
    } catch (const Error& e) {
        throw Error(ErrorKind::AggregatorUnreachable, std::string(e.what()));
    }
    if (!index_response.is_success())
        throw Error(ErrorKind::AggregatorUnreachable,
                    index_url + " answered HTTP " + std::to_string(index_response.status));

    memento::AggregatorIndex index = memento::parse_aggregator_index(index_response.body);

    memento::AggregatedTimeMaps agg;
    agg.original_uri = target;
    for (const auto& w : index.warnings) agg.warnings.push_back({"aggregator", w});

    // One entry per archive_id; duplicates are noise in the index.
    std::vector<memento::AggregatorIndexEntry> entries;
    std::set<std::string> seen_ids;
    for (const auto& entry : index.entries) {
        if (!seen_ids.insert(entry.archive_id).second) {
            agg.warnings.push_back({entry.archive_id, "duplicate archive_id in index, extra entry ignored"});
            continue;
        }
        entries.push_back(entry);
    }
    if (entries.empty())
        throw Error(ErrorKind::EmptyAggregation, "aggregator index lists no archives for " + target);

    struct Slot {
        bool ok = false;
        memento::TimeMap timemap;
        std::vector<std::string> warnings;
        std::string failure;
    };
    std::vector<Slot> slots(entries.size());

    const int workers =
        std::max(1, std::min<int>(policy.max_parallel_fetches, static_cast<int>(entries.size())));
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        while (true) {
            std::size_t i = next.fetch_add(1);
            if (i >= entries.size()) return;
            const auto& entry = entries[i];
            Slot& slot = slots[i];
            try {
                HttpResponse res = fetch_following_redirects(transport, entry.timemap_uri, policy);
                if (!res.is_success()) {
                    slot.failure = "HTTP " + std::to_string(res.status) + " from " + entry.timemap_uri;
                    continue;
                }
                auto parsed = memento::parse_timemap_link_format(res.body, entry.archive_id);
                if (parsed.timemap.original_uri.empty()) parsed.timemap.original_uri = target;
                slot.timemap = std::move(parsed.timemap);
                slot.warnings = std::move(parsed.warnings);
                slot.ok = true;
            } catch (const std::exception& e) {
                slot.failure = e.what();
            }
        }
    };

    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int i = 0; i < workers; ++i) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }

    for (std::size_t i = 0; i < entries.size(); ++i) {
        Slot& slot = slots[i];
        if (!slot.ok) {
            agg.warnings.push_back({entries[i].archive_id, slot.failure});
            continue;
        }
        for (auto& w : slot.warnings) agg.warnings.push_back({entries[i].archive_id, std::move(w)});
        agg.timemaps.push_back(std::move(slot.timemap));
    }

    std::sort(agg.timemaps.begin(), agg.timemaps.end(),
              [](const auto& a, const auto& b) { return a.archive_id < b.archive_id; });

    if (agg.timemaps.empty())
        throw Error(ErrorKind::EmptyAggregation, "no TimeMap could be fetched for " + target);
    return agg;
}

selection::Liveness probe_memento_status(HttpTransport& transport, const std::string& uri_m,
                                         const FetchPolicy& policy) {
    try {
        HttpResponse response = fetch_following_redirects(transport, uri_m, policy);
        if (response.status == 404) return selection::Liveness::Dead;
        if (response.is_success()) return selection::Liveness::Alive;
        return selection::Liveness::Unknown;
    } catch (const std::exception&) {
        return selection::Liveness::Unknown;
    }
}

} // namespace weblapse::net
