#pragma once

#include "weblapse/http.hpp"
#include "weblapse/memento.hpp"
#include "weblapse/selection.hpp"

#include <string>

namespace weblapse::net {

// Follows 3xx responses up to policy.max_redirect_hops and returns the last
// URI reached; any non-3xx terminal status returns that URI no matter the
// code. Throws TooManyRedirects / NetworkFailure (after retries).
std::string resolve_redirect_chain(HttpTransport& transport, const std::string& url,
                                   const FetchPolicy& policy);

// GET with redirect following; returns the terminal response.
HttpResponse fetch_following_redirects(HttpTransport& transport, const std::string& url,
                                       const FetchPolicy& policy);

// Body of the terminal 2xx response. Throws FetchFailure otherwise.
std::string fetch_body(HttpTransport& transport, const std::string& url,
                       const FetchPolicy& policy);

// Aggregator index URL for a target: <base>/timemap/json/<target-url>
std::string aggregator_index_url(const std::string& aggregator_base, const std::string& target);

// Fetches the aggregator index for `target`, then every listed TimeMap with
// at most policy.max_parallel_fetches in flight. Per-archive failures become
// warnings; the result is ordered by archive_id so output is independent of
// arrival order. Throws AggregatorUnreachable / EmptyAggregation (and
// MalformedIndex when the index body is unusable).
memento::AggregatedTimeMaps fetch_aggregated_timemaps(HttpTransport& transport,
                                                      const std::string& aggregator_base,
                                                      const std::string& target,
                                                      const FetchPolicy& policy);

// Terminal 404 => Dead; anything 2xx (directly or via redirects) => Alive;
// everything else, including network failure after retries, => Unknown.
selection::Liveness probe_memento_status(HttpTransport& transport, const std::string& uri_m,
                                         const FetchPolicy& policy);

} // namespace weblapse::net
