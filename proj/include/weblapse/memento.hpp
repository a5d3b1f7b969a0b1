#pragma once

#include "weblapse/time.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace weblapse::memento {

// One archived capture of a page: the archive-side URI (URI-M), when it was
// taken, and which archive host serves it.
struct ArchivedSnapshot {
    std::string uri_m;
    UtcSeconds capture_datetime = 0;
    std::string archive_host;

    auto operator<=>(const ArchivedSnapshot&) const = default;
};

// All known snapshots of one original URL (URI-R) at a single archive,
// ascending by capture datetime (ties broken by uri_m).
struct TimeMap {
    std::string original_uri;
    std::string archive_id;
    std::vector<ArchivedSnapshot> snapshots;

    std::size_t memento_count() const { return snapshots.size(); }
};

enum class Compliance { Yes, No, Unknown };

struct AggregatorIndexEntry {
    std::string archive_id;
    std::string timemap_uri;
    Compliance memento_compliant = Compliance::Unknown;
};

struct AggregatorIndex {
    std::vector<AggregatorIndexEntry> entries;
    std::vector<std::string> warnings;
};

struct Warning {
    std::string archive_id;
    std::string message;
};

struct AggregatedTimeMaps {
    std::string original_uri;
    std::vector<TimeMap> timemaps;
    std::vector<Warning> warnings;

    std::size_t total_snapshots() const {
        std::size_t n = 0;
        for (const auto& tm : timemaps) n += tm.snapshots.size();
        return n;
    }
};

struct LinkFormatResult {
    TimeMap timemap;
    std::vector<std::string> warnings;
};

// Accepts an RFC-1123 date ("Sun, 06 Nov 1994 08:49:37 GMT") or a 14-digit
// archival timestamp ("19941106084937"). Throws UnrecognizedDatetime.
UtcSeconds parse_memento_datetime(std::string_view text);

// Host component of an absolute http(s) URI, lowercased. Throws InvalidUrl.
std::string host_of_uri(std::string_view uri);

// Link-format TimeMap document -> TimeMap. Keeps every link whose rel set
// contains "memento"; "original" populates original_uri; "self"/"timegate"
// links are ignored. Entries lacking a parseable datetime are skipped with a
// warning; zero parsed snapshots is fatal. Snapshots come back sorted
// ascending by (capture_datetime, uri_m).
LinkFormatResult parse_timemap_link_format(std::string_view text, std::string_view archive_id);

// Aggregator index document (JSON). Every listed entry is returned no matter
// what memento_compliant says; entries without a timemap_uri are skipped with
// a warning. Throws MalformedIndex when the document does not parse at all.
AggregatorIndex parse_aggregator_index(std::string_view text);

// Legacy one-line-per-snapshot form: `<uri_m>*+*+*<14-digit datetime>`.
std::vector<std::string> serialize_timemap_internal(const TimeMap& tm);
TimeMap parse_timemap_internal(const std::vector<std::string>& lines,
                               std::string_view original_uri = "",
                               std::string_view archive_id = "");

void sort_snapshots(std::vector<ArchivedSnapshot>& snapshots);

} // namespace weblapse::memento
