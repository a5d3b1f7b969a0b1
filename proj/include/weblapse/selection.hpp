#pragma once

#include "weblapse/memento.hpp"
#include "weblapse/time.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace weblapse::selection {

using memento::AggregatedTimeMaps;
using memento::ArchivedSnapshot;

// Inclusive civil-date window. A default-constructed range filters nothing
// (the legacy "0 - 0" sentinel).
struct DateRange {
    bool present = false;
    CivilDate start;
    CivilDate end;

    static DateRange absent() { return DateRange{}; }
    static DateRange of(CivilDate s, CivilDate e) { return DateRange{true, s, e}; }
};

enum class DateRole { Start, End };

// Completes a partial ISO date (YYYY, YYYY-MM, YYYY-MM-DD). Start bounds
// fill with the first month/day of the period, end bounds with the last.
// Throws InvalidDate.
CivilDate complete_partial_date(std::string_view token, DateRole role);

bool looks_like_partial_date(std::string_view token);

// Keeps only snapshots captured on or between the range bounds. Archive
// structure and intra-archive order are preserved; an absent range is the
// identity.
AggregatedTimeMaps apply_date_range(const AggregatedTimeMaps& agg, const DateRange& range);

enum class Liveness { Alive, Dead, Unknown };

using LivenessProbe = std::function<Liveness(const std::string& uri_m)>;
using HtmlFetch = std::function<std::string(const std::string& uri_m)>;

inline Liveness assume_alive(const std::string&) { return Liveness::Alive; }

struct YearCandidates {
    int year = 0;
    std::vector<ArchivedSnapshot> candidates;
    std::vector<std::string> archive_ids; // provenance, parallel to candidates
};

struct Strategy {
    enum class Kind { PerYear, ChangeThreshold } kind = Kind::PerYear;
    int n = 1;          // PerYear: request ordinal (prior_request_count + 1)
    int threshold = 0;  // ChangeThreshold: Hamming-distance cutoff in bits

    static Strategy per_year(int n) { return Strategy{Kind::PerYear, n, 0}; }
    static Strategy change_threshold(int t) { return Strategy{Kind::ChangeThreshold, 1, t}; }
};

struct Pick {
    int key = 0; // capture year (PerYear) or merged-sequence position (ChangeThreshold)
    ArchivedSnapshot snapshot;
    std::string archive_id;
    int candidate_index = 0;
};

struct SkippedYear {
    int year = 0;
    std::string reason;
};

struct SelectionPlan {
    std::string target_uri;
    Strategy strategy;
    std::vector<Pick> picks;
    std::vector<SkippedYear> skipped;
};

// Candidate lists per year: TimeMaps are taken ascending by memento count
// (ties by archive_id) and their in-year snapshots concatenated in that
// order, dropping exact uri_m duplicates. Keyed ascending by year.
std::vector<YearCandidates> build_year_candidates(const AggregatedTimeMaps& agg);

// One snapshot per year. N = prior_request_count + 1; the chosen index is
// (N-1) mod candidate_count, so a single-candidate year yields the same
// snapshot for every N. Candidates probing Dead are skipped cyclically; a
// year with all candidates dead lands in `skipped`. Throws EmptySelection
// when no year yields a pick.
SelectionPlan select_per_year(const AggregatedTimeMaps& agg, int prior_request_count,
                              const LivenessProbe& probe = assume_alive);

// 64-bit SimHash over HTML content. Tokenization: tags stripped, ASCII
// lowercased, split on non-alphanumeric bytes; features weighted by token
// frequency; per-token hash is FNV-1a 64. A bit-column sum of exactly zero
// produces a 0 bit, so the empty document maps to fingerprint 0.
std::uint64_t simhash64(std::string_view html);

// popcount(a ^ b)
int hamming_distance(std::uint64_t a, std::uint64_t b);

// Greedy change-significance walk over the merged, datetime-ascending,
// uri_m-deduplicated snapshot sequence: the first fetchable snapshot is
// kept, and each later one is kept iff the Hamming distance between its
// SimHash and the last kept one's exceeds the threshold. Fetch failures
// skip the snapshot with a note in `skipped`.
SelectionPlan select_by_change(const AggregatedTimeMaps& agg, int threshold,
                               const HtmlFetch& fetch_html);

// Snapshots of all archives merged ascending by (datetime, uri_m), exact
// uri_m duplicates removed keeping the first occurrence. Pairs each snapshot
// with its archive_id.
std::vector<std::pair<ArchivedSnapshot, std::string>> merge_snapshots(const AggregatedTimeMaps& agg);

int capture_year(const ArchivedSnapshot& snap);

// Plan manifest, one record per line. Deterministic byte-for-byte.
std::string serialize_plan(const SelectionPlan& plan);

} // namespace weblapse::selection
