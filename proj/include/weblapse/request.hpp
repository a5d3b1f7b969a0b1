#pragma once

#include "weblapse/selection.hpp"
#include "weblapse/time.hpp"
#include "weblapse/urlnorm.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace weblapse::request {

using selection::DateRange;

inline constexpr std::string_view kTriggerToken = "#whatdiditlooklike";

struct TimelapseRequest {
    std::string target_uri; // post-expansion, canonicalized
    DateRange date_range;
    std::string requester_id;
    UtcSeconds nominated_at = 0;
    std::string message_id;
};

struct FulfilledRequest {
    TimelapseRequest request;
    UtcSeconds fulfilled_at = 0;

    // The fulfilled workdir/gallery name: <url-hash><14-digit fulfilled_at>.
    std::string artifact_ref(std::string_view url_hash) const {
        return std::string(url_hash) + format_14digit(fulfilled_at);
    }
};

struct RequestStore {
    std::vector<TimelapseRequest> pending;
    std::vector<FulfilledRequest> fulfilled;
    std::string cursor; // last-seen message_id, empty = everything eligible
    std::map<std::string, int> run_counts; // YYYYMMDD -> count
    std::vector<std::string> warnings; // non-fatal load notes
};

// Numeric ids compare as integers (Twitter-style snowflakes), everything
// else lexicographically. Returns <0, 0, >0.
int compare_message_ids(std::string_view a, std::string_view b);

struct RequestEntry {
    std::string raw_url;
    DateRange range;
    UtcSeconds received_at = 0;
};

struct ParsedRequestText {
    std::vector<RequestEntry> entries;
    std::vector<std::string> warnings;
};

// Grammar: `#whatdiditlooklike url[, url ...] [START to END]`. A trailing
// date-range clause applies to every URL; a missing or invalid clause means
// no filtering (the legacy 0 - 0 sentinel). Throws NoTrigger / NoUrls.
ParsedRequestText parse_request_text(std::string_view text, UtcSeconds received_at);

struct GateVerdict {
    enum class Kind { Nominate, Fresh } kind = Kind::Nominate;
    int days_remaining = 0;
    std::string last_artifact_ref;

    bool nominated() const { return kind == Kind::Nominate; }
};

// Freshness gate: the most recent fulfilled request for the same
// canonicalized URL blocks re-nomination until strictly more than
// `differential_days` whole UTC days have passed. `hash` names the digest
// used for artifact refs (must match the workdir naming).
GateVerdict nomination_gate(const TimelapseRequest& candidate, const RequestStore& store,
                            int differential_days,
                            render::HashAlgo hash = render::HashAlgo::Md5);

// How many times this URL has been requested before: pending + fulfilled
// entries with the same canonical target.
int prior_request_count(const std::string& canonical_url, const RequestStore& store);

// cursor = max(cursor, max(seen)); never moves backwards.
void advance_cursor(RequestStore& store, const std::vector<std::string>& seen);

bool message_seen(const RequestStore& store, std::string_view message_id);

struct RunCountVerdict {
    bool proceed = false;
    int count = 0;
};

// Increments the day's run count unless that would exceed `limit`.
RunCountVerdict run_count_gate(RequestStore& store, const std::string& day, int limit);

// Moves a pending request (matched by message_id) to fulfilled and renames
// `workdir` from <hash> to <hash><14-digit fulfilled_at>. Throws
// WorkdirMissing / StoreError; the store is untouched on failure.
std::filesystem::path mark_fulfilled(RequestStore& store, const TimelapseRequest& request,
                                     const std::filesystem::path& workdir, UtcSeconds fulfilled_at);

// Legacy `<>`-delimited line formats.
std::string serialize_pending_line(const TimelapseRequest& request);
TimelapseRequest parse_pending_line(std::string_view line);
std::string serialize_fulfilled_line(const FulfilledRequest& entry);
FulfilledRequest parse_fulfilled_line(std::string_view line);

// Store directory: requests_pending.txt, requests_fulfilled.txt, cursor.txt,
// run_counts.txt. Loads tolerate malformed lines (skip + warn); saves are
// atomic (write temp, rename).
RequestStore load_store(const std::filesystem::path& dir);
void save_store(const std::filesystem::path& dir, const RequestStore& store);

// Advisory single-writer lock on a store directory (flock on <dir>/lock).
class StoreLock {
public:
    explicit StoreLock(const std::filesystem::path& dir); // throws StoreBusy
    ~StoreLock();
    StoreLock(const StoreLock&) = delete;
    StoreLock& operator=(const StoreLock&) = delete;

private:
    int fd_ = -1;
};

} // namespace weblapse::request
