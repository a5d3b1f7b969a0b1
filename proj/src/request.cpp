#include "weblapse/request.hpp"

#include "weblapse/error.hpp"
#include "weblapse/urlnorm.hpp"

#include <sys/file.h>
#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace weblapse::request {

namespace {

constexpr std::string_view kFieldDelimiter = "<>";

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::vector<std::string> split_fields(std::string_view line) {
    std::vector<std::string> fields;
    std::size_t pos = 0;
    while (true) {
        std::size_t next = line.find(kFieldDelimiter, pos);
        if (next == std::string_view::npos) {
            fields.emplace_back(line.substr(pos));
            break;
        }
        fields.emplace_back(line.substr(pos, next - pos));
        pos = next + kFieldDelimiter.size();
    }
    return fields;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

bool all_digits(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
        return std::isdigit(c) != 0;
    });
}

std::string safe_canonical(const std::string& url) {
    try {
        return render::canonicalize_url(url);
    } catch (const Error&) {
        return url;
    }
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + tmp.string());
        out << content;
        if (!out.good()) throw Error(ErrorKind::IoFailure, "short write to " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error(ErrorKind::IoFailure, "rename failed for " + path.string() + ": " + ec.message());
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::vector<std::string> lines;
    std::ifstream in(path, std::ios::binary);
    if (!in) return lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) lines.push_back(line);
    }
    return lines;
}

} // namespace

int compare_message_ids(std::string_view a, std::string_view b) {
    auto strip = [](std::string_view s) {
        while (s.size() > 1 && s.front() == '0') s.remove_prefix(1);
        return s;
    };
    if (all_digits(a) && all_digits(b)) {
        std::string_view sa = strip(a), sb = strip(b);
        if (sa.size() != sb.size()) return sa.size() < sb.size() ? -1 : 1;
        int c = sa.compare(sb);
        return c < 0 ? -1 : (c > 0 ? 1 : 0);
    }
    int c = a.compare(b);
    return c < 0 ? -1 : (c > 0 ? 1 : 0);
}

ParsedRequestText parse_request_text(std::string_view text, UtcSeconds received_at) {
    std::string haystack = lower(std::string(text));
    std::size_t trigger = haystack.find(kTriggerToken);
    if (trigger == std::string::npos)
        throw Error(ErrorKind::NoTrigger, "request text lacks the trigger token");

    std::string remainder(trim(text.substr(trigger + kTriggerToken.size())));

    ParsedRequestText result;
    DateRange range = DateRange::absent();

    // Trailing clause: <partial-date> (to|-) <partial-date>
    {
        std::vector<std::string> tokens;
        std::istringstream in(remainder);
        std::string tok;
        while (in >> tok) tokens.push_back(tok);
        if (tokens.size() >= 3) {
            const std::string& sep = tokens[tokens.size() - 2];
            std::string sep_l = lower(sep);
            const std::string& start_tok = tokens[tokens.size() - 3];
            const std::string& end_tok = tokens.back();
            if ((sep_l == "to" || sep == "-" || sep == "–") &&
                selection::looks_like_partial_date(start_tok) &&
                selection::looks_like_partial_date(end_tok)) {
                try {
                    CivilDate start = selection::complete_partial_date(start_tok, selection::DateRole::Start);
                    CivilDate end = selection::complete_partial_date(end_tok, selection::DateRole::End);
                    if (start > end) {
                        result.warnings.push_back("date range '" + start_tok + " " + sep + " " + end_tok +
                                                  "' has start after end; ignoring range");
                    } else {
                        range = DateRange::of(start, end);
                    }
                } catch (const Error& e) {
                    result.warnings.push_back(std::string("invalid date range ignored: ") + e.what());
                }
                // clause consumed either way
                tokens.resize(tokens.size() - 3);
                remainder.clear();
                for (std::size_t i = 0; i < tokens.size(); ++i) {
                    if (i) remainder += ' ';
                    remainder += tokens[i];
                }
            }
        }
    }

    for (std::size_t pos = 0; pos <= remainder.size();) {
        std::size_t comma = remainder.find(',', pos);
        std::string chunk = comma == std::string::npos ? remainder.substr(pos)
                                                       : remainder.substr(pos, comma - pos);
        pos = comma == std::string::npos ? remainder.size() + 1 : comma + 1;
        std::istringstream in(chunk);
        std::string url;
        if (!(in >> url)) continue;
        result.entries.push_back(RequestEntry{url, range, received_at});
    }

    if (result.entries.empty())
        throw Error(ErrorKind::NoUrls, "no URLs follow the trigger token");
    return result;
}

GateVerdict nomination_gate(const TimelapseRequest& candidate, const RequestStore& store,
                            int differential_days, render::HashAlgo hash) {
    std::string canonical = safe_canonical(candidate.target_uri);

    const FulfilledRequest* latest = nullptr;
    for (const auto& entry : store.fulfilled) {
        if (safe_canonical(entry.request.target_uri) != canonical) continue;
        if (!latest || entry.fulfilled_at > latest->fulfilled_at) latest = &entry;
    }
    if (!latest) return GateVerdict{GateVerdict::Kind::Nominate, 0, ""};

    auto gap = days_between(civil_date_of(latest->fulfilled_at), civil_date_of(candidate.nominated_at));
    if (gap > differential_days) return GateVerdict{GateVerdict::Kind::Nominate, 0, ""};

    GateVerdict verdict;
    verdict.kind = GateVerdict::Kind::Fresh;
    verdict.days_remaining = static_cast<int>(differential_days - gap);
    verdict.last_artifact_ref = latest->artifact_ref(render::url_hash(canonical, hash));
    return verdict;
}

int prior_request_count(const std::string& canonical_url, const RequestStore& store) {
    int count = 0;
    for (const auto& r : store.pending) {
        if (safe_canonical(r.target_uri) == canonical_url) ++count;
    }
    for (const auto& f : store.fulfilled) {
        if (safe_canonical(f.request.target_uri) == canonical_url) ++count;
    }
    return count;
}

void advance_cursor(RequestStore& store, const std::vector<std::string>& seen) {
    for (const auto& id : seen) {
        if (id.empty()) continue;
        if (store.cursor.empty() || compare_message_ids(id, store.cursor) > 0) store.cursor = id;
    }
}

bool message_seen(const RequestStore& store, std::string_view message_id) {
    if (store.cursor.empty()) return false;
    return compare_message_ids(message_id, store.cursor) <= 0;
}

RunCountVerdict run_count_gate(RequestStore& store, const std::string& day, int limit) {
    int current = 0;
    if (auto it = store.run_counts.find(day); it != store.run_counts.end()) current = it->second;
    if (current + 1 > limit) return RunCountVerdict{false, current};
    store.run_counts[day] = current + 1;
    return RunCountVerdict{true, current + 1};
}

std::filesystem::path mark_fulfilled(RequestStore& store, const TimelapseRequest& request,
                                     const std::filesystem::path& workdir, UtcSeconds fulfilled_at) {
    auto it = std::find_if(store.pending.begin(), store.pending.end(), [&](const auto& r) {
        return r.message_id == request.message_id && r.target_uri == request.target_uri;
    });
    if (it == store.pending.end())
        throw Error(ErrorKind::StoreError,
                    "request " + request.message_id + " for " + request.target_uri + " is not pending");
    if (fulfilled_at < it->nominated_at)
        throw Error(ErrorKind::StoreError, "fulfillment cannot predate the nomination");
    if (!std::filesystem::is_directory(workdir))
        throw Error(ErrorKind::WorkdirMissing, workdir.string() + " does not exist");

    std::filesystem::path renamed = workdir;
    renamed += format_14digit(fulfilled_at);
    std::error_code ec;
    std::filesystem::rename(workdir, renamed, ec);
    if (ec)
        throw Error(ErrorKind::IoFailure,
                    "cannot rename " + workdir.string() + " -> " + renamed.string() + ": " + ec.message());

    FulfilledRequest entry{*it, fulfilled_at};
    store.pending.erase(it);
    store.fulfilled.push_back(std::move(entry));
    return renamed;
}

namespace {

std::string serialize_range(const DateRange& range, bool start) {
    if (!range.present) return "0";
    return format_civil(start ? range.start : range.end);
}

DateRange parse_range_fields(std::string_view start, std::string_view end) {
    if (start == "0" || end == "0") return DateRange::absent();
    CivilDate s = selection::complete_partial_date(start, selection::DateRole::Start);
    CivilDate e = selection::complete_partial_date(end, selection::DateRole::End);
    if (s > e) return DateRange::absent();
    return DateRange::of(s, e);
}

} // namespace

std::string serialize_pending_line(const TimelapseRequest& r) {
    std::string out;
    out += r.target_uri;
    out += kFieldDelimiter;
    out += r.requester_id;
    out += kFieldDelimiter;
    out += format_14digit(r.nominated_at);
    out += kFieldDelimiter;
    out += r.message_id;
    out += kFieldDelimiter;
    out += serialize_range(r.date_range, true);
    out += kFieldDelimiter;
    out += serialize_range(r.date_range, false);
    return out;
}

TimelapseRequest parse_pending_line(std::string_view line) {
    auto fields = split_fields(line);
    if (fields.size() != 6)
        throw Error(ErrorKind::MalformedLine, "expected 6 fields, got " +
                                                  std::to_string(fields.size()) + " in '" + std::string(line) + "'");
    TimelapseRequest r;
    r.target_uri = fields[0];
    r.requester_id = fields[1];
    if (!looks_like_14digit(fields[2]))
        throw Error(ErrorKind::MalformedLine, "bad datetime in '" + std::string(line) + "'");
    r.nominated_at = memento::parse_memento_datetime(fields[2]);
    r.message_id = fields[3];
    if (r.target_uri.empty() || r.message_id.empty())
        throw Error(ErrorKind::MalformedLine, "empty URL or message id in '" + std::string(line) + "'");
    try {
        r.date_range = parse_range_fields(fields[4], fields[5]);
    } catch (const Error&) {
        throw Error(ErrorKind::MalformedLine, "bad date range in '" + std::string(line) + "'");
    }
    return r;
}

std::string serialize_fulfilled_line(const FulfilledRequest& entry) {
    return serialize_pending_line(entry.request) + std::string(kFieldDelimiter) +
           format_14digit(entry.fulfilled_at);
}

FulfilledRequest parse_fulfilled_line(std::string_view line) {
    std::size_t cut = line.rfind(kFieldDelimiter);
    if (cut == std::string_view::npos)
        throw Error(ErrorKind::MalformedLine, "missing fields in '" + std::string(line) + "'");
    std::string_view stamp = line.substr(cut + kFieldDelimiter.size());
    if (!looks_like_14digit(stamp))
        throw Error(ErrorKind::MalformedLine, "bad fulfilled datetime in '" + std::string(line) + "'");
    FulfilledRequest entry;
    entry.request = parse_pending_line(line.substr(0, cut));
    entry.fulfilled_at = memento::parse_memento_datetime(stamp);
    return entry;
}

RequestStore load_store(const std::filesystem::path& dir) {
    RequestStore store;

    for (const auto& line : read_lines(dir / "requests_pending.txt")) {
        try {
            store.pending.push_back(parse_pending_line(line));
        } catch (const Error& e) {
            store.warnings.push_back(std::string("pending: ") + e.what());
        }
    }
    for (const auto& line : read_lines(dir / "requests_fulfilled.txt")) {
        try {
            store.fulfilled.push_back(parse_fulfilled_line(line));
        } catch (const Error& e) {
            store.warnings.push_back(std::string("fulfilled: ") + e.what());
        }
    }
    {
        std::ifstream in(dir / "cursor.txt");
        if (in) {
            std::string line;
            std::getline(in, line);
            store.cursor = std::string(trim(line));
        }
    }
    for (const auto& line : read_lines(dir / "run_counts.txt")) {
        auto fields = split_fields(line);
        if (fields.size() != 2 || fields[0].size() != 8 || !all_digits(fields[0]) || !all_digits(fields[1])) {
            store.warnings.push_back("run_counts: malformed line '" + line + "'");
            continue;
        }
        try {
            store.run_counts[fields[0]] = std::stoi(fields[1]);
        } catch (...) {
            store.warnings.push_back("run_counts: count out of range in '" + line + "'");
        }
    }
    return store;
}

void save_store(const std::filesystem::path& dir, const RequestStore& store) {
    std::filesystem::create_directories(dir);

    std::string pending;
    for (const auto& r : store.pending) pending += serialize_pending_line(r) + "\n";
    atomic_write(dir / "requests_pending.txt", pending);

    std::string fulfilled;
    for (const auto& f : store.fulfilled) fulfilled += serialize_fulfilled_line(f) + "\n";
    atomic_write(dir / "requests_fulfilled.txt", fulfilled);

    atomic_write(dir / "cursor.txt", store.cursor + "\n");

    std::string counts;
    for (const auto& [day, count] : store.run_counts)
        counts += day + std::string(kFieldDelimiter) + std::to_string(count) + "\n";
    atomic_write(dir / "run_counts.txt", counts);
}

StoreLock::StoreLock(const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::filesystem::path lock_path = dir / "lock";
    fd_ = ::open(lock_path.c_str(), O_CREAT | O_RDWR, 0644);
    if (fd_ < 0) throw Error(ErrorKind::IoFailure, "cannot open " + lock_path.string());
    if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
        ::close(fd_);
        fd_ = -1;
        throw Error(ErrorKind::StoreBusy, "another process holds " + lock_path.string());
    }
}

StoreLock::~StoreLock() {
    if (fd_ >= 0) {
        ::flock(fd_, LOCK_UN);
        ::close(fd_);
    }
}

} // namespace weblapse::request
