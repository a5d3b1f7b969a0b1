#include "weblapse/memento.hpp"

#include "weblapse/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <sstream>

namespace weblapse::memento {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

int month_from_token(std::string_view tok) {
    static const char* names[] = {"jan", "feb", "mar", "apr", "may", "jun",
                                  "jul", "aug", "sep", "oct", "nov", "dec"};
    if (tok.size() != 3) return 0;
    std::string t = lower(tok);
    for (int i = 0; i < 12; ++i) {
        if (t == names[i]) return i + 1;
    }
    return 0;
}

bool parse_int(std::string_view s, int& out) {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && p == s.data() + s.size();
}

UtcSeconds parse_14digit(std::string_view text) {
    int y, mo, d, h, mi, s;
    parse_int(text.substr(0, 4), y);
    parse_int(text.substr(4, 2), mo);
    parse_int(text.substr(6, 2), d);
    parse_int(text.substr(8, 2), h);
    parse_int(text.substr(10, 2), mi);
    parse_int(text.substr(12, 2), s);
    if (!is_valid_civil_date(y, mo, d) || h > 23 || mi > 59 || s > 59)
        throw Error(ErrorKind::UnrecognizedDatetime, "invalid 14-digit timestamp '" + std::string(text) + "'");
    return civil_to_epoch(y, mo, d, h, mi, s);
}

// "Sun, 06 Nov 1994 08:49:37 GMT" (weekday optional, tolerant of extra spaces)
UtcSeconds parse_rfc1123(std::string_view text) {
    std::vector<std::string> toks;
    std::istringstream in{std::string(text)};
    std::string t;
    while (in >> t) toks.push_back(t);

    std::size_t i = 0;
    if (!toks.empty() && !toks[0].empty() && toks[0].back() == ',') i = 1;
    if (toks.size() < i + 5)
        throw Error(ErrorKind::UnrecognizedDatetime, "unrecognized datetime '" + std::string(text) + "'");

    int day = 0, month = 0, year = 0;
    if (!parse_int(toks[i], day)) throw Error(ErrorKind::UnrecognizedDatetime, "bad day in '" + std::string(text) + "'");
    month = month_from_token(toks[i + 1]);
    if (month == 0) throw Error(ErrorKind::UnrecognizedDatetime, "bad month in '" + std::string(text) + "'");
    if (!parse_int(toks[i + 2], year)) throw Error(ErrorKind::UnrecognizedDatetime, "bad year in '" + std::string(text) + "'");

    const std::string& clock = toks[i + 3];
    int h = 0, mi = 0, s = 0;
    if (clock.size() != 8 || clock[2] != ':' || clock[5] != ':' ||
        !parse_int(std::string_view(clock).substr(0, 2), h) ||
        !parse_int(std::string_view(clock).substr(3, 2), mi) ||
        !parse_int(std::string_view(clock).substr(6, 2), s))
        throw Error(ErrorKind::UnrecognizedDatetime, "bad time in '" + std::string(text) + "'");

    std::string zone = lower(toks[i + 4]);
    if (zone != "gmt" && zone != "utc")
        throw Error(ErrorKind::UnrecognizedDatetime, "non-UTC zone in '" + std::string(text) + "'");
    if (!is_valid_civil_date(year, month, day) || h > 23 || mi > 59 || s > 59)
        throw Error(ErrorKind::UnrecognizedDatetime, "impossible date '" + std::string(text) + "'");
    return civil_to_epoch(year, month, day, h, mi, s);
}

struct RawLink {
    std::string target;
    std::vector<std::pair<std::string, std::string>> attrs;

    const std::string* attr(std::string_view name) const {
        for (const auto& [k, v] : attrs) {
            if (k == name) return &v;
        }
        return nullptr;
    }
};

// Splits a link-format document into raw links. Commas inside <...> and
// quoted strings do not split.
std::vector<RawLink> scan_links(std::string_view text) {
    std::vector<RawLink> links;
    std::size_t i = 0;
    const std::size_t n = text.size();

    auto skip_ws = [&] {
        while (i < n && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    };

    skip_ws();
    while (i < n) {
        if (text[i] != '<')
            throw Error(ErrorKind::MalformedLinkFormat, "expected '<' at offset " + std::to_string(i));
        std::size_t close = text.find('>', i + 1);
        if (close == std::string_view::npos)
            throw Error(ErrorKind::MalformedLinkFormat, "unbalanced '<' at offset " + std::to_string(i));
        RawLink link;
        link.target = std::string(trim(text.substr(i + 1, close - i - 1)));
        i = close + 1;

        // attribute list:  ; name = token | "quoted"
        skip_ws();
        while (i < n && text[i] == ';') {
            ++i;
            skip_ws();
            std::size_t name_start = i;
            while (i < n && text[i] != '=' && text[i] != ';' && text[i] != ',') ++i;
            std::string name = lower(trim(text.substr(name_start, i - name_start)));
            std::string value;
            if (i < n && text[i] == '=') {
                ++i;
                skip_ws();
                if (i < n && text[i] == '"') {
                    ++i;
                    std::string v;
                    bool closed = false;
                    while (i < n) {
                        char c = text[i];
                        if (c == '\\' && i + 1 < n) {
                            v.push_back(text[i + 1]);
                            i += 2;
                            continue;
                        }
                        if (c == '"') {
                            closed = true;
                            ++i;
                            break;
                        }
                        v.push_back(c);
                        ++i;
                    }
                    if (!closed)
                        throw Error(ErrorKind::MalformedLinkFormat, "unbalanced quote in attribute '" + name + "'");
                    value = v;
                } else {
                    std::size_t vstart = i;
                    while (i < n && text[i] != ';' && text[i] != ',') ++i;
                    value = std::string(trim(text.substr(vstart, i - vstart)));
                }
            }
            if (!name.empty()) link.attrs.emplace_back(std::move(name), std::move(value));
            skip_ws();
        }
        links.push_back(std::move(link));

        skip_ws();
        if (i < n) {
            if (text[i] != ',')
                throw Error(ErrorKind::MalformedLinkFormat, "expected ',' between links at offset " + std::to_string(i));
            ++i;
            skip_ws();
        }
    }
    return links;
}

bool rel_contains(std::string_view rel, std::string_view word) {
    std::istringstream in{lower(rel)};
    std::string tok;
    while (in >> tok) {
        if (tok == word) return true;
    }
    return false;
}

} // namespace

UtcSeconds parse_memento_datetime(std::string_view text) {
    std::string_view t = trim(text);
    if (looks_like_14digit(t)) return parse_14digit(t);
    if (t.find(':') != std::string_view::npos) return parse_rfc1123(t);
    throw Error(ErrorKind::UnrecognizedDatetime, "unrecognized datetime '" + std::string(text) + "'");
}

std::string host_of_uri(std::string_view uri) {
    std::string u = lower(trim(uri));
    std::size_t scheme_end = u.find("://");
    if (scheme_end == std::string::npos)
        throw Error(ErrorKind::InvalidUrl, "not an absolute URI: '" + std::string(uri) + "'");
    std::string scheme = u.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https")
        throw Error(ErrorKind::InvalidUrl, "unsupported scheme '" + scheme + "'");
    std::size_t host_start = scheme_end + 3;
    std::size_t host_end = u.find_first_of("/?#", host_start);
    std::string authority = u.substr(host_start, host_end == std::string::npos ? std::string::npos
                                                                               : host_end - host_start);
    std::size_t at = authority.rfind('@');
    if (at != std::string::npos) authority = authority.substr(at + 1);
    if (!authority.empty() && authority.front() == '[') {
        std::size_t close = authority.find(']');
        if (close != std::string::npos) return authority.substr(0, close + 1);
    }
    std::size_t colon = authority.find(':');
    if (colon != std::string::npos) authority = authority.substr(0, colon);
    if (authority.empty())
        throw Error(ErrorKind::InvalidUrl, "empty host in '" + std::string(uri) + "'");
    return authority;
}

LinkFormatResult parse_timemap_link_format(std::string_view text, std::string_view archive_id) {
    LinkFormatResult result;
    result.timemap.archive_id = std::string(archive_id);

    auto links = scan_links(text);
    for (const auto& link : links) {
        const std::string* rel = link.attr("rel");
        if (!rel) {
            result.warnings.push_back("link without rel ignored: <" + link.target + ">");
            continue;
        }
        if (rel_contains(*rel, "original")) {
            if (result.timemap.original_uri.empty()) result.timemap.original_uri = link.target;
            continue;
        }
        if (!rel_contains(*rel, "memento")) continue; // self, timegate, license, ...

        const std::string* dt = link.attr("datetime");
        if (!dt) {
            result.warnings.push_back("memento link missing datetime skipped: <" + link.target + ">");
            continue;
        }
        ArchivedSnapshot snap;
        snap.uri_m = link.target;
        try {
            snap.capture_datetime = parse_memento_datetime(*dt);
            snap.archive_host = host_of_uri(link.target);
        } catch (const Error& e) {
            result.warnings.push_back("memento link skipped (<" + link.target + ">): " + e.what());
            continue;
        }
        // plausible capture window: the web exists, and clocks only drift a little
        static const UtcSeconds kEarliest = civil_to_epoch(1990, 1, 1);
        if (snap.capture_datetime < kEarliest || snap.capture_datetime > now_utc() + 86400) {
            result.warnings.push_back("memento link skipped (<" + link.target +
                                      ">): capture datetime out of range");
            continue;
        }
        result.timemap.snapshots.push_back(std::move(snap));
    }

    if (result.timemap.snapshots.empty())
        throw Error(ErrorKind::MalformedLinkFormat,
                    "document for archive '" + std::string(archive_id) + "' contains no parseable mementos");

    sort_snapshots(result.timemap.snapshots);
    return result;
}

AggregatorIndex parse_aggregator_index(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::MalformedIndex, e.what());
    }

    const nlohmann::json* list = nullptr;
    if (doc.is_array()) {
        list = &doc;
    } else if (doc.is_object() && doc.contains("timemap_index") && doc["timemap_index"].is_array()) {
        list = &doc["timemap_index"];
    } else {
        throw Error(ErrorKind::MalformedIndex, "expected an entry array or a timemap_index field");
    }

    AggregatorIndex index;
    std::size_t pos = 0;
    for (const auto& item : *list) {
        ++pos;
        if (!item.is_object()) {
            index.warnings.push_back("entry " + std::to_string(pos) + " is not an object, skipped");
            continue;
        }
        AggregatorIndexEntry entry;
        if (item.contains("timemap_uri") && item["timemap_uri"].is_string())
            entry.timemap_uri = item["timemap_uri"].get<std::string>();
        if (entry.timemap_uri.empty()) {
            index.warnings.push_back("entry " + std::to_string(pos) + " has no timemap_uri, skipped");
            continue;
        }
        if (item.contains("archive_id") && item["archive_id"].is_string())
            entry.archive_id = item["archive_id"].get<std::string>();
        if (entry.archive_id.empty()) {
            try {
                entry.archive_id = host_of_uri(entry.timemap_uri);
            } catch (const Error&) {
                entry.archive_id = "archive-" + std::to_string(pos);
            }
        }
        entry.memento_compliant = Compliance::Unknown;
        if (item.contains("memento_compliant")) {
            const auto& mc = item["memento_compliant"];
            if (mc.is_boolean()) {
                entry.memento_compliant = mc.get<bool>() ? Compliance::Yes : Compliance::No;
            } else if (mc.is_string()) {
                std::string v = lower(mc.get<std::string>());
                if (v == "yes" || v == "true") entry.memento_compliant = Compliance::Yes;
                else if (v == "no" || v == "false") entry.memento_compliant = Compliance::No;
            }
        }
        index.entries.push_back(std::move(entry));
    }
    return index;
}

static constexpr std::string_view kInternalDelimiter = "*+*+*";

std::vector<std::string> serialize_timemap_internal(const TimeMap& tm) {
    std::vector<std::string> lines;
    lines.reserve(tm.snapshots.size());
    for (const auto& snap : tm.snapshots) {
        lines.push_back(snap.uri_m + std::string(kInternalDelimiter) + format_14digit(snap.capture_datetime));
    }
    return lines;
}

TimeMap parse_timemap_internal(const std::vector<std::string>& lines,
                               std::string_view original_uri,
                               std::string_view archive_id) {
    TimeMap tm;
    tm.original_uri = std::string(original_uri);
    tm.archive_id = std::string(archive_id);
    for (const auto& line : lines) {
        std::size_t pos = line.find(kInternalDelimiter);
        if (pos == std::string::npos)
            throw Error(ErrorKind::MalformedRecord, "missing delimiter in '" + line + "'");
        ArchivedSnapshot snap;
        snap.uri_m = line.substr(0, pos);
        std::string stamp = line.substr(pos + kInternalDelimiter.size());
        if (!looks_like_14digit(stamp))
            throw Error(ErrorKind::MalformedRecord, "bad datetime field in '" + line + "'");
        snap.capture_datetime = parse_memento_datetime(stamp);
        snap.archive_host = host_of_uri(snap.uri_m);
        tm.snapshots.push_back(std::move(snap));
    }
    sort_snapshots(tm.snapshots);
    return tm;
}

void sort_snapshots(std::vector<ArchivedSnapshot>& snapshots) {
    std::stable_sort(snapshots.begin(), snapshots.end(), [](const auto& a, const auto& b) {
        if (a.capture_datetime != b.capture_datetime) return a.capture_datetime < b.capture_datetime;
        return a.uri_m < b.uri_m;
    });
}

} // namespace weblapse::memento
