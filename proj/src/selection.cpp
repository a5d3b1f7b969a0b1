#include "weblapse/selection.hpp"

#include "weblapse/digest.hpp"
#include "weblapse/error.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <map>
#include <set>
#include <sstream>

namespace weblapse::selection {

namespace {

bool parse_int_field(std::string_view s, int& out) {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && p == s.data() + s.size();
}

bool all_digits(std::string_view s) {
    if (s.empty()) return false;
    return std::all_of(s.begin(), s.end(),
                       [](unsigned char c) { return std::isdigit(c) != 0; });
}

} // namespace

bool looks_like_partial_date(std::string_view token) {
    switch (token.size()) {
        case 4: return all_digits(token);
        case 7: return all_digits(token.substr(0, 4)) && token[4] == '-' && all_digits(token.substr(5, 2));
        case 10:
            return all_digits(token.substr(0, 4)) && token[4] == '-' && all_digits(token.substr(5, 2)) &&
                   token[7] == '-' && all_digits(token.substr(8, 2));
        default: return false;
    }
}

CivilDate complete_partial_date(std::string_view token, DateRole role) {
    if (!looks_like_partial_date(token))
        throw Error(ErrorKind::InvalidDate, "not a YYYY / YYYY-MM / YYYY-MM-DD date: '" + std::string(token) + "'");

    int year = 0, month = 0, day = 0;
    parse_int_field(token.substr(0, 4), year);
    bool has_month = token.size() >= 7;
    bool has_day = token.size() == 10;
    if (has_month) parse_int_field(token.substr(5, 2), month);
    if (has_day) parse_int_field(token.substr(8, 2), day);

    if (!has_month) month = role == DateRole::Start ? 1 : 12;
    if (month < 1 || month > 12)
        throw Error(ErrorKind::InvalidDate, "month out of range in '" + std::string(token) + "'");
    if (!has_day) day = role == DateRole::Start ? 1 : last_day_of_month(year, month);
    if (!is_valid_civil_date(year, month, day))
        throw Error(ErrorKind::InvalidDate, "impossible date '" + std::string(token) + "'");
    return CivilDate{year, month, day};
}

AggregatedTimeMaps apply_date_range(const AggregatedTimeMaps& agg, const DateRange& range) {
    if (!range.present) return agg;
    AggregatedTimeMaps out;
    out.original_uri = agg.original_uri;
    out.warnings = agg.warnings;
    for (const auto& tm : agg.timemaps) {
        memento::TimeMap filtered;
        filtered.original_uri = tm.original_uri;
        filtered.archive_id = tm.archive_id;
        for (const auto& snap : tm.snapshots) {
            CivilDate d = civil_date_of(snap.capture_datetime);
            if (d >= range.start && d <= range.end) filtered.snapshots.push_back(snap);
        }
        out.timemaps.push_back(std::move(filtered));
    }
    return out;
}

int capture_year(const ArchivedSnapshot& snap) {
    return civil_date_of(snap.capture_datetime).year;
}

std::vector<YearCandidates> build_year_candidates(const AggregatedTimeMaps& agg) {
    // Smaller archives claim years first: ascending memento count, archive_id ties.
    std::vector<const memento::TimeMap*> order;
    order.reserve(agg.timemaps.size());
    for (const auto& tm : agg.timemaps) order.push_back(&tm);
    std::stable_sort(order.begin(), order.end(), [](const auto* a, const auto* b) {
        if (a->memento_count() != b->memento_count()) return a->memento_count() < b->memento_count();
        return a->archive_id < b->archive_id;
    });

    std::map<int, YearCandidates> by_year;
    std::map<int, std::set<std::string>> seen;
    for (const auto* tm : order) {
        for (const auto& snap : tm->snapshots) {
            int year = capture_year(snap);
            if (!seen[year].insert(snap.uri_m).second) continue;
            auto& bucket = by_year[year];
            bucket.year = year;
            bucket.candidates.push_back(snap);
            bucket.archive_ids.push_back(tm->archive_id);
        }
    }

    std::vector<YearCandidates> out;
    out.reserve(by_year.size());
    for (auto& [year, bucket] : by_year) out.push_back(std::move(bucket));
    return out;
}

SelectionPlan select_per_year(const AggregatedTimeMaps& agg, int prior_request_count,
                              const LivenessProbe& probe) {
    if (prior_request_count < 0)
        throw Error(ErrorKind::EmptySelection, "prior_request_count must be non-negative");
    const int n = prior_request_count + 1;

    SelectionPlan plan;
    plan.target_uri = agg.original_uri;
    plan.strategy = Strategy::per_year(n);

    for (const auto& year : build_year_candidates(agg)) {
        const auto count = static_cast<int>(year.candidates.size());
        if (count == 0) continue;
        const int base = (n - 1) % count;
        bool picked = false;
        for (int attempt = 0; attempt < count; ++attempt) {
            const int idx = (base + attempt) % count;
            if (probe(year.candidates[idx].uri_m) == Liveness::Dead) continue;
            plan.picks.push_back(Pick{year.year, year.candidates[idx], year.archive_ids[idx], idx});
            picked = true;
            break;
        }
        if (!picked) plan.skipped.push_back(SkippedYear{year.year, "all candidates returned 404"});
    }

    std::sort(plan.picks.begin(), plan.picks.end(), [](const Pick& a, const Pick& b) {
        return a.snapshot.capture_datetime < b.snapshot.capture_datetime;
    });

    if (plan.picks.empty())
        throw Error(ErrorKind::EmptySelection, "no year yielded a live snapshot");
    return plan;
}

std::uint64_t simhash64(std::string_view html) {
    // strip tags
    std::string text;
    text.reserve(html.size());
    bool in_tag = false;
    for (char c : html) {
        if (c == '<') {
            in_tag = true;
            text.push_back(' ');
            continue;
        }
        if (c == '>') {
            in_tag = false;
            continue;
        }
        if (!in_tag) text.push_back(c);
    }

    // lowercase + split on non-alphanumeric, count frequencies
    std::map<std::string, std::uint64_t> freq;
    std::string token;
    auto flush = [&] {
        if (!token.empty()) {
            ++freq[token];
            token.clear();
        }
    };
    for (char c : text) {
        unsigned char u = static_cast<unsigned char>(c);
        if (std::isalnum(u)) {
            token.push_back(static_cast<char>(std::tolower(u)));
        } else {
            flush();
        }
    }
    flush();

    if (freq.empty()) return 0;

    std::int64_t column[64] = {0};
    for (const auto& [tok, weight] : freq) {
        std::uint64_t h = fnv1a64(tok);
        for (int b = 0; b < 64; ++b) {
            if (h & (1ULL << b))
                column[b] += static_cast<std::int64_t>(weight);
            else
                column[b] -= static_cast<std::int64_t>(weight);
        }
    }
    std::uint64_t fingerprint = 0;
    for (int b = 0; b < 64; ++b) {
        if (column[b] > 0) fingerprint |= 1ULL << b;
    }
    return fingerprint;
}

int hamming_distance(std::uint64_t a, std::uint64_t b) {
    return std::popcount(a ^ b);
}

std::vector<std::pair<ArchivedSnapshot, std::string>> merge_snapshots(const AggregatedTimeMaps& agg) {
    std::vector<std::pair<ArchivedSnapshot, std::string>> merged;
    for (const auto& tm : agg.timemaps) {
        for (const auto& snap : tm.snapshots) merged.emplace_back(snap, tm.archive_id);
    }
    std::stable_sort(merged.begin(), merged.end(), [](const auto& a, const auto& b) {
        if (a.first.capture_datetime != b.first.capture_datetime)
            return a.first.capture_datetime < b.first.capture_datetime;
        return a.first.uri_m < b.first.uri_m;
    });
    std::set<std::string> seen;
    std::vector<std::pair<ArchivedSnapshot, std::string>> out;
    out.reserve(merged.size());
    for (auto& item : merged) {
        if (seen.insert(item.first.uri_m).second) out.push_back(std::move(item));
    }
    return out;
}

SelectionPlan select_by_change(const AggregatedTimeMaps& agg, int threshold,
                               const HtmlFetch& fetch_html) {
    if (threshold < 0 || threshold > 64)
        throw Error(ErrorKind::ConfigError, "threshold must lie in [0,64]");

    SelectionPlan plan;
    plan.target_uri = agg.original_uri;
    plan.strategy = Strategy::change_threshold(threshold);

    auto merged = merge_snapshots(agg);
    bool have_anchor = false;
    std::uint64_t last_kept = 0;
    for (std::size_t pos = 0; pos < merged.size(); ++pos) {
        const auto& [snap, archive_id] = merged[pos];
        std::string html;
        try {
            html = fetch_html(snap.uri_m);
        } catch (const std::exception& e) {
            plan.skipped.push_back(SkippedYear{capture_year(snap), std::string("fetch failed: ") + e.what()});
            continue;
        }
        std::uint64_t fp = simhash64(html);
        if (!have_anchor || hamming_distance(fp, last_kept) > threshold) {
            plan.picks.push_back(Pick{static_cast<int>(pos), snap, archive_id, static_cast<int>(pos)});
            last_kept = fp;
            have_anchor = true;
        }
    }

    if (plan.picks.empty())
        throw Error(ErrorKind::EmptySelection, "no snapshot could be fetched");
    return plan;
}

std::string serialize_plan(const SelectionPlan& plan) {
    std::ostringstream out;
    out << "manifest-version 1\n";
    out << "target " << plan.target_uri << "\n";
    if (plan.strategy.kind == Strategy::Kind::PerYear)
        out << "strategy per-year n " << plan.strategy.n << "\n";
    else
        out << "strategy change-threshold t " << plan.strategy.threshold << "\n";
    for (const auto& pick : plan.picks) {
        out << "pick " << pick.key << " " << pick.snapshot.uri_m << " "
            << format_14digit(pick.snapshot.capture_datetime) << " " << pick.archive_id << " "
            << pick.candidate_index << "\n";
    }
    for (const auto& skip : plan.skipped) {
        out << "skip " << skip.year << " " << skip.reason << "\n";
    }
    return out.str();
}

} // namespace weblapse::selection
