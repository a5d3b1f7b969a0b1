#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "weblapse/digest.hpp"
#include "weblapse/memento.hpp"
#include "weblapse/pipeline.hpp"
#include "weblapse/request.hpp"
#include "weblapse/selection.hpp"
#include "weblapse/urlnorm.hpp"

namespace py = pybind11;
using namespace weblapse;

namespace {

py::dict snapshot_to_dict(const memento::ArchivedSnapshot& snap) {
    py::dict d;
    d["uri_m"] = snap.uri_m;
    d["datetime"] = format_14digit(snap.capture_datetime);
    d["archive_host"] = snap.archive_host;
    return d;
}

py::dict timemap_to_dict(const memento::TimeMap& tm) {
    py::dict d;
    d["original_uri"] = tm.original_uri;
    d["archive_id"] = tm.archive_id;
    py::list snaps;
    for (const auto& s : tm.snapshots) snaps.append(snapshot_to_dict(s));
    d["snapshots"] = snaps;
    return d;
}

memento::AggregatedTimeMaps agg_from_lists(
    const std::string& original_uri,
    const std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>>&
        archives) {
    memento::AggregatedTimeMaps agg;
    agg.original_uri = original_uri;
    for (const auto& [archive_id, snaps] : archives) {
        memento::TimeMap tm;
        tm.original_uri = original_uri;
        tm.archive_id = archive_id;
        for (const auto& [uri, stamp] : snaps) {
            memento::ArchivedSnapshot s;
            s.uri_m = uri;
            s.capture_datetime = memento::parse_memento_datetime(stamp);
            s.archive_host = memento::host_of_uri(uri);
            tm.snapshots.push_back(std::move(s));
        }
        memento::sort_snapshots(tm.snapshots);
        agg.timemaps.push_back(std::move(tm));
    }
    return agg;
}

py::list plan_to_list(const selection::SelectionPlan& plan) {
    py::list picks;
    for (const auto& p : plan.picks) {
        py::dict d;
        d["key"] = p.key;
        d["uri_m"] = p.snapshot.uri_m;
        d["datetime"] = format_14digit(p.snapshot.capture_datetime);
        d["archive_id"] = p.archive_id;
        d["candidate_index"] = p.candidate_index;
        picks.append(d);
    }
    return picks;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Website timelapses from aggregated web-archive snapshots";

    m.def("canonicalize_url", [](const std::string& url) { return render::canonicalize_url(url); },
          py::arg("url"));
    m.def("url_hash", [](const std::string& url) { return render::url_hash(url); }, py::arg("url"));
    m.def("md5_hex", [](const std::string& data) { return md5_hex(data); }, py::arg("data"));

    m.def("parse_memento_datetime",
          [](const std::string& text) { return format_14digit(memento::parse_memento_datetime(text)); },
          py::arg("text"), "Normalizes an archival datetime to its 14-digit form.");

    m.def("simhash64", [](const std::string& html) { return selection::simhash64(html); },
          py::arg("html"));
    m.def("hamming_distance",
          [](std::uint64_t a, std::uint64_t b) { return selection::hamming_distance(a, b); },
          py::arg("a"), py::arg("b"));

    m.def("complete_partial_date",
          [](const std::string& token, const std::string& role) {
              auto r = role == "end" ? selection::DateRole::End : selection::DateRole::Start;
              return format_civil(selection::complete_partial_date(token, r));
          },
          py::arg("token"), py::arg("role") = "start");

    m.def("parse_timemap_link_format",
          [](const std::string& text, const std::string& archive_id) {
              auto result = memento::parse_timemap_link_format(text, archive_id);
              py::dict d = timemap_to_dict(result.timemap);
              d["warnings"] = result.warnings;
              return d;
          },
          py::arg("text"), py::arg("archive_id") = "archive");

    m.def("serialize_timemap_internal",
          [](const std::vector<std::pair<std::string, std::string>>& snaps) {
              memento::TimeMap tm;
              for (const auto& [uri, stamp] : snaps) {
                  memento::ArchivedSnapshot s;
                  s.uri_m = uri;
                  s.capture_datetime = memento::parse_memento_datetime(stamp);
                  s.archive_host = memento::host_of_uri(uri);
                  tm.snapshots.push_back(std::move(s));
              }
              return memento::serialize_timemap_internal(tm);
          },
          py::arg("snapshots"), "snapshots: list of (uri_m, 14-digit datetime) pairs");

    m.def("parse_timemap_internal",
          [](const std::vector<std::string>& lines) {
              auto tm = memento::parse_timemap_internal(lines);
              return timemap_to_dict(tm);
          },
          py::arg("lines"));

    m.def("parse_request_text",
          [](const std::string& text) {
              auto parsed = request::parse_request_text(text, now_utc());
              py::list entries;
              for (const auto& e : parsed.entries) {
                  py::dict d;
                  d["url"] = e.raw_url;
                  if (e.range.present) {
                      d["start"] = format_civil(e.range.start);
                      d["end"] = format_civil(e.range.end);
                  } else {
                      d["start"] = py::none();
                      d["end"] = py::none();
                  }
                  entries.append(d);
              }
              return entries;
          },
          py::arg("text"));

    m.def("select_per_year",
          [](const std::string& original_uri,
             const std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>>&
                 archives,
             int prior_request_count) {
              auto agg = agg_from_lists(original_uri, archives);
              auto plan = selection::select_per_year(agg, prior_request_count);
              return plan_to_list(plan);
          },
          py::arg("original_uri"), py::arg("archives"), py::arg("prior_request_count") = 0,
          "archives: list of (archive_id, [(uri_m, 14-digit datetime), ...]) pairs");

    m.def("run_offline",
          [](const std::string& config_path, const std::string& request_text,
             const std::string& now_stamp) {
              auto config = cli::load_config(config_path);
              config.offline = true;
              auto env = cli::make_env(config);
              if (!now_stamp.empty()) {
                  UtcSeconds fixed = memento::parse_memento_datetime(now_stamp);
                  env.now = [fixed] { return fixed; };
              }
              auto report = cli::run_pipeline(config, request_text, std::move(env));
              py::list out;
              for (const auto& o : report.outcomes) {
                  py::dict d;
                  d["status"] = o.status == cli::RequestOutcome::Status::Fulfilled ? "fulfilled"
                                : o.status == cli::RequestOutcome::Status::Fresh  ? "fresh"
                                                                                  : "failed";
                  d["url"] = o.canonical_url.empty() ? o.input_url : o.canonical_url;
                  d["artifact_ref"] = o.artifact_ref;
                  d["message"] = o.message;
                  out.append(d);
              }
              return out;
          },
          py::arg("config_path"), py::arg("request_text"), py::arg("now") = "",
          "Fixture-backed end-to-end run; returns one outcome dict per request.");

#ifdef VERSION_INFO
#define STRINGIFY(x) #x
#define MACRO_STRINGIFY(x) STRINGIFY(x)
    m.attr("__version__") = MACRO_STRINGIFY(VERSION_INFO);
#else
    m.attr("__version__") = "dev";
#endif
}
