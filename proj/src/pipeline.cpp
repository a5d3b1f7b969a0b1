#include "weblapse/pipeline.hpp"

#include "weblapse/cdp.hpp"
#include "weblapse/digest.hpp"
#include "weblapse/error.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

namespace weblapse::cli {

namespace {

constexpr const char* kDefaultAggregatorBase = "http://aggregator.local";

struct RequestContext {
    const Config& config;
    PipelineEnv& env;
    request::RequestStore& store;
    RunReport& report;
};

std::uint64_t effective_seed(const Config& config, const std::string& canonical_url) {
    std::uint64_t base = config.rng_seed ? *config.rng_seed : std::random_device{}();
    return base ^ fnv1a64(canonical_url);
}

selection::SelectionPlan make_plan(RequestContext& ctx, const memento::AggregatedTimeMaps& agg,
                                   int prior_count) {
    if (ctx.config.strategy == StrategyKind::PerYear) {
        auto probe = [&](const std::string& uri) {
            return net::probe_memento_status(*ctx.env.transport, uri, ctx.config.fetch);
        };
        return selection::select_per_year(agg, prior_count, probe);
    }
    auto fetch = [&](const std::string& uri) {
        return net::fetch_body(*ctx.env.transport, uri, ctx.config.fetch);
    };
    return selection::select_by_change(agg, ctx.config.change_threshold, fetch);
}

// Expansion failures fall back to the URL as given: the live site being down
// does not mean the archives are empty.
std::string expand_and_canonicalize(RequestContext& ctx, const std::string& raw_url) {
    std::string canonical = render::canonicalize_url(raw_url);
    try {
        std::string expanded =
            net::resolve_redirect_chain(*ctx.env.transport, canonical, ctx.config.fetch);
        return render::canonicalize_url(expanded);
    } catch (const Error& e) {
        ctx.report.warnings.push_back("expansion of " + raw_url + " failed (" + e.what() +
                                      "); using the URL as given");
        return canonical;
    }
}

// The candidate must already sit in the pending queue. Runs aggregation
// through publication and moves it to fulfilled.
RequestOutcome fulfill_candidate(RequestContext& ctx, const request::TimelapseRequest& candidate) {
    const std::string& canonical = candidate.target_uri;
    RequestOutcome outcome;
    outcome.input_url = canonical;
    outcome.canonical_url = canonical;

    // the candidate itself is pending, so "past requests" excludes it
    const int prior = request::prior_request_count(canonical, ctx.store) - 1;

    const std::string aggregator = ctx.config.memento_aggregator.empty()
                                       ? kDefaultAggregatorBase
                                       : ctx.config.memento_aggregator;
    auto agg = net::fetch_aggregated_timemaps(*ctx.env.transport, aggregator, canonical,
                                              ctx.config.fetch);
    for (const auto& w : agg.warnings)
        ctx.report.warnings.push_back(w.archive_id + ": " + w.message);

    auto filtered = selection::apply_date_range(agg, candidate.date_range);
    auto plan = make_plan(ctx, filtered, std::max(0, prior));

    render::Workdir workdir(ctx.config.workdir_root,
                            render::url_hash(canonical, ctx.config.workdir_hash));
    workdir.prepare();

    // render every pick; failures repair the plan instead of aborting
    std::vector<render::Image> frame_images;
    std::vector<std::pair<int, std::string>> frame_files;
    std::vector<selection::Pick> rendered_picks;
    for (const auto& pick : plan.picks) {
        try {
            render::Frame frame = render::capture_frame(*ctx.env.renderer, pick.snapshot, workdir);
            render::annotate_year(frame);
            render::annotate_watermarks(frame);
            auto path = workdir.frame_path(frame.year, pick.key);
            render::write_png(path, frame.image);
            frame_images.push_back(std::move(frame.image));
            frame_files.emplace_back(pick.key, path.filename().string());
            rendered_picks.push_back(pick);
        } catch (const Error& e) {
            plan.skipped.push_back({selection::capture_year(pick.snapshot),
                                    std::string("render failed: ") + e.what()});
        }
    }
    plan.picks = std::move(rendered_picks);
    if (plan.picks.empty())
        throw Error(ErrorKind::NoFrames, "no frame could be rendered for " + canonical);

    assemble::TimelapseArtifact artifact;
    artifact.frame_count = static_cast<int>(frame_images.size());
    artifact.seed = effective_seed(ctx.config, canonical);

    artifact.gif_path = workdir.path() / "timelapse.gif";
    assemble::write_gif(artifact.gif_path, frame_images);

    const double total_duration_s = (1.0 + frame_images.size()) * 4.0;
    artifact.total_duration_s = total_duration_s;

    // soundtrack is optional: no library, or nothing long enough, means silent
    std::optional<assemble::AudioClip> clip;
    if (!ctx.config.soundtrack_manifest.empty()) {
        try {
            assemble::SoundtrackLibrary library;
            library.tracks = assemble::load_track_manifest(ctx.config.soundtrack_manifest);
            library.categories = assemble::load_category_rules(ctx.config.category_map);

            std::string category = assemble::categorize_url(canonical, *ctx.env.knowledge,
                                                            library.categories, &ctx.report.warnings);
            auto choice =
                assemble::select_soundtrack(category, library, total_duration_s, artifact.seed);
            clip = assemble::trim_with_fade(assemble::read_wav(choice.path), choice.start_offset_s,
                                            total_duration_s);
            artifact.soundtrack = choice;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::NoEligibleTrack) throw;
            ctx.report.warnings.push_back(std::string("proceeding silent: ") + e.what());
        }
    }

    auto title = render::make_title_slide(canonical, candidate.date_range);
    artifact.video_path = workdir.path() / "timelapse.mp4";
    assemble::encode_video(artifact.video_path, title, frame_images, clip);

    artifact.manifest_path = workdir.path() / "manifest.txt";
    {
        std::ofstream out(artifact.manifest_path, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + artifact.manifest_path.string());
        out << assemble::serialize_artifact_manifest(plan, frame_files, artifact.soundtrack,
                                                     artifact.seed);
    }

    const UtcSeconds fulfilled_at = ctx.env.now();
    const std::string ref = workdir.url_hash() + format_14digit(fulfilled_at);
    publish_gallery({{ref, workdir.path()}}, ctx.config.gallery_dir);

    auto renamed = request::mark_fulfilled(ctx.store, candidate, workdir.path(), fulfilled_at);
    request::save_store(ctx.config.store_dir, ctx.store);

    artifact.gif_path = renamed / "timelapse.gif";
    artifact.video_path = renamed / "timelapse.mp4";
    artifact.manifest_path = renamed / "manifest.txt";

    outcome.status = RequestOutcome::Status::Fulfilled;
    outcome.artifact_ref = ref;
    outcome.artifact = std::move(artifact);
    outcome.message = "fulfilled with " + std::to_string(frame_images.size()) + " frame(s)";
    return outcome;
}

RequestOutcome process_entry(RequestContext& ctx, const request::RequestEntry& entry,
                             const std::string& requester_id, const std::string& message_id) {
    RequestOutcome outcome;
    outcome.input_url = entry.raw_url;

    std::string canonical = expand_and_canonicalize(ctx, entry.raw_url);
    outcome.canonical_url = canonical;

    request::TimelapseRequest candidate;
    candidate.target_uri = canonical;
    candidate.date_range = entry.range;
    candidate.requester_id = requester_id;
    candidate.nominated_at = entry.received_at;
    candidate.message_id = message_id;

    auto verdict =
        request::nomination_gate(candidate, ctx.store, ctx.config.nomination_differential_days,
                                 ctx.config.workdir_hash);
    if (!verdict.nominated()) {
        outcome.status = RequestOutcome::Status::Fresh;
        outcome.days_remaining = verdict.days_remaining;
        outcome.artifact_ref = verdict.last_artifact_ref;
        outcome.message = "fulfilled recently; resubmit in " +
                          std::to_string(verdict.days_remaining) + " day(s)";
        return outcome;
    }

    ctx.store.pending.push_back(candidate);
    request::save_store(ctx.config.store_dir, ctx.store);
    return fulfill_candidate(ctx, candidate);
}

bool open_run(const Config& config, PipelineEnv& env, request::RequestStore& store,
              RunReport& report) {
    for (const auto& w : store.warnings) report.warnings.push_back(w);

    const std::string today = format_day8(civil_date_of(env.now()));
    auto run_verdict = request::run_count_gate(store, today, config.daily_run_limit);
    if (!run_verdict.proceed) {
        report.run_limit_reached = true;
        report.warnings.push_back("daily run limit (" + std::to_string(config.daily_run_limit) +
                                  ") reached for " + today);
        return false;
    }
    request::save_store(config.store_dir, store);
    return true;
}

} // namespace

int RunReport::exit_code() const {
    for (const auto& o : outcomes) {
        if (!o.ok()) return 1;
    }
    return 0;
}

PipelineEnv make_env(const Config& config) {
    PipelineEnv env;
    if (config.offline) {
        env.transport = std::make_shared<net::FixtureTransport>(config.fixtures_dir);
        env.renderer = std::make_shared<render::MockRenderer>();
    } else {
        env.transport = std::make_shared<net::LiveTransport>();
        env.renderer = std::make_shared<render::CdpRenderer>(config.browser_debug_base, config.fetch);
    }
    env.knowledge = std::make_shared<assemble::FixtureKnowledgeClient>(config.knowledge_dir);
    return env;
}

RunReport run_pipeline(const Config& config, const std::vector<IncomingMessage>& messages,
                       PipelineEnv env) {
    RunReport report;
    for (const auto& w : config.warnings) report.warnings.push_back(w);

    request::StoreLock lock(config.store_dir);
    request::RequestStore store = request::load_store(config.store_dir);
    if (!open_run(config, env, store, report)) return report;

    RequestContext ctx{config, env, store, report};
    std::vector<std::string> external_ids;
    for (const auto& msg : messages) {
        if (msg.external) {
            if (request::message_seen(store, msg.message_id)) {
                report.warnings.push_back("message " + msg.message_id + " at or before cursor, skipped");
                continue;
            }
            external_ids.push_back(msg.message_id);
        }

        request::ParsedRequestText parsed;
        try {
            parsed = request::parse_request_text(msg.text, env.now());
        } catch (const Error& e) {
            RequestOutcome bad;
            bad.status = RequestOutcome::Status::Failed;
            bad.input_url = msg.text.substr(0, 64);
            bad.message = e.what();
            report.outcomes.push_back(std::move(bad));
            continue;
        }
        for (const auto& w : parsed.warnings) report.warnings.push_back(w);

        for (const auto& entry : parsed.entries) {
            try {
                report.outcomes.push_back(
                    process_entry(ctx, entry, msg.requester_id, msg.message_id));
            } catch (const std::exception& e) {
                RequestOutcome failed;
                failed.status = RequestOutcome::Status::Failed;
                failed.input_url = entry.raw_url;
                failed.message = e.what();
                report.outcomes.push_back(std::move(failed));
            }
        }
    }

    request::advance_cursor(store, external_ids);
    request::save_store(config.store_dir, store);
    return report;
}

RunReport run_pipeline(const Config& config, const std::string& request_text, PipelineEnv env) {
    IncomingMessage msg;
    msg.message_id = format_14digit(env.now());
    msg.requester_id = "cli";
    msg.text = request_text;
    msg.external = false;
    return run_pipeline(config, std::vector<IncomingMessage>{msg}, std::move(env));
}

RunReport run_pending(const Config& config, PipelineEnv env) {
    RunReport report;
    for (const auto& w : config.warnings) report.warnings.push_back(w);

    request::StoreLock lock(config.store_dir);
    request::RequestStore store = request::load_store(config.store_dir);
    if (!open_run(config, env, store, report)) return report;

    RequestContext ctx{config, env, store, report};
    const std::vector<request::TimelapseRequest> queued = store.pending;
    for (const auto& candidate : queued) {
        try {
            report.outcomes.push_back(fulfill_candidate(ctx, candidate));
        } catch (const std::exception& e) {
            RequestOutcome failed;
            failed.status = RequestOutcome::Status::Failed;
            failed.input_url = candidate.target_uri;
            failed.canonical_url = candidate.target_uri;
            failed.message = e.what();
            report.outcomes.push_back(std::move(failed));
        }
    }
    request::save_store(config.store_dir, store);
    return report;
}

namespace {

std::string html_escape(const std::string& text) {
    std::string out;
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

void rebuild_gallery_index(const std::filesystem::path& gallery_dir) {
    std::vector<std::filesystem::path> entries;
    for (const auto& item : std::filesystem::directory_iterator(gallery_dir)) {
        if (item.is_directory()) entries.push_back(item.path());
    }
    std::sort(entries.begin(), entries.end());

    std::string html = "<!doctype html>\n<html><head><meta charset=\"utf-8\">"
                       "<title>Website timelapse gallery</title></head>\n<body>\n"
                       "<h1>Website timelapse gallery</h1>\n";
    for (const auto& dir : entries) {
        const std::string name = dir.filename().string();
        html += "<section>\n<h2>" + html_escape(name) + "</h2>\n<ul>\n";
        html += "<li><a href=\"" + name + "/timelapse.gif\">GIF</a></li>\n";
        html += "<li><a href=\"" + name + "/timelapse.mp4\">video</a></li>\n";
        html += "<li><a href=\"" + name + "/manifest.txt\">manifest</a></li>\n";
        html += "</ul>\n";

        std::ifstream manifest(dir / "manifest.txt");
        if (manifest) {
            html += "<p>";
            std::string line;
            while (std::getline(manifest, line)) {
                if (line.rfind("pick ", 0) != 0) continue;
                std::istringstream fields(line.substr(5));
                std::string key, uri;
                fields >> key >> uri;
                html += "<a href=\"" + html_escape(uri) + "\">" + html_escape(key) + "</a> ";
            }
            html += "</p>\n";
        }
        html += "</section>\n";
    }
    html += "</body></html>\n";

    std::ofstream out(gallery_dir / "index.html", std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoFailure, "cannot write gallery index");
    out << html;
}

} // namespace

std::filesystem::path publish_gallery(const std::vector<PublishedArtifact>& artifacts,
                                      const std::filesystem::path& gallery_dir) {
    std::error_code ec;
    std::filesystem::create_directories(gallery_dir, ec);
    if (ec) throw Error(ErrorKind::IoFailure, "cannot create gallery dir: " + ec.message());

    for (const auto& artifact : artifacts) {
        std::filesystem::path dest = gallery_dir / artifact.ref;
        std::filesystem::remove_all(dest, ec);
        std::filesystem::create_directories(dest);
        std::filesystem::copy(artifact.source_dir, dest,
                              std::filesystem::copy_options::recursive |
                                  std::filesystem::copy_options::overwrite_existing,
                              ec);
        if (ec)
            throw Error(ErrorKind::IoFailure,
                        "cannot copy " + artifact.source_dir.string() + " into gallery: " + ec.message());
    }
    rebuild_gallery_index(gallery_dir);
    return gallery_dir / "index.html";
}

} // namespace weblapse::cli
