#include "weblapse/error.hpp"
#include "weblapse/pipeline.hpp"

#include <CLI11.hpp>
#include "weblapse/httplib_setup.hpp"
#include <json.hpp>

#include <fstream>
#include <iostream>

namespace {

using namespace weblapse;

void apply_overrides(cli::Config& config, const std::string& strategy, int threshold, long long seed,
                     bool offline) {
    if (strategy == "per-year") config.strategy = cli::StrategyKind::PerYear;
    else if (strategy == "simhash") config.strategy = cli::StrategyKind::ChangeThreshold;
    else if (!strategy.empty())
        throw Error(ErrorKind::ConfigError, "--strategy must be per-year or simhash");
    if (threshold >= 0) {
        if (threshold > 64) throw Error(ErrorKind::ConfigError, "--threshold must lie in [0,64]");
        config.change_threshold = threshold;
    }
    if (seed >= 0) config.rng_seed = static_cast<std::uint64_t>(seed);
    if (offline) config.offline = true;
}

std::vector<cli::IncomingMessage> read_request_file(const std::filesystem::path& path,
                                                    UtcSeconds now) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::MissingFile, "cannot read request file " + path.string());
    std::vector<cli::IncomingMessage> messages;
    std::string line;
    int ordinal = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        cli::IncomingMessage msg;
        msg.requester_id = "file";
        std::size_t delim = line.find("<>");
        if (delim != std::string::npos) {
            msg.message_id = line.substr(0, delim);
            msg.text = line.substr(delim + 2);
            msg.external = true;
        } else {
            msg.message_id = format_14digit(now) + "-" + std::to_string(++ordinal);
            msg.text = line;
            msg.external = false;
        }
        messages.push_back(std::move(msg));
    }
    return messages;
}

void print_report(const cli::RunReport& report) {
    for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
    for (const auto& o : report.outcomes) {
        const char* tag = o.status == cli::RequestOutcome::Status::Fulfilled ? "fulfilled"
                          : o.status == cli::RequestOutcome::Status::Fresh  ? "fresh"
                                                                            : "failed";
        std::cout << tag << " " << (o.canonical_url.empty() ? o.input_url : o.canonical_url);
        if (!o.artifact_ref.empty()) std::cout << " " << o.artifact_ref;
        if (!o.message.empty()) std::cout << " (" << o.message << ")";
        std::cout << "\n";
    }
    if (report.run_limit_reached) std::cout << "run limit reached; nothing processed\n";
}

int cmd_run(const std::string& config_path, const std::string& request_text,
            const std::string& request_file, bool pending, const std::string& strategy,
            int threshold, long long seed, bool offline, const std::string& now_stamp) {
    cli::Config config = cli::load_config(config_path);
    apply_overrides(config, strategy, threshold, seed, offline);

    cli::PipelineEnv env = cli::make_env(config);
    if (!now_stamp.empty()) {
        UtcSeconds fixed = memento::parse_memento_datetime(now_stamp);
        env.now = [fixed] { return fixed; };
    }

    cli::RunReport report;
    if (pending) {
        report = cli::run_pending(config, std::move(env));
    } else if (!request_file.empty()) {
        auto messages = read_request_file(request_file, env.now ? env.now() : now_utc());
        report = cli::run_pipeline(config, messages, std::move(env));
    } else {
        report = cli::run_pipeline(config, request_text, std::move(env));
    }
    print_report(report);
    return report.exit_code();
}

int cmd_gate(const std::string& config_path, const std::string& url) {
    cli::Config config = cli::load_config(config_path);
    auto store = request::load_store(config.store_dir);

    request::TimelapseRequest candidate;
    candidate.target_uri = render::canonicalize_url(url);
    candidate.nominated_at = now_utc();
    candidate.message_id = "gate-probe";

    auto verdict = request::nomination_gate(candidate, store, config.nomination_differential_days,
                                             config.workdir_hash);
    if (verdict.nominated()) {
        std::cout << "nominate " << candidate.target_uri << "\n";
    } else {
        std::cout << "fresh " << candidate.target_uri << " days_remaining="
                  << verdict.days_remaining << " last=" << verdict.last_artifact_ref << "\n";
    }
    return 0;
}

int cmd_status(const std::string& config_path) {
    cli::Config config = cli::load_config(config_path);
    auto store = request::load_store(config.store_dir);
    std::cout << "cursor: " << (store.cursor.empty() ? "(empty)" : store.cursor) << "\n";
    std::cout << "pending: " << store.pending.size() << "\n";
    std::cout << "fulfilled: " << store.fulfilled.size() << "\n";
    for (const auto& [day, count] : store.run_counts)
        std::cout << "runs " << day << ": " << count << "\n";
    return 0;
}

// Ingestion endpoint: POST / with raw request text nominates URLs and
// answers one verdict per URL.
int cmd_serve(const std::string& config_path, int port) {
    cli::Config config = cli::load_config(config_path);
    request::StoreLock lock(config.store_dir);

    httplib::Server server;
    server.Post("/", [&config](const httplib::Request& req, httplib::Response& res) {
        nlohmann::json out = nlohmann::json::array();
        try {
            auto store = request::load_store(config.store_dir);
            auto parsed = request::parse_request_text(req.body, now_utc());
            int ordinal = 0;
            for (const auto& entry : parsed.entries) {
                request::TimelapseRequest candidate;
                candidate.target_uri = render::canonicalize_url(entry.raw_url);
                candidate.date_range = entry.range;
                candidate.requester_id = "ingest";
                candidate.nominated_at = entry.received_at;
                candidate.message_id = format_14digit(entry.received_at) + "-" + std::to_string(++ordinal);

                auto verdict =
                    request::nomination_gate(candidate, store, config.nomination_differential_days,
                                             config.workdir_hash);
                nlohmann::json item{{"url", candidate.target_uri}};
                if (verdict.nominated()) {
                    store.pending.push_back(candidate);
                    item["verdict"] = "nominate";
                } else {
                    item["verdict"] = "fresh";
                    item["days_remaining"] = verdict.days_remaining;
                    item["last_artifact"] = verdict.last_artifact_ref;
                }
                out.push_back(std::move(item));
            }
            request::save_store(config.store_dir, store);
            res.set_content(out.dump(2), "application/json");
        } catch (const std::exception& e) {
            res.status = 400;
            res.set_content(nlohmann::json{{"error", e.what()}}.dump(), "application/json");
        }
    });

    std::cout << "ingestion endpoint on 127.0.0.1:" << port << "\n";
    if (!server.listen("127.0.0.1", port)) {
        std::cerr << "cannot listen on port " << port << "\n";
        return 2;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Website timelapses from aggregated web-archive snapshots"};
    app.require_subcommand(1);

    std::string config_path;
    std::string request_text;
    std::string request_file;
    std::string strategy;
    std::string now_stamp;
    int threshold = -1;
    long long seed = -1;
    bool offline = false;
    bool pending = false;
    std::string gate_url;
    int port = 8460;

    auto* run = app.add_subcommand("run", "Process requests end to end");
    run->add_option("--config", config_path, "Config file")->required();
    auto* opt_text = run->add_option("--request", request_text, "Raw request text");
    auto* opt_file = run->add_option("--request-file", request_file,
                                     "File of requests, one per line (message_id<>text)");
    auto* opt_pending = run->add_flag("--pending", pending, "Process the pending queue");
    opt_text->excludes(opt_file);
    opt_text->excludes(opt_pending);
    opt_file->excludes(opt_pending);
    run->add_option("--strategy", strategy, "per-year | simhash");
    run->add_option("--threshold", threshold, "SimHash Hamming threshold [0,64]");
    run->add_option("--seed", seed, "RNG seed for soundtrack selection");
    run->add_flag("--offline", offline, "Fixture-backed run (no live network)");
    run->add_option("--now", now_stamp, "Fixed clock, 14-digit UTC timestamp");

    auto* gate = app.add_subcommand("gate", "Print the nomination verdict for a URL");
    gate->add_option("--config", config_path, "Config file")->required();
    gate->add_option("--url", gate_url, "Target URL")->required();

    auto* status = app.add_subcommand("status", "Print cursor, run counts and queue sizes");
    status->add_option("--config", config_path, "Config file")->required();

    auto* serve = app.add_subcommand("serve", "Run the request ingestion endpoint");
    serve->add_option("--config", config_path, "Config file")->required();
    serve->add_option("--port", port, "TCP port (default 8460)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            if (request_text.empty() && request_file.empty() && !pending) {
                std::cerr << "run needs --request, --request-file or --pending\n";
                return 2;
            }
            return cmd_run(config_path, request_text, request_file, pending, strategy, threshold,
                           seed, offline, now_stamp);
        }
        if (gate->parsed()) return cmd_gate(config_path, gate_url);
        if (status->parsed()) return cmd_status(config_path);
        if (serve->parsed()) return cmd_serve(config_path, port);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        switch (e.kind()) {
            case ErrorKind::MissingFile:
            case ErrorKind::ConfigError:
            case ErrorKind::IoFailure:
            case ErrorKind::StoreBusy:
                return 2;
            default:
                return 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
