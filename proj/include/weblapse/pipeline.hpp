#pragma once

#include "weblapse/archive_net.hpp"
#include "weblapse/assemble.hpp"
#include "weblapse/config.hpp"
#include "weblapse/render.hpp"
#include "weblapse/request.hpp"

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace weblapse::cli {

struct RequestOutcome {
    enum class Status { Fulfilled, Fresh, Failed };
    Status status = Status::Failed;
    std::string input_url;
    std::string canonical_url;
    std::string message;
    int days_remaining = 0;
    std::string artifact_ref; // new artifact when fulfilled, prior one when fresh
    std::optional<assemble::TimelapseArtifact> artifact;

    bool ok() const { return status != Status::Failed; }
};

struct RunReport {
    std::vector<RequestOutcome> outcomes;
    std::vector<std::string> warnings;
    bool run_limit_reached = false;

    // 0 when every request was fulfilled or reported fresh, 1 otherwise.
    int exit_code() const;
};

// One inbound request message. External ids participate in cursor tracking;
// synthesized ones (direct CLI text) do not.
struct IncomingMessage {
    std::string message_id;
    std::string requester_id;
    std::string text;
    bool external = false;
};

// Injection points so the whole pipeline runs offline and deterministically.
struct PipelineEnv {
    std::shared_ptr<net::HttpTransport> transport;
    std::shared_ptr<render::Renderer> renderer;
    std::shared_ptr<assemble::KnowledgeClient> knowledge;
    std::function<UtcSeconds()> now = now_utc;
};

// offline: fixture transport + mock renderer + fixture knowledge client;
// online: live transport + devtools renderer + fixture knowledge client.
PipelineEnv make_env(const Config& config);

// ingest -> gate -> aggregate -> filter -> select -> render -> assemble ->
// publish -> mark fulfilled, per nominated URL in sequence. One request's
// failure never aborts the others.
RunReport run_pipeline(const Config& config, const std::vector<IncomingMessage>& messages,
                       PipelineEnv env);
RunReport run_pipeline(const Config& config, const std::string& request_text, PipelineEnv env);

// Processes requests already sitting in the pending queue (e.g. nominated
// through the ingestion endpoint).
RunReport run_pending(const Config& config, PipelineEnv env);

struct PublishedArtifact {
    std::string ref; // gallery entry name: <hash><14-digit fulfilled_at>
    std::filesystem::path source_dir;
};

// Copies artifact directories into the gallery and rewrites index.html with
// one entry per timelapse (manifest, per-year snapshot links, media files).
// Re-publishing a ref replaces its entry. Returns the index path.
std::filesystem::path publish_gallery(const std::vector<PublishedArtifact>& artifacts,
                                      const std::filesystem::path& gallery_dir);

} // namespace weblapse::cli
