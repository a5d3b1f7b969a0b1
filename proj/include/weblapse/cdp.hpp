#pragma once

#include "weblapse/http.hpp"
#include "weblapse/render.hpp"

#include <string>

namespace weblapse::render {

// Drives a headless Chromium-family browser through its remote-debugging
// endpoint: a new target is opened via the HTTP /json interface, then
// navigation and Page.captureScreenshot run over the DevTools WebSocket.
class CdpRenderer : public Renderer {
public:
    // debug_base: e.g. "http://127.0.0.1:9222"
    explicit CdpRenderer(std::string debug_base, net::FetchPolicy policy = {});

    Image capture(const std::string& uri, int width, int height, int settle_seconds) override;

private:
    std::string debug_base_;
    net::FetchPolicy policy_;
};

} // namespace weblapse::render
