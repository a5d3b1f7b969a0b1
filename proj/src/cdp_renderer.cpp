#include "weblapse/cdp.hpp"

#include "weblapse/digest.hpp"
#include "weblapse/error.hpp"
#include "weblapse/httplib_setup.hpp"
#include "weblapse/websocket.hpp"

#include <json.hpp>

#include <cctype>
#include <chrono>
#include <thread>

namespace weblapse::render {

namespace {

using nlohmann::json;

// /json/new wants the url percent-escaped just enough to survive the query string.
std::string escape_query(const std::string& url) {
    static const char hex[] = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : url) {
        if (std::isalnum(c) || c == '-' || c == '.' || c == '_' || c == '~' || c == '/' || c == ':') {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back('%');
            out.push_back(hex[c >> 4]);
            out.push_back(hex[c & 15]);
        }
    }
    return out;
}

json await_result(net::WebSocketClient& ws, int id, int timeout_s) {
    while (true) {
        auto msg = ws.receive(timeout_s);
        if (!msg) throw Error(ErrorKind::NavigationFailure, "devtools socket closed");
        json doc = json::parse(*msg, nullptr, false);
        if (doc.is_discarded()) continue;
        if (doc.contains("id") && doc["id"] == id) {
            if (doc.contains("error"))
                throw Error(ErrorKind::NavigationFailure,
                            "devtools error: " + doc["error"].dump());
            return doc.value("result", json::object());
        }
        // events (Page.loadEventFired etc.) are ignored; settling is time-based
    }
}

} // namespace

CdpRenderer::CdpRenderer(std::string debug_base, net::FetchPolicy policy)
    : debug_base_(std::move(debug_base)), policy_(policy) {}

Image CdpRenderer::capture(const std::string& uri, int width, int height, int settle_seconds) {
    auto parts = net::split_url(debug_base_);
    httplib::Client browser(parts.host, parts.port);
    browser.set_connection_timeout(policy_.per_request_timeout_s, 0);
    browser.set_read_timeout(policy_.per_request_timeout_s, 0);

    // /json/new is a PUT on current browsers, a GET on older ones
    std::string new_path = "/json/new?" + escape_query(uri);
    auto created = browser.Put(new_path);
    if (!created || created->status == 404 || created->status == 405) created = browser.Get(new_path);
    if (!created)
        throw Error(ErrorKind::NavigationFailure,
                    "cannot reach browser at " + debug_base_ + ": " +
                        httplib::to_string(created.error()));
    if (created->status < 200 || created->status >= 300)
        throw Error(ErrorKind::NavigationFailure,
                    "browser refused new target: HTTP " + std::to_string(created->status));

    json target = json::parse(created->body, nullptr, false);
    if (target.is_discarded() || !target.contains("webSocketDebuggerUrl"))
        throw Error(ErrorKind::NavigationFailure, "unexpected /json/new response");
    std::string ws_url = target["webSocketDebuggerUrl"].get<std::string>();
    std::string target_id = target.value("id", "");

    Image image;
    try {
        net::WebSocketClient ws;
        ws.connect(ws_url, policy_.per_request_timeout_s);

        int id = 0;
        auto call = [&](const std::string& method, json params) {
            json msg{{"id", ++id}, {"method", method}};
            if (!params.is_null()) msg["params"] = std::move(params);
            ws.send_text(msg.dump());
            return await_result(ws, id, policy_.per_request_timeout_s);
        };

        call("Emulation.setDeviceMetricsOverride",
             json{{"width", width}, {"height", height}, {"deviceScaleFactor", 1}, {"mobile", false}});
        call("Page.navigate", json{{"url", uri}});
        std::this_thread::sleep_for(std::chrono::seconds(settle_seconds));
        json shot = call("Page.captureScreenshot", json{{"format", "png"}});

        if (!shot.contains("data"))
            throw Error(ErrorKind::NavigationFailure, "screenshot carried no data");
        auto png = base64_decode(shot["data"].get<std::string>());
        image = decode_png(png.data(), png.size());
        ws.close();
    } catch (const Error&) {
        if (!target_id.empty()) browser.Get("/json/close/" + target_id);
        throw;
    }

    // target cleanup is best effort
    if (!target_id.empty()) browser.Get("/json/close/" + target_id);
    return image;
}

} // namespace weblapse::render
