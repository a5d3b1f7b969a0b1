#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace weblapse::net {

// Minimal RFC 6455 client over a plain TCP socket: text/binary messages,
// ping/pong, close, fragmentation on receive. Enough to drive a browser's
// local remote-debugging endpoint; no TLS, no extensions.
class WebSocketClient {
public:
    WebSocketClient() = default;
    ~WebSocketClient();
    WebSocketClient(const WebSocketClient&) = delete;
    WebSocketClient& operator=(const WebSocketClient&) = delete;

    // ws://host:port/path — performs the HTTP upgrade. Throws NetworkFailure.
    void connect(const std::string& url, int timeout_s);

    void send_text(const std::string& payload);

    // Next complete text/binary message, handling control frames internally.
    // Returns nullopt on clean close. Throws NetworkFailure / RenderTimeout.
    std::optional<std::string> receive(int timeout_s);

    void close();
    bool connected() const { return fd_ >= 0; }

private:
    void send_frame(std::uint8_t opcode, const std::string& payload);
    void read_exact(std::uint8_t* buf, std::size_t len, int timeout_s);

    int fd_ = -1;
};

} // namespace weblapse::net
