#include "weblapse/websocket.hpp"

#include "weblapse/digest.hpp"
#include "weblapse/error.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>
#include <random>
#include <sstream>

namespace weblapse::net {

namespace {

constexpr char kWsGuid[] = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11";

struct WsUrl {
    std::string host;
    int port = 80;
    std::string path = "/";
};

WsUrl parse_ws_url(const std::string& url) {
    if (url.rfind("ws://", 0) != 0)
        throw Error(ErrorKind::NetworkFailure, "only ws:// endpoints are supported: " + url);
    WsUrl out;
    std::string rest = url.substr(5);
    std::size_t slash = rest.find('/');
    std::string authority = slash == std::string::npos ? rest : rest.substr(0, slash);
    out.path = slash == std::string::npos ? "/" : rest.substr(slash);
    std::size_t colon = authority.find(':');
    if (colon != std::string::npos) {
        out.host = authority.substr(0, colon);
        out.port = std::stoi(authority.substr(colon + 1));
    } else {
        out.host = authority;
    }
    if (out.host.empty()) throw Error(ErrorKind::NetworkFailure, "empty host in " + url);
    return out;
}

void wait_readable(int fd, int timeout_s) {
    pollfd pfd{fd, POLLIN, 0};
    int rc = ::poll(&pfd, 1, timeout_s * 1000);
    if (rc == 0) throw Error(ErrorKind::RenderTimeout, "websocket read timed out");
    if (rc < 0) throw Error(ErrorKind::NetworkFailure, "poll failed");
}

} // namespace

WebSocketClient::~WebSocketClient() {
    if (fd_ >= 0) ::close(fd_);
}

void WebSocketClient::connect(const std::string& url, int timeout_s) {
    WsUrl target = parse_ws_url(url);

    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (::getaddrinfo(target.host.c_str(), std::to_string(target.port).c_str(), &hints, &res) != 0)
        throw Error(ErrorKind::NetworkFailure, "cannot resolve " + target.host);

    int fd = -1;
    for (addrinfo* ai = res; ai; ai = ai->ai_next) {
        fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
        if (fd < 0) continue;
        if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
        ::close(fd);
        fd = -1;
    }
    ::freeaddrinfo(res);
    if (fd < 0) throw Error(ErrorKind::NetworkFailure, "cannot connect to " + url);
    fd_ = fd;
    int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);

    // upgrade handshake
    std::mt19937_64 rng(std::random_device{}());
    std::uint8_t key_bytes[16];
    for (auto& b : key_bytes) b = static_cast<std::uint8_t>(rng());
    std::string key = base64_encode(key_bytes, sizeof key_bytes);

    std::ostringstream req;
    req << "GET " << target.path << " HTTP/1.1\r\n"
        << "Host: " << target.host << ":" << target.port << "\r\n"
        << "Upgrade: websocket\r\n"
        << "Connection: Upgrade\r\n"
        << "Sec-WebSocket-Key: " << key << "\r\n"
        << "Sec-WebSocket-Version: 13\r\n\r\n";
    std::string req_str = req.str();
    if (::send(fd_, req_str.data(), req_str.size(), 0) != static_cast<ssize_t>(req_str.size())) {
        close();
        throw Error(ErrorKind::NetworkFailure, "handshake send failed");
    }

    std::string response;
    while (response.find("\r\n\r\n") == std::string::npos) {
        wait_readable(fd_, timeout_s);
        char buf[512];
        ssize_t n = ::recv(fd_, buf, sizeof buf, 0);
        if (n <= 0) {
            close();
            throw Error(ErrorKind::NetworkFailure, "handshake closed early");
        }
        response.append(buf, static_cast<std::size_t>(n));
        if (response.size() > 64 * 1024) {
            close();
            throw Error(ErrorKind::NetworkFailure, "oversized handshake response");
        }
    }
    if (response.find(" 101") == std::string::npos) {
        close();
        throw Error(ErrorKind::NetworkFailure, "upgrade refused: " + response.substr(0, 64));
    }
    auto digest = sha1(key + kWsGuid);
    std::string expected = base64_encode(digest.data(), digest.size());
    if (response.find(expected) == std::string::npos) {
        close();
        throw Error(ErrorKind::NetworkFailure, "Sec-WebSocket-Accept mismatch");
    }
}

void WebSocketClient::send_frame(std::uint8_t opcode, const std::string& payload) {
    if (fd_ < 0) throw Error(ErrorKind::NetworkFailure, "websocket is not connected");

    std::string frame;
    frame.push_back(static_cast<char>(0x80 | opcode)); // FIN

    std::mt19937 rng(std::random_device{}());
    std::uint8_t mask[4];
    for (auto& b : mask) b = static_cast<std::uint8_t>(rng());

    std::size_t len = payload.size();
    if (len < 126) {
        frame.push_back(static_cast<char>(0x80 | len));
    } else if (len <= 0xFFFF) {
        frame.push_back(static_cast<char>(0x80 | 126));
        frame.push_back(static_cast<char>(len >> 8));
        frame.push_back(static_cast<char>(len & 0xFF));
    } else {
        frame.push_back(static_cast<char>(0x80 | 127));
        for (int i = 7; i >= 0; --i)
            frame.push_back(static_cast<char>((static_cast<std::uint64_t>(len) >> (8 * i)) & 0xFF));
    }
    frame.append(reinterpret_cast<const char*>(mask), 4);
    for (std::size_t i = 0; i < len; ++i)
        frame.push_back(static_cast<char>(static_cast<std::uint8_t>(payload[i]) ^ mask[i % 4]));

    std::size_t sent = 0;
    while (sent < frame.size()) {
        ssize_t n = ::send(fd_, frame.data() + sent, frame.size() - sent, 0);
        if (n <= 0) throw Error(ErrorKind::NetworkFailure, "websocket send failed");
        sent += static_cast<std::size_t>(n);
    }
}

void WebSocketClient::send_text(const std::string& payload) {
    send_frame(0x1, payload);
}

void WebSocketClient::read_exact(std::uint8_t* buf, std::size_t len, int timeout_s) {
    std::size_t got = 0;
    while (got < len) {
        wait_readable(fd_, timeout_s);
        ssize_t n = ::recv(fd_, buf + got, len - got, 0);
        if (n <= 0) throw Error(ErrorKind::NetworkFailure, "websocket closed mid-frame");
        got += static_cast<std::size_t>(n);
    }
}

std::optional<std::string> WebSocketClient::receive(int timeout_s) {
    std::string message;
    while (true) {
        std::uint8_t head[2];
        read_exact(head, 2, timeout_s);
        bool fin = head[0] & 0x80;
        std::uint8_t opcode = head[0] & 0x0F;
        bool masked = head[1] & 0x80;
        std::uint64_t len = head[1] & 0x7F;
        if (len == 126) {
            std::uint8_t ext[2];
            read_exact(ext, 2, timeout_s);
            len = (static_cast<std::uint64_t>(ext[0]) << 8) | ext[1];
        } else if (len == 127) {
            std::uint8_t ext[8];
            read_exact(ext, 8, timeout_s);
            len = 0;
            for (int i = 0; i < 8; ++i) len = (len << 8) | ext[i];
        }
        std::uint8_t mask[4] = {0, 0, 0, 0};
        if (masked) read_exact(mask, 4, timeout_s);

        std::string payload(len, '\0');
        if (len) read_exact(reinterpret_cast<std::uint8_t*>(payload.data()), len, timeout_s);
        if (masked) {
            for (std::uint64_t i = 0; i < len; ++i)
                payload[i] = static_cast<char>(static_cast<std::uint8_t>(payload[i]) ^ mask[i % 4]);
        }

        switch (opcode) {
            case 0x8: // close
                send_frame(0x8, "");
                close();
                return std::nullopt;
            case 0x9: // ping
                send_frame(0xA, payload);
                continue;
            case 0xA: // pong
                continue;
            case 0x0: // continuation
            case 0x1:
            case 0x2:
                message += payload;
                if (fin) return message;
                continue;
            default:
                throw Error(ErrorKind::NetworkFailure,
                            "unexpected websocket opcode " + std::to_string(opcode));
        }
    }
}

void WebSocketClient::close() {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

} // namespace weblapse::net
