#include "weblapse/http.hpp"

#include "weblapse/digest.hpp"
#include "weblapse/error.hpp"

#include "weblapse/httplib_setup.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace weblapse::net {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

} // namespace

std::optional<std::string> HttpResponse::header(std::string_view name) const {
    std::string want = lower(std::string(name));
    for (const auto& [k, v] : headers) {
        if (lower(k) == want) return v;
    }
    return std::nullopt;
}

HttpResponse HttpTransport::head(const std::string& url, const FetchPolicy& policy) {
    HttpResponse r = get(url, policy);
    r.body.clear();
    return r;
}

FixtureTransport::FixtureTransport(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::filesystem::path FixtureTransport::path_for(const std::filesystem::path& dir,
                                                 const std::string& url) {
    return dir / (md5_hex(url) + ".http");
}

HttpResponse FixtureTransport::get(const std::string& url, const FetchPolicy&) {
    std::ifstream in(path_for(dir_, url), std::ios::binary);
    if (!in) throw Error(ErrorKind::NetworkFailure, "no recorded response for " + url);

    HttpResponse response;
    std::string line;
    if (!std::getline(in, line))
        throw Error(ErrorKind::NetworkFailure, "empty fixture for " + url);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    {
        std::istringstream head(line);
        std::string word;
        head >> word >> response.status;
        if (word != "status" || response.status == 0)
            throw Error(ErrorKind::NetworkFailure, "bad fixture status line for " + url);
    }
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) break;
        std::size_t colon = line.find(':');
        if (colon == std::string::npos) continue;
        std::string key = line.substr(0, colon);
        std::string value = line.substr(colon + 1);
        while (!value.empty() && value.front() == ' ') value.erase(value.begin());
        response.headers.emplace_back(std::move(key), std::move(value));
    }
    std::ostringstream body;
    body << in.rdbuf();
    response.body = body.str();
    return response;
}

void FixtureTransport::store(const std::filesystem::path& dir, const std::string& url,
                             const HttpResponse& response) {
    std::filesystem::create_directories(dir);
    std::ofstream out(path_for(dir, url), std::ios::binary);
    if (!out) throw Error(ErrorKind::IoFailure, "cannot write fixture for " + url);
    out << "status " << response.status << "\n";
    for (const auto& [k, v] : response.headers) out << k << ": " << v << "\n";
    out << "\n" << response.body;
}

UrlParts split_url(const std::string& url) {
    UrlParts parts;
    std::size_t scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        throw Error(ErrorKind::InvalidUrl, "not an absolute URL: '" + url + "'");
    parts.scheme = lower(url.substr(0, scheme_end));
    if (parts.scheme != "http" && parts.scheme != "https")
        throw Error(ErrorKind::InvalidUrl, "unsupported scheme in '" + url + "'");

    std::size_t host_start = scheme_end + 3;
    std::size_t path_start = url.find_first_of("/?#", host_start);
    std::string authority = url.substr(host_start, path_start == std::string::npos
                                                       ? std::string::npos
                                                       : path_start - host_start);
    if (authority.empty()) throw Error(ErrorKind::InvalidUrl, "empty host in '" + url + "'");

    std::size_t colon = authority.rfind(':');
    if (colon != std::string::npos && authority.find(']') == std::string::npos) {
        parts.host = authority.substr(0, colon);
        try {
            parts.port = std::stoi(authority.substr(colon + 1));
        } catch (...) {
            throw Error(ErrorKind::InvalidUrl, "bad port in '" + url + "'");
        }
    } else {
        parts.host = authority;
    }
    if (parts.port == 0) parts.port = parts.scheme == "https" ? 443 : 80;

    if (path_start == std::string::npos) {
        parts.target = "/";
    } else if (url[path_start] == '/') {
        parts.target = url.substr(path_start);
    } else {
        parts.target = "/" + url.substr(path_start);
    }
    std::size_t frag = parts.target.find('#');
    if (frag != std::string::npos) parts.target.resize(frag);
    return parts;
}

std::string resolve_reference(const std::string& base, const std::string& ref) {
    if (ref.empty()) return base;
    if (ref.find("://") != std::string::npos) return ref;

    UrlParts parts = split_url(base);
    std::string origin = parts.scheme + "://" + parts.host;
    bool default_port = (parts.scheme == "http" && parts.port == 80) ||
                        (parts.scheme == "https" && parts.port == 443);
    if (!default_port) origin += ":" + std::to_string(parts.port);

    if (ref.rfind("//", 0) == 0) return parts.scheme + ":" + ref;
    if (ref.front() == '/') return origin + ref;

    // relative path: resolve against the base path's directory
    std::string path = parts.target;
    std::size_t query = path.find('?');
    if (query != std::string::npos) path.resize(query);
    std::size_t last_slash = path.rfind('/');
    path = path.substr(0, last_slash + 1);

    std::string combined = path + ref;
    // collapse ./ and ../ segments
    std::vector<std::string> segments;
    std::istringstream in(combined);
    std::string seg;
    bool trailing_slash = !combined.empty() && combined.back() == '/';
    while (std::getline(in, seg, '/')) {
        if (seg.empty() || seg == ".") continue;
        if (seg == "..") {
            if (!segments.empty()) segments.pop_back();
            continue;
        }
        segments.push_back(seg);
    }
    std::string resolved = "/";
    for (std::size_t i = 0; i < segments.size(); ++i) {
        resolved += segments[i];
        if (i + 1 < segments.size()) resolved += "/";
    }
    if (trailing_slash && resolved.back() != '/') resolved += "/";
    return origin + resolved;
}

namespace {

HttpResponse from_httplib(const httplib::Response& res) {
    HttpResponse out;
    out.status = res.status;
    out.body = res.body;
    for (const auto& [k, v] : res.headers) out.headers.emplace_back(k, v);
    return out;
}

template <typename ClientT>
HttpResponse run_request(ClientT& client, const UrlParts& parts, const FetchPolicy& policy,
                         bool head_only, const std::string& url) {
    client.set_follow_location(false);
    client.set_connection_timeout(policy.per_request_timeout_s, 0);
    client.set_read_timeout(policy.per_request_timeout_s, 0);
    client.set_write_timeout(policy.per_request_timeout_s, 0);

    auto res = head_only ? client.Head(parts.target) : client.Get(parts.target);
    if (!res) {
        throw Error(ErrorKind::NetworkFailure,
                    "request to " + url + " failed: " + httplib::to_string(res.error()));
    }
    return from_httplib(*res);
}

HttpResponse live_request(const std::string& url, const FetchPolicy& policy, bool head_only) {
    UrlParts parts = split_url(url);
#ifdef WEBLAPSE_HAVE_OPENSSL
    if (parts.scheme == "https") {
        httplib::SSLClient client(parts.host, parts.port);
        client.enable_server_certificate_verification(false);
        return run_request(client, parts, policy, head_only, url);
    }
#else
    if (parts.scheme == "https")
        throw Error(ErrorKind::NetworkFailure, "built without TLS support: " + url);
#endif
    httplib::Client client(parts.host, parts.port);
    return run_request(client, parts, policy, head_only, url);
}

} // namespace

HttpResponse LiveTransport::get(const std::string& url, const FetchPolicy& policy) {
    return live_request(url, policy, false);
}

HttpResponse LiveTransport::head(const std::string& url, const FetchPolicy& policy) {
    return live_request(url, policy, true);
}

} // namespace weblapse::net
