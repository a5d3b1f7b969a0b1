#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace weblapse::net {

struct FetchPolicy {
    int max_parallel_fetches = 4;
    int per_request_timeout_s = 30;
    int max_redirect_hops = 10;
    int retries = 1;
};

struct HttpResponse {
    int status = 0;
    std::string body;
    std::vector<std::pair<std::string, std::string>> headers;

    std::optional<std::string> header(std::string_view name) const;
    bool is_redirect() const { return status >= 300 && status < 400; }
    bool is_success() const { return status >= 200 && status < 300; }
};

// Transports never follow redirects themselves; redirect logic lives in
// archive_net so it can be hop-bounded and tested. Implementations must be
// safe for concurrent use.
class HttpTransport {
public:
    virtual ~HttpTransport() = default;
    // Throws NetworkFailure when no response could be obtained.
    virtual HttpResponse get(const std::string& url, const FetchPolicy& policy) = 0;
    virtual HttpResponse head(const std::string& url, const FetchPolicy& policy);
};

// Replays recorded responses from a directory, one file per request URL,
// keyed by the URL's MD5 hex digest: <dir>/<md5(url)>.http
//
//   status 200
//   Content-Type: text/plain
//   <blank line>
//   body bytes ...
//
// A missing file behaves like a connection failure.
class FixtureTransport : public HttpTransport {
public:
    explicit FixtureTransport(std::filesystem::path dir);

    HttpResponse get(const std::string& url, const FetchPolicy& policy) override;

    // Records a response so tests and tooling can build fixture sets.
    static void store(const std::filesystem::path& dir, const std::string& url,
                      const HttpResponse& response);
    static std::filesystem::path path_for(const std::filesystem::path& dir, const std::string& url);

private:
    std::filesystem::path dir_;
};

// Thin cpp-httplib client. HTTPS is available when built with OpenSSL.
class LiveTransport : public HttpTransport {
public:
    HttpResponse get(const std::string& url, const FetchPolicy& policy) override;
    HttpResponse head(const std::string& url, const FetchPolicy& policy) override;
};

struct UrlParts {
    std::string scheme;
    std::string host;
    int port = 0; // 0 = scheme default
    std::string target; // path + query, always starts with '/'
};

// Splits an absolute http(s) URL. Throws InvalidUrl.
UrlParts split_url(const std::string& url);

// RFC 3986-style reference resolution, enough for Location headers:
// absolute URLs, scheme-relative, absolute-path and relative-path forms.
std::string resolve_reference(const std::string& base, const std::string& ref);

} // namespace weblapse::net
