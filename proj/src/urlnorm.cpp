#include "weblapse/urlnorm.hpp"

#include "weblapse/digest.hpp"
#include "weblapse/error.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>

namespace weblapse::render {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

bool valid_host(std::string_view host) {
    if (host.empty()) return false;
    for (char c : host) {
        unsigned char u = static_cast<unsigned char>(c);
        if (!std::isalnum(u) && c != '.' && c != '-' && c != '_') return false;
    }
    return true;
}

} // namespace

std::string canonicalize_url(std::string_view url) {
    std::string_view trimmed = url;
    while (!trimmed.empty() && std::isspace(static_cast<unsigned char>(trimmed.front())))
        trimmed.remove_prefix(1);
    while (!trimmed.empty() && std::isspace(static_cast<unsigned char>(trimmed.back())))
        trimmed.remove_suffix(1);
    std::string s(trimmed);
    if (s.empty()) throw Error(ErrorKind::InvalidUrl, "empty URL");
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c)))
            throw Error(ErrorKind::InvalidUrl, "whitespace inside '" + s + "'");
    }

    std::string scheme = "http";
    std::size_t rest_start = 0;
    std::size_t scheme_end = s.find("://");
    if (scheme_end != std::string::npos) {
        scheme = lower(s.substr(0, scheme_end));
        if (scheme != "http" && scheme != "https")
            throw Error(ErrorKind::InvalidUrl, "unsupported scheme '" + scheme + "' in '" + s + "'");
        rest_start = scheme_end + 3;
    } else if (s.rfind("//", 0) == 0) {
        rest_start = 2; // scheme-relative
    }

    std::string rest = s.substr(rest_start);
    std::size_t frag = rest.find('#');
    if (frag != std::string::npos) rest.resize(frag);

    std::size_t path_start = rest.find_first_of("/?");
    std::string authority = path_start == std::string::npos ? rest : rest.substr(0, path_start);
    std::string path_query = path_start == std::string::npos ? "" : rest.substr(path_start);

    std::string userinfo;
    std::size_t at = authority.rfind('@');
    if (at != std::string::npos) {
        userinfo = authority.substr(0, at + 1);
        authority = authority.substr(at + 1);
    }

    std::string host = authority;
    std::string port;
    if (!host.empty() && host.front() == '[') {
        std::size_t close = host.find(']');
        if (close == std::string::npos) throw Error(ErrorKind::InvalidUrl, "unbalanced '[' in '" + s + "'");
        port = host.substr(close + 1);
        host = host.substr(0, close + 1);
        if (!port.empty() && port.front() == ':') port.erase(port.begin());
        else if (!port.empty()) throw Error(ErrorKind::InvalidUrl, "garbage after host in '" + s + "'");
    } else {
        std::size_t colon = host.find(':');
        if (colon != std::string::npos) {
            port = host.substr(colon + 1);
            host = host.substr(0, colon);
        }
    }

    host = lower(host);
    if (host.front() != '[' && !valid_host(host))
        throw Error(ErrorKind::InvalidUrl, "invalid host in '" + s + "'");

    if (!port.empty()) {
        for (char c : port) {
            if (!std::isdigit(static_cast<unsigned char>(c)))
                throw Error(ErrorKind::InvalidUrl, "invalid port in '" + s + "'");
        }
        int p = 0;
        try {
            p = std::stoi(port);
        } catch (...) {
            throw Error(ErrorKind::InvalidUrl, "invalid port in '" + s + "'");
        }
        if (p <= 0 || p > 65535) throw Error(ErrorKind::InvalidUrl, "port out of range in '" + s + "'");
        if ((scheme == "http" && p == 80) || (scheme == "https" && p == 443)) port.clear();
    }

    if (path_query == "/") path_query.clear();

    std::string out = scheme + "://" + userinfo + host;
    if (!port.empty()) out += ":" + port;
    out += path_query;
    return out;
}

std::string url_hash(std::string_view canonical_url, HashAlgo algo) {
    switch (algo) {
        case HashAlgo::Fnv64: {
            char buf[17];
            std::snprintf(buf, sizeof buf, "%016llx",
                          static_cast<unsigned long long>(fnv1a64(canonical_url)));
            return buf;
        }
        case HashAlgo::Md5:
        default:
            return md5_hex(canonical_url);
    }
}

} // namespace weblapse::render
