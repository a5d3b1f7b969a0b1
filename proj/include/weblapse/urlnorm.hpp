#pragma once

#include <string>
#include <string_view>

namespace weblapse::render {

// Canonical form used for dedup gating and workdir naming: scheme defaulted
// to http, scheme/host lowercased, default port dropped, fragment dropped,
// a bare trailing slash ("/" path) removed. Throws InvalidUrl.
std::string canonicalize_url(std::string_view url);

enum class HashAlgo { Md5, Fnv64 };

// Lowercase hex digest of the canonicalized URL; names the workdir.
std::string url_hash(std::string_view canonical_url, HashAlgo algo = HashAlgo::Md5);

} // namespace weblapse::render
