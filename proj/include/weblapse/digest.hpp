#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace weblapse {

// MD5 (RFC 1321). Used for workdir names and fixture file keys.
std::array<std::uint8_t, 16> md5(std::string_view data);
std::string md5_hex(std::string_view data);

// SHA-1 (RFC 3174). Needed for the WebSocket handshake.
std::array<std::uint8_t, 20> sha1(std::string_view data);

// FNV-1a, 64-bit. The fixed per-token hash behind the SimHash fingerprint.
std::uint64_t fnv1a64(std::string_view data);

std::string base64_encode(const std::uint8_t* data, std::size_t len);
std::string base64_encode(std::string_view data);
std::vector<std::uint8_t> base64_decode(std::string_view text);

std::string to_hex(const std::uint8_t* data, std::size_t len);

} // namespace weblapse
