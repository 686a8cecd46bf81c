#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace aw {

using Bytes = std::vector<std::uint8_t>;

inline Bytes to_bytes(std::string_view s) {
    return Bytes(s.begin(), s.end());
}

inline std::string to_string(std::span<const std::uint8_t> b) {
    return std::string(b.begin(), b.end());
}

// Lowercase hex, the only binary encoding used in files and wire messages.
std::string hex_encode(std::span<const std::uint8_t> data);

// Strict: even length, lowercase [0-9a-f] only. Anything else is rejected.
std::optional<Bytes> hex_decode(std::string_view hex);

// Big-endian 8-byte encoding for counters inside signed payloads.
Bytes be64(std::uint64_t v);

} // namespace aw
