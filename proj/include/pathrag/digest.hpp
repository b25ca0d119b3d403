#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pathrag {

/// SHA-256 of `data`, lowercase hex.
std::string sha256_hex(const std::vector<uint8_t>& data);
std::string sha256_hex(const std::string& data);

/// Standard base64 with padding (for embedding images on the wire).
std::string base64_encode(const std::vector<uint8_t>& data);

}  // namespace pathrag
