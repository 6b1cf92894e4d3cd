#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace pesem {

// Lowercase hex digests.
std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string md5_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(std::string_view text);
std::string md5_hex(std::string_view text);

}  // namespace pesem
