#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace pesem {

inline constexpr std::size_t kStringScanLimit = 10u * 1024u * 1024u;
inline constexpr std::size_t kMaxStringLength = 1024;

struct StringScan {
  std::vector<std::string> strings;
  bool capped = false;  // input exceeded kStringScanLimit; only the prefix was scanned
};

/// Maximal runs of printable ASCII (0x20-0x7e and tab) and of UTF-16LE code
/// units in that range, at least min_len characters long, in order of their
/// start offset. Runs longer than kMaxStringLength are cut to that length.
StringScan scan_strings(std::span<const std::uint8_t> bytes, std::size_t min_len);

std::vector<std::string> extract_strings(std::span<const std::uint8_t> bytes, std::size_t min_len);

}  // namespace pesem
