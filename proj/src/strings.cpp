#include "pesem/strings.hpp"

#include <algorithm>
#include <stdexcept>
#include <utility>

namespace pesem {
namespace {

bool printable(std::uint8_t b) { return (b >= 0x20 && b <= 0x7E) || b == '\t'; }

}  // namespace

StringScan scan_strings(std::span<const std::uint8_t> bytes, std::size_t min_len) {
  if (min_len == 0) throw std::invalid_argument("min_len must be at least 1");
  StringScan scan;
  if (bytes.size() > kStringScanLimit) {
    bytes = bytes.first(kStringScanLimit);
    scan.capped = true;
  }
  std::vector<std::pair<std::size_t, std::string>> found;

  for (std::size_t i = 0; i < bytes.size();) {
    if (!printable(bytes[i])) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    while (i < bytes.size() && printable(bytes[i])) ++i;
    const std::size_t len = i - start;
    if (len >= min_len) {
      found.emplace_back(start, std::string(reinterpret_cast<const char*>(bytes.data() + start),
                                            std::min(len, kMaxStringLength)));
    }
  }

  for (std::size_t i = 0; i + 1 < bytes.size();) {
    if (!(printable(bytes[i]) && bytes[i + 1] == 0)) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    std::string text;
    while (i + 1 < bytes.size() && printable(bytes[i]) && bytes[i + 1] == 0) {
      if (text.size() < kMaxStringLength) text.push_back(static_cast<char>(bytes[i]));
      i += 2;
    }
    if ((i - start) / 2 >= min_len) found.emplace_back(start, std::move(text));
  }

  std::stable_sort(found.begin(), found.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  scan.strings.reserve(found.size());
  for (auto& [offset, text] : found) scan.strings.push_back(std::move(text));
  return scan;
}

std::vector<std::string> extract_strings(std::span<const std::uint8_t> bytes, std::size_t min_len) {
  return scan_strings(bytes, min_len).strings;
}

}  // namespace pesem
