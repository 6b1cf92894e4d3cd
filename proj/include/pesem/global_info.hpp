#pragma once

#include "pesem/binary.hpp"
#include "pesem/pe_parser.hpp"

#include <chrono>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pesem {

/// Shannon entropy in bits per byte, in [0, 8]. Empty input yields 0.
double shannon_entropy(std::span<const std::uint8_t> bytes) noexcept;

struct GlobalInfo {
  std::string file_name;
  std::string sha256;
  std::string md5;
  std::string file_type;          // "exe", "dll" or "other"
  std::string target_os;          // e.g. "windows/gui/x86"
  std::string compile_timestamp;  // ISO-8601 UTC or "invalid"
  std::uint64_t file_size = 0;
  double entropy = 0.0;           // whole file
  std::vector<std::string> warnings;

  bool operator==(const GlobalInfo&) const = default;
};

std::string file_type_name(std::uint16_t coff_characteristics);
std::string target_os_name(Machine machine, std::uint16_t subsystem);

/// "YYYY-MM-DDTHH:MM:SSZ", or "invalid" for 0 and for stamps later than `now`.
std::string render_compile_timestamp(std::uint32_t timestamp, std::chrono::system_clock::time_point now);

/// Copies the parser warnings and appends one when the timestamp is invalid.
GlobalInfo build_global_info(const ParsedPe& pe, const RawBinary& binary, std::string_view name,
                             std::chrono::system_clock::time_point now = std::chrono::system_clock::now());

}  // namespace pesem
