#include "pesem/global_info.hpp"

#include "pesem/digest.hpp"

#include <array>
#include <cmath>
#include <ctime>

namespace pesem {

double shannon_entropy(std::span<const std::uint8_t> bytes) noexcept {
  if (bytes.empty()) return 0.0;
  std::array<std::uint64_t, 256> counts{};
  for (std::uint8_t b : bytes) ++counts[b];
  const double n = static_cast<double>(bytes.size());
  double h = 0.0;
  for (std::uint64_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log2(p);
  }
  // Rounding can push a single-symbol buffer to -0.0 or a uniform one just past 8.
  if (h < 0.0) return 0.0;
  if (h > 8.0) return 8.0;
  return h;
}

std::string file_type_name(std::uint16_t characteristics) {
  if (characteristics & coff_flags::kDll) return "dll";
  if (characteristics & coff_flags::kExecutableImage) return "exe";
  return "other";
}

std::string target_os_name(Machine machine, std::uint16_t subsystem) {
  std::string qualifier;
  switch (subsystem) {
    case 1: qualifier = "native"; break;
    case 2: qualifier = "gui"; break;
    case 3: qualifier = "console"; break;
    case 5: qualifier = "os2-console"; break;
    case 7: qualifier = "posix-console"; break;
    case 9: qualifier = "ce-gui"; break;
    case 10: qualifier = "efi-application"; break;
    case 11: qualifier = "efi-boot-driver"; break;
    case 12: qualifier = "efi-runtime-driver"; break;
    case 13: qualifier = "efi-rom"; break;
    case 14: qualifier = "xbox"; break;
    case 16: qualifier = "boot-application"; break;
    default: qualifier = "unknown"; break;
  }
  return "windows/" + qualifier + (machine == Machine::Amd64 ? "/x64" : "/x86");
}

std::string render_compile_timestamp(std::uint32_t timestamp, std::chrono::system_clock::time_point now) {
  const auto now_s = std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count();
  if (timestamp == 0 || static_cast<long long>(timestamp) > now_s) return "invalid";
  const std::time_t t = static_cast<std::time_t>(timestamp);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

GlobalInfo build_global_info(const ParsedPe& pe, const RawBinary& binary, std::string_view name,
                             std::chrono::system_clock::time_point now) {
  GlobalInfo info;
  info.file_name = std::string(name);
  info.sha256 = sha256_hex(binary.bytes());
  info.md5 = md5_hex(binary.bytes());
  info.file_type = file_type_name(pe.coff.characteristics);
  info.target_os = target_os_name(pe.coff.machine, pe.optional.subsystem);
  info.compile_timestamp = render_compile_timestamp(pe.coff.timestamp, now);
  info.file_size = binary.size();
  info.entropy = shannon_entropy(binary.bytes());
  info.warnings = pe.warnings;
  if (info.compile_timestamp == "invalid") {
    info.warnings.push_back(pe.coff.timestamp == 0 ? "compile timestamp is zero"
                                                   : "compile timestamp lies in the future");
  }
  return info;
}

}  // namespace pesem
