#pragma once

#include "pesem/binary.hpp"
#include "pesem/pe_parser.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pesem {

struct SectionFlag {
  std::string_view name;
  std::uint32_t mask;
};

/// Recognised characteristic flags, in canonical (ascending bit) order.
inline constexpr std::array<SectionFlag, 6> kSectionFlagVocabulary{{
    {"CNT_CODE", section_flags::kCntCode},
    {"CNT_INITIALIZED_DATA", section_flags::kCntInitializedData},
    {"CNT_UNINITIALIZED_DATA", section_flags::kCntUninitializedData},
    {"MEM_EXECUTE", section_flags::kMemExecute},
    {"MEM_READ", section_flags::kMemRead},
    {"MEM_WRITE", section_flags::kMemWrite},
}};

std::optional<std::uint32_t> section_flag_mask(std::string_view name);

/// Unknown bits are ignored.
std::vector<std::string> decode_section_flags(std::uint32_t characteristics);

namespace anomaly {
inline constexpr std::string_view kNonstandardName = "nonstandard_name";
inline constexpr std::string_view kExecutableResourceSection = "executable_resource_section";
inline constexpr std::string_view kWritableExecutable = "writable_executable";
inline constexpr std::string_view kHighEntropySection = "high_entropy_section";
inline constexpr std::string_view kEntryInNonstandardSection = "entry_in_nonstandard_section";
inline constexpr std::string_view kZeroRawNonzeroVirtual = "zero_raw_nonzero_virtual";
inline constexpr std::string_view kTruncatedRawData = "truncated_raw_data";
}  // namespace anomaly

/// Order in which aggregated anomaly codes are reported.
inline constexpr std::array<std::string_view, 7> kAnomalyOrder{
    anomaly::kNonstandardName,           anomaly::kExecutableResourceSection, anomaly::kWritableExecutable,
    anomaly::kHighEntropySection,        anomaly::kEntryInNonstandardSection, anomaly::kZeroRawNonzeroVirtual,
    anomaly::kTruncatedRawData,
};

inline constexpr std::array<std::string_view, 10> kStandardSectionNames{
    ".text", ".data", ".rdata", ".rsrc", ".reloc", ".idata", ".edata", ".bss", ".tls", ".pdata",
};

bool is_standard_section_name(std::string_view name);

struct SectionThresholds {
  double high_entropy = 7.0;           // strictly greater fires
  std::size_t high_entropy_min_size = 256;
};

struct SectionInfo {
  std::string name;
  std::uint32_t raw_size = 0;
  std::uint32_t virtual_size = 0;
  std::optional<std::string> sha256;  // absent only after budget truncation
  double entropy = 0.0;
  std::vector<std::string> characteristics;
  std::vector<std::string> anomalies;

  bool operator==(const SectionInfo&) const = default;
};

/// Whether `rva` falls inside the section's virtual extent.
bool section_contains_rva(const SectionHeaderInfo& header, std::uint32_t rva);

/// Anomaly codes for one section, in kAnomalyOrder order.
std::vector<std::string> anomalies_for_section(const SectionHeaderInfo& header, double entropy,
                                               std::size_t available_bytes, std::uint32_t entry_point_rva,
                                               const SectionThresholds& thresholds = {});

std::vector<SectionInfo> build_section_infos(const ParsedPe& pe, const RawBinary& binary,
                                             const SectionThresholds& thresholds = {});

/// Union of the per-section codes, deduplicated, in kAnomalyOrder order.
/// The entry-point check is re-evaluated against `headers`.
std::vector<std::string> section_anomalies(const std::vector<SectionInfo>& infos, std::uint32_t entry_point_rva,
                                           const std::vector<SectionHeaderInfo>& headers);

}  // namespace pesem
