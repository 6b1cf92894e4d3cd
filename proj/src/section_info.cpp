#include "pesem/section_info.hpp"

#include "pesem/digest.hpp"
#include "pesem/global_info.hpp"

#include <algorithm>

namespace pesem {

std::optional<std::uint32_t> section_flag_mask(std::string_view name) {
  for (const auto& f : kSectionFlagVocabulary) {
    if (f.name == name) return f.mask;
  }
  return std::nullopt;
}

std::vector<std::string> decode_section_flags(std::uint32_t characteristics) {
  std::vector<std::string> out;
  for (const auto& f : kSectionFlagVocabulary) {
    if (characteristics & f.mask) out.emplace_back(f.name);
  }
  return out;
}

bool is_standard_section_name(std::string_view name) {
  return std::find(kStandardSectionNames.begin(), kStandardSectionNames.end(), name) != kStandardSectionNames.end();
}

bool section_contains_rva(const SectionHeaderInfo& header, std::uint32_t rva) {
  const std::uint64_t span = std::max(header.virtual_size, header.raw_size);
  return rva >= header.virtual_address && rva < std::uint64_t{header.virtual_address} + span;
}

std::vector<std::string> anomalies_for_section(const SectionHeaderInfo& header, double entropy,
                                               std::size_t available_bytes, std::uint32_t entry_point_rva,
                                               const SectionThresholds& thresholds) {
  const bool standard = is_standard_section_name(header.name);
  const bool exec = header.characteristics & section_flags::kMemExecute;
  std::vector<std::string> out;
  if (!standard) out.emplace_back(anomaly::kNonstandardName);
  if (header.name == ".rsrc" && exec) out.emplace_back(anomaly::kExecutableResourceSection);
  if (exec && (header.characteristics & section_flags::kMemWrite)) out.emplace_back(anomaly::kWritableExecutable);
  if (entropy > thresholds.high_entropy && available_bytes >= thresholds.high_entropy_min_size) {
    out.emplace_back(anomaly::kHighEntropySection);
  }
  if (!standard && entry_point_rva != 0 && section_contains_rva(header, entry_point_rva)) {
    out.emplace_back(anomaly::kEntryInNonstandardSection);
  }
  // .bss legitimately has no file data.
  if (header.raw_size == 0 && header.virtual_size > 0 && header.name != ".bss") {
    out.emplace_back(anomaly::kZeroRawNonzeroVirtual);
  }
  if (header.truncated) out.emplace_back(anomaly::kTruncatedRawData);
  return out;
}

std::vector<SectionInfo> build_section_infos(const ParsedPe& pe, const RawBinary& binary,
                                             const SectionThresholds& thresholds) {
  std::vector<SectionInfo> out;
  out.reserve(pe.sections.size());
  for (const auto& header : pe.sections) {
    const auto raw = header.raw_size == 0 ? std::span<const std::uint8_t>{}
                                          : binary.slice(header.raw_offset, header.raw_size);
    SectionInfo info;
    info.name = header.name;
    info.raw_size = header.raw_size;
    info.virtual_size = header.virtual_size;
    info.sha256 = sha256_hex(raw);
    info.entropy = shannon_entropy(raw);
    info.characteristics = decode_section_flags(header.characteristics);
    info.anomalies = anomalies_for_section(header, info.entropy, raw.size(), pe.optional.entry_point_rva, thresholds);
    out.push_back(std::move(info));
  }
  return out;
}

std::vector<std::string> section_anomalies(const std::vector<SectionInfo>& infos, std::uint32_t entry_point_rva,
                                           const std::vector<SectionHeaderInfo>& headers) {
  std::vector<bool> seen(kAnomalyOrder.size(), false);
  auto mark = [&](std::string_view code) {
    for (std::size_t i = 0; i < kAnomalyOrder.size(); ++i) {
      if (kAnomalyOrder[i] == code) seen[i] = true;
    }
  };
  for (const auto& info : infos) {
    for (const auto& code : info.anomalies) mark(code);
  }
  for (const auto& header : headers) {
    if (entry_point_rva != 0 && !is_standard_section_name(header.name) &&
        section_contains_rva(header, entry_point_rva)) {
      mark(anomaly::kEntryInNonstandardSection);
    }
  }
  std::vector<std::string> out;
  for (std::size_t i = 0; i < kAnomalyOrder.size(); ++i) {
    if (seen[i]) out.emplace_back(kAnomalyOrder[i]);
  }
  return out;
}

}  // namespace pesem
