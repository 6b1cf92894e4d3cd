#pragma once

#include "pesem/import_info.hpp"
#include "pesem/pe_parser.hpp"
#include "pesem/section_info.hpp"

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pesem {

struct DetectorVerdict {
  std::string detector_id;
  int label = 0;        // 1 when the detector saw packing evidence
  double weight = 1.0;  // > 0
  std::vector<std::string> packer_names;
  std::string evidence;

  bool operator==(const DetectorVerdict&) const = default;
};

struct PackingVerdict {
  double label = 0.0;  // weighted mean of detector labels, in [0, 1]
  bool likely_packed = false;
  std::vector<DetectorVerdict> verdicts;
  std::vector<std::string> packers;  // deduplicated, sorted

  bool operator==(const PackingVerdict&) const = default;
};

struct PackerSignature {
  std::string section_prefix;
  std::string packer_name;
};

/// Parses "section_name_prefix,packer_name" records ('#' comments allowed).
std::vector<PackerSignature> parse_packer_signatures(std::string_view text);
const std::vector<PackerSignature>& bundled_packer_signatures();

namespace detector {
inline constexpr std::string_view kSectionSignature = "section_signature";
inline constexpr std::string_view kEntryPointSection = "entry_point_section";
inline constexpr std::string_view kSectionEntropy = "section_entropy";
inline constexpr std::string_view kSparseImports = "sparse_imports";
}  // namespace detector

inline constexpr std::array<std::string_view, 4> kBuiltinDetectors{
    detector::kSectionSignature, detector::kEntryPointSection, detector::kSectionEntropy, detector::kSparseImports};

struct PackingConfig {
  /// Detectors that run, in reporting order.
  std::vector<std::string> detectors{kBuiltinDetectors.begin(), kBuiltinDetectors.end()};
  /// Per-detector weight; missing entries default to 1.0.
  std::map<std::string, double, std::less<>> weights;
  double likely_packed_threshold = 0.5;
  double high_entropy = 7.0;
  std::size_t high_entropy_min_size = 256;
  std::size_t sparse_import_limit = 5;  // fewer imports than this is sparse
  std::vector<PackerSignature> signatures = bundled_packer_signatures();

  [[nodiscard]] double weight_of(std::string_view id) const;
};

/// Throws Error(NonPositiveWeight) for a weight <= 0 and Error(SchemaError)
/// for an unknown detector id.
void validate(const PackingConfig& config);

std::vector<DetectorVerdict> run_detectors(const ParsedPe& pe, const std::vector<SectionInfo>& sections,
                                           const ImportInfo& imports, const PackingConfig& config = {});

/// sum(w_i * l_i) / sum(w_i). Throws Error(EmptyEnsemble) or
/// Error(NonPositiveWeight).
double aggregate_packing_label(std::span<const DetectorVerdict> verdicts);

PackingVerdict build_packing_info(std::vector<DetectorVerdict> verdicts, double label, double likely_packed_threshold = 0.5);

}  // namespace pesem
