#include "pesem/packing.hpp"

#include "pesem/embedded_packer_signatures.hpp"
#include "pesem/error.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

namespace pesem {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool starts_with_nocase(std::string_view text, std::string_view prefix) {
  return text.size() >= prefix.size() && ascii_lower(text.substr(0, prefix.size())) == ascii_lower(prefix);
}

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

DetectorVerdict section_signature(const std::vector<SectionInfo>& sections, const PackingConfig& config) {
  DetectorVerdict v{std::string(detector::kSectionSignature), 0, 1.0, {}, "no packer section names"};
  std::vector<std::string> hits;
  for (const auto& s : sections) {
    for (const auto& sig : config.signatures) {
      if (!starts_with_nocase(s.name, sig.section_prefix)) continue;
      if (std::find(v.packer_names.begin(), v.packer_names.end(), sig.packer_name) == v.packer_names.end()) {
        v.packer_names.push_back(sig.packer_name);
      }
      hits.push_back(s.name);
      break;
    }
  }
  if (!hits.empty()) {
    v.label = 1;
    v.evidence = "packer section names:";
    for (const auto& h : hits) v.evidence += " " + h;
  }
  return v;
}

DetectorVerdict entry_point_section(const ParsedPe& pe) {
  DetectorVerdict v{std::string(detector::kEntryPointSection), 0, 1.0, {}, "entry point in a standard section"};
  const std::uint32_t ep = pe.optional.entry_point_rva;
  if (ep == 0) {
    v.evidence = "no entry point";
    return v;
  }
  for (const auto& s : pe.sections) {
    if (!section_contains_rva(s, ep)) continue;
    if (!is_standard_section_name(s.name)) {
      v.label = 1;
      v.evidence = "entry point in nonstandard section " + s.name;
    } else {
      v.evidence = "entry point in " + s.name;
    }
    return v;
  }
  if (ep >= pe.optional.size_of_headers) {
    v.label = 1;
    v.evidence = "entry point outside all sections";
  } else {
    v.label = 1;
    v.evidence = "entry point inside the headers";
  }
  return v;
}

DetectorVerdict section_entropy(const std::vector<SectionInfo>& sections, const PackingConfig& config) {
  DetectorVerdict v{std::string(detector::kSectionEntropy), 0, 1.0, {}, "no high-entropy section"};
  for (const auto& s : sections) {
    if (s.entropy > config.high_entropy && s.raw_size >= config.high_entropy_min_size) {
      if (v.label == 0) {
        v.label = 1;
        v.evidence = "high entropy:";
      }
      v.evidence += " " + s.name + "=" + fixed2(s.entropy);
    }
  }
  return v;
}

DetectorVerdict sparse_imports(const std::vector<SectionInfo>& sections, const ImportInfo& imports,
                               const PackingConfig& config) {
  DetectorVerdict v{std::string(detector::kSparseImports), 0, 1.0, {}, ""};
  std::uint64_t code_size = 0;
  for (const auto& s : sections) {
    const bool code = std::find(s.characteristics.begin(), s.characteristics.end(), "CNT_CODE") != s.characteristics.end() ||
                      std::find(s.characteristics.begin(), s.characteristics.end(), "MEM_EXECUTE") != s.characteristics.end();
    if (code) code_size += s.raw_size;
  }
  const std::size_t total = imports.function_count();
  v.evidence = std::to_string(total) + " imports, " + std::to_string(code_size) + " bytes of code";
  if (total < config.sparse_import_limit && code_size > 0) v.label = 1;
  return v;
}

}  // namespace

std::vector<PackerSignature> parse_packer_signatures(std::string_view text) {
  std::vector<PackerSignature> out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string_view::npos || trim(line.substr(0, comma)).empty() || trim(line.substr(comma + 1)).empty()) {
      throw Error(ErrorCode::SchemaError, "packer signature line " + std::to_string(line_no) + ": expected prefix,name");
    }
    out.push_back({std::string(trim(line.substr(0, comma))), std::string(trim(line.substr(comma + 1)))});
  }
  return out;
}

const std::vector<PackerSignature>& bundled_packer_signatures() {
  static const std::vector<PackerSignature> sigs = parse_packer_signatures(embedded::kPackerSignatureText);
  return sigs;
}

double PackingConfig::weight_of(std::string_view id) const {
  const auto it = weights.find(id);
  return it == weights.end() ? 1.0 : it->second;
}

void validate(const PackingConfig& config) {
  for (const auto& id : config.detectors) {
    if (std::find(kBuiltinDetectors.begin(), kBuiltinDetectors.end(), id) == kBuiltinDetectors.end()) {
      throw Error(ErrorCode::SchemaError, "unknown detector '" + id + "'");
    }
  }
  for (const auto& [id, w] : config.weights) {
    if (std::find(kBuiltinDetectors.begin(), kBuiltinDetectors.end(), id) == kBuiltinDetectors.end()) {
      throw Error(ErrorCode::SchemaError, "weight given for unknown detector '" + id + "'");
    }
    if (!(w > 0.0)) throw Error(ErrorCode::NonPositiveWeight, "detector '" + id + "' has non-positive weight");
  }
}

std::vector<DetectorVerdict> run_detectors(const ParsedPe& pe, const std::vector<SectionInfo>& sections,
                                           const ImportInfo& imports, const PackingConfig& config) {
  std::vector<DetectorVerdict> out;
  for (const auto& id : config.detectors) {
    DetectorVerdict v;
    if (id == detector::kSectionSignature) {
      v = section_signature(sections, config);
    } else if (id == detector::kEntryPointSection) {
      v = entry_point_section(pe);
    } else if (id == detector::kSectionEntropy) {
      v = section_entropy(sections, config);
    } else if (id == detector::kSparseImports) {
      v = sparse_imports(sections, imports, config);
    } else {
      throw Error(ErrorCode::SchemaError, "unknown detector '" + id + "'");
    }
    v.weight = config.weight_of(id);
    out.push_back(std::move(v));
  }
  return out;
}

double aggregate_packing_label(std::span<const DetectorVerdict> verdicts) {
  if (verdicts.empty()) throw Error(ErrorCode::EmptyEnsemble, "no detector verdicts");
  double num = 0.0;
  double den = 0.0;
  for (const auto& v : verdicts) {
    if (!(v.weight > 0.0)) throw Error(ErrorCode::NonPositiveWeight, "detector '" + v.detector_id + "' has non-positive weight");
    num += v.weight * (v.label != 0 ? 1.0 : 0.0);
    den += v.weight;
  }
  const double label = num / den;
  return std::clamp(label, 0.0, 1.0);
}

PackingVerdict build_packing_info(std::vector<DetectorVerdict> verdicts, double label, double likely_packed_threshold) {
  PackingVerdict out;
  out.label = label;
  out.likely_packed = label >= likely_packed_threshold;
  std::set<std::string> packers;
  for (const auto& v : verdicts) {
    if (v.label != 0) packers.insert(v.packer_names.begin(), v.packer_names.end());
  }
  out.packers.assign(packers.begin(), packers.end());
  out.verdicts = std::move(verdicts);
  return out;
}

}  // namespace pesem
