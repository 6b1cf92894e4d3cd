#pragma once

#include "pesem/global_info.hpp"
#include "pesem/import_info.hpp"
#include "pesem/packing.hpp"
#include "pesem/rules.hpp"
#include "pesem/section_info.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pesem {

inline constexpr std::string_view kReportSchemaVersion = "1.0";

/// The five-part analysis document. `packing` is empty only after budget
/// truncation; the serialized form then carries an empty object.
struct Report {
  std::string schema_version{kReportSchemaVersion};
  GlobalInfo global;
  std::vector<SectionInfo> sections;
  ImportInfo imports;
  std::optional<PackingVerdict> packing;
  Capabilities capabilities;

  bool operator==(const Report&) const = default;
};

Report build_report(GlobalInfo global, std::vector<SectionInfo> sections, ImportInfo imports, PackingVerdict packing,
                    Capabilities capabilities);

/// Canonical UTF-8 JSON: fixed key order, two-space indentation, arrays of
/// scalars on one line, every real number with four decimals. Equal reports
/// serialize to equal bytes.
std::string serialize_report(const Report& report);

/// Inverse of serialize_report (up to the four-decimal rounding of reals).
/// Throws Error(SchemaError) on malformed input.
Report parse_report(std::string_view json_text);

/// File name a report is stored under: "<sha256>.json".
std::string report_file_name(const Report& report);

}  // namespace pesem
