#pragma once

#include "pesem/pe_parser.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pesem {

/// Ordinal-to-name lookup loaded from "dll,ordinal,name" records. DLL names
/// are matched case-insensitively and must include their extension.
class OrdinalTable {
 public:
  OrdinalTable() = default;

  /// Parses the record format; '#' starts a comment line. Throws
  /// Error(SchemaError) on a malformed record.
  static OrdinalTable parse(std::string_view text);
  /// The table compiled in from data/ordinals.csv.
  static const OrdinalTable& bundled();

  [[nodiscard]] std::optional<std::string> lookup(std::string_view dll, std::uint32_t ordinal) const;
  [[nodiscard]] std::size_t size() const noexcept { return names_.size(); }

 private:
  std::map<std::pair<std::string, std::uint32_t>, std::string> names_;
};

/// Looks up the bundled table. Ordinals start at 1; 0 never resolves.
std::optional<std::string> resolve_ordinal(std::string_view dll, std::uint32_t ordinal);

/// Name an entry is reported under: its import name, the resolved ordinal
/// name, or "ord{N}".
std::string render_import_entry(std::string_view dll, const ImportEntry& entry, const OrdinalTable& ordinals);

/// md5 over "dll.function" items (lowercase, dll without .dll/.ocx/.sys),
/// comma-joined in import order. Ordinals enter by resolved name or "ord{N}".
std::string compute_imphash(const ImportTable& imports, const OrdinalTable& ordinals = OrdinalTable::bundled());

enum class Exploit {
  CodeInjection,
  DynamicDllLoading,
  MemoryScraping,
  UnpackingSelfInjection,
  ExecuteProgram,
  QueryArtifact,
};

std::string_view to_string(Exploit exploit) noexcept;
std::optional<Exploit> parse_exploit(std::string_view name) noexcept;

struct RiskCluster {
  Exploit exploit;
  std::vector<std::string_view> apis;
  int required;
};

/// The risky-API clusters, one per exploit category.
const std::vector<RiskCluster>& risk_clusters();

/// Case-insensitive comparison that also accepts an A or W suffix on the
/// imported name ("CreateFileW" matches "CreateFile").
bool api_name_matches(std::string_view imported, std::string_view listed) noexcept;

struct RiskTag {
  std::string exploit;
  std::vector<std::string> matched_apis;  // spelled as imported, in cluster order
  int required = 0;

  bool operator==(const RiskTag&) const = default;
};

std::vector<RiskTag> tag_risky_apis(const ImportTable& imports, const OrdinalTable& ordinals = OrdinalTable::bundled());

struct ImportSummary {
  std::string imphash;
  std::size_t named_count = 0;
  std::size_t ordinal_count = 0;
  std::vector<RiskTag> risk_tags;

  bool operator==(const ImportSummary&) const = default;
};

/// DLL name to reported function names. Repeated descriptors for the same
/// DLL (compared case-insensitively) are merged under the first spelling.
using LibraryList = std::vector<std::pair<std::string, std::vector<std::string>>>;

struct ImportInfo {
  std::optional<ImportSummary> summary;  // absent only after budget truncation
  LibraryList libraries;

  [[nodiscard]] std::size_t function_count() const noexcept;
  bool operator==(const ImportInfo&) const = default;
};

ImportInfo build_import_info(const ImportTable& imports, const OrdinalTable& ordinals = OrdinalTable::bundled());

std::string ascii_lower(std::string_view s);

}  // namespace pesem
