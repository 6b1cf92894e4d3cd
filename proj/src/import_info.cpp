#include "pesem/import_info.hpp"

#include "pesem/digest.hpp"
#include "pesem/embedded_ordinals.hpp"
#include "pesem/error.hpp"

#include <algorithm>
#include <charconv>

namespace pesem {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::string imphash_library_name(std::string_view dll) {
  std::string lib = ascii_lower(dll);
  const auto dot = lib.rfind('.');
  if (dot != std::string::npos) {
    const std::string_view ext = std::string_view(lib).substr(dot + 1);
    if (ext == "dll" || ext == "ocx" || ext == "sys") lib.resize(dot);
  }
  return lib;
}

}  // namespace

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

OrdinalTable OrdinalTable::parse(std::string_view text) {
  OrdinalTable table;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string_view::npos ? c1 : line.find(',', c1 + 1);
    if (c2 == std::string_view::npos) {
      throw Error(ErrorCode::SchemaError, "ordinal table line " + std::to_string(line_no) + ": expected dll,ordinal,name");
    }
    const std::string_view dll = trim(line.substr(0, c1));
    const std::string_view ord_text = trim(line.substr(c1 + 1, c2 - c1 - 1));
    const std::string_view name = trim(line.substr(c2 + 1));
    std::uint32_t ordinal = 0;
    const auto [ptr, ec] = std::from_chars(ord_text.data(), ord_text.data() + ord_text.size(), ordinal);
    if (ec != std::errc{} || ptr != ord_text.data() + ord_text.size() || dll.empty() || name.empty()) {
      throw Error(ErrorCode::SchemaError, "ordinal table line " + std::to_string(line_no) + ": malformed record");
    }
    table.names_[{ascii_lower(dll), ordinal}] = std::string(name);
  }
  return table;
}

const OrdinalTable& OrdinalTable::bundled() {
  static const OrdinalTable table = parse(embedded::kOrdinalTableText);
  return table;
}

std::optional<std::string> OrdinalTable::lookup(std::string_view dll, std::uint32_t ordinal) const {
  if (ordinal == 0) return std::nullopt;
  const auto it = names_.find({ascii_lower(dll), ordinal});
  if (it == names_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::string> resolve_ordinal(std::string_view dll, std::uint32_t ordinal) {
  return OrdinalTable::bundled().lookup(dll, ordinal);
}

std::string render_import_entry(std::string_view dll, const ImportEntry& entry, const OrdinalTable& ordinals) {
  if (const auto* named = std::get_if<ImportByName>(&entry)) return named->name;
  const auto ordinal = std::get<ImportByOrdinal>(entry).ordinal;
  if (auto name = ordinals.lookup(dll, ordinal)) return *name;
  return "ord" + std::to_string(ordinal);
}

std::string compute_imphash(const ImportTable& imports, const OrdinalTable& ordinals) {
  std::string joined;
  for (const auto& lib : imports.libraries) {
    const std::string prefix = imphash_library_name(lib.dll_name);
    for (const auto& entry : lib.entries) {
      if (!joined.empty()) joined.push_back(',');
      joined += prefix;
      joined.push_back('.');
      joined += ascii_lower(render_import_entry(lib.dll_name, entry, ordinals));
    }
  }
  return md5_hex(joined);
}

std::string_view to_string(Exploit exploit) noexcept {
  switch (exploit) {
    case Exploit::CodeInjection: return "code_injection";
    case Exploit::DynamicDllLoading: return "dynamic_dll_loading";
    case Exploit::MemoryScraping: return "memory_scraping";
    case Exploit::UnpackingSelfInjection: return "unpacking_self_injection";
    case Exploit::ExecuteProgram: return "execute_program";
    case Exploit::QueryArtifact: return "query_artifact";
  }
  return "unknown";
}

std::optional<Exploit> parse_exploit(std::string_view name) noexcept {
  for (const auto& cluster : risk_clusters()) {
    if (to_string(cluster.exploit) == name) return cluster.exploit;
  }
  return std::nullopt;
}

const std::vector<RiskCluster>& risk_clusters() {
  static const std::vector<RiskCluster> clusters{
      {Exploit::CodeInjection,
       {"CreateRemoteThread", "OpenProcess", "VirtualAllocEx", "WriteProcessMemory", "EnumProcesses"},
       2},
      {Exploit::DynamicDllLoading, {"LoadLibrary", "GetProcAddress"}, 1},
      {Exploit::MemoryScraping, {"CreateToolhelp32Snapshot", "OpenProcess", "ReadProcessMemory", "EnumProcesses"}, 2},
      {Exploit::UnpackingSelfInjection, {"VirtualAlloc", "VirtualProtect"}, 2},
      {Exploit::ExecuteProgram, {"WinExec", "ShellExecute", "CreateProcess"}, 1},
      {Exploit::QueryArtifact, {"CreateMutex", "CreateFile", "FindWindow", "GetModuleHandle", "RegOpenKeyEx"}, 2},
  };
  return clusters;
}

bool api_name_matches(std::string_view imported, std::string_view listed) noexcept {
  auto eq = [](char a, char b) {
    auto lower = [](char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; };
    return lower(a) == lower(b);
  };
  if (imported.size() == listed.size() + 1) {
    const char last = imported.back();
    if (last != 'A' && last != 'W' && last != 'a' && last != 'w') return false;
    imported.remove_suffix(1);
  }
  return imported.size() == listed.size() && std::equal(imported.begin(), imported.end(), listed.begin(), eq);
}

std::vector<RiskTag> tag_risky_apis(const ImportTable& imports, const OrdinalTable& ordinals) {
  std::vector<std::string> names;
  for (const auto& lib : imports.libraries) {
    for (const auto& entry : lib.entries) names.push_back(render_import_entry(lib.dll_name, entry, ordinals));
  }
  std::vector<RiskTag> tags;
  for (const auto& cluster : risk_clusters()) {
    RiskTag tag{std::string(to_string(cluster.exploit)), {}, cluster.required};
    int distinct_listed = 0;
    for (const auto& listed : cluster.apis) {
      bool hit = false;
      for (const auto& name : names) {
        if (!api_name_matches(name, listed)) continue;
        hit = true;
        if (std::find(tag.matched_apis.begin(), tag.matched_apis.end(), name) == tag.matched_apis.end()) {
          tag.matched_apis.push_back(name);
        }
      }
      if (hit) ++distinct_listed;
    }
    if (distinct_listed >= cluster.required) tags.push_back(std::move(tag));
  }
  return tags;
}

std::size_t ImportInfo::function_count() const noexcept {
  std::size_t n = 0;
  for (const auto& [dll, functions] : libraries) n += functions.size();
  return n;
}

ImportInfo build_import_info(const ImportTable& imports, const OrdinalTable& ordinals) {
  ImportInfo info;
  ImportSummary summary;
  summary.imphash = compute_imphash(imports, ordinals);
  for (const auto& lib : imports.libraries) {
    const std::string key = ascii_lower(lib.dll_name);
    auto it = std::find_if(info.libraries.begin(), info.libraries.end(),
                           [&](const auto& kv) { return ascii_lower(kv.first) == key; });
    if (it == info.libraries.end()) {
      info.libraries.emplace_back(lib.dll_name, std::vector<std::string>{});
      it = std::prev(info.libraries.end());
    }
    for (const auto& entry : lib.entries) {
      if (std::holds_alternative<ImportByName>(entry)) {
        ++summary.named_count;
      } else {
        ++summary.ordinal_count;
      }
      it->second.push_back(render_import_entry(lib.dll_name, entry, ordinals));
    }
  }
  summary.risk_tags = tag_risky_apis(imports, ordinals);
  info.summary = std::move(summary);
  return info;
}

}  // namespace pesem
