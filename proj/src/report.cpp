#include "pesem/report.hpp"

#include "pesem/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>

namespace pesem {
namespace {

using ojson = nlohmann::ordered_json;

ojson string_array(const std::vector<std::string>& v) {
  ojson a = ojson::array();
  for (const auto& s : v) a.push_back(s);
  return a;
}

ojson to_ojson(const GlobalInfo& g) {
  ojson j;
  j["file_name"] = g.file_name;
  j["sha256"] = g.sha256;
  j["md5"] = g.md5;
  j["file_type"] = g.file_type;
  j["target_os"] = g.target_os;
  j["compile_timestamp"] = g.compile_timestamp;
  j["file_size"] = g.file_size;
  j["entropy"] = g.entropy;
  j["warnings"] = string_array(g.warnings);
  return j;
}

ojson to_ojson(const SectionInfo& s) {
  ojson j;
  j["name"] = s.name;
  j["raw_size"] = s.raw_size;
  j["virtual_size"] = s.virtual_size;
  if (s.sha256) j["sha256"] = *s.sha256;
  j["entropy"] = s.entropy;
  j["characteristics"] = string_array(s.characteristics);
  j["anomalies"] = string_array(s.anomalies);
  return j;
}

ojson to_ojson(const ImportInfo& info) {
  ojson j = ojson::object();
  if (info.summary) {
    j["imphash"] = info.summary->imphash;
    j["named_count"] = info.summary->named_count;
    j["ordinal_count"] = info.summary->ordinal_count;
    ojson tags = ojson::array();
    for (const auto& t : info.summary->risk_tags) {
      ojson tag;
      tag["exploit"] = t.exploit;
      tag["matched_apis"] = string_array(t.matched_apis);
      tag["required"] = t.required;
      tags.push_back(std::move(tag));
    }
    j["risk_tags"] = std::move(tags);
  }
  ojson libs = ojson::object();
  for (const auto& [dll, functions] : info.libraries) libs[dll] = string_array(functions);
  j["libraries"] = std::move(libs);
  return j;
}

ojson to_ojson(const std::optional<PackingVerdict>& packing) {
  ojson j = ojson::object();
  if (!packing) return j;
  j["label"] = packing->label;
  j["likely_packed"] = packing->likely_packed;
  j["packers"] = string_array(packing->packers);
  ojson detectors = ojson::array();
  for (const auto& v : packing->verdicts) {
    ojson d;
    d["id"] = v.detector_id;
    d["label"] = v.label;
    d["weight"] = v.weight;
    d["packers"] = string_array(v.packer_names);
    d["evidence"] = v.evidence;
    detectors.push_back(std::move(d));
  }
  j["detectors"] = std::move(detectors);
  return j;
}

ojson to_ojson(const Capabilities& caps) {
  ojson j;
  ojson attack = ojson::array();
  for (const auto& c : caps.attack) {
    ojson e;
    e["technique_id"] = c.ref.technique_id;
    e["tactic"] = c.ref.tactic;
    e["technique"] = c.ref.technique;
    e["rules"] = string_array(c.rules);
    attack.push_back(std::move(e));
  }
  ojson mbc = ojson::array();
  for (const auto& c : caps.mbc) {
    ojson e;
    e["behavior_id"] = c.ref.behavior_id;
    e["objective"] = c.ref.objective;
    e["behavior"] = c.ref.behavior;
    e["rules"] = string_array(c.rules);
    mbc.push_back(std::move(e));
  }
  j["attack"] = std::move(attack);
  j["mbc"] = std::move(mbc);
  return j;
}

ojson to_ojson(const Report& r) {
  ojson j;
  j["schema_version"] = r.schema_version;
  j["global"] = to_ojson(r.global);
  ojson sections = ojson::array();
  for (const auto& s : r.sections) sections.push_back(to_ojson(s));
  j["sections"] = std::move(sections);
  j["imports"] = to_ojson(r.imports);
  j["packing"] = to_ojson(r.packing);
  j["capabilities"] = to_ojson(r.capabilities);
  return j;
}

bool is_scalar(const ojson& j) { return !j.is_object() && !j.is_array(); }

void write_scalar(const ojson& j, std::string& out) {
  if (j.is_number_float()) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", j.get<double>());
    out += buf;
  } else {
    out += j.dump(-1, ' ', false, ojson::error_handler_t::replace);
  }
}

void write_canonical(const ojson& j, std::string& out, int depth) {
  const std::string pad(static_cast<std::size_t>(depth + 1) * 2, ' ');
  const std::string close_pad(static_cast<std::size_t>(depth) * 2, ' ');
  if (j.is_object()) {
    if (j.empty()) {
      out += "{}";
      return;
    }
    out += "{\n";
    bool first = true;
    for (const auto& [key, value] : j.items()) {
      if (!first) out += ",\n";
      first = false;
      out += pad;
      out += ojson(key).dump(-1, ' ', false, ojson::error_handler_t::replace);
      out += ": ";
      write_canonical(value, out, depth + 1);
    }
    out += "\n" + close_pad + "}";
  } else if (j.is_array()) {
    if (j.empty()) {
      out += "[]";
      return;
    }
    const bool inline_array = std::all_of(j.begin(), j.end(), is_scalar);
    if (inline_array) {
      out += "[";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ", ";
        write_scalar(j[i], out);
      }
      out += "]";
      return;
    }
    out += "[\n";
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (i) out += ",\n";
      out += pad;
      write_canonical(j[i], out, depth + 1);
    }
    out += "\n" + close_pad + "]";
  } else {
    write_scalar(j, out);
  }
}

// --- parsing ---------------------------------------------------------------

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::SchemaError, "report: " + what); }

const ojson& field(const ojson& j, const char* key, const char* where) {
  if (!j.is_object() || !j.contains(key)) bad(std::string(where) + " lacks '" + key + "'");
  return j.at(key);
}

std::string str(const ojson& j, const char* key, const char* where) {
  const auto& v = field(j, key, where);
  if (!v.is_string()) bad(std::string(where) + "." + key + " must be a string");
  return v.get<std::string>();
}

double real(const ojson& j, const char* key, const char* where) {
  const auto& v = field(j, key, where);
  if (!v.is_number()) bad(std::string(where) + "." + key + " must be a number");
  return v.get<double>();
}

template <class T>
T integer(const ojson& j, const char* key, const char* where) {
  const auto& v = field(j, key, where);
  if (!v.is_number_unsigned() && !v.is_number_integer()) bad(std::string(where) + "." + key + " must be an integer");
  return v.get<T>();
}

std::vector<std::string> strings(const ojson& j, const char* key, const char* where) {
  const auto& v = field(j, key, where);
  if (!v.is_array()) bad(std::string(where) + "." + key + " must be an array");
  std::vector<std::string> out;
  for (const auto& e : v) {
    if (!e.is_string()) bad(std::string(where) + "." + key + " must hold strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

}  // namespace

Report build_report(GlobalInfo global, std::vector<SectionInfo> sections, ImportInfo imports, PackingVerdict packing,
                    Capabilities capabilities) {
  Report r;
  r.global = std::move(global);
  r.sections = std::move(sections);
  r.imports = std::move(imports);
  r.packing = std::move(packing);
  r.capabilities = std::move(capabilities);
  return r;
}

std::string serialize_report(const Report& report) {
  std::string out;
  write_canonical(to_ojson(report), out, 0);
  out += "\n";
  return out;
}

std::string report_file_name(const Report& report) { return report.global.sha256 + ".json"; }

Report parse_report(std::string_view json_text) {
  ojson j;
  try {
    j = ojson::parse(json_text);
  } catch (const ojson::parse_error& e) {
    bad(std::string("invalid JSON: ") + e.what());
  }
  Report r;
  r.schema_version = str(j, "schema_version", "report");

  const auto& g = field(j, "global", "report");
  r.global.file_name = str(g, "file_name", "global");
  r.global.sha256 = str(g, "sha256", "global");
  r.global.md5 = str(g, "md5", "global");
  r.global.file_type = str(g, "file_type", "global");
  r.global.target_os = str(g, "target_os", "global");
  r.global.compile_timestamp = str(g, "compile_timestamp", "global");
  r.global.file_size = integer<std::uint64_t>(g, "file_size", "global");
  r.global.entropy = real(g, "entropy", "global");
  r.global.warnings = strings(g, "warnings", "global");

  const auto& sections = field(j, "sections", "report");
  if (!sections.is_array()) bad("sections must be an array");
  for (const auto& s : sections) {
    SectionInfo info;
    info.name = str(s, "name", "section");
    info.raw_size = integer<std::uint32_t>(s, "raw_size", "section");
    info.virtual_size = integer<std::uint32_t>(s, "virtual_size", "section");
    if (s.contains("sha256")) info.sha256 = str(s, "sha256", "section");
    info.entropy = real(s, "entropy", "section");
    info.characteristics = strings(s, "characteristics", "section");
    info.anomalies = strings(s, "anomalies", "section");
    r.sections.push_back(std::move(info));
  }

  const auto& imports = field(j, "imports", "report");
  if (imports.contains("imphash")) {
    ImportSummary summary;
    summary.imphash = str(imports, "imphash", "imports");
    summary.named_count = integer<std::size_t>(imports, "named_count", "imports");
    summary.ordinal_count = integer<std::size_t>(imports, "ordinal_count", "imports");
    const auto& tags = field(imports, "risk_tags", "imports");
    if (!tags.is_array()) bad("imports.risk_tags must be an array");
    for (const auto& t : tags) {
      summary.risk_tags.push_back(
          {str(t, "exploit", "risk_tag"), strings(t, "matched_apis", "risk_tag"), integer<int>(t, "required", "risk_tag")});
    }
    r.imports.summary = std::move(summary);
  }
  const auto& libs = field(imports, "libraries", "imports");
  if (!libs.is_object()) bad("imports.libraries must be an object");
  for (const auto& [dll, functions] : libs.items()) {
    if (!functions.is_array()) bad("imports.libraries values must be arrays");
    std::vector<std::string> names;
    for (const auto& f : functions) {
      if (!f.is_string()) bad("imports.libraries values must hold strings");
      names.push_back(f.get<std::string>());
    }
    r.imports.libraries.emplace_back(dll, std::move(names));
  }

  const auto& packing = field(j, "packing", "report");
  if (!packing.is_object()) bad("packing must be an object");
  if (!packing.empty()) {
    PackingVerdict p;
    p.label = real(packing, "label", "packing");
    const auto& lp = field(packing, "likely_packed", "packing");
    if (!lp.is_boolean()) bad("packing.likely_packed must be a boolean");
    p.likely_packed = lp.get<bool>();
    p.packers = strings(packing, "packers", "packing");
    const auto& detectors = field(packing, "detectors", "packing");
    if (!detectors.is_array()) bad("packing.detectors must be an array");
    for (const auto& d : detectors) {
      DetectorVerdict v;
      v.detector_id = str(d, "id", "detector");
      v.label = integer<int>(d, "label", "detector");
      v.weight = real(d, "weight", "detector");
      v.packer_names = strings(d, "packers", "detector");
      v.evidence = str(d, "evidence", "detector");
      p.verdicts.push_back(std::move(v));
    }
    r.packing = std::move(p);
  }

  const auto& caps = field(j, "capabilities", "report");
  const auto& attack = field(caps, "attack", "capabilities");
  const auto& mbc = field(caps, "mbc", "capabilities");
  if (!attack.is_array() || !mbc.is_array()) bad("capabilities.attack and .mbc must be arrays");
  for (const auto& a : attack) {
    r.capabilities.attack.push_back(
        {{str(a, "technique_id", "attack"), str(a, "tactic", "attack"), str(a, "technique", "attack")},
         strings(a, "rules", "attack")});
  }
  for (const auto& m : mbc) {
    r.capabilities.mbc.push_back(
        {{str(m, "behavior_id", "mbc"), str(m, "objective", "mbc"), str(m, "behavior", "mbc")}, strings(m, "rules", "mbc")});
  }
  return r;
}

}  // namespace pesem
