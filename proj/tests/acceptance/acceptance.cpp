// Runs every acceptance criterion of the core library and prints one
// PASS/FAIL line per criterion. Exit status is non-zero if any fails.

#include "fixtures.hpp"
#include "pe_builder.hpp"

#include "pesem/classifier.hpp"
#include "pesem/cli.hpp"
#include "pesem/digest.hpp"
#include "pesem/featurize.hpp"
#include "pesem/global_info.hpp"
#include "pesem/import_info.hpp"
#include "pesem/manifest.hpp"
#include "pesem/metrics.hpp"
#include "pesem/packing.hpp"
#include "pesem/pipeline.hpp"
#include "pesem/report.hpp"
#include "pesem/rules.hpp"
#include "pesem/token_budget.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace pesem;
using namespace pesem::testing;
namespace fs = std::filesystem;

namespace {

const fs::path kSource = PESEM_SOURCE_DIR;
const auto kClock = std::chrono::sys_days{std::chrono::year{2026} / 1 / 1};

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects failed expectations; the first few messages end up in the detail.
struct Tally {
  std::size_t checks = 0;
  std::vector<std::string> failures;

  void expect(bool ok, const std::string& what) {
    ++checks;
    if (!ok) failures.push_back(what);
  }
  Outcome outcome(const std::string& summary) const {
    if (failures.empty()) return {true, summary + ", " + std::to_string(checks) + " checks"};
    std::string d = std::to_string(failures.size()) + "/" + std::to_string(checks) + " checks failed";
    for (std::size_t i = 0; i < failures.size() && i < 3; ++i) d += "; " + failures[i];
    return {false, d};
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string shell(const std::string& command) {
  std::string out;
  FILE* p = popen(command.c_str(), "r");
  if (!p) return out;
  char buf[4096];
  for (std::size_t n; (n = std::fread(buf, 1, sizeof buf, p)) > 0;) out.append(buf, n);
  pclose(p);
  return out;
}

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// ---------------------------------------------------------------- entropy

double entropy_oracle(const std::vector<std::uint8_t>& bytes) {
  if (bytes.empty()) return 0.0;
  std::array<std::size_t, 256> hist{};
  for (auto b : bytes) ++hist[b];
  double h = 0.0;
  for (auto c : hist) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(bytes.size());
    h -= p * std::log2(p);
  }
  return h;
}

Outcome entropy_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  Tally t;
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = rng() % (64 * 1024 + 1);
    const unsigned alphabet = 1 + static_cast<unsigned>(rng() % 256);
    std::vector<std::uint8_t> buf(n);
    for (auto& b : buf) b = static_cast<std::uint8_t>(rng() % alphabet);
    const double ours = shannon_entropy(buf), oracle = entropy_oracle(buf);
    t.expect(std::fabs(ours - oracle) <= 1e-9, "buffer " + std::to_string(i) + " differs: " + fmt("%.12f", ours));
  }
  const std::vector<std::uint8_t> constant(4096, 0x41);
  t.expect(shannon_entropy(constant) == 0.0, "constant buffer is not 0");
  std::vector<std::uint8_t> uniform(256);
  for (int i = 0; i < 256; ++i) uniform[i] = static_cast<std::uint8_t>(i);
  t.expect(shannon_entropy(uniform) == 8.0, "uniform 256-byte buffer is not 8");
  const double secs = seconds_since(t0);
  t.expect(secs < 10.0, "runtime " + fmt("%.2f s", secs));
  return t.outcome("1000 buffers within 1e-9 in " + fmt("%.2f s", secs));
}

// ---------------------------------------------------------------- packing label

Outcome packing_aggregation() {
  Tally t;
  auto make = [](const std::vector<int>& labels, const std::vector<double>& weights) {
    std::vector<DetectorVerdict> vs;
    for (std::size_t i = 0; i < labels.size(); ++i) vs.push_back({"d" + std::to_string(i), labels[i], weights[i], {}, ""});
    return vs;
  };
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> weight(1e-3, 100.0);
  const std::array<double, 4> scales{1e-3, 0.5, 3.0, 1e3};
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t n = 1 + rng() % 8;
    std::vector<int> labels(n);
    std::vector<double> weights(n);
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = static_cast<int>(rng() % 2);
      weights[i] = weight(rng);
    }
    const double l = aggregate_packing_label(make(labels, weights));
    const bool all_zero = std::count(labels.begin(), labels.end(), 0) == static_cast<long>(n);
    const bool all_one = std::count(labels.begin(), labels.end(), 1) == static_cast<long>(n);
    t.expect(l >= 0.0 && l <= 1.0, "out of range");
    t.expect((l == 0.0) == all_zero, "zero iff all labels 0");
    t.expect((l == 1.0) == all_one, "one iff all labels 1");
    for (std::size_t i = 0; i < n; ++i) {
      if (labels[i] != 0) continue;
      auto flipped = labels;
      flipped[i] = 1;
      t.expect(aggregate_packing_label(make(flipped, weights)) > l, "0->1 flip did not increase the label");
    }
    const double c = scales[rng() % scales.size()];
    auto scaled = weights;
    for (auto& w : scaled) w *= c;
    t.expect(std::fabs(aggregate_packing_label(make(labels, scaled)) - l) <= 1e-12, "weight scaling changed the label");
  }
  t.expect(aggregate_packing_label(make({1, 0, 1, 0}, {1, 1, 1, 1})) == 0.5, "worked example 0.5");
  t.expect(aggregate_packing_label(make({1, 0, 1}, {2, 1, 1})) == 0.75, "worked example 0.75");
  return t.outcome("10000 ensembles, worked values 0.5 and 0.75 exact");
}

// ---------------------------------------------------------------- golden fixtures

struct DumpedPe {
  std::string time_date;
  std::string magic;
  unsigned characteristics = 0;
  unsigned subsystem = 0;
  std::vector<std::pair<std::string, unsigned>> sections;  // name, size
  std::vector<std::pair<std::string, std::vector<std::string>>> imports;  // dll, names or "#<ordinal>"
};

DumpedPe objdump(const fs::path& file) {
  DumpedPe d;
  std::istringstream p(shell("TZ=UTC LC_ALL=C objdump -p '" + file.string() + "' 2>/dev/null"));
  std::string line;
  bool in_imports = false;
  while (std::getline(p, line)) {
    auto value = [&](const std::string& key) {
      auto rest = line.substr(key.size());
      rest.erase(0, rest.find_first_not_of(" \t"));
      return rest;
    };
    if (line.rfind("Characteristics 0x", 0) == 0) d.characteristics = std::stoul(value("Characteristics "), nullptr, 16);
    else if (line.rfind("Time/Date", 0) == 0) d.time_date = value("Time/Date");
    else if (line.rfind("Magic", 0) == 0) d.magic = value("Magic").substr(0, 4);
    else if (line.rfind("Subsystem", 0) == 0) d.subsystem = std::stoul(value("Subsystem").substr(0, 8), nullptr, 16);
    else if (line.find("DLL Name: ") != std::string::npos) {
      d.imports.push_back({line.substr(line.find("DLL Name: ") + 10), {}});
      in_imports = true;
    } else if (in_imports && !line.empty() && line[0] == '\t' && line.find("vma:") == std::string::npos) {
      std::istringstream fields(line);
      std::string vma, hint, name;
      fields >> vma >> hint >> name;
      if (name.empty()) continue;
      d.imports.back().second.push_back(name == "<none>" ? "#" + hint : name);
    } else if (line.empty() || line[0] != '\t') {
      in_imports = false;
    }
  }
  std::istringstream h(shell("LC_ALL=C objdump -h '" + file.string() + "' 2>/dev/null"));
  while (std::getline(h, line)) {
    std::istringstream fields(line);
    std::string idx, name, size;
    fields >> idx >> name >> size;
    if (idx.empty() || !std::all_of(idx.begin(), idx.end(), ::isdigit) || size.empty()) continue;
    d.sections.push_back({name, static_cast<unsigned>(std::stoul(size, nullptr, 16))});
  }
  return d;
}

// "2020-01-01T00:00:00Z" rendered the way objdump prints Time/Date.
std::string ctime_style(const std::string& iso) {
  std::tm tm{};
  std::istringstream in(iso);
  in >> std::get_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  const std::time_t t = timegm(&tm);
  std::tm utc{};
  gmtime_r(&t, &utc);
  char buf[64];
  std::strftime(buf, sizeof buf, "%a %b %e %H:%M:%S %Y", &utc);
  return buf;
}

Outcome golden_fixtures() {
  Tally t;
  const std::set<std::string> required{"plain.exe", "library.dll", "upx.exe", "rsrc_exec.exe", "ordinal.exe",
                                       "noimports.exe"};
  std::set<std::string> matched;
  std::size_t dumped = 0;
  const bool have_objdump = !shell("objdump --version 2>/dev/null").empty();
  t.expect(have_objdump, "objdump not available for the header cross-check");
  for (const auto& f : fixture_corpus()) {
    const fs::path file = kSource / "tests/fixtures" / f.file_name;
    const auto on_disk = read_text_file(file);
    const auto built = build_pe(f.spec);
    t.expect(on_disk == std::string(built.begin(), built.end()), f.file_name + " differs from its generator");
    const Report report = analyze_file(file, {});
    const auto text = serialize_report(analyze(RawBinary(built), f.file_name, {}, kClock));
    const auto golden = read_text_file(kSource / "tests/golden" / (fs::path(f.file_name).stem().string() + ".json"));
    const bool same = text == golden;
    t.expect(same, f.file_name + " report differs from golden");
    if (same) matched.insert(f.file_name);

    if (!have_objdump) continue;
    const DumpedPe d = objdump(file);
    ++dumped;
    const auto& g = report.global;
    if (g.compile_timestamp != "invalid")
      t.expect(ctime_style(g.compile_timestamp) == d.time_date, f.file_name + " timestamp " + d.time_date);
    const bool pe32plus = d.magic == "020b";
    t.expect(g.target_os.ends_with(pe32plus ? "/x64" : "/x86"), f.file_name + " architecture");
    const std::string qualifier = d.subsystem == 3 ? "/console/" : d.subsystem == 2 ? "/gui/" : "/";
    t.expect(g.target_os.find(qualifier) != std::string::npos, f.file_name + " subsystem");
    t.expect(g.file_type == ((d.characteristics & 0x2000) ? "dll" : "exe"), f.file_name + " file type");
    t.expect(d.sections.size() == report.sections.size(), f.file_name + " section count");
    for (std::size_t i = 0; i < std::min(d.sections.size(), report.sections.size()); ++i) {
      const auto& s = report.sections[i];
      t.expect(d.sections[i].first == s.name, f.file_name + " section name " + d.sections[i].first);
      const unsigned expect_size = std::min(s.raw_size, s.virtual_size);
      t.expect(d.sections[i].second == expect_size, f.file_name + " section size " + s.name);
    }
    const auto& libs = report.imports.libraries;
    t.expect(d.imports.size() == libs.size(), f.file_name + " import library count");
    for (std::size_t i = 0; i < std::min(d.imports.size(), libs.size()); ++i) {
      t.expect(d.imports[i].first == libs[i].first, f.file_name + " dll " + d.imports[i].first);
      t.expect(d.imports[i].second.size() == libs[i].second.size(), f.file_name + " function count");
      for (std::size_t k = 0; k < std::min(d.imports[i].second.size(), libs[i].second.size()); ++k)
        if (d.imports[i].second[k][0] != '#')
          t.expect(d.imports[i].second[k] == libs[i].second[k], f.file_name + " function " + d.imports[i].second[k]);
    }
    t.expect(g.sha256 == shell("sha256sum '" + file.string() + "'").substr(0, 64), f.file_name + " sha256");
    t.expect(g.md5 == shell("md5sum '" + file.string() + "'").substr(0, 32), f.file_name + " md5");
  }
  for (const auto& r : required) t.expect(matched.count(r) == 1, "missing golden fixture " + r);
  return t.outcome(std::to_string(matched.size()) + " fixtures byte-identical, " + std::to_string(dumped) +
                   " cross-checked with objdump");
}

// ---------------------------------------------------------------- imphash

// Community convention, written out independently of the library.
std::string imphash_reference_text(const std::vector<std::pair<std::string, std::vector<std::string>>>& imports) {
  static const std::map<std::pair<std::string, int>, std::string> kOrdinals{
      {{"ws2_32", 4}, "connect"}, {{"ws2_32", 23}, "socket"}, {{"ws2_32", 115}, "wsastartup"}};
  std::string joined;
  for (const auto& [dll, functions] : imports) {
    std::string lib = lower(dll);
    for (const char* ext : {".dll", ".ocx", ".sys"})
      if (lib.size() > 4 && lib.ends_with(ext)) lib.resize(lib.size() - 4);
    for (const auto& fn : functions) {
      std::string name = lower(fn);
      if (fn[0] == '#') {
        const int ord = std::stoi(fn.substr(1));
        const auto it = kOrdinals.find({lib, ord});
        name = it != kOrdinals.end() ? it->second : "ord" + std::to_string(ord);
      }
      if (!joined.empty()) joined += ",";
      joined += lib + "." + name;
    }
  }
  return joined;
}

std::string md5_tool(const std::string& text) {
  const auto tmp = fs::temp_directory_path() / "pesem_imphash_input.txt";
  {
    std::ofstream f(tmp, std::ios::binary);
    f << text;
  }
  const auto out = shell("md5sum '" + tmp.string() + "'").substr(0, 32);
  fs::remove(tmp);
  return out;
}

ImportTable random_table(std::mt19937_64& rng) {
  static const std::vector<std::string> dlls{"kernel32.dll", "user32.dll", "advapi32.dll", "ws2_32.dll",
                                             "ntdll.dll",    "shell32.dll", "msvcrt.dll", "driver.sys", "ctl.ocx"};
  ImportTable table;
  const std::size_t libs = 1 + rng() % 4;
  for (std::size_t i = 0; i < libs; ++i) {
    ImportedLibrary lib{dlls[rng() % dlls.size()], {}};
    const std::size_t n = 1 + rng() % 6;
    for (std::size_t k = 0; k < n; ++k) {
      if (rng() % 5 == 0 && lib.dll_name != "ws2_32.dll")
        lib.entries.push_back(ImportByOrdinal{static_cast<std::uint16_t>(1 + rng() % 200)});
      else
        lib.entries.push_back(ImportByName{"Fn" + std::to_string(rng() % 1000) + "Ex"});
    }
    table.libraries.push_back(lib);
  }
  return table;
}

Outcome imphash_convention() {
  Tally t;
  t.expect(compute_imphash(ImportTable{}) == "d41d8cd98f00b204e9800998ecf8427e", "empty table");
  t.expect(md5_tool("") == "d41d8cd98f00b204e9800998ecf8427e", "md5sum of the empty string");

  std::size_t compared = 0;
  for (const auto& f : fixture_corpus()) {
    const fs::path file = kSource / "tests/fixtures" / f.file_name;
    const DumpedPe d = objdump(file);
    const Report report = analyze_file(file, {});
    const std::string ours = report.imports.summary->imphash;
    const std::string expected = md5_tool(imphash_reference_text(d.imports));
    t.expect(ours == expected, f.file_name + " imphash " + ours + " vs " + expected);
    ++compared;
  }

  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    const ImportTable table = random_table(rng);
    const std::string h = compute_imphash(table);

    std::vector<std::pair<std::string, std::vector<std::string>>> plain;
    for (const auto& lib : table.libraries) {
      plain.push_back({lib.dll_name, {}});
      for (const auto& e : lib.entries) {
        if (const auto* n = std::get_if<ImportByName>(&e)) plain.back().second.push_back(n->name);
        else plain.back().second.push_back("#" + std::to_string(std::get<ImportByOrdinal>(e).ordinal));
      }
    }
    t.expect(h == md5_hex(imphash_reference_text(plain)), "random table disagrees with the reference");

    ImportTable variant = table;
    for (auto& lib : variant.libraries) {
      for (auto& c : lib.dll_name)
        if (rng() % 2) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
    t.expect(compute_imphash(variant) == h, "dll case/extension variant changed the hash");

    std::vector<std::pair<std::size_t, std::size_t>> positions;
    for (std::size_t i = 0; i < table.libraries.size(); ++i)
      for (std::size_t k = 0; k < table.libraries[i].entries.size(); ++k) positions.push_back({i, k});
    const auto a = positions[rng() % positions.size()], b = positions[rng() % positions.size()];
    ImportTable reordered = table;
    std::swap(reordered.libraries[a.first].entries[a.second], reordered.libraries[b.first].entries[b.second]);
    if (imphash_reference_text(plain) != [&] {
          std::vector<std::pair<std::string, std::vector<std::string>>> r = plain;
          std::swap(r[a.first].second[a.second], r[b.first].second[b.second]);
          return imphash_reference_text(r);
        }())
      t.expect(compute_imphash(reordered) != h, "reordering kept the hash");
  }
  return t.outcome(std::to_string(compared) + " fixtures match the objdump-derived reference, 500 random tables");
}

// ---------------------------------------------------------------- metrics

Outcome metrics_engine() {
  Tally t;
  std::vector<std::size_t> pred, label;
  const std::size_t confusion[2][2]{{8, 2}, {1, 9}};
  for (std::size_t a = 0; a < 2; ++a)
    for (std::size_t p = 0; p < 2; ++p)
      for (std::size_t k = 0; k < confusion[a][p]; ++k) {
        label.push_back(a);
        pred.push_back(p);
      }
  const auto r = classification_metrics(pred, label, {"negative", "positive"});
  const double p0 = 8.0 / 9.0, r0 = 8.0 / 10.0, p1 = 9.0 / 11.0, r1 = 9.0 / 10.0;
  t.expect(std::fabs(r.classes[0].precision - p0) < 1e-12, "precision class 0");
  t.expect(std::fabs(r.classes[0].recall - r0) < 1e-12, "recall class 0");
  t.expect(std::fabs(r.classes[0].f1 - 2 * p0 * r0 / (p0 + r0)) < 1e-12, "f1 class 0");
  t.expect(std::fabs(r.classes[1].precision - p1) < 1e-12, "precision class 1");
  t.expect(std::fabs(r.classes[1].recall - r1) < 1e-12, "recall class 1");
  t.expect(std::fabs(r.classes[1].f1 - 2 * p1 * r1 / (p1 + r1)) < 1e-12, "f1 class 1");

  // Published per-class test F1 and supports of the BERT run.
  const std::vector<double> f1{0.94, 0.95, 0.91, 0.95, 0.83, 0.86, 0.43, 0.99};
  const std::vector<std::size_t> support{5793, 3392, 150, 1471, 100, 183, 153, 35};
  const double weighted = weighted_average(f1, support);
  double num = 0, den = 0;
  for (std::size_t i = 0; i < f1.size(); ++i) {
    num += f1[i] * static_cast<double>(support[i]);
    den += static_cast<double>(support[i]);
  }
  t.expect(den == 11277.0, "support total");
  t.expect(std::fabs(weighted - num / den) < 1e-12, "weighted average disagrees with direct sum");
  t.expect(weighted >= 0.93 && weighted <= 0.94, "published weighted F1 " + fmt("%.5f", weighted));
  return t.outcome("[[8,2],[1,9]] to 1e-12, published weighted F1 recomputes to " + fmt("%.5f", weighted));
}

// ---------------------------------------------------------------- end to end

struct ClassTheme {
  std::string dll;
  std::vector<std::string> apis;
  std::vector<std::string> strings;
};

const std::vector<ClassTheme>& themes() {
  static const std::vector<ClassTheme> t{
      {"ADVAPI32.dll",
       {"CryptAcquireContextA", "RegSetValueExA", "OpenSCManagerA", "CreateServiceA", "StartServiceA", "LookupPrivilegeValueA"},
       {"Software\\Classes\\mscfile\\shell", "svchost_update_task", "trusted installer helper", "remote assistance bridge", "license check module"}},
      {"MPR.dll",
       {"WNetOpenEnumA", "WNetEnumResourceA", "WNetAddConnection2A", "WNetCloseEnum", "WNetGetConnectionA", "WNetCancelConnection2A"},
       {"\\\\%s\\IPC$", "autorun.inf", "[autorun] open=", "copy to removable drive", "spreading over network shares"}},
      {"bcrypt.dll",
       {"BCryptEncrypt", "BCryptGenerateSymmetricKey", "BCryptOpenAlgorithmProvider", "BCryptImportKeyPair", "BCryptGenRandom", "BCryptDestroyKey"},
       {"YOUR FILES HAVE BEEN ENCRYPTED", "README_RESTORE.txt", "pay in bitcoin to recover", ".locked", "vssadmin delete shadows"}},
      {"WS2_32.dll",
       {"WSAStartup", "bind", "listen", "accept", "recv", "send"},
       {"cmd.exe /c %s", "reverse shell ready", "upload complete", "beacon interval", "remote command channel"}},
      {"CRYPT32.dll",
       {"CryptUnprotectData", "CertOpenSystemStoreA", "CertEnumCertificatesInStore", "PFXExportCertStoreEx", "CryptStringToBinaryA", "CertCloseStore"},
       {"\\Google\\Chrome\\User Data\\Default\\Login Data", "logins.json", "wallet.dat", "SELECT origin_url, password_value", "Telegram Desktop\\tdata"}},
      {"URLMON.dll",
       {"URLDownloadToFileA", "URLDownloadToCacheFileA", "URLOpenBlockingStreamA", "FindMimeFromData", "CoInternetParseUrl", "ObtainUserAgentString"},
       {"http://cdn.update-service.example/get.php", "payload.tmp", "Mozilla/4.0 (compatible)", "download and execute", "second stage loader"}},
      {"CABINET.dll",
       {"FDICreate", "FDICopy", "FDIDestroy", "FCICreate", "FCIAddFile", "FCIFlushCabinet"},
       {"extracting embedded resource", "%TEMP%\\setup_%d.exe", "dropped component", "install.cab", "self delete batch"}},
      {"IMAGEHLP.dll",
       {"MapFileAndCheckSumA", "CheckSumMappedFile", "ImageNtHeader", "ReBaseImage", "BindImageEx", "ImageRvaToVa"},
       {"infecting host file", "*.exe", "append viral section", "original entry restored", "host checksum patch"}},
  };
  return t;
}

const std::vector<std::string> kCommonApis{"GetModuleHandleA", "ExitProcess", "Sleep", "CloseHandle", "ReadFile",
                                           "WriteFile", "CreateFileA", "GetLastError", "HeapAlloc", "HeapFree",
                                           "GetTickCount", "LoadLibraryA", "GetProcAddress", "VirtualAlloc"};

const std::vector<std::string> kNoiseStrings{"Microsoft Visual C++ Runtime", "GetVersionExA failed", "config.ini",
                                             "error %d", "Copyright (c) 2019", "invalid parameter", "out of memory",
                                             "user32 helper", "main window", "version 1.0.2"};

template <class T>
std::vector<T> pick(const std::vector<T>& pool, std::size_t n, std::mt19937_64& rng) {
  std::vector<T> copy = pool;
  std::shuffle(copy.begin(), copy.end(), rng);
  copy.resize(std::min(n, copy.size()));
  return copy;
}

PeSpec synthetic_sample(std::size_t category, std::mt19937_64& rng) {
  const auto& theme = themes()[category];
  PeSpec s;
  s.pe32plus = rng() % 3 == 0;
  s.subsystem = rng() % 2 ? 2 : 3;
  s.timestamp = 0x50000000u + static_cast<std::uint32_t>(rng() % 0x10000000u);
  s.sections.push_back({".text", code_like_bytes(0x400 + 0x200 * (rng() % 8), static_cast<std::uint32_t>(rng())),
                        scn::kText, std::nullopt});
  std::vector<std::uint8_t> rdata;
  for (const auto& str : pick(theme.strings, 2 + rng() % 2, rng)) append_string(rdata, str);
  for (const auto& str : pick(kNoiseStrings, 2 + rng() % 3, rng)) append_string(rdata, str);
  // a string borrowed from another class now and then
  if (rng() % 4 == 0) append_string(rdata, pick(themes()[rng() % themes().size()].strings, 1, rng)[0]);
  s.sections.push_back({".rdata", rdata, scn::kRdata, std::nullopt});
  s.sections.push_back({".data", random_bytes(0x200, static_cast<std::uint32_t>(rng())), scn::kRwData, std::nullopt});
  s.import_section = ".rdata";

  ImportSpec common{"KERNEL32.dll", {}};
  for (const auto& api : pick(kCommonApis, 3 + rng() % 5, rng)) common.functions.emplace_back(api);
  s.imports.push_back(common);
  ImportSpec own{theme.dll, {}};
  for (const auto& api : pick(theme.apis, 2 + rng() % 3, rng)) own.functions.emplace_back(api);
  s.imports.push_back(own);
  if (rng() % 5 == 0) {
    const auto& other = themes()[rng() % themes().size()];
    if (other.dll != theme.dll) s.imports.push_back({other.dll, {pick(other.apis, 1, rng)[0]}});
  }
  return s;
}

struct EndToEndRun {
  double train_f1 = 0;
  double test_f1 = 0;
  std::string model_text;
  std::string test_metrics;
};

EndToEndRun run_end_to_end(const std::vector<std::string>& texts, const std::vector<ManifestEntry>& manifest,
                           std::uint64_t seed) {
  std::map<std::string, std::size_t> row_of;
  for (std::size_t i = 0; i < manifest.size(); ++i) row_of[manifest[i].sha256] = i;
  const Split split = stratified_split(manifest, 0.8, seed);
  auto rows = [&](const std::vector<ManifestEntry>& entries) {
    std::vector<LabeledVector> out;
    for (const auto& e : entries) out.push_back({featurize_text(texts[row_of[e.sha256]]), *category_index(e.category)});
    return out;
  };
  const auto train = rows(split.train), test = rows(split.test);
  Hyper h;
  h.seed = seed;
  const Model model = train_classifier(train, kCategories.size(), h);
  const std::vector<std::string> names(kCategories.begin(), kCategories.end());
  auto evaluate = [&](const std::vector<LabeledVector>& data) {
    std::vector<std::size_t> p, y;
    for (const auto& r : data) {
      p.push_back(predict(model, r.features));
      y.push_back(r.label);
    }
    return classification_metrics(p, y, names);
  };
  const auto tr = evaluate(train), te = evaluate(test);
  return {tr.weighted.f1, te.weighted.f1, serialize_model(model), metrics_to_json(te)};
}

Outcome end_to_end_classification() {
  const auto t0 = std::chrono::steady_clock::now();
  Tally t;
  std::mt19937_64 rng(1234);
  std::vector<std::string> texts;
  std::vector<ManifestEntry> manifest;
  for (std::size_t c = 0; c < kCategories.size(); ++c) {
    for (int i = 0; i < 200; ++i) {
      const RawBinary bin(build_pe(synthetic_sample(c, rng)));
      const std::string name = std::string(kCategories[c]) + "_" + std::to_string(i) + ".exe";
      const Report report = analyze(bin, name, {}, kClock);
      texts.push_back(serialize_report(report));
      manifest.push_back({report.global.sha256, std::string(kCategories[c])});
    }
  }
  const auto first = run_end_to_end(texts, manifest, 11);
  const auto again = run_end_to_end(texts, manifest, 11);
  t.expect(first.train_f1 >= 0.95, "train weighted F1 " + fmt("%.4f", first.train_f1));
  t.expect(first.test_f1 >= 0.90, "test weighted F1 " + fmt("%.4f", first.test_f1));
  t.expect(first.model_text == again.model_text, "model differs between identical runs");
  t.expect(first.test_metrics == again.test_metrics, "metrics differ between identical runs");
  const double secs = seconds_since(t0);
  t.expect(secs < 120.0, "runtime " + fmt("%.1f s", secs));
  return t.outcome("1600 reports, train weighted F1 " + fmt("%.4f", first.train_f1) + ", test weighted F1 " +
                   fmt("%.4f", first.test_f1) + ", " + fmt("%.1f s", secs));
}

// ---------------------------------------------------------------- token budget

// Whitespace separates tokens, each ASCII punctuation byte is a token, and a
// word costs one token per started 6-byte piece.
std::size_t token_oracle(const std::string& text) {
  std::size_t tokens = 0, word = 0;
  auto flush = [&] {
    tokens += (word + 5) / 6;
    word = 0;
  };
  for (unsigned char c : text) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
      flush();
    } else if (c < 128 && std::ispunct(c)) {
      flush();
      ++tokens;
    } else {
      ++word;
    }
  }
  flush();
  return tokens;
}

Report inflate(Report r, std::mt19937_64& rng) {
  const std::size_t extra_sections = rng() % 12;
  for (std::size_t i = 0; i < extra_sections; ++i) {
    SectionInfo s = r.sections.empty() ? SectionInfo{} : r.sections[rng() % r.sections.size()];
    s.name = ".s" + std::to_string(i);
    s.sha256 = sha256_hex(std::to_string(rng()));
    r.sections.push_back(s);
  }
  const std::size_t extra_libs = rng() % 6;
  for (std::size_t i = 0; i < extra_libs; ++i) {
    std::vector<std::string> fns;
    for (std::size_t k = 0, n = 1 + rng() % 20; k < n; ++k) fns.push_back("Function" + std::to_string(rng() % 10000));
    r.imports.libraries.push_back({"extra" + std::to_string(i) + ".dll", fns});
  }
  const std::size_t extra_caps = rng() % 5;
  for (std::size_t i = 0; i < extra_caps; ++i) {
    r.capabilities.attack.push_back({{"T9" + std::to_string(i), "Tactic", "Technique name"}, {"rule-" + std::to_string(i)}});
    r.capabilities.mbc.push_back({{"B9" + std::to_string(i), "Objective", "Behavior name"}, {"rule-" + std::to_string(i)}});
  }
  return r;
}

Report strip_all(Report r, const TokenBudget& b) {
  for (auto part : b.drop_order) drop_units(r, part, part_units(r, part));
  return r;
}

Outcome token_budget_properties() {
  Tally t;
  std::vector<Report> base;
  for (const auto& f : fixture_corpus()) base.push_back(analyze(RawBinary(build_pe(f.spec)), f.file_name, {}, kClock));
  std::mt19937_64 rng(99);
  std::size_t fitted = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const Report r = inflate(base[rng() % base.size()], rng);
    const std::size_t full = token_oracle(serialize_report(r));
    TokenBudget b;
    b.limit = 40 + rng() % (full + 40);
    const auto out = fit_to_budget_detailed(r, b);
    const std::string text = serialize_report(out.report);
    t.expect(out.tokens == token_oracle(text), "reported token count disagrees with the oracle");
    t.expect(out.report.global == r.global, "global information changed");

    // priority: a part may have lost content only if every earlier part is empty
    bool earlier_empty = true;
    for (auto part : b.drop_order) {
      const bool shrunk = part_units(out.report, part) < part_units(r, part);
      if (shrunk) t.expect(earlier_empty, "part " + std::string(to_string(part)) + " shrunk before a lower one emptied");
      earlier_empty = earlier_empty && part_units(out.report, part) == 0;
    }

    const std::size_t minimum = token_oracle(serialize_report(strip_all(r, b)));
    if (minimum <= b.limit) {
      t.expect(out.tokens <= b.limit, "over budget although the minimum fits");
      t.expect(!out.irreducible, "flagged irreducible although the minimum fits");
      ++fitted;
    } else {
      t.expect(out.irreducible, "not flagged irreducible");
    }
    if (full <= b.limit) t.expect(out.report == r, "report within budget was modified");
    t.expect(fit_to_budget(out.report, b) == out.report, "not idempotent");
  }

  // corpus statistics through the command line against a direct recomputation
  const auto dir = fs::temp_directory_path() / "pesem_acceptance_tokens";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::vector<std::size_t> counts;
  for (int i = 0; i < 40; ++i) {
    const Report r = inflate(base[rng() % base.size()], rng);
    const std::string text = serialize_report(r);
    write_file_atomic(dir / ("r" + std::to_string(i) + ".json"), text);
    counts.push_back(token_oracle(text));
  }
  std::sort(counts.begin(), counts.end());
  double sum = 0;
  std::size_t over = 0;
  for (auto c : counts) {
    sum += static_cast<double>(c);
    over += c > 512;
  }
  const double median = (static_cast<double>(counts[19]) + static_cast<double>(counts[20])) / 2.0;
  const std::string expected = "reports 40\nmean " + fmt("%.2f", sum / 40.0) + "\nmedian " + fmt("%.2f", median) +
                               "\nmax " + std::to_string(counts.back()) + "\nover_512 " +
                               fmt("%.4f", static_cast<double>(over) / 40.0) + "\n";
  std::ostringstream out, err;
  const int code = cli::run({"tokens", dir.string()}, out, err);
  fs::remove_all(dir);
  t.expect(code == 0, "tokens command failed: " + err.str());
  t.expect(out.str() == expected, "tokens statistics differ from the recomputation");
  return t.outcome("300 oversized reports (" + std::to_string(fitted) + " fit), tokens statistics exact");
}

// ---------------------------------------------------------------- rule engine

FeatureContext random_context(std::mt19937_64& rng, const std::vector<std::string>& apis,
                              const std::vector<std::string>& strings, const std::vector<std::string>& flags,
                              const std::vector<std::string>& exploits) {
  FeatureContext c;
  c.global.entropy = (rng() % 8000) / 1000.0;
  std::vector<std::string> fns;
  for (const auto& a : apis)
    if (rng() % 3 == 0) fns.push_back(a);
  c.imports.libraries = {{"KERNEL32.dll", fns}};
  ImportSummary summary;
  for (const auto& e : exploits)
    if (rng() % 3 == 0) summary.risk_tags.push_back({e, {}, 1});
  c.imports.summary = summary;
  for (const char* name : {".text", ".data", ".rsrc"}) {
    SectionInfo s;
    s.name = name;
    for (const auto& f : flags)
      if (rng() % 3 == 0) s.characteristics.push_back(f);
    c.sections.push_back(s);
  }
  for (const auto& s : strings)
    if (rng() % 3 == 0) c.strings.push_back(s);
  c.packing.likely_packed = rng() % 2;
  return c;
}

// Adds evidence of every kind; never removes any.
FeatureContext enlarge(FeatureContext c, std::mt19937_64& rng, const std::vector<std::string>& apis,
                       const std::vector<std::string>& strings, const std::vector<std::string>& flags,
                       const std::vector<std::string>& exploits) {
  c.global.entropy = std::min(8.0, c.global.entropy + (rng() % 3000) / 1000.0);
  for (const auto& a : apis)
    if (rng() % 2 == 0) c.imports.libraries[0].second.push_back(a);
  if (rng() % 2) c.imports.libraries.push_back({"extra.dll", {apis[rng() % apis.size()]}});
  for (const auto& e : exploits)
    if (rng() % 2 == 0) c.imports.summary->risk_tags.push_back({e, {}, 1});
  for (auto& s : c.sections)
    for (const auto& f : flags)
      if (rng() % 2 == 0) s.characteristics.push_back(f);
  if (rng() % 2) {
    SectionInfo s;
    s.name = ".new";
    s.characteristics = flags;
    c.sections.push_back(s);
  }
  for (const auto& s : strings)
    if (rng() % 2 == 0) c.strings.push_back(s);
  if (rng() % 2) c.packing.likely_packed = true;
  return c;
}

ConditionNode random_rule(std::mt19937_64& rng, int depth, const std::vector<std::string>& apis,
                          const std::vector<std::string>& strings, const std::vector<std::string>& flags,
                          const std::vector<std::string>& exploits) {
  const unsigned kind = depth <= 0 ? 2 + rng() % 6 : rng() % 8;
  switch (kind) {
    case 0:
    case 1: {
      std::vector<ConditionNode> children;
      for (std::size_t i = 0, n = 1 + rng() % 3; i < n; ++i)
        children.push_back(random_rule(rng, depth - 1, apis, strings, flags, exploits));
      return kind == 0 ? all_of(std::move(children)) : any_of(std::move(children));
    }
    case 2: return import_present(apis[rng() % apis.size()], rng() % 4 == 0 ? std::optional<std::string>("kernel32") : std::nullopt);
    case 3: {
      const auto& s = strings[rng() % strings.size()];
      return string_match(s.substr(0, 3 + rng() % 4), rng() % 2);
    }
    case 4: return section_flag(flags[rng() % flags.size()], rng() % 3 == 0 ? std::optional<std::string>(".text") : std::nullopt);
    case 5: return entropy_gt((rng() % 8000) / 1000.0);
    case 6: return packed(true);
    default: return risk_tag(exploits[rng() % exploits.size()]);
  }
}

Outcome rule_engine() {
  Tally t;
  const auto pack = load_rule_pack_file((kSource / "data/rules/starter.json").string());
  t.expect(!pack.rules.empty(), "starter pack is empty");
  t.expect(bundled_rule_pack().rules.size() == pack.rules.size(), "bundled pack differs from the data file");

  auto fired = [](const std::string& fixture, const std::string& rule) {
    const Report r = analyze_file(kSource / "tests/fixtures" / fixture, {});
    for (const auto& cap : r.capabilities.attack)
      if (std::find(cap.rules.begin(), cap.rules.end(), rule) != cap.rules.end()) return true;
    return false;
  };
  t.expect(fired("inject.exe", "inject-remote-thread"), "injection rule did not fire on inject.exe");
  t.expect(!fired("plain.exe", "inject-remote-thread"), "injection rule fired on plain.exe");

  const std::vector<std::string> apis{"WriteProcessMemory", "CreateRemoteThread", "VirtualAllocEx", "OpenProcess",
                                      "RegSetValueExA", "InternetOpenA", "GetAsyncKeyState", "CryptEncrypt"};
  const std::vector<std::string> strings{"http://evil.example/gate", "Software\\Microsoft\\Windows\\Run",
                                         "YOUR FILES ARE ENCRYPTED", "cmd.exe /c del", "SELECT * FROM logins"};
  const std::vector<std::string> flags{"CNT_CODE", "MEM_EXECUTE", "MEM_WRITE", "MEM_READ", "CNT_INITIALIZED_DATA"};
  std::vector<std::string> exploits;
  for (const auto& c : risk_clusters()) exploits.emplace_back(to_string(c.exploit));

  std::mt19937_64 rng(31337);
  std::size_t fired_small = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const ConditionNode rule = random_rule(rng, 3, apis, strings, flags, exploits);
    t.expect(!contains_negation(rule), "generator produced a negation");
    const FeatureContext small = random_context(rng, apis, strings, flags, exploits);
    const FeatureContext large = enlarge(small, rng, apis, strings, flags, exploits);
    std::vector<std::string> ev;
    const bool a = evaluate_condition(rule, small, ev);
    const bool b = evaluate_condition(rule, large, ev);
    if (a) ++fired_small;
    t.expect(!a || b, "rule " + describe(rule) + " stopped firing on a larger context");
  }
  return t.outcome("starter pack valid (" + std::to_string(pack.rules.size()) + " rules), 1000 random rules monotone (" +
                   std::to_string(fired_small) + " fired)");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"entropy oracle equivalence", entropy_equivalence},
      {"packing label aggregation properties", packing_aggregation},
      {"golden fixture reports", golden_fixtures},
      {"imphash convention", imphash_convention},
      {"metrics engine", metrics_engine},
      {"end-to-end classification", end_to_end_classification},
      {"token budget", token_budget_properties},
      {"rule engine", rule_engine},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
