#include "pesem/manifest.hpp"

#include "pesem/digest.hpp"
#include "pesem/error.hpp"
#include "pesem/import_info.hpp"
#include "pesem/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace pesem {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

std::optional<std::size_t> category_index(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kCategories.size(); ++i)
    if (kCategories[i] == name) return i;
  return std::nullopt;
}

bool is_sha256_hex(std::string_view s) noexcept {
  return s.size() == 64 && std::all_of(s.begin(), s.end(), [](char c) {
           return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
         });
}

std::vector<ManifestEntry> parse_manifest(std::string_view csv_text) {
  std::vector<ManifestEntry> out;
  std::set<std::string> seen;
  bool header = false;
  std::size_t line_no = 0;
  while (!csv_text.empty()) {
    const auto nl = csv_text.find('\n');
    std::string_view line = trim(csv_text.substr(0, nl));
    csv_text = nl == std::string_view::npos ? std::string_view{} : csv_text.substr(nl + 1);
    ++line_no;
    if (line.empty()) continue;
    const auto where = "manifest line " + std::to_string(line_no);
    if (!header) {
      if (line != "sha256,category") throw Error(ErrorCode::SchemaError, where + ": expected header 'sha256,category'");
      header = true;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string_view::npos || line.find(',', comma + 1) != std::string_view::npos)
      throw Error(ErrorCode::SchemaError, where + ": expected two fields");
    const auto hash = trim(line.substr(0, comma));
    const auto category = trim(line.substr(comma + 1));
    if (!is_sha256_hex(hash)) throw Error(ErrorCode::SchemaError, where + ": malformed sha256");
    if (!category_index(category))
      throw Error(ErrorCode::SchemaError, where + ": unknown category '" + std::string(category) + "'");
    ManifestEntry e{ascii_lower(hash), std::string(category)};
    if (!seen.insert(e.sha256).second) throw Error(ErrorCode::SchemaError, where + ": duplicate sha256");
    out.push_back(std::move(e));
  }
  if (!header) throw Error(ErrorCode::SchemaError, "manifest is empty");
  return out;
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  return parse_manifest(read_text_file(path));
}

std::string render_manifest(const std::vector<ManifestEntry>& entries) {
  std::string out = "sha256,category\n";
  for (const auto& e : entries) out += e.sha256 + "," + e.category + "\n";
  return out;
}

Split stratified_split(const std::vector<ManifestEntry>& manifest, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw Error(ErrorCode::SchemaError, "split ratio must lie in (0, 1)");

  std::map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < manifest.size(); ++i) by_class[manifest[i].category].push_back(i);

  const std::string prefix = std::to_string(seed) + ":";
  std::vector<bool> in_train(manifest.size(), false);
  for (auto& [category, members] : by_class) {
    const auto n = members.size();
    if (n < 2)
      throw Error(ErrorCode::ClassTooSmall, "class '" + category + "' has " + std::to_string(n) + " entry; need 2");
    std::vector<std::pair<std::string, std::size_t>> keyed;
    keyed.reserve(n);
    for (auto idx : members) keyed.emplace_back(sha256_hex(prefix + manifest[idx].sha256), idx);
    std::sort(keyed.begin(), keyed.end());
    const auto wanted = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + 0.5));
    const auto n_train = std::clamp<std::size_t>(wanted, 1, n - 1);
    for (std::size_t k = 0; k < n_train; ++k) in_train[keyed[k].second] = true;
  }

  Split split;
  for (std::size_t i = 0; i < manifest.size(); ++i) (in_train[i] ? split.train : split.test).push_back(manifest[i]);
  return split;
}

}  // namespace pesem
