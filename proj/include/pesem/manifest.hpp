#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pesem {

/// Malware categories; the index of each name is its class index.
inline constexpr std::array<std::string_view, 8> kCategories{
    "trojan", "worm", "ransomware", "backdoor", "infostealer", "downloader", "dropper", "virus",
};

std::optional<std::size_t> category_index(std::string_view name) noexcept;
bool is_sha256_hex(std::string_view s) noexcept;

struct ManifestEntry {
  std::string sha256;  // lowercase hex
  std::string category;

  bool operator==(const ManifestEntry&) const = default;
};

/// CSV with the header "sha256,category". Blank lines are skipped; hashes are
/// lowercased. Throws Error(SchemaError) naming the offending line.
std::vector<ManifestEntry> parse_manifest(std::string_view csv_text);
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);
std::string render_manifest(const std::vector<ManifestEntry>& entries);

struct Split {
  std::vector<ManifestEntry> train;
  std::vector<ManifestEntry> test;
};

/// Per class, entries are ordered by sha256_hex("<seed>:<sha256>") and the
/// first max(1, min(n - 1, round(ratio * n))) go to train. Both lists keep
/// the input order. Throws Error(ClassTooSmall) for a class with fewer than
/// two entries and Error(SchemaError) for a ratio outside (0, 1).
Split stratified_split(const std::vector<ManifestEntry>& manifest, double ratio, std::uint64_t seed);

}  // namespace pesem
