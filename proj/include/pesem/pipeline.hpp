#pragma once

#include "pesem/binary.hpp"
#include "pesem/packing.hpp"
#include "pesem/report.hpp"
#include "pesem/rules.hpp"
#include "pesem/section_info.hpp"

#include <chrono>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>

namespace pesem {

inline constexpr std::size_t kDefaultMinStringLength = 5;

struct AnalyzerConfig {
  std::shared_ptr<const RulePack> rules;  // null selects the bundled pack
  PackingConfig packing;
  SectionThresholds sections;
  std::size_t min_string_length = kDefaultMinStringLength;
};

/// Full pipeline for one file: parse, describe, detect packing, match rules.
/// Throws Error(NotPe / Truncated / Unsupported) when the headers cannot be read.
Report analyze(const RawBinary& binary, std::string_view file_name, const AnalyzerConfig& config = {},
               std::chrono::system_clock::time_point now = std::chrono::system_clock::now());

Report analyze_file(const std::filesystem::path& path, const AnalyzerConfig& config = {});

/// Writes `text` to `path` through a temporary sibling and a rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view text);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace pesem
