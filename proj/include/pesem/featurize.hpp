#pragma once

#include "pesem/report.hpp"

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace pesem {

inline constexpr std::uint32_t kFeatureDimension = 1u << 18;

/// Sparse bag of hashed tokens, sorted by index, every count positive.
struct FeatureVector {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> entries;

  [[nodiscard]] std::uint64_t total_count() const noexcept;
  bool operator==(const FeatureVector&) const = default;
};

/// FNV-1a 64 of the lowercased token, reduced to the feature dimension.
std::uint32_t token_bucket(std::string_view token) noexcept;

/// Hashes every token of `text` (see for_each_token), so the total count
/// equals count_tokens(text).
FeatureVector featurize_text(std::string_view text);
FeatureVector featurize(const Report& report);

}  // namespace pesem
