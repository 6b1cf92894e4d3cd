#include "pesem/featurize.hpp"

#include "pesem/token_budget.hpp"

#include <algorithm>
#include <unordered_map>

namespace pesem {

std::uint64_t FeatureVector::total_count() const noexcept {
  std::uint64_t n = 0;
  for (const auto& [index, count] : entries) n += count;
  return n;
}

std::uint32_t token_bucket(std::string_view token) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char ch : token) {
    auto c = static_cast<unsigned char>(ch);
    if (c >= 'A' && c <= 'Z') c = static_cast<unsigned char>(c - 'A' + 'a');
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return static_cast<std::uint32_t>(h & (kFeatureDimension - 1));
}

FeatureVector featurize_text(std::string_view text) {
  std::unordered_map<std::uint32_t, std::uint32_t> counts;
  for_each_token(text, [&](std::string_view token) { ++counts[token_bucket(token)]; });
  FeatureVector v;
  v.entries.assign(counts.begin(), counts.end());
  std::sort(v.entries.begin(), v.entries.end());
  return v;
}

FeatureVector featurize(const Report& report) { return featurize_text(serialize_report(report)); }

}  // namespace pesem
