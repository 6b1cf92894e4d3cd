#pragma once

#include "pesem/report.hpp"

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pesem {

/// Approximates a wordpiece tokenizer: whitespace separates, every ASCII
/// punctuation character is a token, and a word of n bytes counts as
/// ceil(n / 6) pieces of at most six bytes each.
void for_each_token(std::string_view text, const std::function<void(std::string_view)>& emit);
std::size_t count_tokens(std::string_view text);
std::vector<std::string> tokenize(std::string_view text);

/// count_tokens(serialize_report(report)).
std::size_t approximate_tokens(const Report& report);

/// Report parts that truncation may shrink. Global information is never dropped.
enum class ReportPart {
  SectionDigests,
  ImportLists,
  SectionEntries,
  ImportSummary,
  Capabilities,
  Packing,
};

std::string_view to_string(ReportPart part) noexcept;

/// Lowest priority first: the first part is the first to shrink.
inline constexpr std::array<ReportPart, 6> kDefaultDropOrder{
    ReportPart::SectionDigests, ReportPart::ImportLists, ReportPart::SectionEntries,
    ReportPart::ImportSummary,  ReportPart::Capabilities, ReportPart::Packing,
};

struct TokenBudget {
  std::size_t limit = 512;
  std::vector<ReportPart> drop_order{kDefaultDropOrder.begin(), kDefaultDropOrder.end()};
};

/// Number of removable units of a part (digests, function names plus their
/// library keys, section entries, capability entries, or 1 for an atomic part).
std::size_t part_units(const Report& report, ReportPart part);

/// Removes `count` units of `part` from its tail.
void drop_units(Report& report, ReportPart part, std::size_t count);

struct FitOutcome {
  Report report;
  std::size_t tokens = 0;
  std::vector<ReportPart> shrunk;  // parts that lost content, in drop order
  bool irreducible = false;        // over the limit with every droppable part gone
};

/// Shrinks parts in drop order, each from its tail, until the report fits.
/// A part is touched only once every lower-priority part is empty. Reports
/// already within the limit come back unchanged.
FitOutcome fit_to_budget_detailed(const Report& report, const TokenBudget& budget);
Report fit_to_budget(const Report& report, const TokenBudget& budget);

struct TokenStatistics {
  std::size_t count = 0;
  double mean = 0.0;
  double median = 0.0;
  std::size_t max = 0;
  double fraction_over_limit = 0.0;  // strictly greater than the limit
};

TokenStatistics token_statistics(std::span<const std::size_t> counts, std::size_t limit);

}  // namespace pesem
