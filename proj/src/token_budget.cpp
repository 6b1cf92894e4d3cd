#include "pesem/token_budget.hpp"

#include <algorithm>
#include <numeric>

namespace pesem {
namespace {

constexpr std::size_t kPieceBytes = 6;

bool is_space(unsigned char c) noexcept { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

bool is_punct(unsigned char c) noexcept {
  return (c >= 33 && c <= 47) || (c >= 58 && c <= 64) || (c >= 91 && c <= 96) || (c >= 123 && c <= 126);
}

std::size_t library_units(const ImportInfo& imports) {
  std::size_t n = 0;
  for (const auto& [dll, functions] : imports.libraries) n += 1 + functions.size();
  return n;
}

}  // namespace

void for_each_token(std::string_view text, const std::function<void(std::string_view)>& emit) {
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (is_space(c)) {
      ++i;
      continue;
    }
    if (is_punct(c)) {
      emit(text.substr(i, 1));
      ++i;
      continue;
    }
    std::size_t end = i;
    while (end < n) {
      const auto d = static_cast<unsigned char>(text[end]);
      if (is_space(d) || is_punct(d)) break;
      ++end;
    }
    for (std::size_t p = i; p < end; p += kPieceBytes) emit(text.substr(p, std::min(kPieceBytes, end - p)));
    i = end;
  }
}

std::size_t count_tokens(std::string_view text) {
  std::size_t count = 0;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (is_space(c)) {
      ++i;
    } else if (is_punct(c)) {
      ++count;
      ++i;
    } else {
      std::size_t end = i;
      while (end < n && !is_space(static_cast<unsigned char>(text[end])) && !is_punct(static_cast<unsigned char>(text[end])))
        ++end;
      count += (end - i + kPieceBytes - 1) / kPieceBytes;
      i = end;
    }
  }
  return count;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  for_each_token(text, [&](std::string_view t) { out.emplace_back(t); });
  return out;
}

std::size_t approximate_tokens(const Report& report) { return count_tokens(serialize_report(report)); }

std::string_view to_string(ReportPart part) noexcept {
  switch (part) {
    case ReportPart::SectionDigests: return "section_digests";
    case ReportPart::ImportLists: return "import_lists";
    case ReportPart::SectionEntries: return "section_entries";
    case ReportPart::ImportSummary: return "import_summary";
    case ReportPart::Capabilities: return "capabilities";
    case ReportPart::Packing: return "packing";
  }
  return "unknown";
}

std::size_t part_units(const Report& report, ReportPart part) {
  switch (part) {
    case ReportPart::SectionDigests:
      return static_cast<std::size_t>(
          std::count_if(report.sections.begin(), report.sections.end(), [](const SectionInfo& s) { return s.sha256.has_value(); }));
    case ReportPart::ImportLists: return library_units(report.imports);
    case ReportPart::SectionEntries: return report.sections.size();
    case ReportPart::ImportSummary: return report.imports.summary ? 1 : 0;
    case ReportPart::Capabilities: return report.capabilities.attack.size() + report.capabilities.mbc.size();
    case ReportPart::Packing: return report.packing ? 1 : 0;
  }
  return 0;
}

void drop_units(Report& report, ReportPart part, std::size_t count) {
  switch (part) {
    case ReportPart::SectionDigests:
      for (auto it = report.sections.rbegin(); it != report.sections.rend() && count > 0; ++it) {
        if (it->sha256) {
          it->sha256.reset();
          --count;
        }
      }
      break;
    case ReportPart::ImportLists: {
      auto& libs = report.imports.libraries;
      while (count > 0 && !libs.empty()) {
        auto& functions = libs.back().second;
        if (functions.empty()) {
          libs.pop_back();
        } else {
          functions.pop_back();
        }
        --count;
      }
      break;
    }
    case ReportPart::SectionEntries: {
      const auto n = std::min(count, report.sections.size());
      report.sections.resize(report.sections.size() - n);
      break;
    }
    case ReportPart::ImportSummary:
      if (count > 0) report.imports.summary.reset();
      break;
    case ReportPart::Capabilities: {
      auto& caps = report.capabilities;
      const auto from_mbc = std::min(count, caps.mbc.size());
      caps.mbc.resize(caps.mbc.size() - from_mbc);
      const auto from_attack = std::min(count - from_mbc, caps.attack.size());
      caps.attack.resize(caps.attack.size() - from_attack);
      break;
    }
    case ReportPart::Packing:
      if (count > 0) report.packing.reset();
      break;
  }
}

FitOutcome fit_to_budget_detailed(const Report& report, const TokenBudget& budget) {
  FitOutcome out{report, approximate_tokens(report), {}, false};
  for (const ReportPart part : budget.drop_order) {
    if (out.tokens <= budget.limit) return out;
    const std::size_t units = part_units(out.report, part);
    if (units == 0) continue;

    Report emptied = out.report;
    drop_units(emptied, part, units);
    const std::size_t emptied_tokens = approximate_tokens(emptied);
    out.shrunk.push_back(part);
    if (emptied_tokens > budget.limit) {
      out.report = std::move(emptied);
      out.tokens = emptied_tokens;
      continue;
    }

    // smallest tail removal that fits; dropping everything is known to fit
    std::size_t lo = 1, hi = units;
    Report best = std::move(emptied);
    std::size_t best_tokens = emptied_tokens;
    while (lo < hi) {
      const std::size_t mid = lo + (hi - lo) / 2;
      Report trial = out.report;
      drop_units(trial, part, mid);
      const std::size_t t = approximate_tokens(trial);
      if (t <= budget.limit) {
        hi = mid;
        best = std::move(trial);
        best_tokens = t;
      } else {
        lo = mid + 1;
      }
    }
    out.report = std::move(best);
    out.tokens = best_tokens;
    return out;
  }
  out.irreducible = out.tokens > budget.limit;
  return out;
}

Report fit_to_budget(const Report& report, const TokenBudget& budget) {
  return fit_to_budget_detailed(report, budget).report;
}

TokenStatistics token_statistics(std::span<const std::size_t> counts, std::size_t limit) {
  TokenStatistics s;
  s.count = counts.size();
  if (counts.empty()) return s;
  std::vector<std::size_t> sorted(counts.begin(), counts.end());
  std::sort(sorted.begin(), sorted.end());
  const double total = std::accumulate(sorted.begin(), sorted.end(), 0.0);
  s.mean = total / static_cast<double>(s.count);
  const std::size_t mid = s.count / 2;
  s.median = s.count % 2 ? static_cast<double>(sorted[mid])
                         : (static_cast<double>(sorted[mid - 1]) + static_cast<double>(sorted[mid])) / 2.0;
  s.max = sorted.back();
  const auto over = std::count_if(sorted.begin(), sorted.end(), [limit](std::size_t c) { return c > limit; });
  s.fraction_over_limit = static_cast<double>(over) / static_cast<double>(s.count);
  return s;
}

}  // namespace pesem
