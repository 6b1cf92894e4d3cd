#include "pesem/pipeline.hpp"

#include "pesem/error.hpp"
#include "pesem/global_info.hpp"
#include "pesem/import_info.hpp"
#include "pesem/pe_parser.hpp"
#include "pesem/strings.hpp"

#include <atomic>
#include <fstream>
#include <sstream>

namespace pesem {

Report analyze(const RawBinary& binary, std::string_view file_name, const AnalyzerConfig& config,
               std::chrono::system_clock::time_point now) {
  validate(config.packing);
  const ParsedPe pe = parse_pe(binary);

  FeatureContext ctx;
  ctx.global = build_global_info(pe, binary, file_name, now);
  ctx.sections = build_section_infos(pe, binary, config.sections);
  ctx.imports = build_import_info(pe.imports);

  auto verdicts = run_detectors(pe, ctx.sections, ctx.imports, config.packing);
  const double label = aggregate_packing_label(verdicts);
  ctx.packing = build_packing_info(std::move(verdicts), label, config.packing.likely_packed_threshold);

  StringScan scan = scan_strings(binary.bytes(), config.min_string_length);
  if (scan.capped) ctx.global.warnings.push_back("string scan limited to the first " +
                                                 std::to_string(kStringScanLimit) + " bytes");
  ctx.strings = std::move(scan.strings);

  const RulePack& pack = config.rules ? *config.rules : bundled_rule_pack();
  Capabilities caps = summarize_capabilities(evaluate_rules(pack, ctx));

  return build_report(std::move(ctx.global), std::move(ctx.sections), std::move(ctx.imports), std::move(ctx.packing),
                      std::move(caps));
}

Report analyze_file(const std::filesystem::path& path, const AnalyzerConfig& config) {
  return analyze(RawBinary::from_file(path), path.filename().string(), config);
}

void write_file_atomic(const std::filesystem::path& path, std::string_view text) {
  static std::atomic<unsigned long> counter{0};
  auto tmp = path;
  tmp += ".tmp" + std::to_string(counter++);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw Error(ErrorCode::Io, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot rename " + tmp.string() + ": " + ec.message());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace pesem
