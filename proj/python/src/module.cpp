#include "pesem/error.hpp"
#include "pesem/global_info.hpp"
#include "pesem/import_info.hpp"
#include "pesem/manifest.hpp"
#include "pesem/metrics.hpp"
#include "pesem/packing.hpp"
#include "pesem/pipeline.hpp"
#include "pesem/report.hpp"
#include "pesem/rules.hpp"
#include "pesem/token_budget.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <variant>

namespace py = pybind11;
using namespace pesem;

namespace {

std::span<const std::uint8_t> byte_view(const py::bytes& data) {
  const std::string_view v = data;
  return {reinterpret_cast<const std::uint8_t*>(v.data()), v.size()};
}

std::string render(const Report& report, std::optional<std::size_t> budget) {
  return serialize_report(budget ? fit_to_budget(report, TokenBudget{*budget}) : report);
}

AnalyzerConfig config_from(std::optional<std::string> rule_pack, std::optional<double> packed_threshold) {
  AnalyzerConfig c;
  if (rule_pack) c.rules = std::make_shared<const RulePack>(load_rule_pack(*rule_pack));
  if (packed_threshold) c.packing.likely_packed_threshold = *packed_threshold;
  return c;
}

std::vector<std::pair<std::string, std::string>> as_pairs(const std::vector<ManifestEntry>& entries) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& e : entries) out.emplace_back(e.sha256, e.category);
  return out;
}

}  // namespace

PYBIND11_MODULE(_pesem, m) {
  m.doc() = "PE-file semantic preprocessing core";

  static py::exception<Error> pesem_error(m, "PesemError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(pesem_error, (std::string(to_string(e.code())) + ": " + e.what()).c_str());
    }
  });

  m.def(
      "analyze_bytes",
      [](const py::bytes& data, const std::string& file_name, std::optional<std::size_t> budget,
         std::optional<std::string> rule_pack, std::optional<double> packed_threshold) {
        const std::string_view v = data;
        RawBinary bin(std::vector<std::uint8_t>(v.begin(), v.end()));
        return render(analyze(bin, file_name, config_from(std::move(rule_pack), packed_threshold)), budget);
      },
      py::arg("data"), py::arg("file_name"), py::arg("budget") = py::none(), py::arg("rule_pack") = py::none(),
      py::arg("packed_threshold") = py::none(), "Report JSON text of an in-memory PE image.");
  m.def(
      "analyze_file",
      [](const std::string& path, std::optional<std::size_t> budget, std::optional<std::string> rule_pack,
         std::optional<double> packed_threshold) {
        return render(analyze_file(path, config_from(std::move(rule_pack), packed_threshold)), budget);
      },
      py::arg("path"), py::arg("budget") = py::none(), py::arg("rule_pack") = py::none(),
      py::arg("packed_threshold") = py::none(), "Report JSON text of a PE file.");
  m.def(
      "fit_report", [](const std::string& json_text, std::size_t budget) {
        return serialize_report(fit_to_budget(parse_report(json_text), TokenBudget{budget}));
      },
      py::arg("report_json"), py::arg("budget"), "Truncate a report to a token budget.");
  m.def("count_tokens", [](const std::string& text) { return count_tokens(text); }, py::arg("text"));
  m.def("shannon_entropy", [](const py::bytes& data) { return shannon_entropy(byte_view(data)); }, py::arg("data"));
  m.def(
      "aggregate_packing_label",
      [](const std::vector<int>& labels, const std::vector<double>& weights) {
        if (labels.size() != weights.size()) throw Error(ErrorCode::LengthMismatch, "labels and weights differ in length");
        std::vector<DetectorVerdict> vs;
        for (std::size_t i = 0; i < labels.size(); ++i) vs.push_back({"d" + std::to_string(i), labels[i], weights[i], {}, ""});
        return aggregate_packing_label(vs);
      },
      py::arg("labels"), py::arg("weights"));
  m.def(
      "compute_imphash",
      [](const std::vector<std::pair<std::string, std::vector<std::variant<int, std::string>>>>& imports) {
        ImportTable table;
        for (const auto& [dll, entries] : imports) {
          ImportedLibrary lib{dll, {}};
          for (const auto& e : entries) {
            if (const auto* ord = std::get_if<int>(&e))
              lib.entries.push_back(ImportByOrdinal{static_cast<std::uint16_t>(*ord)});
            else
              lib.entries.push_back(ImportByName{std::get<std::string>(e)});
          }
          table.libraries.push_back(std::move(lib));
        }
        return compute_imphash(table);
      },
      py::arg("imports"), "Imports as [(dll, [name or ordinal, ...]), ...].");
  m.def(
      "stratified_split",
      [](const std::string& manifest_csv, double ratio, std::uint64_t seed) {
        const Split s = stratified_split(parse_manifest(manifest_csv), ratio, seed);
        return py::make_tuple(as_pairs(s.train), as_pairs(s.test));
      },
      py::arg("manifest_csv"), py::arg("ratio") = 0.8, py::arg("seed") = 0,
      "Train and test lists of (sha256, category).");
  m.def(
      "classification_metrics",
      [](const std::vector<std::size_t>& predictions, const std::vector<std::size_t>& labels,
         const std::vector<std::string>& class_names) {
        return metrics_to_json(classification_metrics(predictions, labels, class_names));
      },
      py::arg("predictions"), py::arg("labels"), py::arg("class_names"), "Metrics JSON text.");
  m.def(
      "render_metrics_table",
      [](const std::string& metrics_json, const std::string& title) {
        return render_table(metrics_from_json(metrics_json), title);
      },
      py::arg("metrics_json"), py::arg("title") = "");
  m.def(
      "validate_rule_pack", [](const std::string& text) { return load_rule_pack(text).rules.size(); },
      py::arg("text"), "Number of rules; raises PesemError on an invalid pack.");
  m.attr("categories") = std::vector<std::string>(kCategories.begin(), kCategories.end());
  m.attr("report_schema_version") = std::string(kReportSchemaVersion);
}
