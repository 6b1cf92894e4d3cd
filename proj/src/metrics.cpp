#include "pesem/metrics.hpp"

#include "pesem/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>

namespace pesem {
namespace {

using ojson = nlohmann::ordered_json;

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double harmonic(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

std::string row(std::string_view label, std::size_t width, const char* p, const char* r, const char* f, std::size_t support) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%*s %10s %10s %10s %10zu\n", static_cast<int>(width), std::string(label).c_str(), p, r, f,
                support);
  return buf;
}

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

ojson averages(const AverageMetrics& a) {
  ojson j;
  j["precision"] = a.precision;
  j["recall"] = a.recall;
  j["f1"] = a.f1;
  j["support"] = a.support;
  return j;
}

AverageMetrics averages_from(const ojson& j) {
  return {j.at("precision").get<double>(), j.at("recall").get<double>(), j.at("f1").get<double>(),
          j.at("support").get<std::size_t>()};
}

}  // namespace

double weighted_average(const std::vector<double>& values, const std::vector<std::size_t>& supports) {
  if (values.size() != supports.size()) throw Error(ErrorCode::LengthMismatch, "values and supports differ in length");
  double num = 0.0;
  std::size_t den = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    num += values[i] * static_cast<double>(supports[i]);
    den += supports[i];
  }
  return den == 0 ? 0.0 : num / static_cast<double>(den);
}

ClassificationReport classification_metrics(const std::vector<std::size_t>& predictions,
                                            const std::vector<std::size_t>& labels,
                                            const std::vector<std::string>& class_names) {
  if (predictions.size() != labels.size())
    throw Error(ErrorCode::LengthMismatch, "predictions (" + std::to_string(predictions.size()) + ") and labels (" +
                                               std::to_string(labels.size()) + ") differ in length");
  const std::size_t k = class_names.size();
  ClassificationReport rep;
  rep.confusion.assign(k, std::vector<std::size_t>(k, 0));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= k || predictions[i] >= k) throw Error(ErrorCode::SchemaError, "class index outside the vocabulary");
    ++rep.confusion[labels[i]][predictions[i]];
  }
  rep.total = labels.size();

  std::size_t correct = 0;
  std::vector<double> p(k), r(k), f(k);
  std::vector<std::size_t> support(k);
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t predicted = 0;
    for (std::size_t t = 0; t < k; ++t) predicted += rep.confusion[t][c];
    support[c] = 0;
    for (std::size_t q = 0; q < k; ++q) support[c] += rep.confusion[c][q];
    const std::size_t tp = rep.confusion[c][c];
    correct += tp;
    p[c] = ratio(tp, predicted);
    r[c] = ratio(tp, support[c]);
    f[c] = harmonic(p[c], r[c]);
    rep.classes.push_back({class_names[c], p[c], r[c], f[c], support[c]});
  }
  rep.accuracy = ratio(correct, rep.total);

  if (k > 0) {
    double sp = 0.0, sr = 0.0, sf = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      sp += p[c];
      sr += r[c];
      sf += f[c];
    }
    rep.macro = {sp / static_cast<double>(k), sr / static_cast<double>(k), sf / static_cast<double>(k), rep.total};
  }
  rep.weighted = {weighted_average(p, support), weighted_average(r, support), weighted_average(f, support), rep.total};
  return rep;
}

std::string render_table(const ClassificationReport& report, std::string_view title) {
  std::size_t width = std::string_view("Weighted avg").size();
  for (const auto& c : report.classes) width = std::max(width, c.name.size());
  std::string out;
  if (!title.empty()) out += std::string(title) + "\n";
  char head[160];
  std::snprintf(head, sizeof head, "%*s %10s %10s %10s %10s\n", static_cast<int>(width), "", "Precision", "Recall",
                "F1-score", "Support");
  out += head;
  for (const auto& c : report.classes)
    out += row(c.name, width, fixed2(c.precision).c_str(), fixed2(c.recall).c_str(), fixed2(c.f1).c_str(), c.support);
  out += "\n";
  out += row("Accuracy", width, "", "", fixed2(report.accuracy).c_str(), report.total);
  const auto& m = report.macro;
  out += row("Macro avg", width, fixed2(m.precision).c_str(), fixed2(m.recall).c_str(), fixed2(m.f1).c_str(), m.support);
  const auto& w = report.weighted;
  out += row("Weighted avg", width, fixed2(w.precision).c_str(), fixed2(w.recall).c_str(), fixed2(w.f1).c_str(), w.support);
  return out;
}

std::string metrics_to_json(const ClassificationReport& report) {
  ojson j;
  ojson classes = ojson::array();
  for (const auto& c : report.classes) {
    ojson e;
    e["name"] = c.name;
    e["precision"] = c.precision;
    e["recall"] = c.recall;
    e["f1"] = c.f1;
    e["support"] = c.support;
    classes.push_back(std::move(e));
  }
  j["classes"] = std::move(classes);
  j["accuracy"] = report.accuracy;
  j["total"] = report.total;
  j["macro_avg"] = averages(report.macro);
  j["weighted_avg"] = averages(report.weighted);
  j["confusion"] = report.confusion;
  return j.dump(2) + "\n";
}

ClassificationReport metrics_from_json(std::string_view json_text) {
  try {
    const auto j = ojson::parse(json_text);
    ClassificationReport r;
    for (const auto& e : j.at("classes"))
      r.classes.push_back({e.at("name").get<std::string>(), e.at("precision").get<double>(), e.at("recall").get<double>(),
                           e.at("f1").get<double>(), e.at("support").get<std::size_t>()});
    r.accuracy = j.at("accuracy").get<double>();
    r.total = j.at("total").get<std::size_t>();
    r.macro = averages_from(j.at("macro_avg"));
    r.weighted = averages_from(j.at("weighted_avg"));
    r.confusion = j.at("confusion").get<std::vector<std::vector<std::size_t>>>();
    return r;
  } catch (const ojson::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("metrics: ") + e.what());
  }
}

}  // namespace pesem
