#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace pesem {

struct ClassMetrics {
  std::string name;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct AverageMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct ClassificationReport {
  std::vector<ClassMetrics> classes;
  double accuracy = 0.0;
  std::size_t total = 0;
  AverageMetrics macro;
  AverageMetrics weighted;
  std::vector<std::vector<std::size_t>> confusion;  // confusion[true][predicted]
};

/// Indices into `class_names`. Precision is 0 for a never-predicted class,
/// recall 0 for an absent class, F1 0 when P + R = 0. Macro averages run over
/// every class in the vocabulary. Throws Error(LengthMismatch) for unequal
/// lengths and Error(SchemaError) for an index outside the vocabulary.
ClassificationReport classification_metrics(const std::vector<std::size_t>& predictions,
                                            const std::vector<std::size_t>& labels,
                                            const std::vector<std::string>& class_names);

/// Support-weighted mean of per-class values.
double weighted_average(const std::vector<double>& values, const std::vector<std::size_t>& supports);

/// Text table: Precision, Recall, F1-score, Support per class, then the
/// Accuracy, Macro avg and Weighted avg rows. Values with two decimals.
std::string render_table(const ClassificationReport& report, std::string_view title = {});

/// Same numbers as render_table, at full precision.
std::string metrics_to_json(const ClassificationReport& report);
ClassificationReport metrics_from_json(std::string_view json_text);

}  // namespace pesem
