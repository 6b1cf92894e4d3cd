#pragma once

#include "pesem/featurize.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pesem {

struct Hyper {
  double learning_rate = 0.1;
  int epochs = 50;
  double l2 = 1e-4;
  std::uint64_t seed = 0;  // sample order

  bool operator==(const Hyper&) const = default;
};

struct LabeledVector {
  FeatureVector features;
  std::size_t label = 0;  // index into the class vocabulary
};

/// Split parameters that produced the training set, kept so evaluation can
/// rebuild the held-out part from the manifest alone.
struct SplitParams {
  double ratio = 0.8;
  std::uint64_t seed = 0;
  bool operator==(const SplitParams&) const = default;
};

/// Multinomial logistic regression over log-scaled, L2-normalized token
/// counts. Weights are laid out feature-major: weights[i * classes + c].
struct Model {
  std::size_t classes = 0;
  std::uint32_t dimension = kFeatureDimension;
  std::vector<double> weights;
  std::vector<double> bias;
  Hyper hyper;
  std::optional<SplitParams> split;
  std::vector<double> loss_history;  // regularized mean cross-entropy after each epoch

  bool operator==(const Model&) const = default;
};

/// (1 + ln count) per entry, scaled to unit Euclidean length.
std::vector<std::pair<std::uint32_t, double>> normalized_features(const FeatureVector& v);

/// Per-sample gradient descent over a seeded shuffle, from zero weights.
/// Throws Error(DegenerateData) unless at least two classes are present, and
/// Error(SchemaError) for a label outside [0, classes).
Model train_classifier(const std::vector<LabeledVector>& train, std::size_t classes, const Hyper& hyper = {});

std::vector<double> class_scores(const Model& model, const FeatureVector& v);

/// Highest score; exact ties go to the lowest class index.
std::size_t predict(const Model& model, const FeatureVector& v);

/// JSON with sparse weight rows. Reloading restores bit-identical doubles.
std::string serialize_model(const Model& model);
Model parse_model(std::string_view json_text);
void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

}  // namespace pesem
