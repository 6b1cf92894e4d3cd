#include "pesem/classifier.hpp"

#include "pesem/error.hpp"
#include "pesem/pipeline.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

namespace pesem {
namespace {

using json = nlohmann::json;

constexpr double kMinScale = 1e-6;

struct Sample {
  std::vector<std::pair<std::uint32_t, double>> x;
  std::size_t label;
};

// Softmax in place; returns log of the normalizer.
double softmax(std::vector<double>& s) {
  const double m = *std::max_element(s.begin(), s.end());
  double z = 0.0;
  for (auto& v : s) {
    v = std::exp(v - m);
    z += v;
  }
  for (auto& v : s) v /= z;
  return m + std::log(z);
}

class Trainer {
 public:
  Trainer(std::size_t classes, const Hyper& hyper)
      : k_(classes), hyper_(hyper), w_(static_cast<std::size_t>(kFeatureDimension) * classes, 0.0), b_(classes, 0.0) {}

  void scores(const Sample& s, std::vector<double>& out) const {
    out.assign(b_.begin(), b_.end());
    for (const auto& [i, x] : s.x) {
      const double* row = &w_[static_cast<std::size_t>(i) * k_];
      for (std::size_t c = 0; c < k_; ++c) out[c] += scale_ * row[c] * x;
    }
  }

  void step(const Sample& s, std::vector<double>& buf) {
    scores(s, buf);
    softmax(buf);
    buf[s.label] -= 1.0;  // gradient of cross-entropy w.r.t. scores
    const double lr = hyper_.learning_rate;
    scale_ *= 1.0 - lr * hyper_.l2;
    for (const auto& [i, x] : s.x) {
      double* row = &w_[static_cast<std::size_t>(i) * k_];
      for (std::size_t c = 0; c < k_; ++c) row[c] -= lr * buf[c] * x / scale_;
    }
    for (std::size_t c = 0; c < k_; ++c) b_[c] -= lr * buf[c];
    if (scale_ < kMinScale) fold_scale();
  }

  double objective(const std::vector<Sample>& data) const {
    std::vector<double> buf;
    double loss = 0.0;
    for (const auto& s : data) {
      scores(s, buf);
      const double m = *std::max_element(buf.begin(), buf.end());
      double z = 0.0;
      for (double v : buf) z += std::exp(v - m);
      loss += m + std::log(z) - buf[s.label];
    }
    loss /= static_cast<double>(data.size());
    double norm = 0.0;
    for (double v : w_) norm += v * v;
    return loss + 0.5 * hyper_.l2 * scale_ * scale_ * norm;
  }

  void fold_scale() {
    for (auto& v : w_) v *= scale_;
    scale_ = 1.0;
  }

  std::vector<double> take_weights() {
    fold_scale();
    return std::move(w_);
  }
  std::vector<double> take_bias() { return std::move(b_); }

 private:
  std::size_t k_;
  Hyper hyper_;
  std::vector<double> w_;
  std::vector<double> b_;
  double scale_ = 1.0;
};

[[noreturn]] void bad_model(const std::string& what) { throw Error(ErrorCode::SchemaError, "model: " + what); }

}  // namespace

std::vector<std::pair<std::uint32_t, double>> normalized_features(const FeatureVector& v) {
  std::vector<std::pair<std::uint32_t, double>> out;
  out.reserve(v.entries.size());
  double norm = 0.0;
  for (const auto& [i, c] : v.entries) {
    const double x = 1.0 + std::log(static_cast<double>(c));
    out.emplace_back(i, x);
    norm += x * x;
  }
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (auto& e : out) e.second /= norm;
  }
  return out;
}

Model train_classifier(const std::vector<LabeledVector>& train, std::size_t classes, const Hyper& hyper) {
  std::set<std::size_t> present;
  for (const auto& t : train) {
    if (t.label >= classes) throw Error(ErrorCode::SchemaError, "label " + std::to_string(t.label) + " out of range");
    present.insert(t.label);
  }
  if (present.size() < 2) throw Error(ErrorCode::DegenerateData, "training data must contain at least two classes");
  if (hyper.epochs < 0 || !(hyper.learning_rate > 0.0) || hyper.l2 < 0.0)
    throw Error(ErrorCode::SchemaError, "invalid hyperparameters");

  std::vector<Sample> data;
  data.reserve(train.size());
  for (const auto& t : train) data.push_back({normalized_features(t.features), t.label});

  Trainer trainer(classes, hyper);
  std::mt19937_64 rng(hyper.seed);
  std::vector<std::size_t> order(data.size());
  std::vector<double> buf;
  Model model;
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
    for (auto idx : order) trainer.step(data[idx], buf);
    model.loss_history.push_back(trainer.objective(data));
  }
  model.classes = classes;
  model.weights = trainer.take_weights();
  model.bias = trainer.take_bias();
  model.hyper = hyper;
  return model;
}

std::vector<double> class_scores(const Model& model, const FeatureVector& v) {
  std::vector<double> out(model.bias);
  for (const auto& [i, x] : normalized_features(v)) {
    if (i >= model.dimension) continue;
    const double* row = &model.weights[static_cast<std::size_t>(i) * model.classes];
    for (std::size_t c = 0; c < model.classes; ++c) out[c] += row[c] * x;
  }
  return out;
}

std::size_t predict(const Model& model, const FeatureVector& v) {
  const auto s = class_scores(model, v);
  std::size_t best = 0;
  for (std::size_t c = 1; c < s.size(); ++c)
    if (s[c] > s[best]) best = c;
  return best;
}

std::string serialize_model(const Model& model) {
  json j;
  j["format"] = "pesem-linear";
  j["version"] = 1;
  j["classes"] = model.classes;
  j["dimension"] = model.dimension;
  j["hyper"] = {{"learning_rate", model.hyper.learning_rate},
                {"epochs", model.hyper.epochs},
                {"l2", model.hyper.l2},
                {"seed", model.hyper.seed}};
  if (model.split) j["split"] = {{"ratio", model.split->ratio}, {"seed", model.split->seed}};
  j["bias"] = model.bias;
  json rows = json::array();
  for (std::size_t c = 0; c < model.classes; ++c) {
    json row = json::array();
    for (std::size_t i = 0; i < model.dimension; ++i) {
      const double w = model.weights[i * model.classes + c];
      if (w != 0.0) row.push_back({i, w});
    }
    rows.push_back(std::move(row));
  }
  j["weights"] = std::move(rows);
  j["loss_history"] = model.loss_history;
  return j.dump() + "\n";
}

Model parse_model(std::string_view json_text) {
  try {
    const json j = json::parse(json_text);
    if (j.at("format") != "pesem-linear" || j.at("version") != 1) bad_model("unsupported format");
    Model m;
    m.classes = j.at("classes").get<std::size_t>();
    m.dimension = j.at("dimension").get<std::uint32_t>();
    if (m.classes < 2 || m.dimension == 0 || m.dimension > kFeatureDimension) bad_model("bad shape");
    const auto& h = j.at("hyper");
    m.hyper.learning_rate = h.at("learning_rate").get<double>();
    m.hyper.epochs = h.at("epochs").get<int>();
    m.hyper.l2 = h.at("l2").get<double>();
    m.hyper.seed = h.at("seed").get<std::uint64_t>();
    if (j.contains("split")) m.split = SplitParams{j["split"].at("ratio").get<double>(), j["split"].at("seed").get<std::uint64_t>()};
    m.bias = j.at("bias").get<std::vector<double>>();
    if (m.bias.size() != m.classes) bad_model("bias length differs from class count");
    m.weights.assign(static_cast<std::size_t>(m.dimension) * m.classes, 0.0);
    const auto& rows = j.at("weights");
    if (!rows.is_array() || rows.size() != m.classes) bad_model("weight rows differ from class count");
    for (std::size_t c = 0; c < m.classes; ++c) {
      for (const auto& e : rows[c]) {
        const auto i = e.at(0).get<std::size_t>();
        if (i >= m.dimension) bad_model("weight index out of range");
        m.weights[i * m.classes + c] = e.at(1).get<double>();
      }
    }
    m.loss_history = j.at("loss_history").get<std::vector<double>>();
    return m;
  } catch (const json::exception& e) {
    bad_model(e.what());
  }
}

void save_model(const Model& model, const std::filesystem::path& path) { write_file_atomic(path, serialize_model(model)); }

Model load_model(const std::filesystem::path& path) { return parse_model(read_text_file(path)); }

}  // namespace pesem
