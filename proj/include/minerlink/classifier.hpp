#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "minerlink/matcher.hpp"
#include "minerlink/pairing.hpp"
#include "minerlink/records.hpp"

namespace minerlink {

struct TrainHyper {
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  double learning_rate = 0.1;
  double weight_decay = 0.01;
  std::uint64_t seed = 0;
  // Inverse-frequency sample weights; off reproduces plain imbalanced
  // training.
  bool class_weighting = false;

  void validate() const;
  static TrainHyper from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  friend bool operator==(const TrainHyper&, const TrainHyper&) = default;
};

struct ClassifierModel {
  static constexpr int kFormatVersion = 1;

  std::array<double, kFeatureCount> weights{};
  double bias = 0.0;
  std::array<double, kFeatureCount> feature_means{};
  std::array<double, kFeatureCount> feature_stds{1, 1, 1, 1, 1, 1, 1};
  /// Features constant on the training set; their weights stay 0.
  std::array<bool, kFeatureCount> frozen{};
  TrainHyper hyper;
  double decision_threshold = 0.5;
  FeatureSpec feature_spec;
  /// Epoch whose weights were kept (0 = initial weights).
  std::size_t selected_epoch = 0;
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
  static ClassifierModel from_json(const nlohmann::json& j);
  friend bool operator==(const ClassifierModel&, const ClassifierModel&) = default;
};

/// Column-major design matrix: feature j of row i at data[j * rows + i].
struct DesignMatrix {
  std::size_t rows = 0;
  std::vector<double> data;

  std::span<const double> column(std::size_t j) const {
    return {data.data() + j * rows, rows};
  }
};

/// Features of every pair, in input order. Runs on all hardware threads.
DesignMatrix build_design(std::span<const PairKey> keys, const RecordIndex& records,
                          const FeatureSpec& spec);

/// Regularized mean logistic loss over standardized rows:
///   (1/W) sum_i s_i [log(1 + e^{z_i}) - y_i z_i] + (lambda/2) |w|^2,
/// z_i = b + w . x_i, W = sum_i s_i. The bias is not penalized.
class LogisticObjective {
 public:
  LogisticObjective(const DesignMatrix& x, std::span<const double> labels,
                    std::span<const double> sample_weights, double weight_decay);

  double loss(std::span<const double> w, double b) const;
  /// Gradient w.r.t. (w_0..w_{d-1}, b); `frozen` components are zeroed.
  std::vector<double> gradient(std::span<const double> w, double b,
                               std::span<const bool> frozen = {}) const;

 private:
  const DesignMatrix& x_;
  std::span<const double> y_;
  std::span<const double> s_;
  double lambda_;
  double total_weight_;
};

double sigmoid(double z);

struct TrainData {
  std::vector<LabeledPair> pairs;
  DesignMatrix design;  // raw features, rows aligned with pairs
};

TrainData prepare(std::vector<LabeledPair> pairs, const RecordIndex& records,
                  const FeatureSpec& spec);

/// Mini-batch gradient descent on z-scored features. With a validation set the
/// epoch with the best validation macro-F1 is kept (earliest on ties).
ClassifierModel train_classifier(const TrainData& train, const TrainHyper& hyper,
                                 const FeatureSpec& spec,
                                 const TrainData* validation = nullptr);

ClassifierModel train_classifier(const std::vector<LabeledPair>& train,
                                 const RecordIndex& records, const TrainHyper& hyper,
                                 const FeatureSpec& spec = {},
                                 const std::vector<LabeledPair>* validation = nullptr);

struct Prediction {
  int label = 0;
  double probability = 0.5;
};

Prediction predict(const ClassifierModel& model, const FeatureVector& features);
Prediction predict(const ClassifierModel& model, const Record& a, const Record& b);

/// Batched prediction over raw feature rows; equals calling predict per row.
std::vector<Prediction> predict_design(const ClassifierModel& model,
                                       const DesignMatrix& raw);

std::vector<LabeledPair> predict_pairs(const ClassifierModel& model,
                                       std::span<const PairKey> keys,
                                       const RecordIndex& records);

}  // namespace minerlink
