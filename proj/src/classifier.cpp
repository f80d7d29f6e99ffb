#include "minerlink/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "minerlink/error.hpp"
#include "minerlink/evaluate.hpp"
#include "minerlink/kernels.hpp"
#include "minerlink/rng.hpp"

namespace minerlink {

void TrainHyper::validate() const {
  if (batch_size == 0) throw ConfigError("hyper: batch_size must be positive");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("hyper: learning_rate must be positive");
  }
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) {
    throw ConfigError("hyper: weight_decay must be non-negative");
  }
}

TrainHyper TrainHyper::from_json(const nlohmann::json& j) {
  TrainHyper h;
  try {
    h.epochs = j.value("epochs", h.epochs);
    h.batch_size = j.value("batch_size", h.batch_size);
    h.learning_rate = j.value("learning_rate", h.learning_rate);
    h.weight_decay = j.value("weight_decay", h.weight_decay);
    h.seed = j.value("seed", h.seed);
    h.class_weighting = j.value("class_weighting", h.class_weighting);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("hyper: ") + e.what());
  }
  h.validate();
  return h;
}

nlohmann::json TrainHyper::to_json() const {
  return {{"epochs", epochs},
          {"batch_size", batch_size},
          {"learning_rate", learning_rate},
          {"weight_decay", weight_decay},
          {"seed", seed},
          {"class_weighting", class_weighting}};
}

nlohmann::json ClassifierModel::to_json() const {
  nlohmann::json names = nlohmann::json::array();
  for (auto n : kFeatureNames) names.push_back(std::string(n));
  return {{"format_version", kFormatVersion},
          {"feature_names", names},
          {"weights", weights},
          {"bias", bias},
          {"feature_means", feature_means},
          {"feature_stds", feature_stds},
          {"frozen", frozen},
          {"hyper", hyper.to_json()},
          {"decision_threshold", decision_threshold},
          {"feature_spec", feature_spec.to_json()},
          {"selected_epoch", selected_epoch},
          {"warnings", warnings}};
}

ClassifierModel ClassifierModel::from_json(const nlohmann::json& j) {
  try {
    if (j.at("format_version").get<int>() != kFormatVersion) {
      throw DataError("model: unsupported format_version");
    }
    const auto names = j.at("feature_names").get<std::vector<std::string>>();
    if (names.size() != kFeatureCount ||
        !std::equal(names.begin(), names.end(), kFeatureNames.begin())) {
      throw DataError("model: feature list does not match this build");
    }
    ClassifierModel m;
    m.weights = j.at("weights").get<std::array<double, kFeatureCount>>();
    m.bias = j.at("bias").get<double>();
    m.feature_means = j.at("feature_means").get<std::array<double, kFeatureCount>>();
    m.feature_stds = j.at("feature_stds").get<std::array<double, kFeatureCount>>();
    m.frozen = j.at("frozen").get<std::array<bool, kFeatureCount>>();
    m.hyper = TrainHyper::from_json(j.at("hyper"));
    m.decision_threshold = j.at("decision_threshold").get<double>();
    m.feature_spec = FeatureSpec::from_json(j.at("feature_spec"));
    m.selected_epoch = j.value("selected_epoch", std::size_t{0});
    m.warnings = j.value("warnings", std::vector<std::string>{});
    for (double s : m.feature_stds) {
      if (!(s > 0.0)) throw DataError("model: feature_stds must be positive");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model: ") + e.what());
  }
}

DesignMatrix build_design(std::span<const PairKey> keys, const RecordIndex& records,
                          const FeatureSpec& spec) {
  DesignMatrix x;
  x.rows = keys.size();
  x.data.assign(kFeatureCount * x.rows, 0.0);
  // Resolve up front so worker threads never throw.
  std::vector<std::pair<const Record*, const Record*>> resolved;
  resolved.reserve(keys.size());
  for (const auto& k : keys) {
    resolved.emplace_back(&records.at(k.uri_1()), &records.at(k.uri_2()));
  }

  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto v = extract_features(*resolved[i].first, *resolved[i].second, spec).values();
      for (std::size_t j = 0; j < kFeatureCount; ++j) x.data[j * x.rows + i] = v[j];
    }
  };
  const std::size_t threads =
      std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, 16);
  if (threads == 1 || x.rows < 256) {
    work(0, x.rows);
    return x;
  }
  std::vector<std::jthread> pool;
  const std::size_t chunk = (x.rows + threads - 1) / threads;
  for (std::size_t t = 0; t < threads; ++t) {
    const std::size_t b = t * chunk;
    const std::size_t e = std::min(x.rows, b + chunk);
    if (b < e) pool.emplace_back(work, b, e);
  }
  return x;
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

namespace {

// log(1 + e^z) without overflow.
double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

}  // namespace

LogisticObjective::LogisticObjective(const DesignMatrix& x, std::span<const double> labels,
                                     std::span<const double> sample_weights,
                                     double weight_decay)
    : x_(x), y_(labels), s_(sample_weights), lambda_(weight_decay) {
  if (y_.size() != x_.rows || s_.size() != x_.rows) {
    throw DataError("objective: label/weight count does not match rows");
  }
  total_weight_ = kernels::active().sum(s_);
  if (!(total_weight_ > 0.0)) throw DataError("objective: empty or zero-weight batch");
}

double LogisticObjective::loss(std::span<const double> w, double b) const {
  const auto& k = kernels::active();
  std::vector<double> z(x_.rows);
  k.affine_rows(x_.data, x_.rows, w, b, z);
  for (std::size_t i = 0; i < z.size(); ++i) {
    z[i] = s_[i] * (softplus(z[i]) - y_[i] * z[i]);
  }
  double penalty = 0.0;
  for (double wj : w) penalty += wj * wj;
  return k.sum(z) / total_weight_ + 0.5 * lambda_ * penalty;
}

std::vector<double> LogisticObjective::gradient(std::span<const double> w, double b,
                                                std::span<const bool> frozen) const {
  const auto& k = kernels::active();
  std::vector<double> r(x_.rows);
  k.affine_rows(x_.data, x_.rows, w, b, r);
  for (std::size_t i = 0; i < r.size(); ++i) {
    r[i] = s_[i] * (sigmoid(r[i]) - y_[i]) / total_weight_;
  }
  std::vector<double> g(w.size() + 1);
  k.weighted_column_sums(x_.data, x_.rows, r, std::span<double>(g.data(), w.size()));
  for (std::size_t j = 0; j < w.size(); ++j) {
    g[j] += lambda_ * w[j];
    if (!frozen.empty() && frozen[j]) g[j] = 0.0;
  }
  g[w.size()] = k.sum(r);
  return g;
}

TrainData prepare(std::vector<LabeledPair> pairs, const RecordIndex& records,
                  const FeatureSpec& spec) {
  std::vector<PairKey> keys;
  keys.reserve(pairs.size());
  for (const auto& p : pairs) keys.push_back(p.key);
  TrainData d;
  d.design = build_design(keys, records, spec);
  d.pairs = std::move(pairs);
  return d;
}

namespace {

DesignMatrix standardized(const DesignMatrix& raw, const ClassifierModel& m) {
  DesignMatrix z = raw;
  const auto& k = kernels::active();
  for (std::size_t j = 0; j < kFeatureCount; ++j) {
    k.standardize(std::span<double>(z.data.data() + j * z.rows, z.rows),
                  m.feature_means[j], 1.0 / m.feature_stds[j]);
  }
  return z;
}

double validation_macro_f1(const ClassifierModel& m, const TrainData& val) {
  const auto preds = predict_design(m, val.design);
  ConfusionCounts c;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const bool p = preds[i].label == 1;
    const bool t = val.pairs[i].label == 1;
    if (p && t) ++c.tp;
    else if (p) ++c.fp;
    else if (t) ++c.fn;
    else ++c.tn;
  }
  return macro_f1(c);
}

}  // namespace

ClassifierModel train_classifier(const TrainData& train, const TrainHyper& hyper,
                                 const FeatureSpec& spec, const TrainData* validation) {
  hyper.validate();
  const std::size_t n = train.design.rows;
  if (n == 0 || train.pairs.size() != n) throw DataError("train: empty training set");
  const auto& k = kernels::active();

  ClassifierModel m;
  m.hyper = hyper;
  m.feature_spec = spec;

  for (std::size_t j = 0; j < kFeatureCount; ++j) {
    const auto col = train.design.column(j);
    const double mean = k.sum(col) / static_cast<double>(n);
    double ss = 0.0;
    for (double v : col) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n));
    m.feature_means[j] = mean;
    if (sd > 1e-12) {
      m.feature_stds[j] = sd;
    } else {
      m.feature_stds[j] = 1.0;
      m.frozen[j] = true;
    }
  }

  std::vector<double> y(n);
  std::size_t positives = 0;
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = train.pairs[i].label == 1 ? 1.0 : 0.0;
    positives += train.pairs[i].label == 1 ? 1 : 0;
  }
  if (positives == 0 || positives == n) {
    m.warnings.push_back(std::string("degenerate model: training set has only ") +
                         (positives == 0 ? "non-match" : "match") + " pairs");
  }
  std::vector<double> sw(n, 1.0);
  if (hyper.class_weighting && positives > 0 && positives < n) {
    const double w_pos = static_cast<double>(n) / (2.0 * static_cast<double>(positives));
    const double w_neg = static_cast<double>(n) / (2.0 * static_cast<double>(n - positives));
    for (std::size_t i = 0; i < n; ++i) sw[i] = y[i] == 1.0 ? w_pos : w_neg;
  }

  const DesignMatrix z = standardized(train.design, m);

  Rng rng(hyper.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::vector<double> w(kFeatureCount, 0.0);
  double b = 0.0;
  const std::span<const bool> frozen(m.frozen.data(), kFeatureCount);

  auto snapshot = [&](std::size_t epoch) {
    std::copy(w.begin(), w.end(), m.weights.begin());
    m.bias = b;
    m.selected_epoch = epoch;
  };
  double best_val = -1.0;

  DesignMatrix batch;
  std::vector<double> yb, sb;
  for (std::size_t epoch = 1; epoch <= hyper.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < n; start += hyper.batch_size) {
      const std::size_t rows = std::min(hyper.batch_size, n - start);
      batch.rows = rows;
      batch.data.resize(kFeatureCount * rows);
      yb.resize(rows);
      sb.resize(rows);
      for (std::size_t i = 0; i < rows; ++i) {
        const std::size_t src = order[start + i];
        for (std::size_t j = 0; j < kFeatureCount; ++j) {
          batch.data[j * rows + i] = z.data[j * n + src];
        }
        yb[i] = y[src];
        sb[i] = sw[src];
      }
      const LogisticObjective objective(batch, yb, sb, hyper.weight_decay);
      const auto g = objective.gradient(w, b, frozen);
      k.axpy(-hyper.learning_rate, std::span<const double>(g.data(), kFeatureCount), w);
      b = b - hyper.learning_rate * g[kFeatureCount];
    }
    if (validation != nullptr && validation->design.rows > 0) {
      ClassifierModel candidate = m;
      std::copy(w.begin(), w.end(), candidate.weights.begin());
      candidate.bias = b;
      const double score = validation_macro_f1(candidate, *validation);
      if (score > best_val) {
        best_val = score;
        snapshot(epoch);
      }
    } else {
      snapshot(epoch);
    }
  }
  return m;
}

ClassifierModel train_classifier(const std::vector<LabeledPair>& train,
                                 const RecordIndex& records, const TrainHyper& hyper,
                                 const FeatureSpec& spec,
                                 const std::vector<LabeledPair>* validation) {
  const TrainData t = prepare(train, records, spec);
  if (validation == nullptr) return train_classifier(t, hyper, spec);
  const TrainData v = prepare(*validation, records, spec);
  return train_classifier(t, hyper, spec, &v);
}

Prediction predict(const ClassifierModel& model, const FeatureVector& features) {
  const auto x = features.values();
  double logit = model.bias;
  for (std::size_t j = 0; j < kFeatureCount; ++j) {
    const double zj = (x[j] - model.feature_means[j]) * (1.0 / model.feature_stds[j]);
    const double prod = model.weights[j] * zj;
    logit = logit + prod;
  }
  const double p = sigmoid(logit);
  return {p > model.decision_threshold ? 1 : 0, p};
}

Prediction predict(const ClassifierModel& model, const Record& a, const Record& b) {
  return predict(model, extract_features(a, b, model.feature_spec));
}

std::vector<Prediction> predict_design(const ClassifierModel& model,
                                       const DesignMatrix& raw) {
  const DesignMatrix z = standardized(raw, model);
  std::vector<double> logits(raw.rows);
  kernels::active().affine_rows(z.data, z.rows, model.weights, model.bias, logits);
  std::vector<Prediction> out(raw.rows);
  for (std::size_t i = 0; i < raw.rows; ++i) {
    const double p = sigmoid(logits[i]);
    out[i] = {p > model.decision_threshold ? 1 : 0, p};
  }
  return out;
}

std::vector<LabeledPair> predict_pairs(const ClassifierModel& model,
                                       std::span<const PairKey> keys,
                                       const RecordIndex& records) {
  const auto preds = predict_design(model, build_design(keys, records, model.feature_spec));
  std::vector<LabeledPair> out;
  out.reserve(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i) {
    out.push_back({keys[i], preds[i].label, Provenance::Predicted, {}});
  }
  return out;
}

}  // namespace minerlink
