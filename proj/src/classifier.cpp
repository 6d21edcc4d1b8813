#include "topicrnn/classifier.hpp"

#include <cstdio>
#include <random>

#include "topicrnn/errors.hpp"
#include "topicrnn/numerics.hpp"

namespace topicrnn {

Tensor extract_features(const TopicRnnModel& model, const EncodedDocument& doc,
                        bool include_cell_state) {
  DocumentTrace trace = model.trace_document(doc);
  size_t k = trace.posterior.mu.size();
  size_t h = trace.final_hidden.size();
  size_t extra = include_cell_state ? trace.final_cell.size() : 0;
  Tensor out({k + h + extra});
  for (size_t i = 0; i < k; ++i) out[i] = trace.posterior.mu[i];
  for (size_t i = 0; i < h; ++i) out[k + i] = trace.final_hidden[i];
  for (size_t i = 0; i < extra; ++i) out[k + h + i] = trace.final_cell[i];
  return out;
}

SentimentClassifier::SentimentClassifier(size_t feature_dim,
                                         ClassifierConfig config)
    : feature_dim_(feature_dim), config_(config) {
  if (feature_dim_ < 1 || config_.hidden < 1) {
    throw ConfigError("classifier dimensions must be >= 1");
  }
  store_.add("h.w", {config_.hidden, feature_dim_});
  store_.add("h.b", {config_.hidden});
  store_.add("out.w", {config_.hidden});
  store_.add("out.b", {});
  std::mt19937_64 rng(config_.seed);
  std::uniform_real_distribution<double> dist(-0.08, 0.08);
  for (const auto& name : store_.names()) {
    Tensor& p = store_.param(name);
    for (size_t i = 0; i < p.size(); ++i) p[i] = dist(rng);
  }
}

Var SentimentClassifier::build_logit(Tape& tape, Var x) const {
  Var hidden = tape.sigmoid_(tape.add(tape.matmul(tape.param("h.w"), x),
                                      tape.param("h.b")));
  return tape.add(tape.dot(tape.param("out.w"), hidden), tape.param("out.b"));
}

Var SentimentClassifier::build_loss(Tape& tape,
                                    const std::vector<Tensor>& features,
                                    const std::vector<int>& labels) const {
  if (features.empty() || features.size() != labels.size()) {
    throw ValidationError("feature/label lengths differ or are empty");
  }
  Var total;
  for (size_t i = 0; i < features.size(); ++i) {
    Var z = build_logit(tape, tape.constant(features[i]));
    Var ll = labels[i] ? tape.log_sigmoid_(z)
                       : tape.log_sigmoid_(tape.scale(z, -1.0));
    total = total.valid() ? tape.add(total, ll) : ll;
  }
  return tape.scale(total, -1.0 / static_cast<double>(features.size()));
}

void SentimentClassifier::train(const std::vector<Tensor>& features,
                                const std::vector<int>& labels) {
  bool has0 = false;
  bool has1 = false;
  for (int label : labels) {
    if (label == 0) has0 = true;
    else if (label == 1) has1 = true;
    else throw ValidationError("labels must be 0 or 1");
  }
  if (!has0 || !has1) {
    std::fprintf(stderr,
                 "warning: training labels contain a single class only\n");
  }
  AdamState adam(store_, AdamConfig{config_.lr, 0.9, 0.999, 1e-8});
  for (size_t epoch = 0; epoch < config_.epochs; ++epoch) {
    Tape tape(&store_, true);
    Var loss = build_loss(tape, features, labels);
    if (std::isnan(tape.scalar(loss))) {
      throw NumericError("NaN classifier loss at epoch " +
                         std::to_string(epoch));
    }
    tape.backward(loss);
    adam.step(store_);
  }
}

double SentimentClassifier::predict(const Tensor& features) const {
  Tape tape(const_cast<ParamStore*>(&store_), false);
  Var z = build_logit(tape, tape.constant(features));
  return sigmoid(tape.scalar(z));
}

std::vector<double> SentimentClassifier::predict_all(
    const std::vector<Tensor>& features) const {
  std::vector<double> out;
  out.reserve(features.size());
  for (const auto& f : features) out.push_back(predict(f));
  return out;
}

double SentimentClassifier::error_rate(const std::vector<Tensor>& features,
                                       const std::vector<int>& labels) const {
  if (features.empty() || features.size() != labels.size()) {
    throw ValidationError("feature/label lengths differ or are empty");
  }
  size_t wrong = 0;
  for (size_t i = 0; i < features.size(); ++i) {
    int predicted = predict(features[i]) >= 0.5 ? 1 : 0;
    if (predicted != labels[i]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(features.size());
}

}  // namespace topicrnn
