#ifndef TOPICRNN_CLASSIFIER_HPP
#define TOPICRNN_CLASSIFIER_HPP

#include <cstdint>
#include <vector>

#include "topicrnn/autodiff.hpp"
#include "topicrnn/model.hpp"
#include "topicrnn/tensor.hpp"

namespace topicrnn {

// [mu(X_c) || h_T of the top cell layer]; optionally the lstm cell memory.
Tensor extract_features(const TopicRnnModel& model, const EncodedDocument& doc,
                        bool include_cell_state = false);

struct ClassifierConfig {
  size_t hidden = 50;
  size_t epochs = 200;
  double lr = 0.01;
  uint64_t seed = 1;
};

// One-hidden-layer sigmoid network for binary labels, trained full-batch
// with Adam on binary cross-entropy.
class SentimentClassifier {
 public:
  SentimentClassifier(size_t feature_dim, ClassifierConfig config);

  void train(const std::vector<Tensor>& features,
             const std::vector<int>& labels);
  double predict(const Tensor& features) const;  // probability of label 1
  std::vector<double> predict_all(const std::vector<Tensor>& features) const;
  // Mean mismatch between [p >= 0.5] and the labels.
  double error_rate(const std::vector<Tensor>& features,
                    const std::vector<int>& labels) const;

  ParamStore& params() { return store_; }
  const ClassifierConfig& config() const { return config_; }

  // Mean binary cross-entropy; exposed for gradient checking.
  Var build_loss(Tape& tape, const std::vector<Tensor>& features,
                 const std::vector<int>& labels) const;

 private:
  Var build_logit(Tape& tape, Var x) const;

  size_t feature_dim_;
  ClassifierConfig config_;
  ParamStore store_;
};

}  // namespace topicrnn

#endif  // TOPICRNN_CLASSIFIER_HPP
