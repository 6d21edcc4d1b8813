#ifndef TOPICRNN_MODEL_HPP
#define TOPICRNN_MODEL_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "topicrnn/autodiff.hpp"
#include "topicrnn/cells.hpp"
#include "topicrnn/corpus.hpp"
#include "topicrnn/inference.hpp"
#include "topicrnn/tensor.hpp"

namespace topicrnn {

struct ModelConfig {
  CellKind cell = CellKind::rnn;
  size_t hidden = 100;       // H
  size_t layers = 1;         // cell stack depth
  size_t topics = 50;        // K
  size_t infer_hidden = 200; // E
  size_t infer_layers = 2;
  bool normalize_bow = false;
  uint64_t seed = 1;
};

struct ElboBreakdown {
  double word_loglik = 0.0;
  double stop_loglik = 0.0;
  double kl = 0.0;
  double elbo = 0.0;
};

struct TrainConfig {
  size_t epochs = 15;
  size_t bptt_len = 20;
  double lr = 1e-3;
  double clip_norm = 5.0;
  size_t patience = 5;
  size_t window = 10;  // theta refresh cadence for validation perplexity
  uint64_t seed = 1;
  // Baseline mode: topic matrix zeroed and frozen, KL term dropped.
  bool ablate_topics = false;
  std::function<void(const struct EpochMetrics&)> on_epoch;
};

struct EpochMetrics {
  size_t epoch = 0;
  double train_elbo_per_token = 0.0;
  double valid_perplexity = 0.0;
  double kl_per_token = 0.0;
  double seconds = 0.0;
};

struct TrainResult {
  std::vector<EpochMetrics> epochs;
  size_t best_epoch = 0;
  double best_valid_perplexity = 0.0;
};

struct EvalOptions {
  size_t window = 10;
  bool ablate_topics = false;
  // Re-encode theta from only the previous `window` tokens instead of the
  // whole document prefix.
  bool trailing_window = false;
  size_t threads = 0;  // 0: TOPICRNN_THREADS env or hardware concurrency
};

// Final cell states plus the document posterior, for feature extraction.
struct DocumentTrace {
  GaussianPosterior posterior;
  Tensor final_hidden;  // top layer h_T
  Tensor final_cell;    // top layer c_T (lstm only; empty otherwise)
};

// The gated topic-biased RNN language model with its inference network.
// Word logits are v_i^T h + (1-l) b_i^T theta; the stop indicator l gates the
// topic bias off entirely.
class TopicRnnModel {
 public:
  TopicRnnModel(ModelConfig config, Vocabulary vocab);
  // Checkpoint path: parameter values supplied explicitly.
  TopicRnnModel(ModelConfig config, Vocabulary vocab,
                const std::map<std::string, Tensor>& params);

  const ModelConfig& config() const { return config_; }
  const Vocabulary& vocab() const { return vocab_; }
  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }
  const RecurrentCell& cell() const { return cell_; }
  const InferenceNet& inference() const { return inference_; }

  Tensor word_logits(const Tensor& h, const Tensor& theta,
                     bool stop_indicator) const;
  double stop_probability(const Tensor& h) const;
  // p(l=1|h) softmax(V^T h) + p(l=0|h) softmax(V^T h + B^T theta_hat).
  Tensor predictive_distribution(const Tensor& h,
                                 const Tensor& theta_hat) const;
  GaussianPosterior posterior(const std::vector<uint32_t>& bow) const;

  ElboBreakdown sequence_elbo(const EncodedDocument& doc, const Tensor& theta,
                              const GaussianPosterior& post) const;

  TrainResult train(const CorpusSplit& train_split,
                    const CorpusSplit& valid_split, const TrainConfig& config);

  // Per-token negative log-likelihood under the marginalized predictive
  // distribution with the sliding-window theta estimate. The theta refresh
  // before each window reads only tokens strictly before that window.
  std::vector<double> document_nlls(const EncodedDocument& doc,
                                    const EvalOptions& options) const;
  double perplexity(const CorpusSplit& split, const EvalOptions& options) const;

  // Autoregressive sampling seeded by a document's bag of words. temperature
  // divides the branch logits; 0 selects the untempered argmax.
  std::vector<uint32_t> generate(const EncodedDocument& seed_doc, size_t length,
                                 double temperature, uint64_t rng_seed,
                                 size_t window) const;

  // Top-n content words per topic row of B, ties broken by token id.
  std::vector<std::vector<std::string>> top_topic_words(size_t n) const;

  DocumentTrace trace_document(const EncodedDocument& doc) const;

  // Shape-formula counts per parameter group and as observed in the store.
  std::map<std::string, size_t> parameter_count_formulas() const;
  std::map<std::string, size_t> parameter_count_actuals() const;

  // Training loss builder for a document; exposed for gradient checking.
  // Returns -ELBO/T. The noise vector feeds the reparameterized theta sample.
  Var build_doc_loss(Tape& tape, const EncodedDocument& doc,
                     const Tensor& noise, size_t bptt_len,
                     bool ablate_topics) const;

 private:
  struct SequenceTerms {
    Var word;
    Var stop;
  };

  Var build_word_logits(Tape& tape, Var h, Var theta) const;
  SequenceTerms build_sequence_terms(Tape& tape, const EncodedDocument& doc,
                                     Var theta, size_t bptt_len) const;
  void init_params();
  size_t resolve_threads(size_t requested, size_t n_docs) const;

  ModelConfig config_;
  Vocabulary vocab_;
  RecurrentCell cell_;
  InferenceNet inference_;
  ParamStore store_;
};

}  // namespace topicrnn

#endif  // TOPICRNN_MODEL_HPP
