#ifndef TOPICRNN_INFERENCE_HPP
#define TOPICRNN_INFERENCE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "topicrnn/autodiff.hpp"
#include "topicrnn/tensor.hpp"

namespace topicrnn {

struct InferenceConfig {
  size_t input_size = 1;  // V_c
  size_t hidden = 200;    // E
  size_t layers = 2;
  size_t topics = 50;     // K
  bool normalize_bow = false;
};

// Diagonal Gaussian over the topic space.
struct GaussianPosterior {
  Tensor mu;
  Tensor log_sigma;
};

struct PosteriorVars {
  Var mu;
  Var log_sigma;
};

// ReLU feed-forward encoder from bag-of-words counts to a diagonal Gaussian.
// log sigma is clamped to [-8, 8] before exponentiation.
class InferenceNet {
 public:
  InferenceNet(InferenceConfig config, std::string prefix);

  const InferenceConfig& config() const { return config_; }
  void register_params(ParamStore& store) const;
  size_t param_count() const;

  PosteriorVars encode(Tape& tape, const std::vector<uint32_t>& bow) const;
  GaussianPosterior encode_values(const ParamStore& store,
                                  const std::vector<uint32_t>& bow) const;

  static Var sample_theta(Tape& tape, const PosteriorVars& post,
                          const Tensor& noise);
  static Tensor sample_theta(const GaussianPosterior& post,
                             const Tensor& noise);
  static Var kl_to_prior(Tape& tape, const PosteriorVars& post);
  static double kl_to_prior(const GaussianPosterior& post);

 private:
  Tensor bow_input(const std::vector<uint32_t>& bow) const;

  InferenceConfig config_;
  std::string prefix_;
};

}  // namespace topicrnn

#endif  // TOPICRNN_INFERENCE_HPP
