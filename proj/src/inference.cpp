#include "topicrnn/inference.hpp"

#include <cmath>

#include "topicrnn/errors.hpp"

namespace topicrnn {

namespace {
constexpr double kLogSigmaBound = 8.0;
}

InferenceNet::InferenceNet(InferenceConfig config, std::string prefix)
    : config_(config), prefix_(std::move(prefix)) {
  if (config_.input_size < 1 || config_.hidden < 1 || config_.layers < 1 ||
      config_.topics < 1) {
    throw ConfigError("inference network dimensions must all be >= 1");
  }
}

void InferenceNet::register_params(ParamStore& store) const {
  for (size_t l = 0; l < config_.layers; ++l) {
    size_t in = l == 0 ? config_.input_size : config_.hidden;
    std::string p = prefix_ + ".g" + std::to_string(l) + ".";
    store.add(p + "w", {config_.hidden, in});
    store.add(p + "b", {config_.hidden});
  }
  store.add(prefix_ + ".mu.w", {config_.topics, config_.hidden});
  store.add(prefix_ + ".mu.b", {config_.topics});
  store.add(prefix_ + ".logsigma.w", {config_.topics, config_.hidden});
  store.add(prefix_ + ".logsigma.b", {config_.topics});
}

size_t InferenceNet::param_count() const {
  size_t total = 0;
  for (size_t l = 0; l < config_.layers; ++l) {
    size_t in = l == 0 ? config_.input_size : config_.hidden;
    total += config_.hidden * in + config_.hidden;
  }
  total += 2 * (config_.topics * config_.hidden + config_.topics);
  return total;
}

Tensor InferenceNet::bow_input(const std::vector<uint32_t>& bow) const {
  if (bow.size() != config_.input_size) {
    throw ConfigError("bag-of-words length does not match inference input");
  }
  Tensor x({bow.size()});
  double total = 0.0;
  for (size_t i = 0; i < bow.size(); ++i) {
    x[i] = static_cast<double>(bow[i]);
    total += x[i];
  }
  if (config_.normalize_bow && total > 0.0) {
    for (size_t i = 0; i < x.size(); ++i) x[i] /= total;
  }
  return x;
}

PosteriorVars InferenceNet::encode(Tape& tape,
                                   const std::vector<uint32_t>& bow) const {
  Var g = tape.constant(bow_input(bow));
  for (size_t l = 0; l < config_.layers; ++l) {
    std::string p = prefix_ + ".g" + std::to_string(l) + ".";
    g = tape.relu(tape.add(tape.matmul(tape.param(p + "w"), g),
                           tape.param(p + "b")));
  }
  Var mu = tape.add(tape.matmul(tape.param(prefix_ + ".mu.w"), g),
                    tape.param(prefix_ + ".mu.b"));
  Var log_sigma =
      tape.clamp(tape.add(tape.matmul(tape.param(prefix_ + ".logsigma.w"), g),
                          tape.param(prefix_ + ".logsigma.b")),
                 -kLogSigmaBound, kLogSigmaBound);
  return {mu, log_sigma};
}

GaussianPosterior InferenceNet::encode_values(
    const ParamStore& store, const std::vector<uint32_t>& bow) const {
  Tape tape(const_cast<ParamStore*>(&store), false);
  PosteriorVars post = encode(tape, bow);
  return {tape.value(post.mu), tape.value(post.log_sigma)};
}

Var InferenceNet::sample_theta(Tape& tape, const PosteriorVars& post,
                               const Tensor& noise) {
  Var eps = tape.constant(noise);
  return tape.add(post.mu, tape.mul(tape.exp_(post.log_sigma), eps));
}

Tensor InferenceNet::sample_theta(const GaussianPosterior& post,
                                  const Tensor& noise) {
  Tensor theta(post.mu.shape());
  for (size_t i = 0; i < theta.size(); ++i) {
    theta[i] = post.mu[i] + std::exp(post.log_sigma[i]) * noise[i];
  }
  return theta;
}

Var InferenceNet::kl_to_prior(Tape& tape, const PosteriorVars& post) {
  // KL(N(mu, diag(sigma^2)) || N(0, I))
  //   = 1/2 sum_k (mu_k^2 + sigma_k^2 - 1 - 2 log sigma_k)
  Var mu_sq = tape.mul(post.mu, post.mu);
  Var sigma = tape.exp_(post.log_sigma);
  Var sigma_sq = tape.mul(sigma, sigma);
  Var terms = tape.sub(tape.add(mu_sq, sigma_sq),
                       tape.scale(post.log_sigma, 2.0));
  Var total = tape.sum(terms);
  size_t k = tape.value(post.mu).size();
  return tape.scale(
      tape.add(total, tape.constant_scalar(-static_cast<double>(k))), 0.5);
}

double InferenceNet::kl_to_prior(const GaussianPosterior& post) {
  double acc = 0.0;
  for (size_t i = 0; i < post.mu.size(); ++i) {
    double sigma_sq = std::exp(2.0 * post.log_sigma[i]);
    acc += post.mu[i] * post.mu[i] + sigma_sq - 1.0 - 2.0 * post.log_sigma[i];
  }
  return 0.5 * acc;
}

}  // namespace topicrnn
