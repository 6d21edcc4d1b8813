#include "topicrnn/model.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <random>
#include <thread>

#include "topicrnn/errors.hpp"
#include "topicrnn/numerics.hpp"

namespace topicrnn {

namespace {
constexpr const char* kEmbedding = "emb.u";    // C x H
constexpr const char* kOutput = "out.v";       // H x C
constexpr const char* kStop = "stop.gamma";    // H
constexpr const char* kTopic = "topic.b";      // K x C
constexpr double kInitRange = 0.08;

ParamStore* mutable_store(const ParamStore& store) {
  // No-grad tapes only read parameter values.
  return const_cast<ParamStore*>(&store);
}
}  // namespace

TopicRnnModel::TopicRnnModel(ModelConfig config, Vocabulary vocab)
    : config_(config),
      vocab_(std::move(vocab)),
      cell_({config.cell, config.hidden, config.hidden, config.layers},
            "cell"),
      inference_({vocab_.content_size(), config.infer_hidden,
                  config.infer_layers, config.topics, config.normalize_bow},
                 "inf") {
  if (config_.hidden < 1 || config_.topics < 1 || config_.layers < 1) {
    throw ConfigError("model dimensions must all be >= 1");
  }
  size_t c = vocab_.size();
  size_t h = config_.hidden;
  size_t k = config_.topics;
  store_.add(kEmbedding, {c, h});
  cell_.register_params(store_);
  store_.add(kOutput, {h, c});
  store_.add(kStop, {h});
  store_.add(kTopic, {k, c});
  inference_.register_params(store_);
  init_params();
}

TopicRnnModel::TopicRnnModel(ModelConfig config, Vocabulary vocab,
                             const std::map<std::string, Tensor>& params)
    : TopicRnnModel(config, std::move(vocab)) {
  auto names = store_.names();
  if (params.size() != names.size()) {
    throw ConfigError("checkpoint parameter set does not match model config");
  }
  store_.restore(params);
}

void TopicRnnModel::init_params() {
  std::mt19937_64 rng(config_.seed);
  std::uniform_real_distribution<double> dist(-kInitRange, kInitRange);
  for (const auto& name : store_.names()) {
    Tensor& p = store_.param(name);
    for (size_t i = 0; i < p.size(); ++i) p[i] = dist(rng);
  }
}

Var TopicRnnModel::build_word_logits(Tape& tape, Var h, Var theta) const {
  Var logits = tape.matmul_tn(tape.param(kOutput), h);
  if (theta.valid()) {
    logits = tape.add(logits, tape.matmul_tn(tape.param(kTopic), theta));
  }
  return logits;
}

Tensor TopicRnnModel::word_logits(const Tensor& h, const Tensor& theta,
                                  bool stop_indicator) const {
  Tape tape(mutable_store(store_), false);
  Var hv = tape.constant(h);
  Var tv = stop_indicator ? Var{} : tape.constant(theta);
  return tape.value(build_word_logits(tape, hv, tv));
}

double TopicRnnModel::stop_probability(const Tensor& h) const {
  const Tensor& gamma = store_.param(kStop);
  if (gamma.size() != h.size()) {
    throw ConfigError("hidden vector length mismatch");
  }
  double acc = 0.0;
  for (size_t i = 0; i < h.size(); ++i) acc += gamma[i] * h[i];
  return sigmoid(acc);
}

Tensor TopicRnnModel::predictive_distribution(const Tensor& h,
                                              const Tensor& theta_hat) const {
  Tape tape(mutable_store(store_), false);
  Var hv = tape.constant(h);
  Tensor sm_stop = tape.value(tape.softmax(build_word_logits(tape, hv, Var{})));
  Tensor sm_content = tape.value(tape.softmax(
      build_word_logits(tape, hv, tape.constant(theta_hat))));
  double p_stop = stop_probability(h);
  Tensor out({vocab_.size()});
  for (size_t i = 0; i < out.size(); ++i) {
    out[i] = p_stop * sm_stop[i] + (1.0 - p_stop) * sm_content[i];
  }
  return out;
}

GaussianPosterior TopicRnnModel::posterior(
    const std::vector<uint32_t>& bow) const {
  return inference_.encode_values(store_, bow);
}

TopicRnnModel::SequenceTerms TopicRnnModel::build_sequence_terms(
    Tape& tape, const EncodedDocument& doc, Var theta, size_t bptt_len) const {
  if (doc.length() == 0) throw ValidationError("empty document");
  Var emb = tape.param(kEmbedding);
  Var gamma = tape.param(kStop);
  auto state = cell_.lift(tape, cell_.init_state());
  Var word_ll;
  Var stop_ll;
  size_t t_count = doc.length();
  for (size_t t = 0; t < t_count; ++t) {
    uint32_t x_id = t == 0 ? vocab_.eos_id() : doc.ids[t - 1];
    state = cell_.step(tape, tape.row(emb, x_id), state);
    Var h = state.back().h;

    Var stop_logit = tape.dot(gamma, h);
    Var stop_term = doc.stop[t]
                        ? tape.log_sigmoid_(stop_logit)
                        : tape.log_sigmoid_(tape.scale(stop_logit, -1.0));
    stop_ll = stop_ll.valid() ? tape.add(stop_ll, stop_term) : stop_term;

    // topic bias only for content words, and only when theta is in play
    Var logits = build_word_logits(
        tape, h, (!doc.stop[t] && theta.valid()) ? theta : Var{});
    Var word_term = tape.pick(tape.log_softmax(logits), doc.ids[t]);
    word_ll = word_ll.valid() ? tape.add(word_ll, word_term) : word_term;

    if (bptt_len > 0 && (t + 1) % bptt_len == 0 && t + 1 < t_count) {
      state = cell_.detach(tape, state);
    }
  }
  return {word_ll, stop_ll};
}

ElboBreakdown TopicRnnModel::sequence_elbo(const EncodedDocument& doc,
                                           const Tensor& theta,
                                           const GaussianPosterior& post) const {
  Tape tape(mutable_store(store_), false);
  SequenceTerms terms =
      build_sequence_terms(tape, doc, tape.constant(theta), 0);
  ElboBreakdown breakdown;
  breakdown.word_loglik = tape.scalar(terms.word);
  breakdown.stop_loglik = tape.scalar(terms.stop);
  breakdown.kl = InferenceNet::kl_to_prior(post);
  breakdown.elbo =
      breakdown.word_loglik + breakdown.stop_loglik - breakdown.kl;
  return breakdown;
}

Var TopicRnnModel::build_doc_loss(Tape& tape, const EncodedDocument& doc,
                                  const Tensor& noise, size_t bptt_len,
                                  bool ablate_topics) const {
  double inv_t = 1.0 / static_cast<double>(doc.length());
  if (ablate_topics) {
    SequenceTerms terms = build_sequence_terms(tape, doc, Var{}, bptt_len);
    return tape.scale(tape.add(terms.word, terms.stop), -inv_t);
  }
  PosteriorVars post = inference_.encode(tape, doc.bow);
  Var theta = InferenceNet::sample_theta(tape, post, noise);
  SequenceTerms terms = build_sequence_terms(tape, doc, theta, bptt_len);
  Var kl = InferenceNet::kl_to_prior(tape, post);
  Var neg_elbo = tape.sub(kl, tape.add(terms.word, terms.stop));
  return tape.scale(neg_elbo, inv_t);
}

TrainResult TopicRnnModel::train(const CorpusSplit& train_split,
                                 const CorpusSplit& valid_split,
                                 const TrainConfig& config) {
  if (config.epochs < 1 || config.bptt_len < 1) {
    throw ConfigError("train requires epochs >= 1 and bptt_len >= 1");
  }
  if (train_split.documents.empty() || valid_split.documents.empty()) {
    throw ValidationError("train and validation splits must be non-empty");
  }
  if (config.ablate_topics) store_.param(kTopic).fill(0.0);

  AdamState adam(store_, AdamConfig{config.lr, 0.9, 0.999, 1e-8});
  std::vector<size_t> order(train_split.documents.size());

  EvalOptions valid_options;
  valid_options.window = config.window;
  valid_options.ablate_topics = config.ablate_topics;

  TrainResult result;
  auto best = store_.snapshot();
  double best_ppl = std::numeric_limits<double>::infinity();
  size_t best_epoch = 0;
  size_t since_best = 0;

  for (size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    auto t0 = std::chrono::steady_clock::now();
    // the stochastic stream (visit order, theta noise) replays identically
    // every epoch, so a zero learning rate reports identical epoch losses
    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    double elbo_total = 0.0;
    double kl_total = 0.0;
    size_t tokens_total = 0;

    for (size_t doc_index : order) {
      const EncodedDocument& doc = train_split.documents[doc_index];
      Tensor noise({config_.topics});
      if (!config.ablate_topics) {
        for (size_t i = 0; i < noise.size(); ++i) noise[i] = normal(rng);
      }
      Tape tape(&store_, true);
      Var loss =
          build_doc_loss(tape, doc, noise, config.bptt_len,
                         config.ablate_topics);
      double loss_value = tape.scalar(loss);
      if (std::isnan(loss_value)) {
        throw NumericError("NaN loss at epoch " + std::to_string(epoch) +
                           ", document " + std::to_string(doc_index));
      }
      double t_len = static_cast<double>(doc.length());
      elbo_total += -loss_value * t_len;
      if (!config.ablate_topics) {
        // loss tape holds the posterior; recompute KL from values
        GaussianPosterior post = posterior(doc.bow);
        kl_total += InferenceNet::kl_to_prior(post);
      }
      tokens_total += doc.length();

      tape.backward(loss);
      store_.clip_gradients(config.clip_norm);
      adam.step(store_);
    }

    double valid_ppl = perplexity(valid_split, valid_options);
    auto t1 = std::chrono::steady_clock::now();

    EpochMetrics metrics;
    metrics.epoch = epoch;
    metrics.train_elbo_per_token =
        elbo_total / static_cast<double>(tokens_total);
    metrics.valid_perplexity = valid_ppl;
    metrics.kl_per_token = kl_total / static_cast<double>(tokens_total);
    metrics.seconds = std::chrono::duration<double>(t1 - t0).count();
    result.epochs.push_back(metrics);
    if (config.on_epoch) config.on_epoch(metrics);

    if (valid_ppl < best_ppl) {
      best_ppl = valid_ppl;
      best = store_.snapshot();
      best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }

  store_.restore(best);
  result.best_epoch = best_epoch;
  result.best_valid_perplexity = best_ppl;
  return result;
}

std::vector<double> TopicRnnModel::document_nlls(
    const EncodedDocument& doc, const EvalOptions& options) const {
  if (doc.length() == 0) throw ValidationError("empty document");
  if (options.window < 1) throw ConfigError("window must be >= 1");
  size_t t_count = doc.length();
  size_t window = options.window;
  std::vector<double> nll(t_count);
  Tensor theta_hat({config_.topics});  // prior mean
  std::vector<uint32_t> bow(vocab_.content_size(), 0);
  auto state = cell_.init_state();

  for (size_t start = 0; start < t_count; start += window) {
    size_t end = std::min(start + window, t_count);
    if (start > 0 && !options.ablate_topics) {
      if (options.trailing_window) {
        std::vector<uint32_t> trail(vocab_.content_size(), 0);
        size_t lo = start >= window ? start - window : 0;
        for (size_t t = lo; t < start; ++t) {
          if (!doc.stop[t]) ++trail[vocab_.content_index(doc.ids[t])];
        }
        theta_hat = posterior(trail).mu;
      } else {
        theta_hat = posterior(bow).mu;
      }
    }
    Tape tape(mutable_store(store_), false);
    auto svars = cell_.lift(tape, state);
    Var emb = tape.param(kEmbedding);
    Var gamma = tape.param(kStop);
    Var theta_c = tape.constant(theta_hat);
    for (size_t t = start; t < end; ++t) {
      uint32_t x_id = t == 0 ? vocab_.eos_id() : doc.ids[t - 1];
      svars = cell_.step(tape, tape.row(emb, x_id), svars);
      Var h = svars.back().h;
      double stop_logit = tape.scalar(tape.dot(gamma, h));
      const Tensor& ls_stop =
          tape.value(tape.log_softmax(build_word_logits(tape, h, Var{})));
      double branch_stop = log_sigmoid(stop_logit) + ls_stop[doc.ids[t]];
      double branch_content;
      if (options.ablate_topics) {
        branch_content = log_sigmoid(-stop_logit) + ls_stop[doc.ids[t]];
      } else {
        const Tensor& ls_content = tape.value(
            tape.log_softmax(build_word_logits(tape, h, theta_c)));
        branch_content = log_sigmoid(-stop_logit) + ls_content[doc.ids[t]];
      }
      nll[t] = -logaddexp(branch_stop, branch_content);
      if (!doc.stop[t]) ++bow[vocab_.content_index(doc.ids[t])];
    }
    state = cell_.lower(tape, svars);
  }
  return nll;
}

size_t TopicRnnModel::resolve_threads(size_t requested, size_t n_docs) const {
  size_t threads = requested;
  if (threads == 0) {
    if (const char* env = std::getenv("TOPICRNN_THREADS")) {
      long v = std::strtol(env, nullptr, 10);
      if (v > 0) threads = static_cast<size_t>(v);
    }
  }
  if (threads == 0) {
    unsigned hw = std::thread::hardware_concurrency();
    threads = hw > 0 ? hw : 1;
  }
  return std::max<size_t>(1, std::min(threads, n_docs));
}

double TopicRnnModel::perplexity(const CorpusSplit& split,
                                 const EvalOptions& options) const {
  if (split.documents.empty()) throw ValidationError("empty corpus split");
  size_t n = split.documents.size();
  std::vector<double> doc_nll(n, 0.0);
  std::vector<size_t> doc_tokens(n, 0);

  auto eval_doc = [&](size_t i) {
    const EncodedDocument& doc = split.documents[i];
    std::vector<double> nll = document_nlls(doc, options);
    double acc = 0.0;
    for (double v : nll) acc += v;
    doc_nll[i] = acc;
    doc_tokens[i] = doc.length();
  };

  size_t threads = resolve_threads(options.threads, n);
  if (threads <= 1) {
    for (size_t i = 0; i < n; ++i) eval_doc(i);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (size_t w = 0; w < threads; ++w) {
      pool.emplace_back([&, w]() {
        for (size_t i = w; i < n; i += threads) eval_doc(i);
      });
    }
    for (auto& th : pool) th.join();
  }

  // fixed reduction order keeps the result independent of thread count
  double total_nll = 0.0;
  size_t total_tokens = 0;
  for (size_t i = 0; i < n; ++i) {
    total_nll += doc_nll[i];
    total_tokens += doc_tokens[i];
  }
  return std::exp(total_nll / static_cast<double>(total_tokens));
}

std::vector<uint32_t> TopicRnnModel::generate(const EncodedDocument& seed_doc,
                                              size_t length, double temperature,
                                              uint64_t rng_seed,
                                              size_t window) const {
  if (length < 1) throw ValidationError("generation length must be >= 1");
  if (temperature < 0.0) throw ValidationError("temperature must be >= 0");
  if (window < 1) throw ConfigError("window must be >= 1");
  std::vector<uint32_t> bow = seed_doc.bow;
  if (bow.size() != vocab_.content_size()) {
    throw ConfigError("seed document bag-of-words length mismatch");
  }
  Tensor theta_hat = posterior(bow).mu;
  auto state = cell_.init_state();
  uint32_t prev_id = vocab_.eos_id();
  std::mt19937_64 rng(rng_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  bool greedy = temperature == 0.0;
  double inv_temp = greedy ? 1.0 : 1.0 / temperature;

  std::vector<uint32_t> out;
  out.reserve(length);
  for (size_t i = 0; i < length; ++i) {
    if (i > 0 && i % window == 0) theta_hat = posterior(bow).mu;
    Tape tape(mutable_store(store_), false);
    auto svars = cell_.step(tape, tape.row(tape.param(kEmbedding), prev_id),
                            cell_.lift(tape, state));
    Var h = svars.back().h;
    double p_stop = sigmoid(tape.scalar(tape.dot(tape.param(kStop), h)));
    Var logits_stop = build_word_logits(tape, h, Var{});
    Var logits_content =
        build_word_logits(tape, h, tape.constant(theta_hat));
    const Tensor& sm_stop =
        tape.value(tape.softmax(tape.scale(logits_stop, inv_temp)));
    const Tensor& sm_content =
        tape.value(tape.softmax(tape.scale(logits_content, inv_temp)));

    uint32_t picked = 0;
    if (greedy) {
      double best = -1.0;
      for (size_t c = 0; c < vocab_.size(); ++c) {
        double p = p_stop * sm_stop[c] + (1.0 - p_stop) * sm_content[c];
        if (p > best) {
          best = p;
          picked = static_cast<uint32_t>(c);
        }
      }
    } else {
      double u = unit(rng);
      double acc = 0.0;
      picked = static_cast<uint32_t>(vocab_.size() - 1);
      for (size_t c = 0; c < vocab_.size(); ++c) {
        acc += p_stop * sm_stop[c] + (1.0 - p_stop) * sm_content[c];
        if (u < acc) {
          picked = static_cast<uint32_t>(c);
          break;
        }
      }
    }
    out.push_back(picked);
    if (!vocab_.is_stop(picked)) ++bow[vocab_.content_index(picked)];
    prev_id = picked;
    state = cell_.lower(tape, svars);
  }
  return out;
}

std::vector<std::vector<std::string>> TopicRnnModel::top_topic_words(
    size_t n) const {
  if (n > vocab_.size()) {
    throw ValidationError("requested more words than the vocabulary holds");
  }
  const Tensor& b = store_.param(kTopic);
  size_t v_c = vocab_.content_size();
  size_t take = std::min(n, v_c);
  std::vector<std::vector<std::string>> out(config_.topics);
  std::vector<uint32_t> candidates(v_c);
  for (size_t i = 0; i < v_c; ++i) candidates[i] = vocab_.content_id(i);
  for (size_t k = 0; k < config_.topics; ++k) {
    std::vector<uint32_t> ranked = candidates;
    std::sort(ranked.begin(), ranked.end(), [&](uint32_t a, uint32_t c) {
      double wa = b.at(k, a);
      double wc = b.at(k, c);
      if (wa != wc) return wa > wc;
      return a < c;
    });
    out[k].reserve(take);
    for (size_t i = 0; i < take; ++i) out[k].push_back(vocab_.token(ranked[i]));
  }
  return out;
}

DocumentTrace TopicRnnModel::trace_document(const EncodedDocument& doc) const {
  if (doc.length() == 0) throw ValidationError("empty document");
  DocumentTrace trace;
  trace.posterior = posterior(doc.bow);
  auto state = cell_.init_state();
  constexpr size_t kChunk = 128;  // bounds tape size on long documents
  for (size_t start = 0; start < doc.length(); start += kChunk) {
    size_t end = std::min(start + kChunk, doc.length());
    Tape tape(mutable_store(store_), false);
    auto svars = cell_.lift(tape, state);
    Var emb = tape.param(kEmbedding);
    for (size_t t = start; t < end; ++t) {
      uint32_t x_id = t == 0 ? vocab_.eos_id() : doc.ids[t - 1];
      svars = cell_.step(tape, tape.row(emb, x_id), svars);
    }
    state = cell_.lower(tape, svars);
  }
  trace.final_hidden = state.back().h;
  if (config_.cell == CellKind::lstm) trace.final_cell = state.back().c;
  return trace;
}

std::map<std::string, size_t> TopicRnnModel::parameter_count_formulas() const {
  size_t c = vocab_.size();
  size_t h = config_.hidden;
  size_t k = config_.topics;
  std::map<std::string, size_t> counts;
  counts["embedding"] = c * h;
  counts["cell"] = cell_.param_count();
  counts["output"] = h * c;
  counts["stop"] = h;
  counts["topic"] = k * c;
  counts["inference"] = inference_.param_count();
  size_t total = 0;
  for (const auto& [name, v] : counts) total += v;
  counts["total"] = total;
  return counts;
}

std::map<std::string, size_t> TopicRnnModel::parameter_count_actuals() const {
  std::map<std::string, size_t> counts;
  counts["embedding"] = store_.size_with_prefix("emb.");
  counts["cell"] = store_.size_with_prefix("cell.");
  counts["output"] = store_.size_with_prefix("out.");
  counts["stop"] = store_.size_with_prefix("stop.");
  counts["topic"] = store_.size_with_prefix("topic.");
  counts["inference"] = store_.size_with_prefix("inf.");
  counts["total"] = store_.total_size();
  return counts;
}

}  // namespace topicrnn
