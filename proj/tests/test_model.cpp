#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "topicrnn/errors.hpp"
#include "topicrnn/model.hpp"

using namespace topicrnn;

namespace {

Vocabulary tiny_vocab(size_t size, size_t n_stop = 2) {
  std::vector<std::string> tokens = {"unk", "eos"};
  std::set<std::string> stop;
  for (size_t i = 2; i < size; ++i) {
    tokens.push_back("w" + std::to_string(i - 2));
    if (i - 2 < n_stop) stop.insert(tokens.back());
  }
  return Vocabulary(std::move(tokens), stop);
}

ModelConfig tiny_config(CellKind kind = CellKind::rnn) {
  ModelConfig config;
  config.cell = kind;
  config.hidden = 4;
  config.layers = 1;
  config.topics = 3;
  config.infer_hidden = 5;
  config.infer_layers = 1;
  config.seed = 1;
  return config;
}

EncodedDocument random_document(const Vocabulary& vocab, size_t length,
                                uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<uint32_t> ids(length);
  for (auto& id : ids) {
    id = static_cast<uint32_t>(rng() % vocab.size());
  }
  return document_from_ids(vocab, std::move(ids));
}

CorpusSplit split_from_text(const Vocabulary& vocab, const std::string& text,
                            size_t block_size) {
  std::istringstream in(text);
  return encode_documents(in, vocab, block_size, "test");
}

}  // namespace

TEST_CASE("word_logits gating: stop words ignore theta bitwise") {
  auto vocab = tiny_vocab(8);
  TopicRnnModel model(tiny_config(), vocab);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    Tensor h({4});
    Tensor theta1({3});
    Tensor theta2({3});
    for (size_t i = 0; i < 4; ++i) h[i] = dist(rng);
    for (size_t i = 0; i < 3; ++i) {
      theta1[i] = dist(rng);
      theta2[i] = dist(rng) * 100.0;
    }
    Tensor a = model.word_logits(h, theta1, true);
    Tensor b = model.word_logits(h, theta2, true);
    CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
  }
}

TEST_CASE("word_logits: zero theta reduces to the output projection") {
  auto vocab = tiny_vocab(8);
  TopicRnnModel model(tiny_config(), vocab);
  Tensor h = Tensor::from_vector({0.3, -0.4, 1.0, 0.2});
  Tensor zero_theta({3});
  Tensor gated = model.word_logits(h, zero_theta, false);
  Tensor plain = model.word_logits(h, zero_theta, true);
  for (size_t i = 0; i < gated.size(); ++i) {
    CHECK(gated[i] == doctest::Approx(plain[i]).epsilon(1e-15));
  }
}

TEST_CASE("word_logits scalar case by hand") {
  // H=1, K=1, C=2, v=(1,0), b=(0,2), h=1, theta=0.5, l=0
  auto vocab = tiny_vocab(2, 0);
  ModelConfig config = tiny_config();
  config.hidden = 1;
  config.topics = 1;
  config.infer_hidden = 2;
  TopicRnnModel model(config, vocab);
  ParamStore& store = model.params();
  store.param("out.v").at(0, 0) = 1.0;
  store.param("out.v").at(0, 1) = 0.0;
  store.param("topic.b").at(0, 0) = 0.0;
  store.param("topic.b").at(0, 1) = 2.0;
  Tensor logits = model.word_logits(Tensor::from_vector({1.0}),
                                    Tensor::from_vector({0.5}), false);
  CHECK(logits[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(logits[1] == doctest::Approx(1.0).epsilon(1e-15));
  Tape tape(&store, false);
  Tensor probs = tape.value(tape.softmax(tape.constant(logits)));
  CHECK(probs[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(probs[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("stop_probability closed forms") {
  auto vocab = tiny_vocab(6);
  ModelConfig config = tiny_config();
  config.hidden = 2;
  TopicRnnModel model(config, vocab);
  ParamStore& store = model.params();

  store.param("stop.gamma").fill(0.0);
  CHECK(model.stop_probability(Tensor::from_vector({0.7, -3.0})) == 0.5);

  store.param("stop.gamma").fill(1.5);
  CHECK(model.stop_probability(Tensor::from_vector({0.0, 0.0})) == 0.5);

  store.param("stop.gamma").fill(1.0);
  double half_log3 = std::log(3.0) / 2.0;
  CHECK(model.stop_probability(Tensor::from_vector({half_log3, half_log3})) ==
        doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("sequence_elbo with zero parameters matches the hand forward pass") {
  auto vocab = tiny_vocab(4, 1);
  TopicRnnModel model(tiny_config(), vocab);
  for (const auto& name : model.params().names()) {
    model.params().param(name).fill(0.0);
  }
  EncodedDocument doc = document_from_ids(vocab, {2});
  GaussianPosterior post = model.posterior(doc.bow);
  Tensor theta = Tensor::from_vector({0.0, 0.0, 0.0});
  ElboBreakdown bd = model.sequence_elbo(doc, theta, post);
  CHECK(bd.word_loglik == doctest::Approx(std::log(0.25)).epsilon(1e-12));
  CHECK(bd.stop_loglik == doctest::Approx(std::log(0.5)).epsilon(1e-12));
  CHECK(bd.kl == 0.0);
  CHECK(bd.elbo ==
        doctest::Approx(std::log(0.25) + std::log(0.5)).epsilon(1e-12));
}

TEST_CASE("elbo breakdown: kl non-negative, parts add up") {
  auto vocab = tiny_vocab(10);
  TopicRnnModel model(tiny_config(), vocab);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    EncodedDocument doc = random_document(vocab, 3 + trial % 8, 100 + trial);
    GaussianPosterior post = model.posterior(doc.bow);
    Tensor noise({3});
    for (size_t i = 0; i < 3; ++i) noise[i] = normal(rng);
    Tensor theta = InferenceNet::sample_theta(post, noise);
    ElboBreakdown bd = model.sequence_elbo(doc, theta, post);
    CHECK(bd.kl >= 0.0);
    CHECK(std::abs(bd.elbo - (bd.word_loglik + bd.stop_loglik - bd.kl)) <=
          1e-9);
  }
}

TEST_CASE("single-sample ELBO is bounded by the importance-sampled marginal") {
  auto vocab = tiny_vocab(8);
  ModelConfig config = tiny_config();
  TopicRnnModel model(config, vocab);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> normal(0.0, 1.0);
  size_t hits = 0;
  const size_t trials = 5;
  for (size_t trial = 0; trial < trials; ++trial) {
    EncodedDocument doc = random_document(vocab, 6, 300 + trial);
    GaussianPosterior post = model.posterior(doc.bow);
    Tensor noise({3});
    for (size_t i = 0; i < 3; ++i) noise[i] = normal(rng);
    Tensor theta = InferenceNet::sample_theta(post, noise);
    double elbo = model.sequence_elbo(doc, theta, post).elbo;
    auto estimate =
        topicrnn_tests::importance_log_marginal(model, doc, 1000, 50 + trial);
    // the comparison is noisy on both sides: the importance estimate and the
    // single ELBO draw (whose sd the importance log-weights estimate)
    double slack = 2.0 * std::sqrt(estimate.std_error * estimate.std_error +
                                   estimate.log_weight_sd *
                                       estimate.log_weight_sd);
    if (elbo <= estimate.log_marginal + slack) ++hits;
  }
  CHECK(hits >= trials - 1);
}

TEST_CASE("full-model gradient check on the tiny rnn configuration") {
  // T=6, H=4, C=12, K=3, E=5
  auto vocab = tiny_vocab(12, 3);
  TopicRnnModel model(tiny_config(), vocab);
  EncodedDocument doc = random_document(vocab, 6, 17);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> normal(0.0, 1.0);
  Tensor noise({3});
  for (size_t i = 0; i < 3; ++i) noise[i] = normal(rng);

  auto report = finite_difference_check(
      [&](Tape& tape) {
        return model.build_doc_loss(tape, doc, noise, 0, false);
      },
      model.params(), 1e-5);
  INFO("worst " << report.worst_param << "[" << report.worst_index
                << "] analytic " << report.analytic << " numeric "
                << report.numeric);
  CHECK(report.max_rel_error <= 1e-4);
}

TEST_CASE("bptt truncation only changes gradients that cross chunk bounds") {
  auto vocab = tiny_vocab(12, 3);
  TopicRnnModel model(tiny_config(), vocab);
  EncodedDocument doc = random_document(vocab, 6, 18);
  Tensor noise({3});
  noise.fill(0.25);

  auto grads_with = [&](size_t bptt) {
    model.params().zero_grads();
    Tape tape(&model.params(), true);
    Var loss = model.build_doc_loss(tape, doc, noise, bptt, false);
    tape.backward(loss);
    std::map<std::string, Tensor> out;
    for (const auto& name : model.params().names()) {
      out.emplace(name, model.params().grad(name));
    }
    return out;
  };
  auto full = grads_with(0);
  auto truncated = grads_with(2);
  double recurrent_diff = 0.0;
  const Tensor& a = full.at("cell.l0.w_hh");
  const Tensor& b = truncated.at("cell.l0.w_hh");
  for (size_t i = 0; i < a.size(); ++i) {
    recurrent_diff += std::abs(a[i] - b[i]);
  }
  CHECK(recurrent_diff > 0.0);
}

TEST_CASE("train with lr=0 leaves parameters untouched") {
  auto vocab = tiny_vocab(10);
  TopicRnnModel model(tiny_config(), vocab);
  auto before = model.params().snapshot();
  CorpusSplit train = split_from_text(vocab, "w2 w3 w4\nw5 w2 w3\n", 1);
  CorpusSplit valid = split_from_text(vocab, "w3 w4\n", 1);
  TrainConfig config;
  config.epochs = 2;
  config.lr = 0.0;
  config.patience = 5;
  model.train(train, valid, config);
  for (const auto& [name, tensor] : before) {
    const Tensor& after = model.params().param(name);
    CHECK(std::memcmp(tensor.data(), after.data(),
                      tensor.size() * sizeof(double)) == 0);
  }
}

TEST_CASE("training is bit-deterministic per seed") {
  auto vocab = tiny_vocab(10);
  CorpusSplit train = split_from_text(
      vocab, "w2 w3 w4\nw5 w2 w3\nw6 w7 w2\nw4 w4 w5\n", 2);
  CorpusSplit valid = split_from_text(vocab, "w3 w4\n", 1);
  auto run = [&]() {
    TopicRnnModel model(tiny_config(), vocab);
    TrainConfig config;
    config.epochs = 1;
    config.lr = 0.05;
    config.seed = 7;
    auto result = model.train(train, valid, config);
    return std::make_pair(result.epochs[0].train_elbo_per_token,
                          model.params().snapshot());
  };
  auto [loss_a, params_a] = run();
  auto [loss_b, params_b] = run();
  CHECK(std::memcmp(&loss_a, &loss_b, sizeof(double)) == 0);
  for (const auto& [name, tensor] : params_a) {
    const Tensor& other = params_b.at(name);
    CHECK(std::memcmp(tensor.data(), other.data(),
                      tensor.size() * sizeof(double)) == 0);
  }
}

TEST_CASE("predictive_distribution") {
  auto vocab = tiny_vocab(6);
  ModelConfig config = tiny_config();
  config.hidden = 2;
  config.topics = 2;
  TopicRnnModel model(config, vocab);

  SUBCASE("saturated stop gate collapses to the plain softmax") {
    model.params().param("stop.gamma").fill(100.0);
    Tensor h = Tensor::from_vector({1.0, 1.0});
    Tensor theta = Tensor::from_vector({0.9, -0.4});
    Tensor mixture = model.predictive_distribution(h, theta);
    Tape tape(&model.params(), false);
    Tensor plain = tape.value(tape.softmax(
        tape.constant(model.word_logits(h, theta, true))));
    for (size_t i = 0; i < mixture.size(); ++i) {
      CHECK(std::abs(mixture[i] - plain[i]) <= 1e-9);
    }
  }
  SUBCASE("zero theta makes both branches equal") {
    Tensor h = Tensor::from_vector({0.4, -1.2});
    Tensor zero_theta({2});
    Tensor mixture = model.predictive_distribution(h, zero_theta);
    Tape tape(&model.params(), false);
    Tensor plain = tape.value(tape.softmax(
        tape.constant(model.word_logits(h, zero_theta, true))));
    for (size_t i = 0; i < mixture.size(); ++i) {
      CHECK(mixture[i] == doctest::Approx(plain[i]).epsilon(1e-12));
    }
  }
  SUBCASE("tiny case matches the explicit two-term sum") {
    auto vocab2 = tiny_vocab(2, 0);
    ModelConfig c2 = tiny_config();
    c2.hidden = 1;
    c2.topics = 1;
    TopicRnnModel m2(c2, vocab2);
    m2.params().param("out.v").at(0, 0) = 0.8;
    m2.params().param("out.v").at(0, 1) = -0.3;
    m2.params().param("topic.b").at(0, 0) = 0.5;
    m2.params().param("topic.b").at(0, 1) = 1.5;
    m2.params().param("stop.gamma")[0] = 0.7;
    double h_val = 0.6;
    double theta_val = -1.1;
    Tensor mixture = m2.predictive_distribution(
        Tensor::from_vector({h_val}), Tensor::from_vector({theta_val}));

    double p_stop = 1.0 / (1.0 + std::exp(-0.7 * h_val));
    double l0 = 0.8 * h_val;
    double l1 = -0.3 * h_val;
    double z_stop = std::exp(l0) + std::exp(l1);
    double g0 = l0 + 0.5 * theta_val;
    double g1 = l1 + 1.5 * theta_val;
    double z_content = std::exp(g0) + std::exp(g1);
    double expected0 =
        p_stop * std::exp(l0) / z_stop + (1 - p_stop) * std::exp(g0) / z_content;
    double expected1 =
        p_stop * std::exp(l1) / z_stop + (1 - p_stop) * std::exp(g1) / z_content;
    CHECK(mixture[0] == doctest::Approx(expected0).epsilon(1e-12));
    CHECK(mixture[1] == doctest::Approx(expected1).epsilon(1e-12));
  }
  SUBCASE("mixture is a distribution for random inputs") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    for (int trial = 0; trial < 100; ++trial) {
      Tensor h({2});
      Tensor theta({2});
      for (size_t i = 0; i < 2; ++i) {
        h[i] = dist(rng);
        theta[i] = dist(rng);
      }
      Tensor p = model.predictive_distribution(h, theta);
      double total = 0.0;
      for (size_t i = 0; i < p.size(); ++i) {
        CHECK(p[i] >= 0.0);
        total += p[i];
      }
      CHECK(std::abs(total - 1.0) <= 1e-9);
    }
  }
}

TEST_CASE("perplexity of the all-zero model is the vocabulary size") {
  auto vocab = tiny_vocab(10);
  TopicRnnModel model(tiny_config(), vocab);
  for (const auto& name : model.params().names()) {
    model.params().param(name).fill(0.0);
  }
  CorpusSplit split = split_from_text(
      vocab, "w2 w3 w4 w5\nw6 w7 w0 w1\nw2 w2\n", 2);
  EvalOptions options;
  options.window = 3;
  CHECK(model.perplexity(split, options) ==
        doctest::Approx(10.0).epsilon(1e-7));
}

TEST_CASE("a perfect predictor reaches perplexity 1") {
  auto vocab = tiny_vocab(6, 0);
  ModelConfig config = tiny_config();
  config.hidden = 2;
  TopicRnnModel model(config, vocab);
  for (const auto& name : model.params().names()) {
    model.params().param(name).fill(0.0);
  }
  model.params().param("cell.l0.b").fill(10.0);  // pins h near (1, 1)
  uint32_t target = vocab.id("w2");
  Tensor& v = model.params().param("out.v");
  v.at(0, target) = 50.0;
  v.at(1, target) = 50.0;
  EncodedDocument doc =
      document_from_ids(vocab, std::vector<uint32_t>(12, target));
  CorpusSplit split;
  split.documents.push_back(doc);
  EvalOptions options;
  CHECK(model.perplexity(split, options) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("two uniform tokens give perplexity 2") {
  auto vocab = tiny_vocab(2, 0);  // unk and eos only
  ModelConfig config = tiny_config();
  config.topics = 1;
  TopicRnnModel model(config, vocab);
  for (const auto& name : model.params().names()) {
    model.params().param(name).fill(0.0);
  }
  EncodedDocument doc = document_from_ids(vocab, {0, 1});
  CorpusSplit split;
  split.documents.push_back(doc);
  CHECK(model.perplexity(split, EvalOptions{}) ==
        doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("perplexity is identical across thread counts") {
  auto vocab = tiny_vocab(12);
  TopicRnnModel model(tiny_config(), vocab);
  CorpusSplit split;
  for (int d = 0; d < 7; ++d) {
    split.documents.push_back(random_document(vocab, 9 + d, 400 + d));
  }
  EvalOptions serial;
  serial.threads = 1;
  EvalOptions parallel;
  parallel.threads = 4;
  double a = model.perplexity(split, serial);
  double b = model.perplexity(split, parallel);
  CHECK(std::memcmp(&a, &b, sizeof(double)) == 0);

  // TOPICRNN_THREADS caps the auto-resolved parallelism
  setenv("TOPICRNN_THREADS", "2", 1);
  EvalOptions from_env;  // threads = 0 -> consult the environment
  double c = model.perplexity(split, from_env);
  unsetenv("TOPICRNN_THREADS");
  CHECK(std::memcmp(&a, &c, sizeof(double)) == 0);
}

TEST_CASE("no look-ahead: future mutations never change scored prefixes") {
  auto vocab = tiny_vocab(12);
  TopicRnnModel model(tiny_config(), vocab);
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    EncodedDocument doc = random_document(vocab, 24, 500 + trial);
    EvalOptions options;
    options.window = 5;
    std::vector<double> base = model.document_nlls(doc, options);

    size_t cut = 3 + rng() % 18;
    std::vector<uint32_t> mutated_ids = doc.ids;
    for (size_t t = cut + 1; t < mutated_ids.size(); ++t) {
      mutated_ids[t] = static_cast<uint32_t>(rng() % vocab.size());
    }
    EncodedDocument mutated = document_from_ids(vocab, std::move(mutated_ids));
    std::vector<double> changed = model.document_nlls(mutated, options);
    for (size_t t = 0; t <= cut; ++t) {
      CHECK(base[t] == changed[t]);
    }
  }
}

TEST_CASE("trailing window mode changes the refresh source") {
  auto vocab = tiny_vocab(12);
  TopicRnnModel model(tiny_config(), vocab);
  EncodedDocument doc = random_document(vocab, 30, 600);
  EvalOptions from_start;
  from_start.window = 5;
  EvalOptions trailing;
  trailing.window = 5;
  trailing.trailing_window = true;
  auto a = model.document_nlls(doc, from_start);
  auto b = model.document_nlls(doc, trailing);
  // first two windows agree (prefix == trailing there), later ones diverge
  for (size_t t = 0; t < 10; ++t) CHECK(a[t] == b[t]);
  bool diverged = false;
  for (size_t t = 10; t < doc.length(); ++t) {
    if (a[t] != b[t]) diverged = true;
  }
  CHECK(diverged);
}

TEST_CASE("generate is deterministic and respects greedy mode") {
  auto vocab = tiny_vocab(10);
  TopicRnnModel model(tiny_config(), vocab);
  EncodedDocument seed_doc = random_document(vocab, 12, 700);

  auto a = model.generate(seed_doc, 25, 1.0, 7, 10);
  auto b = model.generate(seed_doc, 25, 1.0, 7, 10);
  CHECK(a == b);
  auto c = model.generate(seed_doc, 25, 1.0, 8, 10);
  CHECK(a != c);

  auto g1 = model.generate(seed_doc, 25, 0.0, 1, 10);
  auto g2 = model.generate(seed_doc, 25, 0.0, 99, 10);
  CHECK(g1 == g2);  // greedy ignores the sampling seed

  CHECK_THROWS_AS(model.generate(seed_doc, 0, 1.0, 1, 10), ValidationError);
  CHECK_THROWS_AS(model.generate(seed_doc, 5, -0.5, 1, 10), ValidationError);
}

TEST_CASE("top_topic_words ordering") {
  auto vocab = tiny_vocab(10);  // w0, w1 are stop words
  ModelConfig config = tiny_config();
  config.topics = 2;
  TopicRnnModel model(config, vocab);

  SUBCASE("all-zero topic matrix falls back to id order") {
    model.params().param("topic.b").fill(0.0);
    auto words = model.top_topic_words(3);
    REQUIRE(words.size() == 2);
    // content ids in order: unk, eos, w2, ...
    CHECK(words[0][0] == "unk");
    CHECK(words[0][1] == "eos");
    CHECK(words[0][2] == "w2");
    CHECK(words[1] == words[0]);
  }
  SUBCASE("a one-hot row puts its word first") {
    model.params().param("topic.b").fill(0.0);
    uint32_t law = vocab.id("w5");
    model.params().param("topic.b").at(0, law) = 3.0;
    auto words = model.top_topic_words(2);
    CHECK(words[0][0] == "w5");
  }
  SUBCASE("stop words never appear") {
    model.params().param("topic.b").fill(0.0);
    model.params().param("topic.b").at(0, vocab.id("w0")) = 99.0;
    auto words = model.top_topic_words(5);
    for (const auto& w : words[0]) CHECK(w != "w0");
  }
  SUBCASE("n above the vocabulary size is rejected") {
    CHECK_THROWS_AS(model.top_topic_words(11), ValidationError);
  }
}

TEST_CASE("parameter counts match the complexity decomposition") {
  for (CellKind kind : {CellKind::rnn, CellKind::gru, CellKind::lstm}) {
    auto vocab = tiny_vocab(12, 3);
    ModelConfig config = tiny_config(kind);
    config.layers = 2;
    config.infer_layers = 2;
    TopicRnnModel model(config, vocab);
    auto formulas = model.parameter_count_formulas();
    auto actuals = model.parameter_count_actuals();
    CHECK(formulas == actuals);
    size_t c = vocab.size();
    size_t h = config.hidden;
    size_t k = config.topics;
    CHECK(formulas.at("embedding") == c * h);
    CHECK(formulas.at("output") == h * c);
    CHECK(formulas.at("stop") == h);
    CHECK(formulas.at("topic") == k * c);
    CHECK(formulas.at("total") ==
          formulas.at("embedding") + formulas.at("cell") +
              formulas.at("output") + formulas.at("stop") +
              formulas.at("topic") + formulas.at("inference"));
  }
}

TEST_CASE("parameter counts at the 10K-vocabulary reference profile") {
  // C=10000 with 449 stop words, H=100, K=50, inference net 2x200
  std::vector<std::string> tokens = {"unk", "eos"};
  std::set<std::string> stop;
  for (int i = 0; i < 449; ++i) {
    tokens.push_back("sw" + std::to_string(i));
    stop.insert(tokens.back());
  }
  for (int i = 0; i < 10000 - 451; ++i) tokens.push_back("w" + std::to_string(i));
  Vocabulary vocab(std::move(tokens), stop);
  REQUIRE(vocab.size() == 10000);
  REQUIRE(vocab.content_size() == 9551);

  ModelConfig config;
  config.cell = CellKind::rnn;
  config.hidden = 100;
  config.topics = 50;
  config.infer_hidden = 200;
  config.infer_layers = 2;
  TopicRnnModel model(config, vocab);

  size_t expected = 10000 * 100                      // embedding
                    + (100 * 100 + 100 * 100 + 100)  // rnn cell
                    + 100 * 10000                    // output projection
                    + 100                            // stop weights
                    + 50 * 10000                     // topic matrix
                    + (9551 * 200 + 200)             // inference layer 1
                    + (200 * 200 + 200)              // inference layer 2
                    + 2 * (50 * 200 + 50);           // mu and log-sigma heads
  CHECK(model.params().total_size() == expected);
  CHECK(model.parameter_count_formulas() == model.parameter_count_actuals());
}

TEST_CASE("train reports NaN losses with their location") {
  auto vocab = tiny_vocab(8);
  TopicRnnModel model(tiny_config(), vocab);
  model.params().param("emb.u").fill(std::nan(""));
  CorpusSplit train = split_from_text(vocab, "w2 w3\n", 1);
  CorpusSplit valid = split_from_text(vocab, "w3\n", 1);
  TrainConfig config;
  config.epochs = 1;
  CHECK_THROWS_AS(model.train(train, valid, config), NumericError);
}

TEST_CASE("empty inputs are rejected") {
  auto vocab = tiny_vocab(8);
  TopicRnnModel model(tiny_config(), vocab);
  EncodedDocument empty;
  empty.bow.assign(vocab.content_size(), 0);
  GaussianPosterior post = model.posterior(empty.bow);
  CHECK_THROWS_AS(model.sequence_elbo(empty, Tensor({3}), post),
                  ValidationError);
  CorpusSplit none;
  CHECK_THROWS_AS(model.perplexity(none, EvalOptions{}), ValidationError);
}
