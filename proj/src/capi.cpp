#include "topicrnn/topicrnn.h"

#include <cstdio>
#include <cstring>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "topicrnn/checkpoint.hpp"
#include "topicrnn/classifier.hpp"
#include "topicrnn/corpus.hpp"
#include "topicrnn/errors.hpp"
#include "topicrnn/model.hpp"

using nlohmann::json;

struct trnn_vocab {
  topicrnn::Vocabulary vocab;
};

struct trnn_corpus {
  topicrnn::CorpusSplit split;
  uint64_t vocab_hash = 0;
};

struct trnn_model {
  std::unique_ptr<topicrnn::TopicRnnModel> model;
  trnn_vocab vocab_view;  // keeps trnn_model_vocab a borrowed handle
};

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& message) { g_last_error = message; }

trnn_status to_status(const std::exception& e) {
  set_error(e.what());
  if (dynamic_cast<const topicrnn::IoError*>(&e)) return TRNN_ERR_IO;
  if (dynamic_cast<const topicrnn::NumericError*>(&e)) return TRNN_ERR_NUMERIC;
  if (dynamic_cast<const topicrnn::VocabMismatchError*>(&e)) {
    return TRNN_ERR_VOCAB_MISMATCH;
  }
  return TRNN_ERR_INVALID;
}

template <typename Fn>
trnn_status guarded(Fn&& fn) {
  try {
    fn();
    return TRNN_OK;
  } catch (const std::exception& e) {
    return to_status(e);
  } catch (...) {
    set_error("unknown error");
    return TRNN_ERR_INVALID;
  }
}

char* copy_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

void require(bool condition, const char* message) {
  if (!condition) throw topicrnn::ValidationError(message);
}

void check_vocab(const trnn_model* model, const trnn_corpus* corpus) {
  if (model->model->vocab().hash() != corpus->vocab_hash) {
    throw topicrnn::VocabMismatchError(
        "corpus was encoded with a different vocabulary than the model");
  }
}

json parse_json(const char* text, const char* what) {
  if (!text || !*text) return json::object();
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw topicrnn::ConfigError(std::string("bad ") + what + ": " + e.what());
  }
}

topicrnn::ModelConfig model_config_from_json(const json& j) {
  topicrnn::ModelConfig config;
  if (j.contains("cell")) {
    config.cell = topicrnn::cell_kind_from_string(j["cell"].get<std::string>());
  }
  if (j.contains("hidden")) config.hidden = j["hidden"].get<size_t>();
  if (j.contains("layers")) config.layers = j["layers"].get<size_t>();
  if (j.contains("topics")) config.topics = j["topics"].get<size_t>();
  if (j.contains("infer_hidden")) {
    config.infer_hidden = j["infer_hidden"].get<size_t>();
  }
  if (j.contains("infer_layers")) {
    config.infer_layers = j["infer_layers"].get<size_t>();
  }
  if (j.contains("normalize_bow")) {
    config.normalize_bow = j["normalize_bow"].get<bool>();
  }
  if (j.contains("seed")) config.seed = j["seed"].get<uint64_t>();
  return config;
}

std::vector<topicrnn::Tensor> corpus_features(
    const topicrnn::TopicRnnModel& model, const topicrnn::CorpusSplit& split,
    bool include_cell_state) {
  std::vector<topicrnn::Tensor> out;
  out.reserve(split.documents.size());
  for (const auto& doc : split.documents) {
    out.push_back(topicrnn::extract_features(model, doc, include_cell_state));
  }
  return out;
}

}  // namespace

extern "C" {

const char* trnn_last_error(void) { return g_last_error.c_str(); }

void trnn_string_free(char* s) { delete[] s; }

trnn_status trnn_vocab_build(const char* corpus_path,
                             const char* stopwords_path, uint32_t max_size,
                             trnn_vocab** out) {
  return guarded([&] {
    require(corpus_path && out, "corpus_path and out must be non-NULL");
    std::set<std::string> stopwords;
    if (stopwords_path && *stopwords_path) {
      stopwords = topicrnn::load_stopwords(stopwords_path);
    }
    auto vocab =
        topicrnn::build_vocabulary_from_file(corpus_path, max_size, stopwords);
    *out = new trnn_vocab{std::move(vocab)};
  });
}

void trnn_vocab_free(trnn_vocab* vocab) { delete vocab; }

uint32_t trnn_vocab_size(const trnn_vocab* vocab) {
  return vocab ? static_cast<uint32_t>(vocab->vocab.size()) : 0;
}

uint32_t trnn_vocab_content_size(const trnn_vocab* vocab) {
  return vocab ? static_cast<uint32_t>(vocab->vocab.content_size()) : 0;
}

trnn_status trnn_corpus_encode(const char* path, const trnn_vocab* vocab,
                               uint32_t block_size, trnn_corpus** out) {
  return guarded([&] {
    require(path && vocab && out, "path, vocab and out must be non-NULL");
    auto split =
        topicrnn::encode_documents_from_file(path, vocab->vocab, block_size,
                                             path);
    *out = new trnn_corpus{std::move(split), vocab->vocab.hash()};
  });
}

void trnn_corpus_free(trnn_corpus* corpus) { delete corpus; }

size_t trnn_corpus_num_documents(const trnn_corpus* corpus) {
  return corpus ? corpus->split.documents.size() : 0;
}

size_t trnn_corpus_num_tokens(const trnn_corpus* corpus) {
  return corpus ? corpus->split.total_tokens() : 0;
}

trnn_status trnn_synth_corpus(const char* config_json, const char* text_path,
                              const char* label_path,
                              uint32_t* sentences_per_doc) {
  return guarded([&] {
    require(text_path && label_path, "output paths must be non-NULL");
    json j = parse_json(config_json, "synthetic corpus config");
    topicrnn::SyntheticConfig config;
    if (j.contains("seed")) config.seed = j["seed"].get<uint64_t>();
    if (j.contains("docs")) config.n_docs = j["docs"].get<size_t>();
    if (j.contains("doc_len")) config.doc_len = j["doc_len"].get<size_t>();
    if (j.contains("stop_rate")) {
      config.stop_rate = j["stop_rate"].get<double>();
    }
    if (j.contains("sentence_len")) {
      config.sentence_len = j["sentence_len"].get<size_t>();
    }
    if (j.contains("alternate_stops")) {
      config.alternate_stops = j["alternate_stops"].get<bool>();
    }
    auto uniform_topic = [](const std::vector<std::string>& words) {
      topicrnn::TopicSpec topic;
      topic.words = words;
      topic.probs.assign(words.size(), 1.0 / words.size());
      return topic;
    };
    require(j.contains("topic_a") && j.contains("topic_b") &&
                j.contains("stopwords"),
            "synthetic config needs topic_a, topic_b and stopwords");
    config.topics.push_back(
        uniform_topic(j["topic_a"].get<std::vector<std::string>>()));
    config.topics.push_back(
        uniform_topic(j["topic_b"].get<std::vector<std::string>>()));
    config.stopwords = j["stopwords"].get<std::vector<std::string>>();
    auto corpus = topicrnn::generate_synthetic_corpus(config);
    topicrnn::write_synthetic_corpus(corpus, text_path, label_path);
    if (sentences_per_doc) {
      *sentences_per_doc = static_cast<uint32_t>(corpus.sentences_per_doc);
    }
  });
}

trnn_status trnn_model_create(const char* config_json, const trnn_vocab* vocab,
                              trnn_model** out) {
  return guarded([&] {
    require(vocab && out, "vocab and out must be non-NULL");
    auto config = model_config_from_json(parse_json(config_json,
                                                    "model config"));
    auto model =
        std::make_unique<topicrnn::TopicRnnModel>(config, vocab->vocab);
    auto* handle = new trnn_model{std::move(model), {}};
    handle->vocab_view.vocab = handle->model->vocab();
    *out = handle;
  });
}

void trnn_model_free(trnn_model* model) { delete model; }

trnn_status trnn_model_save(const trnn_model* model, const char* path) {
  return guarded([&] {
    require(model && path, "model and path must be non-NULL");
    topicrnn::checkpoint::save(*model->model, path);
  });
}

trnn_status trnn_model_load(const char* path, trnn_model** out) {
  return guarded([&] {
    require(path && out, "path and out must be non-NULL");
    auto model = topicrnn::checkpoint::load(path);
    auto* handle = new trnn_model{std::move(model), {}};
    handle->vocab_view.vocab = handle->model->vocab();
    *out = handle;
  });
}

const trnn_vocab* trnn_model_vocab(const trnn_model* model) {
  return model ? &model->vocab_view : nullptr;
}

trnn_status trnn_model_param_report(const trnn_model* model, char** json_out) {
  return guarded([&] {
    require(model && json_out, "model and json_out must be non-NULL");
    json report;
    report["formula"] = model->model->parameter_count_formulas();
    report["actual"] = model->model->parameter_count_actuals();
    report["matches"] = model->model->parameter_count_formulas() ==
                        model->model->parameter_count_actuals();
    *json_out = copy_string(report.dump());
  });
}

trnn_status trnn_model_train(trnn_model* model, const trnn_corpus* train,
                             const trnn_corpus* valid, const char* train_json,
                             trnn_epoch_callback on_epoch, void* user,
                             char** result_json_out) {
  return guarded([&] {
    require(model && train && valid, "model and corpora must be non-NULL");
    check_vocab(model, train);
    check_vocab(model, valid);
    json j = parse_json(train_json, "train config");
    topicrnn::TrainConfig config;
    if (j.contains("epochs")) config.epochs = j["epochs"].get<size_t>();
    if (j.contains("bptt")) config.bptt_len = j["bptt"].get<size_t>();
    if (j.contains("lr")) config.lr = j["lr"].get<double>();
    if (j.contains("clip")) config.clip_norm = j["clip"].get<double>();
    if (j.contains("patience")) config.patience = j["patience"].get<size_t>();
    if (j.contains("window")) config.window = j["window"].get<size_t>();
    if (j.contains("seed")) config.seed = j["seed"].get<uint64_t>();
    if (j.contains("ablate_topics")) {
      config.ablate_topics = j["ablate_topics"].get<bool>();
    }
    if (on_epoch) {
      config.on_epoch = [on_epoch, user](const topicrnn::EpochMetrics& m) {
        json line;
        line["epoch"] = m.epoch;
        line["train_elbo_per_token"] = m.train_elbo_per_token;
        line["valid_perplexity"] = m.valid_perplexity;
        line["kl_per_token"] = m.kl_per_token;
        line["seconds"] = m.seconds;
        on_epoch(line.dump().c_str(), user);
      };
    }
    auto result =
        model->model->train(train->split, valid->split, config);
    if (result_json_out) {
      json out;
      out["best_epoch"] = result.best_epoch;
      out["best_valid_perplexity"] = result.best_valid_perplexity;
      json epochs = json::array();
      for (const auto& m : result.epochs) {
        json line;
        line["epoch"] = m.epoch;
        line["train_elbo_per_token"] = m.train_elbo_per_token;
        line["valid_perplexity"] = m.valid_perplexity;
        line["kl_per_token"] = m.kl_per_token;
        line["seconds"] = m.seconds;
        epochs.push_back(line);
      }
      out["epochs"] = epochs;
      *result_json_out = copy_string(out.dump());
    }
  });
}

trnn_status trnn_model_perplexity(const trnn_model* model,
                                  const trnn_corpus* corpus, uint32_t window,
                                  int ablate_topics, int trailing_window,
                                  double* out) {
  return guarded([&] {
    require(model && corpus && out, "model, corpus and out must be non-NULL");
    check_vocab(model, corpus);
    topicrnn::EvalOptions options;
    options.window = window;
    options.ablate_topics = ablate_topics != 0;
    options.trailing_window = trailing_window != 0;
    *out = model->model->perplexity(corpus->split, options);
  });
}

trnn_status trnn_model_generate(const trnn_model* model,
                                const trnn_corpus* seed_corpus,
                                size_t seed_doc_index, uint32_t length,
                                double temperature, uint64_t rng_seed,
                                uint32_t window, char** text_out) {
  return guarded([&] {
    require(model && seed_corpus && text_out,
            "model, seed corpus and text_out must be non-NULL");
    check_vocab(model, seed_corpus);
    require(seed_doc_index < seed_corpus->split.documents.size(),
            "seed document index out of range");
    auto ids = model->model->generate(
        seed_corpus->split.documents[seed_doc_index], length, temperature,
        rng_seed, window);
    *text_out = copy_string(topicrnn::decode(model->model->vocab(), ids));
  });
}

trnn_status trnn_model_topic_words(const trnn_model* model, uint32_t n,
                                   char** json_out) {
  return guarded([&] {
    require(model && json_out, "model and json_out must be non-NULL");
    json out = model->model->top_topic_words(n);
    *json_out = copy_string(out.dump());
  });
}

trnn_status trnn_model_features_csv(const trnn_model* model,
                                    const trnn_corpus* corpus,
                                    int include_cell_state, char** csv_out) {
  return guarded([&] {
    require(model && corpus && csv_out,
            "model, corpus and csv_out must be non-NULL");
    check_vocab(model, corpus);
    auto features = corpus_features(*model->model, corpus->split,
                                    include_cell_state != 0);
    std::string csv = "doc_id";
    size_t dim = features.empty() ? 0 : features[0].size();
    char cell[64];
    for (size_t i = 0; i < dim; ++i) {
      std::snprintf(cell, sizeof(cell), ",f_%zu", i);
      csv += cell;
    }
    csv += '\n';
    for (size_t d = 0; d < features.size(); ++d) {
      std::snprintf(cell, sizeof(cell), "%zu", d);
      csv += cell;
      for (size_t i = 0; i < dim; ++i) {
        std::snprintf(cell, sizeof(cell), ",%.17g", features[d][i]);
        csv += cell;
      }
      csv += '\n';
    }
    *csv_out = copy_string(csv);
  });
}

trnn_status trnn_classifier_run(const trnn_model* model,
                                const trnn_corpus* train_corpus,
                                const char* train_labels_path,
                                const trnn_corpus* test_corpus,
                                const char* test_labels_path,
                                const char* options_json,
                                char** report_json_out) {
  return guarded([&] {
    require(model && train_corpus && test_corpus && train_labels_path &&
                test_labels_path,
            "model, corpora and label paths must be non-NULL");
    check_vocab(model, train_corpus);
    check_vocab(model, test_corpus);
    auto train_labels = topicrnn::load_labels(train_labels_path);
    auto test_labels = topicrnn::load_labels(test_labels_path);
    require(train_labels.size() == train_corpus->split.documents.size(),
            "train label count does not match document count");
    require(test_labels.size() == test_corpus->split.documents.size(),
            "test label count does not match document count");

    json j = parse_json(options_json, "classifier options");
    topicrnn::ClassifierConfig config;
    if (j.contains("hidden")) config.hidden = j["hidden"].get<size_t>();
    if (j.contains("epochs")) config.epochs = j["epochs"].get<size_t>();
    if (j.contains("lr")) config.lr = j["lr"].get<double>();
    if (j.contains("seed")) config.seed = j["seed"].get<uint64_t>();

    auto train_features =
        corpus_features(*model->model, train_corpus->split, false);
    auto test_features =
        corpus_features(*model->model, test_corpus->split, false);
    require(!train_features.empty(), "train corpus has no documents");

    topicrnn::SentimentClassifier classifier(train_features[0].size(), config);
    classifier.train(train_features, train_labels);
    double train_error = classifier.error_rate(train_features, train_labels);
    double test_error = classifier.error_rate(test_features, test_labels);

    if (report_json_out) {
      json out;
      out["train_error_rate"] = train_error;
      out["test_error_rate"] = test_error;
      out["feature_dim"] = train_features[0].size();
      out["hidden"] = config.hidden;
      out["epochs"] = config.epochs;
      out["lr"] = config.lr;
      out["seed"] = config.seed;
      *report_json_out = copy_string(out.dump());
    }
  });
}

}  // extern "C"
