// Command-line front end for the TopicRNN shared library. Talks to the core
// exclusively through the C API in topicrnn/topicrnn.h; exit codes mirror
// trnn_status values (0 ok, 2 I/O, 3 numeric abort, 4 vocabulary mismatch).

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "topicrnn/topicrnn.h"

using nlohmann::json;

namespace {

struct StringGuard {
  char* value = nullptr;
  ~StringGuard() { trnn_string_free(value); }
  std::string str() const { return value ? value : ""; }
};

struct VocabGuard {
  trnn_vocab* value = nullptr;
  ~VocabGuard() { trnn_vocab_free(value); }
};

struct CorpusGuard {
  trnn_corpus* value = nullptr;
  ~CorpusGuard() { trnn_corpus_free(value); }
};

struct ModelGuard {
  trnn_model* value = nullptr;
  ~ModelGuard() { trnn_model_free(value); }
};

[[noreturn]] void fail(trnn_status status) {
  std::cerr << "error: " << trnn_last_error() << "\n";
  std::exit(static_cast<int>(status));
}

void check(trnn_status status) {
  if (status != TRNN_OK) fail(status);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

void write_report(const std::string& path, const json& report) {
  if (path.empty()) return;
  std::ofstream out(path);
  if (!out) {
    std::cerr << "error: cannot write report: " << path << "\n";
    std::exit(2);
  }
  out << report.dump(2) << "\n";
}

std::vector<std::string> split_csv(const std::string& list) {
  std::vector<std::string> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Shared flag bundles -------------------------------------------------------

struct TrainArgs {
  std::string corpus, valid, stopwords, out_path, report_path;
  std::string cell = "rnn";
  uint32_t hidden = 100, topics = 50, infer_hidden = 200, infer_layers = 2;
  uint32_t layers = 1, epochs = 15, bptt = 20, block_size = 10;
  uint32_t patience = 5, window = 10, max_vocab = 10000;
  double lr = 1e-3, clip = 5.0;
  uint64_t seed = 1;
  bool ablate = false;
};

int cmd_train(const TrainArgs& args) {
  auto t0 = std::chrono::steady_clock::now();

  VocabGuard vocab;
  check(trnn_vocab_build(args.corpus.c_str(), args.stopwords.c_str(),
                         args.max_vocab, &vocab.value));
  CorpusGuard train_corpus, valid_corpus;
  check(trnn_corpus_encode(args.corpus.c_str(), vocab.value, args.block_size,
                           &train_corpus.value));
  check(trnn_corpus_encode(args.valid.c_str(), vocab.value, args.block_size,
                           &valid_corpus.value));

  json model_config = {
      {"cell", args.cell},          {"hidden", args.hidden},
      {"layers", args.layers},      {"topics", args.topics},
      {"infer_hidden", args.infer_hidden},
      {"infer_layers", args.infer_layers},
      {"seed", args.seed},
  };
  ModelGuard model;
  check(trnn_model_create(model_config.dump().c_str(), vocab.value,
                          &model.value));

  json train_config = {
      {"epochs", args.epochs},   {"bptt", args.bptt},
      {"lr", args.lr},           {"clip", args.clip},
      {"patience", args.patience}, {"window", args.window},
      {"seed", args.seed},       {"ablate_topics", args.ablate},
  };
  StringGuard result_json;
  auto print_epoch = [](const char* metrics_json, void*) {
    std::cout << metrics_json << std::endl;
  };
  check(trnn_model_train(model.value, train_corpus.value, valid_corpus.value,
                         train_config.dump().c_str(), print_epoch, nullptr,
                         &result_json.value));
  check(trnn_model_save(model.value, args.out_path.c_str()));

  StringGuard params_json;
  check(trnn_model_param_report(model.value, &params_json.value));

  json result = json::parse(result_json.str());
  json report;
  report["command"] = "train";
  report["config"] = model_config;
  report["config"]["train"] = train_config;
  report["config"]["corpus"] = args.corpus;
  report["config"]["valid"] = args.valid;
  report["config"]["stopwords"] = args.stopwords;
  report["config"]["block_size"] = args.block_size;
  report["config"]["max_vocab"] = args.max_vocab;
  report["seed"] = args.seed;
  report["metrics"] = result["epochs"];
  report["result"] = {
      {"best_epoch", result["best_epoch"]},
      {"valid_perplexity", result["best_valid_perplexity"]},
      {"checkpoint", args.out_path},
      {"vocabulary_size", trnn_vocab_size(vocab.value)},
      {"content_vocabulary_size", trnn_vocab_content_size(vocab.value)},
      {"parameters", json::parse(params_json.str())},
  };
  report["seconds"] = seconds_since(t0);
  write_report(args.report_path, report);
  std::cout << "best validation perplexity: "
            << result["best_valid_perplexity"].dump()
            << " (epoch " << result["best_epoch"].dump() << ")\n";
  std::cout << "parameters: " << json::parse(params_json.str())["actual"]["total"].dump()
            << "\n";
  return 0;
}

struct EvalArgs {
  std::string model, corpus, report_path;
  uint32_t window = 10, block_size = 10;
  bool ablate = false, trailing = false;
};

int cmd_eval(const EvalArgs& args) {
  auto t0 = std::chrono::steady_clock::now();
  ModelGuard model;
  check(trnn_model_load(args.model.c_str(), &model.value));
  CorpusGuard corpus;
  check(trnn_corpus_encode(args.corpus.c_str(), trnn_model_vocab(model.value),
                           args.block_size, &corpus.value));
  double ppl = 0.0;
  check(trnn_model_perplexity(model.value, corpus.value, args.window,
                              args.ablate ? 1 : 0, args.trailing ? 1 : 0,
                              &ppl));
  std::printf("%.1f\n", ppl);

  json report;
  report["command"] = "eval";
  report["config"] = {{"model", args.model},
                      {"corpus", args.corpus},
                      {"window", args.window},
                      {"block_size", args.block_size},
                      {"ablate_topics", args.ablate},
                      {"trailing_window", args.trailing}};
  report["seed"] = 0;
  report["result"] = {{"perplexity", ppl},
                      {"documents", trnn_corpus_num_documents(corpus.value)},
                      {"tokens", trnn_corpus_num_tokens(corpus.value)}};
  report["seconds"] = seconds_since(t0);
  write_report(args.report_path, report);
  return 0;
}

struct GenerateArgs {
  std::string model, seed_doc, report_path;
  uint32_t length = 100, window = 10;
  double temperature = 1.0;
  uint64_t rng_seed = 1;
};

int cmd_generate(const GenerateArgs& args) {
  auto t0 = std::chrono::steady_clock::now();
  ModelGuard model;
  check(trnn_model_load(args.model.c_str(), &model.value));
  // the whole seed file is one document: count its sentences first
  std::ifstream seed_in(args.seed_doc);
  if (!seed_in) {
    std::cerr << "error: cannot open seed document: " << args.seed_doc << "\n";
    return 2;
  }
  uint32_t sentences = 0;
  std::string line;
  while (std::getline(seed_in, line)) {
    if (line.find_first_not_of(" \t\r") != std::string::npos) ++sentences;
  }
  if (sentences == 0) {
    std::cerr << "error: seed document is empty: " << args.seed_doc << "\n";
    return 1;
  }
  CorpusGuard seed;
  check(trnn_corpus_encode(args.seed_doc.c_str(), trnn_model_vocab(model.value),
                           sentences, &seed.value));
  StringGuard text;
  check(trnn_model_generate(model.value, seed.value, 0, args.length,
                            args.temperature, args.rng_seed, args.window,
                            &text.value));
  std::cout << text.str() << "\n";

  json report;
  report["command"] = "generate";
  report["config"] = {{"model", args.model},
                      {"seed_doc", args.seed_doc},
                      {"length", args.length},
                      {"temperature", args.temperature},
                      {"window", args.window}};
  report["seed"] = args.rng_seed;
  report["result"] = {{"text", text.str()}};
  report["seconds"] = seconds_since(t0);
  write_report(args.report_path, report);
  return 0;
}

struct TopicsArgs {
  std::string model, report_path;
  uint32_t top = 10;
};

int cmd_topics(const TopicsArgs& args) {
  auto t0 = std::chrono::steady_clock::now();
  ModelGuard model;
  check(trnn_model_load(args.model.c_str(), &model.value));
  StringGuard words_json;
  check(trnn_model_topic_words(model.value, args.top, &words_json.value));
  json words = json::parse(words_json.str());

  // topics as columns, one rank per row
  size_t topics = words.size();
  size_t rows = 0;
  for (const auto& topic : words) rows = std::max(rows, topic.size());
  for (size_t k = 0; k < topics; ++k) {
    std::cout << (k ? "\t" : "") << "topic_" << k;
  }
  std::cout << "\n";
  for (size_t r = 0; r < rows; ++r) {
    for (size_t k = 0; k < topics; ++k) {
      std::string word =
          r < words[k].size() ? words[k][r].get<std::string>() : "";
      std::cout << (k ? "\t" : "") << word;
    }
    std::cout << "\n";
  }

  json report;
  report["command"] = "topics";
  report["config"] = {{"model", args.model}, {"top", args.top}};
  report["seed"] = 0;
  report["result"] = {{"topics", words}};
  report["seconds"] = seconds_since(t0);
  write_report(args.report_path, report);
  return 0;
}

struct FeaturesArgs {
  std::string model, corpus, out_path, report_path;
  uint32_t block_size = 10;
  bool include_cell = false;
};

int cmd_features(const FeaturesArgs& args) {
  auto t0 = std::chrono::steady_clock::now();
  ModelGuard model;
  check(trnn_model_load(args.model.c_str(), &model.value));
  CorpusGuard corpus;
  check(trnn_corpus_encode(args.corpus.c_str(), trnn_model_vocab(model.value),
                           args.block_size, &corpus.value));
  StringGuard csv;
  check(trnn_model_features_csv(model.value, corpus.value,
                                args.include_cell ? 1 : 0, &csv.value));
  std::ofstream out(args.out_path);
  if (!out) {
    std::cerr << "error: cannot write feature file: " << args.out_path << "\n";
    return 2;
  }
  out << csv.str();

  json report;
  report["command"] = "features";
  report["config"] = {{"model", args.model},
                      {"corpus", args.corpus},
                      {"block_size", args.block_size},
                      {"include_cell_state", args.include_cell},
                      {"out", args.out_path}};
  report["seed"] = 0;
  report["result"] = {{"documents", trnn_corpus_num_documents(corpus.value)}};
  report["seconds"] = seconds_since(t0);
  write_report(args.report_path, report);
  return 0;
}

struct ClassifyArgs {
  std::string model, train, train_labels, test, test_labels, report_path;
  uint32_t block_size = 10, epochs = 200, hidden = 50;
  double lr = 0.01;
  uint64_t seed = 1;
};

int cmd_classify(const ClassifyArgs& args) {
  auto t0 = std::chrono::steady_clock::now();
  ModelGuard model;
  check(trnn_model_load(args.model.c_str(), &model.value));
  CorpusGuard train_corpus, test_corpus;
  check(trnn_corpus_encode(args.train.c_str(), trnn_model_vocab(model.value),
                           args.block_size, &train_corpus.value));
  check(trnn_corpus_encode(args.test.c_str(), trnn_model_vocab(model.value),
                           args.block_size, &test_corpus.value));
  json options = {{"hidden", args.hidden},
                  {"epochs", args.epochs},
                  {"lr", args.lr},
                  {"seed", args.seed}};
  StringGuard result_json;
  check(trnn_classifier_run(model.value, train_corpus.value,
                            args.train_labels.c_str(), test_corpus.value,
                            args.test_labels.c_str(), options.dump().c_str(),
                            &result_json.value));
  json result = json::parse(result_json.str());
  std::printf("%.2f\n", result["test_error_rate"].get<double>());

  json report;
  report["command"] = "classify";
  report["config"] = {{"model", args.model},
                      {"train", args.train},
                      {"train_labels", args.train_labels},
                      {"test", args.test},
                      {"test_labels", args.test_labels},
                      {"block_size", args.block_size},
                      {"classifier", options}};
  report["seed"] = args.seed;
  report["result"] = result;
  report["seconds"] = seconds_since(t0);
  write_report(args.report_path, report);
  return 0;
}

struct SynthArgs {
  std::string out_path, labels_path, report_path;
  std::string topic_a =
      "cat,dog,bird,horse,fish,mouse,bear,wolf,deer,fox,lion,tiger,seal,crow,"
      "duck,goat,frog,snake,owl,hawk";
  std::string topic_b =
      "bond,rate,stock,fund,yield,trade,price,share,market,bank,loan,debt,"
      "cash,tax,profit,broker,merger,index,hedge,asset";
  std::string stop_list = "the,a,of,to,and,in,is,it";
  uint64_t seed = 1;
  uint32_t docs = 100, doc_len = 60, sentence_len = 20;
  double stop_rate = 0.4;
};

int cmd_synth(const SynthArgs& args) {
  auto t0 = std::chrono::steady_clock::now();
  json config = {{"seed", args.seed},
                 {"docs", args.docs},
                 {"doc_len", args.doc_len},
                 {"sentence_len", args.sentence_len},
                 {"stop_rate", args.stop_rate},
                 {"topic_a", split_csv(args.topic_a)},
                 {"topic_b", split_csv(args.topic_b)},
                 {"stopwords", split_csv(args.stop_list)}};
  uint32_t sentences_per_doc = 0;
  check(trnn_synth_corpus(config.dump().c_str(), args.out_path.c_str(),
                          args.labels_path.c_str(), &sentences_per_doc));
  std::cout << "wrote " << args.docs << " documents ("
            << sentences_per_doc << " sentences each) to " << args.out_path
            << "\n";

  json report;
  report["command"] = "synth";
  report["config"] = config;
  report["seed"] = args.seed;
  report["result"] = {{"documents", args.docs},
                      {"sentences_per_doc", sentences_per_doc},
                      {"corpus", args.out_path},
                      {"labels", args.labels_path}};
  report["seconds"] = seconds_since(t0);
  write_report(args.report_path, report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"TopicRNN language model: latent-topic-biased RNN with "
               "variational training"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train a model");
  train->add_option("--corpus", train_args.corpus, "Training corpus file")
      ->required();
  train->add_option("--valid", train_args.valid, "Validation corpus file")
      ->required();
  train->add_option("--stopwords", train_args.stopwords, "Stopword list file")
      ->required();
  train->add_option("--out", train_args.out_path, "Checkpoint output path")
      ->required();
  train->add_option("--cell", train_args.cell, "Cell kind: rnn|gru|lstm");
  train->add_option("--hidden", train_args.hidden, "Hidden units H");
  train->add_option("--topics", train_args.topics, "Topic dimension K");
  train->add_option("--infer-hidden", train_args.infer_hidden,
                    "Inference net hidden units");
  train->add_option("--infer-layers", train_args.infer_layers,
                    "Inference net hidden layers");
  train->add_option("--layers", train_args.layers, "Cell layers");
  train->add_option("--epochs", train_args.epochs, "Maximum epochs");
  train->add_option("--bptt", train_args.bptt, "BPTT truncation length");
  train->add_option("--lr", train_args.lr, "Adam learning rate");
  train->add_option("--clip", train_args.clip, "Gradient clip norm");
  train->add_option("--patience", train_args.patience,
                    "Early-stopping patience (epochs)");
  train->add_option("--window", train_args.window,
                    "Theta refresh window for validation perplexity");
  train->add_option("--seed", train_args.seed, "Random seed");
  train->add_option("--block-size", train_args.block_size,
                    "Sentences per document block");
  train->add_option("--max-vocab", train_args.max_vocab, "Vocabulary cap");
  train->add_flag("--ablate-topics", train_args.ablate,
                  "Freeze the topic matrix at zero and drop the KL term");
  train->add_option("--report", train_args.report_path, "Report JSON path");

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Compute perplexity");
  eval->add_option("--model", eval_args.model, "Checkpoint path")->required();
  eval->add_option("--corpus", eval_args.corpus, "Corpus file")->required();
  eval->add_option("--window", eval_args.window, "Theta refresh window");
  eval->add_option("--block-size", eval_args.block_size,
                   "Sentences per document block");
  eval->add_flag("--ablate-topics", eval_args.ablate,
                 "Evaluate with the topic bias disabled");
  eval->add_flag("--trailing-window", eval_args.trailing,
                 "Re-encode theta from the trailing window only");
  eval->add_option("--report", eval_args.report_path, "Report JSON path");

  GenerateArgs gen_args;
  auto* gen = app.add_subcommand("generate", "Sample text");
  gen->add_option("--model", gen_args.model, "Checkpoint path")->required();
  gen->add_option("--seed-doc", gen_args.seed_doc,
                  "Seed document file (one document)")
      ->required();
  gen->add_option("--length", gen_args.length, "Tokens to generate");
  gen->add_option("--temperature", gen_args.temperature,
                  "Sampling temperature (0 = greedy)");
  gen->add_option("--rng-seed", gen_args.rng_seed, "Sampling seed");
  gen->add_option("--window", gen_args.window, "Theta refresh window");
  gen->add_option("--report", gen_args.report_path, "Report JSON path");

  TopicsArgs topics_args;
  auto* topics = app.add_subcommand("topics", "Show top words per topic");
  topics->add_option("--model", topics_args.model, "Checkpoint path")
      ->required();
  topics->add_option("--top", topics_args.top, "Words per topic");
  topics->add_option("--report", topics_args.report_path, "Report JSON path");

  FeaturesArgs feat_args;
  auto* features = app.add_subcommand("features", "Export document features");
  features->add_option("--model", feat_args.model, "Checkpoint path")
      ->required();
  features->add_option("--corpus", feat_args.corpus, "Corpus file")
      ->required();
  features->add_option("--out", feat_args.out_path, "CSV output path")
      ->required();
  features->add_option("--block-size", feat_args.block_size,
                       "Sentences per document block");
  features->add_flag("--include-cell-state", feat_args.include_cell,
                     "Append the lstm cell memory to the feature vector");
  features->add_option("--report", feat_args.report_path, "Report JSON path");

  ClassifyArgs cls_args;
  auto* classify =
      app.add_subcommand("classify", "Train and evaluate the label classifier");
  classify->add_option("--model", cls_args.model, "Checkpoint path")
      ->required();
  classify->add_option("--train", cls_args.train, "Training corpus file")
      ->required();
  classify->add_option("--train-labels", cls_args.train_labels,
                       "Training label file")
      ->required();
  classify->add_option("--test", cls_args.test, "Test corpus file")
      ->required();
  classify->add_option("--test-labels", cls_args.test_labels,
                       "Test label file")
      ->required();
  classify->add_option("--block-size", cls_args.block_size,
                       "Sentences per document block");
  classify->add_option("--epochs", cls_args.epochs, "Classifier epochs");
  classify->add_option("--lr", cls_args.lr, "Classifier learning rate");
  classify->add_option("--hidden", cls_args.hidden, "Classifier hidden units");
  classify->add_option("--seed", cls_args.seed, "Classifier seed");
  classify->add_option("--report", cls_args.report_path, "Report JSON path");

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "Write a synthetic 2-topic corpus");
  synth->add_option("--out", synth_args.out_path, "Corpus output path")
      ->required();
  synth->add_option("--labels", synth_args.labels_path, "Label output path")
      ->required();
  synth->add_option("--seed", synth_args.seed, "Random seed");
  synth->add_option("--docs", synth_args.docs, "Number of documents");
  synth->add_option("--doc-len", synth_args.doc_len, "Tokens per document");
  synth->add_option("--sentence-len", synth_args.sentence_len,
                    "Tokens per sentence");
  synth->add_option("--stop-rate", synth_args.stop_rate,
                    "Stop-word probability per token");
  synth->add_option("--topic-a", synth_args.topic_a,
                    "Comma-separated topic A words");
  synth->add_option("--topic-b", synth_args.topic_b,
                    "Comma-separated topic B words");
  synth->add_option("--stop-list", synth_args.stop_list,
                    "Comma-separated stop words");
  synth->add_option("--report", synth_args.report_path, "Report JSON path");

  CLI11_PARSE(app, argc, argv);

  if (train->parsed()) return cmd_train(train_args);
  if (eval->parsed()) return cmd_eval(eval_args);
  if (gen->parsed()) return cmd_generate(gen_args);
  if (topics->parsed()) return cmd_topics(topics_args);
  if (features->parsed()) return cmd_features(feat_args);
  if (classify->parsed()) return cmd_classify(cls_args);
  if (synth->parsed()) return cmd_synth(synth_args);
  return 1;
}
