/* C API for the TopicRNN library. All functions return a trnn_status; the
 * out-parameters are written only on TRNN_OK. Returned strings are heap
 * allocated and must be released with trnn_string_free. Handles are opaque
 * and freed with their matching *_free function. trnn_last_error() returns a
 * thread-local message describing the most recent failure. */
#ifndef TOPICRNN_TOPICRNN_H
#define TOPICRNN_TOPICRNN_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef struct trnn_vocab trnn_vocab;
typedef struct trnn_corpus trnn_corpus;
typedef struct trnn_model trnn_model;

typedef enum trnn_status {
  TRNN_OK = 0,
  TRNN_ERR_INVALID = 1,        /* bad arguments, validation failures */
  TRNN_ERR_IO = 2,             /* missing or unreadable/unwritable files */
  TRNN_ERR_NUMERIC = 3,        /* NaN abort during training */
  TRNN_ERR_VOCAB_MISMATCH = 4  /* corpus encoded with a different vocabulary */
} trnn_status;

const char* trnn_last_error(void);
void trnn_string_free(char* s);

/* ------------------------------------------------------------ vocabulary */

/* Builds a vocabulary from a whitespace-tokenized corpus file: the
 * (max_size - 2) most frequent tokens plus the unk/eos specials, with stop
 * flags taken from a one-token-per-line stopword file. */
trnn_status trnn_vocab_build(const char* corpus_path,
                             const char* stopwords_path, uint32_t max_size,
                             trnn_vocab** out);
void trnn_vocab_free(trnn_vocab* vocab);
uint32_t trnn_vocab_size(const trnn_vocab* vocab);
uint32_t trnn_vocab_content_size(const trnn_vocab* vocab);

/* ---------------------------------------------------------------- corpus */

/* Encodes a sentence-per-line file into block documents of block_size
 * sentences each (final partial block kept, eos appended per sentence). */
trnn_status trnn_corpus_encode(const char* path, const trnn_vocab* vocab,
                               uint32_t block_size, trnn_corpus** out);
void trnn_corpus_free(trnn_corpus* corpus);
size_t trnn_corpus_num_documents(const trnn_corpus* corpus);
size_t trnn_corpus_num_tokens(const trnn_corpus* corpus);

/* Writes a deterministic two-topic synthetic corpus plus a
 * "doc_index<TAB>label" file. config_json keys: seed, docs, doc_len,
 * stop_rate, sentence_len, topic_a, topic_b (word arrays, uniform mass),
 * stopwords (word array). Returns the sentences-per-document count. */
trnn_status trnn_synth_corpus(const char* config_json, const char* text_path,
                              const char* label_path,
                              uint32_t* sentences_per_doc);

/* ----------------------------------------------------------------- model */

/* config_json keys (all optional): cell ("rnn"|"gru"|"lstm"), hidden,
 * layers, topics, infer_hidden, infer_layers, normalize_bow, seed. */
trnn_status trnn_model_create(const char* config_json, const trnn_vocab* vocab,
                              trnn_model** out);
void trnn_model_free(trnn_model* model);
trnn_status trnn_model_save(const trnn_model* model, const char* path);
trnn_status trnn_model_load(const char* path, trnn_model** out);
/* Borrowed reference, valid while the model lives. */
const trnn_vocab* trnn_model_vocab(const trnn_model* model);

/* Per-group parameter counts: shape formulas next to store contents. */
trnn_status trnn_model_param_report(const trnn_model* model, char** json_out);

typedef void (*trnn_epoch_callback)(const char* metrics_json, void* user);

/* train_json keys (all optional): epochs, bptt, lr, clip, patience, window,
 * seed, ablate_topics. Per-epoch metrics stream through the callback; the
 * final result JSON lands in result_json_out if non-NULL. */
trnn_status trnn_model_train(trnn_model* model, const trnn_corpus* train,
                             const trnn_corpus* valid, const char* train_json,
                             trnn_epoch_callback on_epoch, void* user,
                             char** result_json_out);

trnn_status trnn_model_perplexity(const trnn_model* model,
                                  const trnn_corpus* corpus, uint32_t window,
                                  int ablate_topics, int trailing_window,
                                  double* out);

/* Samples `length` tokens seeded by document seed_doc_index of the corpus;
 * returns space-joined token text. temperature 0 means greedy argmax. */
trnn_status trnn_model_generate(const trnn_model* model,
                                const trnn_corpus* seed_corpus,
                                size_t seed_doc_index, uint32_t length,
                                double temperature, uint64_t rng_seed,
                                uint32_t window, char** text_out);

/* JSON array of n-word arrays, one per topic, ranked by topic weight. */
trnn_status trnn_model_topic_words(const trnn_model* model, uint32_t n,
                                   char** json_out);

/* CSV with header "doc_id,f_0,...,f_{D-1}", one row per document. */
trnn_status trnn_model_features_csv(const trnn_model* model,
                                    const trnn_corpus* corpus,
                                    int include_cell_state, char** csv_out);

/* Trains the one-hidden-layer classifier on train features/labels and
 * evaluates on test. options_json keys: hidden, epochs, lr, seed.
 * Label files hold "doc_index<TAB>label" lines with labels 0/1. */
trnn_status trnn_classifier_run(const trnn_model* model,
                                const trnn_corpus* train_corpus,
                                const char* train_labels_path,
                                const trnn_corpus* test_corpus,
                                const char* test_labels_path,
                                const char* options_json,
                                char** report_json_out);

#ifdef __cplusplus
}
#endif

#endif /* TOPICRNN_TOPICRNN_H */
