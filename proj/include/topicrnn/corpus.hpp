#ifndef TOPICRNN_CORPUS_HPP
#define TOPICRNN_CORPUS_HPP

#include <cstdint>
#include <iosfwd>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace topicrnn {

// Bidirectional token<->id map with per-id stop-word flags. Ids are dense,
// with the unk and eos specials pinned at 0 and 1. The non-stop ("content")
// subset gets its own dense indexing used by bag-of-words vectors.
class Vocabulary {
 public:
  static constexpr const char* kUnkToken = "unk";
  static constexpr const char* kEosToken = "eos";

  Vocabulary() = default;
  // tokens[0] must be unk and tokens[1] eos; stop flags come from the set
  // (eos is never a stop word).
  Vocabulary(std::vector<std::string> tokens,
             const std::set<std::string>& stopwords);
  // Checkpoint path: explicit per-id flags.
  Vocabulary(std::vector<std::string> tokens, std::vector<bool> stop_flags,
             uint32_t unk_id, uint32_t eos_id);

  size_t size() const { return tokens_.size(); }          // C
  size_t content_size() const { return content_ids_.size(); }  // V_c
  uint32_t unk_id() const { return unk_id_; }
  uint32_t eos_id() const { return eos_id_; }

  bool contains(const std::string& token) const;
  uint32_t id(const std::string& token) const;  // unk_id when absent
  const std::string& token(uint32_t id) const;
  bool is_stop(uint32_t id) const { return stop_[id]; }
  // Dense index into the content (non-stop) vocabulary; -1 for stop ids.
  int32_t content_index(uint32_t id) const { return id_to_content_[id]; }
  uint32_t content_id(size_t content_index) const {
    return content_ids_[content_index];
  }

  const std::vector<std::string>& tokens() const { return tokens_; }
  std::vector<bool> stop_flags() const;
  uint64_t hash() const;  // FNV-1a over tokens and flags

 private:
  void build_index();

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, uint32_t> index_;
  std::vector<char> stop_;
  std::vector<uint32_t> content_ids_;
  std::vector<int32_t> id_to_content_;
  uint32_t unk_id_ = 0;
  uint32_t eos_id_ = 1;
};

// One block-document: token ids, per-token stop indicators, and the
// term-frequency vector over the content vocabulary.
struct EncodedDocument {
  std::vector<uint32_t> ids;
  std::vector<char> stop;
  std::vector<uint32_t> bow;  // length V_c
  size_t length() const { return ids.size(); }
};

struct CorpusSplit {
  std::vector<EncodedDocument> documents;
  std::string name;
  size_t total_tokens() const;
};

// One lowercased token per line; blank lines ignored; duplicates collapse.
std::set<std::string> load_stopwords(const std::string& path);

// Keeps the (max_size - 2) most frequent tokens plus unk/eos. Frequency ties
// break by lexicographic token order.
Vocabulary build_vocabulary(std::istream& corpus, size_t max_size,
                            const std::set<std::string>& stopwords);
Vocabulary build_vocabulary_from_file(const std::string& path, size_t max_size,
                                      const std::set<std::string>& stopwords);

// Whitespace-tokenized, one sentence per line; eos appended per sentence;
// consecutive block_size sentences form one document (final partial block
// kept). Out-of-vocabulary tokens map to unk.
CorpusSplit encode_documents(std::istream& raw, const Vocabulary& vocab,
                             size_t block_size, const std::string& name);
CorpusSplit encode_documents_from_file(const std::string& path,
                                       const Vocabulary& vocab,
                                       size_t block_size,
                                       const std::string& name);

// Builds an EncodedDocument directly from ids (stop flags and bow derived).
EncodedDocument document_from_ids(const Vocabulary& vocab,
                                  std::vector<uint32_t> ids);

// Space-joined token strings of a document.
std::string decode(const Vocabulary& vocab, const std::vector<uint32_t>& ids);

// ------------------------------------------------------------- synthetic

struct TopicSpec {
  std::vector<std::string> words;
  std::vector<double> probs;  // must sum to 1 within 1e-9
};

struct SyntheticConfig {
  uint64_t seed = 1;
  size_t n_docs = 100;
  size_t doc_len = 50;       // tokens per document (before eos insertion)
  double stop_rate = 0.4;
  size_t sentence_len = 10;  // tokens per output line
  // With alternate_stops the stop words sit at every second position
  // (deterministic interleaving) instead of being drawn per token with
  // probability stop_rate.
  bool alternate_stops = false;
  std::vector<TopicSpec> topics;  // exactly two
  std::vector<std::string> stopwords;
};

struct SyntheticCorpus {
  std::string text;           // sentence-per-line corpus
  std::vector<int> labels;    // per-document topic index
  size_t sentences_per_doc = 0;
};

// Deterministic two-topic corpus: document i draws from topic i % 2; each
// token is a stopword with probability stop_rate, otherwise a draw from the
// document's topic distribution.
SyntheticCorpus generate_synthetic_corpus(const SyntheticConfig& config);

void write_synthetic_corpus(const SyntheticCorpus& corpus,
                            const std::string& text_path,
                            const std::string& label_path);

// Label file format: "doc_index<TAB>label", one line per document.
std::vector<int> load_labels(const std::string& path);

}  // namespace topicrnn

#endif  // TOPICRNN_CORPUS_HPP
