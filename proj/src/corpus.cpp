#include "topicrnn/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <unordered_map>

#include "topicrnn/errors.hpp"

namespace topicrnn {

// --------------------------------------------------------------- Vocabulary

Vocabulary::Vocabulary(std::vector<std::string> tokens,
                       const std::set<std::string>& stopwords)
    : tokens_(std::move(tokens)) {
  if (tokens_.size() < 2 || tokens_[0] != kUnkToken ||
      tokens_[1] != kEosToken) {
    throw ConfigError("vocabulary must start with unk and eos");
  }
  stop_.resize(tokens_.size(), 0);
  for (size_t i = 0; i < tokens_.size(); ++i) {
    stop_[i] = stopwords.count(tokens_[i]) ? 1 : 0;
  }
  stop_[eos_id_] = 0;  // eos is never a stop word
  build_index();
}

Vocabulary::Vocabulary(std::vector<std::string> tokens,
                       std::vector<bool> stop_flags, uint32_t unk_id,
                       uint32_t eos_id)
    : tokens_(std::move(tokens)), unk_id_(unk_id), eos_id_(eos_id) {
  if (stop_flags.size() != tokens_.size()) {
    throw ConfigError("stop flag count does not match vocabulary size");
  }
  if (unk_id_ >= tokens_.size() || eos_id_ >= tokens_.size() ||
      unk_id_ == eos_id_) {
    throw ConfigError("invalid unk/eos ids");
  }
  stop_.resize(tokens_.size());
  for (size_t i = 0; i < stop_.size(); ++i) stop_[i] = stop_flags[i] ? 1 : 0;
  build_index();
}

void Vocabulary::build_index() {
  index_.clear();
  index_.reserve(tokens_.size());
  for (size_t i = 0; i < tokens_.size(); ++i) {
    auto [it, inserted] = index_.emplace(tokens_[i], static_cast<uint32_t>(i));
    if (!inserted) throw ConfigError("duplicate token in vocabulary: " + tokens_[i]);
  }
  content_ids_.clear();
  id_to_content_.assign(tokens_.size(), -1);
  for (size_t i = 0; i < tokens_.size(); ++i) {
    if (!stop_[i]) {
      id_to_content_[i] = static_cast<int32_t>(content_ids_.size());
      content_ids_.push_back(static_cast<uint32_t>(i));
    }
  }
}

bool Vocabulary::contains(const std::string& token) const {
  return index_.count(token) != 0;
}

uint32_t Vocabulary::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? unk_id_ : it->second;
}

const std::string& Vocabulary::token(uint32_t id) const {
  return tokens_.at(id);
}

std::vector<bool> Vocabulary::stop_flags() const {
  std::vector<bool> out(stop_.size());
  for (size_t i = 0; i < stop_.size(); ++i) out[i] = stop_[i] != 0;
  return out;
}

uint64_t Vocabulary::hash() const {
  uint64_t h = 1469598103934665603ull;
  auto mix = [&h](unsigned char b) {
    h ^= b;
    h *= 1099511628211ull;
  };
  for (size_t i = 0; i < tokens_.size(); ++i) {
    for (char c : tokens_[i]) mix(static_cast<unsigned char>(c));
    mix(0);
    mix(stop_[i] ? 1 : 0);
  }
  mix(static_cast<unsigned char>(unk_id_));
  mix(static_cast<unsigned char>(eos_id_));
  return h;
}

size_t CorpusSplit::total_tokens() const {
  size_t n = 0;
  for (const auto& doc : documents) n += doc.length();
  return n;
}

// --------------------------------------------------------------- operations

std::set<std::string> load_stopwords(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open stopword file: " + path);
  std::set<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' ||
                             line.back() == '\t')) {
      line.pop_back();
    }
    size_t start = line.find_first_not_of(" \t");
    if (start == std::string::npos) continue;
    std::string token = line.substr(start);
    std::transform(token.begin(), token.end(), token.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    out.insert(token);
  }
  return out;
}

Vocabulary build_vocabulary(std::istream& corpus, size_t max_size,
                            const std::set<std::string>& stopwords) {
  if (max_size < 2) throw ConfigError("vocabulary max_size must be >= 2");
  std::unordered_map<std::string, uint64_t> freq;
  std::string token;
  size_t total = 0;
  while (corpus >> token) {
    ++total;
    if (token == Vocabulary::kUnkToken || token == Vocabulary::kEosToken) {
      continue;  // specials have reserved slots
    }
    ++freq[token];
  }
  if (total == 0) throw ValidationError("empty corpus");

  std::vector<std::pair<std::string, uint64_t>> ranked(freq.begin(),
                                                       freq.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  size_t keep = std::min(ranked.size(), max_size - 2);

  std::vector<std::string> tokens;
  tokens.reserve(keep + 2);
  tokens.push_back(Vocabulary::kUnkToken);
  tokens.push_back(Vocabulary::kEosToken);
  for (size_t i = 0; i < keep; ++i) tokens.push_back(ranked[i].first);
  return Vocabulary(std::move(tokens), stopwords);
}

Vocabulary build_vocabulary_from_file(const std::string& path, size_t max_size,
                                      const std::set<std::string>& stopwords) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus file: " + path);
  return build_vocabulary(in, max_size, stopwords);
}

namespace {

EncodedDocument finalize_document(const Vocabulary& vocab,
                                  std::vector<uint32_t> ids) {
  EncodedDocument doc;
  doc.ids = std::move(ids);
  doc.stop.resize(doc.ids.size());
  doc.bow.assign(vocab.content_size(), 0);
  for (size_t t = 0; t < doc.ids.size(); ++t) {
    uint32_t id = doc.ids[t];
    doc.stop[t] = vocab.is_stop(id) ? 1 : 0;
    if (!doc.stop[t]) ++doc.bow[vocab.content_index(id)];
  }
  return doc;
}

}  // namespace

CorpusSplit encode_documents(std::istream& raw, const Vocabulary& vocab,
                             size_t block_size, const std::string& name) {
  if (block_size < 1) throw ConfigError("block_size must be >= 1");
  CorpusSplit split;
  split.name = name;
  std::vector<uint32_t> current;
  size_t sentences = 0;
  std::string line;
  while (std::getline(raw, line)) {
    std::istringstream ls(line);
    std::string token;
    bool any = false;
    while (ls >> token) {
      current.push_back(vocab.id(token));
      any = true;
    }
    if (!any) continue;  // blank line: not a sentence
    current.push_back(vocab.eos_id());
    if (++sentences == block_size) {
      split.documents.push_back(finalize_document(vocab, std::move(current)));
      current.clear();
      sentences = 0;
    }
  }
  if (!current.empty()) {
    split.documents.push_back(finalize_document(vocab, std::move(current)));
  }
  return split;
}

CorpusSplit encode_documents_from_file(const std::string& path,
                                       const Vocabulary& vocab,
                                       size_t block_size,
                                       const std::string& name) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus file: " + path);
  return encode_documents(in, vocab, block_size, name);
}

EncodedDocument document_from_ids(const Vocabulary& vocab,
                                  std::vector<uint32_t> ids) {
  for (uint32_t id : ids) {
    if (id >= vocab.size()) throw ValidationError("token id out of range");
  }
  return finalize_document(vocab, std::move(ids));
}

std::string decode(const Vocabulary& vocab, const std::vector<uint32_t>& ids) {
  std::string out;
  for (size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ' ';
    out += vocab.token(ids[i]);
  }
  return out;
}

// ---------------------------------------------------------------- synthetic

SyntheticCorpus generate_synthetic_corpus(const SyntheticConfig& config) {
  if (config.topics.size() != 2) {
    throw ValidationError("synthetic corpus requires exactly two topics");
  }
  for (const auto& topic : config.topics) {
    if (topic.words.empty() || topic.words.size() != topic.probs.size()) {
      throw ValidationError("topic word/probability lengths differ");
    }
    double sum = 0.0;
    for (double p : topic.probs) {
      if (p < 0.0) throw ValidationError("negative topic probability");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw ValidationError("topic probabilities must sum to 1");
    }
  }
  if (config.stopwords.empty()) {
    throw ValidationError("synthetic corpus requires stop words");
  }
  if (config.stop_rate < 0.0 || config.stop_rate >= 1.0) {
    throw ValidationError("stop_rate must lie in [0, 1)");
  }
  if (config.doc_len == 0 || config.sentence_len == 0) {
    throw ValidationError("doc_len and sentence_len must be positive");
  }

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto draw_topic_word = [&](const TopicSpec& topic) -> const std::string& {
    double u = unit(rng);
    double acc = 0.0;
    for (size_t i = 0; i < topic.probs.size(); ++i) {
      acc += topic.probs[i];
      if (u < acc) return topic.words[i];
    }
    return topic.words.back();
  };

  SyntheticCorpus out;
  out.sentences_per_doc =
      (config.doc_len + config.sentence_len - 1) / config.sentence_len;
  out.labels.reserve(config.n_docs);
  std::string& text = out.text;
  for (size_t d = 0; d < config.n_docs; ++d) {
    int label = static_cast<int>(d % 2);
    out.labels.push_back(label);
    const TopicSpec& topic = config.topics[label];
    for (size_t t = 0; t < config.doc_len; ++t) {
      if (t > 0) {
        text += (t % config.sentence_len == 0) ? '\n' : ' ';
      }
      bool stop = config.alternate_stops ? (t % 2 == 1)
                                         : unit(rng) < config.stop_rate;
      if (stop) {
        size_t i = static_cast<size_t>(unit(rng) * config.stopwords.size());
        if (i >= config.stopwords.size()) i = config.stopwords.size() - 1;
        text += config.stopwords[i];
      } else {
        text += draw_topic_word(topic);
      }
    }
    text += '\n';
  }
  return out;
}

void write_synthetic_corpus(const SyntheticCorpus& corpus,
                            const std::string& text_path,
                            const std::string& label_path) {
  std::ofstream text(text_path);
  if (!text) throw IoError("cannot write corpus file: " + text_path);
  text << corpus.text;
  std::ofstream labels(label_path);
  if (!labels) throw IoError("cannot write label file: " + label_path);
  for (size_t i = 0; i < corpus.labels.size(); ++i) {
    labels << i << '\t' << corpus.labels[i] << '\n';
  }
}

std::vector<int> load_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open label file: " + path);
  std::vector<int> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    size_t index;
    int label;
    if (!(ls >> index >> label)) {
      throw ValidationError("malformed label line in " + path);
    }
    if (index != line_no) {
      throw ValidationError("label indices must be sequential in " + path);
    }
    out.push_back(label);
    ++line_no;
  }
  return out;
}

}  // namespace topicrnn
