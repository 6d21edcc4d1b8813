#ifndef TOPICRNN_ERRORS_HPP
#define TOPICRNN_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace topicrnn {

// File or stream failure; the message carries the offending path.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Shape mismatch, bad option value, malformed config.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// NaN or other invalid numerics encountered mid-computation.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Bad input data: empty corpus, invalid distribution, empty document.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Corpus encoded with a different vocabulary than the model's.
class VocabMismatchError : public std::runtime_error {
 public:
  explicit VocabMismatchError(const std::string& what)
      : std::runtime_error(what) {}
};

}  // namespace topicrnn

#endif  // TOPICRNN_ERRORS_HPP
