#ifndef TOPICRNN_NUMERICS_HPP
#define TOPICRNN_NUMERICS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>

namespace topicrnn {

inline double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  double e = std::exp(x);
  return e / (1.0 + e);
}

// log(1 + exp(x)) without overflow.
inline double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

inline double log_sigmoid(double x) { return -softplus(-x); }

inline double logaddexp(double a, double b) {
  if (a < b) std::swap(a, b);
  if (b == -std::numeric_limits<double>::infinity()) return a;
  return a + std::log1p(std::exp(b - a));
}

// Max-subtracted softmax; `in` and `out` may alias.
inline void stable_softmax(const double* in, double* out, size_t n) {
  double m = in[0];
  for (size_t i = 1; i < n; ++i) m = std::max(m, in[i]);
  double z = 0.0;
  for (size_t i = 0; i < n; ++i) {
    out[i] = std::exp(in[i] - m);
    z += out[i];
  }
  for (size_t i = 0; i < n; ++i) out[i] /= z;
}

inline double logsumexp(const double* in, size_t n) {
  double m = in[0];
  for (size_t i = 1; i < n; ++i) m = std::max(m, in[i]);
  double z = 0.0;
  for (size_t i = 0; i < n; ++i) z += std::exp(in[i] - m);
  return m + std::log(z);
}

// in-place x_i <- x_i - logsumexp(x).
inline void stable_log_softmax(const double* in, double* out, size_t n) {
  double lse = logsumexp(in, n);
  for (size_t i = 0; i < n; ++i) out[i] = in[i] - lse;
}

}  // namespace topicrnn

#endif  // TOPICRNN_NUMERICS_HPP
