#ifndef TOPICRNN_AUTODIFF_HPP
#define TOPICRNN_AUTODIFF_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "topicrnn/tensor.hpp"

namespace topicrnn {

// Named parameter tensors with same-shape gradient accumulators.
class ParamStore {
 public:
  Tensor& add(const std::string& name, const std::vector<size_t>& shape);
  bool has(const std::string& name) const;
  Tensor& param(const std::string& name);
  const Tensor& param(const std::string& name) const;
  Tensor& grad(const std::string& name);
  const Tensor& grad(const std::string& name) const;

  void zero_grads();
  double grad_norm() const;
  // Scales all gradients by max_norm/norm when norm exceeds max_norm;
  // returns the factor applied (1 when no clipping happened).
  double clip_gradients(double max_norm);

  std::vector<std::string> names() const;  // sorted
  size_t total_size() const;
  size_t size_with_prefix(const std::string& prefix) const;

  std::map<std::string, Tensor> snapshot() const;
  void restore(const std::map<std::string, Tensor>& snapshot);

 private:
  std::map<std::string, Tensor> params_;
  std::map<std::string, Tensor> grads_;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam over a ParamStore. step() consumes the accumulated
// gradients and zeroes them.
class AdamState {
 public:
  AdamState(const ParamStore& store, AdamConfig config);
  void step(ParamStore& store);
  int64_t steps() const { return t_; }
  const AdamConfig& config() const { return config_; }

 private:
  AdamConfig config_;
  std::map<std::string, Tensor> m_;
  std::map<std::string, Tensor> v_;
  int64_t t_ = 0;
};

// Handle to a node on a Tape.
struct Var {
  uint32_t idx = UINT32_MAX;
  bool valid() const { return idx != UINT32_MAX; }
};

// Eager reverse-mode tape. Ops compute values immediately and record how to
// push gradients back to their operands; backward() walks the record in
// reverse and accumulates dLoss/dparam into the bound ParamStore. A tape is
// confined to one thread and supports a single backward pass. With
// grad_enabled=false no backward closures are recorded, which makes the tape
// a plain forward evaluator over read-only parameters.
class Tape {
 public:
  explicit Tape(ParamStore* store = nullptr, bool grad_enabled = true);
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var param(const std::string& name);
  Var constant(Tensor value);
  Var constant_scalar(double value);
  // Value copy with gradient flow cut (BPTT chunk boundaries).
  Var detach(Var x);

  const Tensor& value(Var v) const;
  double scalar(Var v) const;

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);  // elementwise
  Var scale(Var a, double c);
  Var smul(Var s, Var v);  // scalar node times tensor node
  // (r,c)x(c) -> (r), or (r,k)x(k,c) -> (r,c).
  Var matmul(Var m, Var x);
  // m^T x with m (r,c) and x (r) -> (c).
  Var matmul_tn(Var m, Var x);
  Var tanh_(Var x);
  Var sigmoid_(Var x);
  Var relu(Var x);
  Var exp_(Var x);
  Var log_(Var x);
  Var sin_(Var x);
  Var log_sigmoid_(Var x);
  Var softmax(Var x);
  Var log_softmax(Var x);
  Var clamp(Var x, double lo, double hi);
  Var concat(Var a, Var b);
  Var row(Var matrix, size_t r);  // embedding lookup
  Var pick(Var v, size_t i);      // vector entry -> scalar
  Var dot(Var a, Var b);
  Var sum(Var x);

  void backward(Var loss);

  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor owned;
    const Tensor* external = nullptr;  // set for parameter nodes only
    Tensor grad;                       // empty until first touched
    bool needs_grad = false;
    std::function<void(Tape&, uint32_t)> backprop;
  };

  uint32_t push_constant(Tensor value);
  uint32_t push_op(Tensor value, bool needs_grad,
                   std::function<void(Tape&, uint32_t)> backprop);
  bool wants_grad(Var v) const;
  Tensor& grad_buf(uint32_t idx);
  const Tensor& val(uint32_t idx) const {
    const Node& n = nodes_[idx];
    return n.external ? *n.external : n.owned;
  }

  std::vector<Node> nodes_;
  std::vector<std::pair<std::string, uint32_t>> param_nodes_;
  std::map<std::string, uint32_t> param_lookup_;
  ParamStore* store_;
  bool grad_enabled_;
  bool backward_done_ = false;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_param;
  size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

// Central-difference check of d(loss)/d(param) for every parameter entry.
// `build` must deterministically reconstruct the same scalar loss on the
// tape it is given. Entries with |analytic - numeric| <= abs_floor count as
// exact (relative error 0); otherwise the error is |a-n|/max(|a|,|n|).
GradCheckReport finite_difference_check(const std::function<Var(Tape&)>& build,
                                        ParamStore& store, double h,
                                        double abs_floor = 1e-7);

}  // namespace topicrnn

#endif  // TOPICRNN_AUTODIFF_HPP
