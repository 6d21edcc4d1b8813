#include "topicrnn/autodiff.hpp"

#include <cmath>
#include <utility>

#include "topicrnn/errors.hpp"
#include "topicrnn/numerics.hpp"

namespace topicrnn {

// ---------------------------------------------------------------- ParamStore

Tensor& ParamStore::add(const std::string& name,
                        const std::vector<size_t>& shape) {
  if (params_.count(name)) {
    throw ConfigError("duplicate parameter name: " + name);
  }
  params_.emplace(name, Tensor(shape));
  grads_.emplace(name, Tensor(shape));
  return params_.at(name);
}

bool ParamStore::has(const std::string& name) const {
  return params_.count(name) != 0;
}

Tensor& ParamStore::param(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw ConfigError("unknown parameter: " + name);
  return it->second;
}

const Tensor& ParamStore::param(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ConfigError("unknown parameter: " + name);
  return it->second;
}

Tensor& ParamStore::grad(const std::string& name) {
  auto it = grads_.find(name);
  if (it == grads_.end()) throw ConfigError("unknown parameter: " + name);
  return it->second;
}

const Tensor& ParamStore::grad(const std::string& name) const {
  auto it = grads_.find(name);
  if (it == grads_.end()) throw ConfigError("unknown parameter: " + name);
  return it->second;
}

void ParamStore::zero_grads() {
  for (auto& [name, g] : grads_) g.fill(0.0);
}

double ParamStore::grad_norm() const {
  double sq = 0.0;
  for (const auto& [name, g] : grads_) {
    for (size_t i = 0; i < g.size(); ++i) sq += g[i] * g[i];
  }
  return std::sqrt(sq);
}

double ParamStore::clip_gradients(double max_norm) {
  if (max_norm <= 0.0) throw ConfigError("clip max_norm must be positive");
  double norm = grad_norm();
  if (norm <= max_norm) return 1.0;
  double factor = max_norm / norm;
  for (auto& [name, g] : grads_) {
    for (size_t i = 0; i < g.size(); ++i) g[i] *= factor;
  }
  return factor;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(params_.size());
  for (const auto& [name, p] : params_) out.push_back(name);
  return out;
}

size_t ParamStore::total_size() const {
  size_t n = 0;
  for (const auto& [name, p] : params_) n += p.size();
  return n;
}

size_t ParamStore::size_with_prefix(const std::string& prefix) const {
  size_t n = 0;
  for (const auto& [name, p] : params_) {
    if (name.rfind(prefix, 0) == 0) n += p.size();
  }
  return n;
}

std::map<std::string, Tensor> ParamStore::snapshot() const { return params_; }

void ParamStore::restore(const std::map<std::string, Tensor>& snapshot) {
  for (const auto& [name, p] : snapshot) {
    Tensor& dst = param(name);
    if (!dst.same_shape(p)) {
      throw ConfigError("snapshot shape mismatch for " + name);
    }
    dst = p;
  }
}

// ----------------------------------------------------------------- AdamState

AdamState::AdamState(const ParamStore& store, AdamConfig config)
    : config_(config) {
  if (config_.beta1 < 0.0 || config_.beta1 >= 1.0 || config_.beta2 < 0.0 ||
      config_.beta2 >= 1.0 || config_.eps <= 0.0) {
    throw ConfigError("invalid Adam hyperparameters");
  }
  for (const auto& name : store.names()) {
    const Tensor& p = store.param(name);
    m_.emplace(name, Tensor(p.shape()));
    v_.emplace(name, Tensor(p.shape()));
  }
}

void AdamState::step(ParamStore& store) {
  ++t_;
  double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (auto& [name, m] : m_) {
    Tensor& v = v_.at(name);
    Tensor& p = store.param(name);
    Tensor& g = store.grad(name);
    if (!p.same_shape(m)) throw ConfigError("Adam shape mismatch for " + name);
    for (size_t i = 0; i < p.size(); ++i) {
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g[i];
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g[i] * g[i];
      double m_hat = m[i] / bc1;
      double v_hat = v[i] / bc2;
      p[i] -= config_.lr * m_hat / (std::sqrt(v_hat) + config_.eps);
    }
    g.fill(0.0);
  }
}

// ---------------------------------------------------------------------- Tape

Tape::Tape(ParamStore* store, bool grad_enabled)
    : store_(store), grad_enabled_(grad_enabled) {}

uint32_t Tape::push_constant(Tensor value) {
  Node n;
  n.owned = std::move(value);
  nodes_.push_back(std::move(n));
  return static_cast<uint32_t>(nodes_.size() - 1);
}

uint32_t Tape::push_op(Tensor value, bool needs_grad,
                       std::function<void(Tape&, uint32_t)> backprop) {
  Node n;
  n.owned = std::move(value);
  n.needs_grad = needs_grad && grad_enabled_;
  if (n.needs_grad) n.backprop = std::move(backprop);
  nodes_.push_back(std::move(n));
  return static_cast<uint32_t>(nodes_.size() - 1);
}

bool Tape::wants_grad(Var v) const { return nodes_[v.idx].needs_grad; }

Tensor& Tape::grad_buf(uint32_t idx) {
  Node& n = nodes_[idx];
  if (n.grad.size() == 0) n.grad = Tensor(val(idx).shape());
  return n.grad;
}

Var Tape::param(const std::string& name) {
  if (!store_) throw ConfigError("tape has no parameter store");
  auto it = param_lookup_.find(name);
  if (it != param_lookup_.end()) return Var{it->second};
  Node n;
  n.external = &store_->param(name);
  n.needs_grad = grad_enabled_;
  nodes_.push_back(std::move(n));
  uint32_t idx = static_cast<uint32_t>(nodes_.size() - 1);
  param_lookup_.emplace(name, idx);
  param_nodes_.emplace_back(name, idx);
  return Var{idx};
}

Var Tape::constant(Tensor value) { return Var{push_constant(std::move(value))}; }

Var Tape::constant_scalar(double value) {
  return Var{push_constant(Tensor::scalar(value))};
}

Var Tape::detach(Var x) { return Var{push_constant(val(x.idx))}; }

const Tensor& Tape::value(Var v) const { return val(v.idx); }

double Tape::scalar(Var v) const {
  const Tensor& t = val(v.idx);
  if (t.size() != 1) throw ConfigError("scalar() on non-scalar node");
  return t[0];
}

Var Tape::add(Var a, Var b) {
  const Tensor& va = val(a.idx);
  const Tensor& vb = val(b.idx);
  if (va.size() != vb.size()) throw ConfigError("add: size mismatch");
  Tensor out(va.shape());
  for (size_t i = 0; i < out.size(); ++i) out[i] = va[i] + vb[i];
  uint32_t ai = a.idx, bi = b.idx;
  return Var{push_op(std::move(out), wants_grad(a) || wants_grad(b),
                     [ai, bi](Tape& t, uint32_t self) {
                       const Tensor& g = t.nodes_[self].grad;
                       if (t.nodes_[ai].needs_grad) {
                         Tensor& ga = t.grad_buf(ai);
                         for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
                       }
                       if (t.nodes_[bi].needs_grad) {
                         Tensor& gb = t.grad_buf(bi);
                         for (size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
                       }
                     })};
}

Var Tape::sub(Var a, Var b) {
  const Tensor& va = val(a.idx);
  const Tensor& vb = val(b.idx);
  if (va.size() != vb.size()) throw ConfigError("sub: size mismatch");
  Tensor out(va.shape());
  for (size_t i = 0; i < out.size(); ++i) out[i] = va[i] - vb[i];
  uint32_t ai = a.idx, bi = b.idx;
  return Var{push_op(std::move(out), wants_grad(a) || wants_grad(b),
                     [ai, bi](Tape& t, uint32_t self) {
                       const Tensor& g = t.nodes_[self].grad;
                       if (t.nodes_[ai].needs_grad) {
                         Tensor& ga = t.grad_buf(ai);
                         for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
                       }
                       if (t.nodes_[bi].needs_grad) {
                         Tensor& gb = t.grad_buf(bi);
                         for (size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
                       }
                     })};
}

Var Tape::mul(Var a, Var b) {
  const Tensor& va = val(a.idx);
  const Tensor& vb = val(b.idx);
  if (va.size() != vb.size()) throw ConfigError("mul: size mismatch");
  Tensor out(va.shape());
  for (size_t i = 0; i < out.size(); ++i) out[i] = va[i] * vb[i];
  uint32_t ai = a.idx, bi = b.idx;
  return Var{push_op(std::move(out), wants_grad(a) || wants_grad(b),
                     [ai, bi](Tape& t, uint32_t self) {
                       const Tensor& g = t.nodes_[self].grad;
                       const Tensor& va = t.val(ai);
                       const Tensor& vb = t.val(bi);
                       if (t.nodes_[ai].needs_grad) {
                         Tensor& ga = t.grad_buf(ai);
                         for (size_t i = 0; i < g.size(); ++i)
                           ga[i] += g[i] * vb[i];
                       }
                       if (t.nodes_[bi].needs_grad) {
                         Tensor& gb = t.grad_buf(bi);
                         for (size_t i = 0; i < g.size(); ++i)
                           gb[i] += g[i] * va[i];
                       }
                     })};
}

Var Tape::scale(Var a, double c) {
  const Tensor& va = val(a.idx);
  Tensor out(va.shape());
  for (size_t i = 0; i < out.size(); ++i) out[i] = va[i] * c;
  uint32_t ai = a.idx;
  return Var{push_op(std::move(out), wants_grad(a),
                     [ai, c](Tape& t, uint32_t self) {
                       const Tensor& g = t.nodes_[self].grad;
                       if (t.nodes_[ai].needs_grad) {
                         Tensor& ga = t.grad_buf(ai);
                         for (size_t i = 0; i < g.size(); ++i)
                           ga[i] += g[i] * c;
                       }
                     })};
}

Var Tape::smul(Var s, Var v) {
  const Tensor& vs = val(s.idx);
  const Tensor& vv = val(v.idx);
  if (vs.size() != 1) throw ConfigError("smul: first operand must be scalar");
  Tensor out(vv.shape());
  for (size_t i = 0; i < out.size(); ++i) out[i] = vs[0] * vv[i];
  uint32_t si = s.idx, vi = v.idx;
  return Var{push_op(std::move(out), wants_grad(s) || wants_grad(v),
                     [si, vi](Tape& t, uint32_t self) {
                       const Tensor& g = t.nodes_[self].grad;
                       const Tensor& vs = t.val(si);
                       const Tensor& vv = t.val(vi);
                       if (t.nodes_[si].needs_grad) {
                         Tensor& gs = t.grad_buf(si);
                         double acc = 0.0;
                         for (size_t i = 0; i < g.size(); ++i)
                           acc += g[i] * vv[i];
                         gs[0] += acc;
                       }
                       if (t.nodes_[vi].needs_grad) {
                         Tensor& gv = t.grad_buf(vi);
                         for (size_t i = 0; i < g.size(); ++i)
                           gv[i] += g[i] * vs[0];
                       }
                     })};
}

Var Tape::matmul(Var m, Var x) {
  const Tensor& vm = val(m.idx);
  const Tensor& vx = val(x.idx);
  if (vm.rank() != 2) throw ConfigError("matmul: left operand must be rank 2");
  size_t r = vm.rows(), k = vm.cols();
  uint32_t mi = m.idx, xi = x.idx;
  if (vx.rank() == 1) {
    if (vx.size() != k) throw ConfigError("matmul: inner dimension mismatch");
    Tensor out({r});
    for (size_t i = 0; i < r; ++i) {
      double acc = 0.0;
      const double* row = vm.data() + i * k;
      for (size_t j = 0; j < k; ++j) acc += row[j] * vx[j];
      out[i] = acc;
    }
    return Var{push_op(std::move(out), wants_grad(m) || wants_grad(x),
                       [mi, xi, r, k](Tape& t, uint32_t self) {
                         const Tensor& g = t.nodes_[self].grad;
                         const Tensor& vm = t.val(mi);
                         const Tensor& vx = t.val(xi);
                         if (t.nodes_[mi].needs_grad) {
                           Tensor& gm = t.grad_buf(mi);
                           for (size_t i = 0; i < r; ++i) {
                             double gi = g[i];
                             double* grow = gm.data() + i * k;
                             for (size_t j = 0; j < k; ++j)
                               grow[j] += gi * vx[j];
                           }
                         }
                         if (t.nodes_[xi].needs_grad) {
                           Tensor& gx = t.grad_buf(xi);
                           for (size_t i = 0; i < r; ++i) {
                             double gi = g[i];
                             const double* row = vm.data() + i * k;
                             for (size_t j = 0; j < k; ++j)
                               gx[j] += gi * row[j];
                           }
                         }
                       })};
  }
  if (vx.rank() != 2 || vx.rows() != k) {
    throw ConfigError("matmul: inner dimension mismatch");
  }
  size_t c = vx.cols();
  Tensor out({r, c});
  for (size_t i = 0; i < r; ++i) {
    for (size_t j = 0; j < k; ++j) {
      double a = vm.data()[i * k + j];
      const double* xr = vx.data() + j * c;
      double* orow = out.data() + i * c;
      for (size_t l = 0; l < c; ++l) orow[l] += a * xr[l];
    }
  }
  return Var{push_op(std::move(out), wants_grad(m) || wants_grad(x),
                     [mi, xi, r, k, c](Tape& t, uint32_t self) {
                       const Tensor& g = t.nodes_[self].grad;
                       const Tensor& vm = t.val(mi);
                       const Tensor& vx = t.val(xi);
                       if (t.nodes_[mi].needs_grad) {
                         Tensor& gm = t.grad_buf(mi);
                         // dM = g x^T
                         for (size_t i = 0; i < r; ++i)
                           for (size_t j = 0; j < k; ++j) {
                             double acc = 0.0;
                             for (size_t l = 0; l < c; ++l)
                               acc += g.data()[i * c + l] * vx.data()[j * c + l];
                             gm.data()[i * k + j] += acc;
                           }
                       }
                       if (t.nodes_[xi].needs_grad) {
                         Tensor& gx = t.grad_buf(xi);
                         // dX = m^T g
                         for (size_t j = 0; j < k; ++j)
                           for (size_t l = 0; l < c; ++l) {
                             double acc = 0.0;
                             for (size_t i = 0; i < r; ++i)
                               acc += vm.data()[i * k + j] * g.data()[i * c + l];
                             gx.data()[j * c + l] += acc;
                           }
                       }
                     })};
}

Var Tape::matmul_tn(Var m, Var x) {
  const Tensor& vm = val(m.idx);
  const Tensor& vx = val(x.idx);
  if (vm.rank() != 2 || vx.rank() != 1 || vx.size() != vm.rows()) {
    throw ConfigError("matmul_tn: shape mismatch");
  }
  size_t r = vm.rows(), c = vm.cols();
  Tensor out({c});
  for (size_t i = 0; i < r; ++i) {
    double xi_v = vx[i];
    const double* row = vm.data() + i * c;
    for (size_t j = 0; j < c; ++j) out[j] += xi_v * row[j];
  }
  uint32_t mi = m.idx, xi = x.idx;
  return Var{push_op(std::move(out), wants_grad(m) || wants_grad(x),
                     [mi, xi, r, c](Tape& t, uint32_t self) {
                       const Tensor& g = t.nodes_[self].grad;
                       const Tensor& vm = t.val(mi);
                       const Tensor& vx = t.val(xi);
                       if (t.nodes_[mi].needs_grad) {
                         Tensor& gm = t.grad_buf(mi);
                         // dM = x g^T
                         for (size_t i = 0; i < r; ++i) {
                           double xv = vx[i];
                           double* grow = gm.data() + i * c;
                           for (size_t j = 0; j < c; ++j) grow[j] += xv * g[j];
                         }
                       }
                       if (t.nodes_[xi].needs_grad) {
                         Tensor& gx = t.grad_buf(xi);
                         // dx = M g
                         for (size_t i = 0; i < r; ++i) {
                           const double* row = vm.data() + i * c;
                           double acc = 0.0;
                           for (size_t j = 0; j < c; ++j) acc += row[j] * g[j];
                           gx[i] += acc;
                         }
                       }
                     })};
}

Var Tape::tanh_(Var x) {
  const Tensor& vx = val(x.idx);
  Tensor out(vx.shape());
  for (size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(vx[i]);
  uint32_t xi = x.idx;
  return Var{push_op(std::move(out), wants_grad(x),
                     [xi](Tape& t, uint32_t self) {
                       if (!t.nodes_[xi].needs_grad) return;
                       const Tensor& g = t.nodes_[self].grad;
                       const Tensor& y = t.val(self);
                       Tensor& gx = t.grad_buf(xi);
                       for (size_t i = 0; i < g.size(); ++i)
                         gx[i] += g[i] * (1.0 - y[i] * y[i]);
                     })};
}

Var Tape::sigmoid_(Var x) {
  const Tensor& vx = val(x.idx);
  Tensor out(vx.shape());
  for (size_t i = 0; i < out.size(); ++i) {
    if (std::isnan(vx[i])) throw NumericError("sigmoid: NaN input");
    out[i] = sigmoid(vx[i]);
  }
  uint32_t xi = x.idx;
  return Var{push_op(std::move(out), wants_grad(x),
                     [xi](Tape& t, uint32_t self) {
                       if (!t.nodes_[xi].needs_grad) return;
                       const Tensor& g = t.nodes_[self].grad;
                       const Tensor& y = t.val(self);
                       Tensor& gx = t.grad_buf(xi);
                       for (size_t i = 0; i < g.size(); ++i)
                         gx[i] += g[i] * y[i] * (1.0 - y[i]);
                     })};
}

Var Tape::relu(Var x) {
  const Tensor& vx = val(x.idx);
  Tensor out(vx.shape());
  for (size_t i = 0; i < out.size(); ++i) out[i] = vx[i] > 0.0 ? vx[i] : 0.0;
  uint32_t xi = x.idx;
  return Var{push_op(std::move(out), wants_grad(x),
                     [xi](Tape& t, uint32_t self) {
                       if (!t.nodes_[xi].needs_grad) return;
                       const Tensor& g = t.nodes_[self].grad;
                       const Tensor& vx = t.val(xi);
                       Tensor& gx = t.grad_buf(xi);
                       for (size_t i = 0; i < g.size(); ++i)
                         if (vx[i] > 0.0) gx[i] += g[i];
                     })};
}

Var Tape::exp_(Var x) {
  const Tensor& vx = val(x.idx);
  Tensor out(vx.shape());
  for (size_t i = 0; i < out.size(); ++i) out[i] = std::exp(vx[i]);
  uint32_t xi = x.idx;
  return Var{push_op(std::move(out), wants_grad(x),
                     [xi](Tape& t, uint32_t self) {
                       if (!t.nodes_[xi].needs_grad) return;
                       const Tensor& g = t.nodes_[self].grad;
                       const Tensor& y = t.val(self);
                       Tensor& gx = t.grad_buf(xi);
                       for (size_t i = 0; i < g.size(); ++i)
                         gx[i] += g[i] * y[i];
                     })};
}

Var Tape::log_(Var x) {
  const Tensor& vx = val(x.idx);
  Tensor out(vx.shape());
  for (size_t i = 0; i < out.size(); ++i) out[i] = std::log(vx[i]);
  uint32_t xi = x.idx;
  return Var{push_op(std::move(out), wants_grad(x),
                     [xi](Tape& t, uint32_t self) {
                       if (!t.nodes_[xi].needs_grad) return;
                       const Tensor& g = t.nodes_[self].grad;
                       const Tensor& vx = t.val(xi);
                       Tensor& gx = t.grad_buf(xi);
                       for (size_t i = 0; i < g.size(); ++i)
                         gx[i] += g[i] / vx[i];
                     })};
}

Var Tape::sin_(Var x) {
  const Tensor& vx = val(x.idx);
  Tensor out(vx.shape());
  for (size_t i = 0; i < out.size(); ++i) out[i] = std::sin(vx[i]);
  uint32_t xi = x.idx;
  return Var{push_op(std::move(out), wants_grad(x),
                     [xi](Tape& t, uint32_t self) {
                       if (!t.nodes_[xi].needs_grad) return;
                       const Tensor& g = t.nodes_[self].grad;
                       const Tensor& vx = t.val(xi);
                       Tensor& gx = t.grad_buf(xi);
                       for (size_t i = 0; i < g.size(); ++i)
                         gx[i] += g[i] * std::cos(vx[i]);
                     })};
}

Var Tape::log_sigmoid_(Var x) {
  const Tensor& vx = val(x.idx);
  Tensor out(vx.shape());
  for (size_t i = 0; i < out.size(); ++i) out[i] = log_sigmoid(vx[i]);
  uint32_t xi = x.idx;
  return Var{push_op(std::move(out), wants_grad(x),
                     [xi](Tape& t, uint32_t self) {
                       if (!t.nodes_[xi].needs_grad) return;
                       const Tensor& g = t.nodes_[self].grad;
                       const Tensor& vx = t.val(xi);
                       Tensor& gx = t.grad_buf(xi);
                       // d/dx log sigmoid(x) = sigmoid(-x)
                       for (size_t i = 0; i < g.size(); ++i)
                         gx[i] += g[i] * sigmoid(-vx[i]);
                     })};
}

Var Tape::softmax(Var x) {
  const Tensor& vx = val(x.idx);
  if (vx.rank() != 1) throw ConfigError("softmax: rank-1 input required");
  if (!vx.all_finite()) throw NumericError("softmax: non-finite input");
  Tensor out(vx.shape());
  stable_softmax(vx.data(), out.data(), vx.size());
  uint32_t xi = x.idx;
  return Var{push_op(std::move(out), wants_grad(x),
                     [xi](Tape& t, uint32_t self) {
                       if (!t.nodes_[xi].needs_grad) return;
                       const Tensor& g = t.nodes_[self].grad;
                       const Tensor& y = t.val(self);
                       Tensor& gx = t.grad_buf(xi);
                       double gy = 0.0;
                       for (size_t i = 0; i < g.size(); ++i) gy += g[i] * y[i];
                       for (size_t i = 0; i < g.size(); ++i)
                         gx[i] += y[i] * (g[i] - gy);
                     })};
}

Var Tape::log_softmax(Var x) {
  const Tensor& vx = val(x.idx);
  if (vx.rank() != 1) throw ConfigError("log_softmax: rank-1 input required");
  if (!vx.all_finite()) throw NumericError("log_softmax: non-finite input");
  Tensor out(vx.shape());
  stable_log_softmax(vx.data(), out.data(), vx.size());
  uint32_t xi = x.idx;
  return Var{push_op(std::move(out), wants_grad(x),
                     [xi](Tape& t, uint32_t self) {
                       if (!t.nodes_[xi].needs_grad) return;
                       const Tensor& g = t.nodes_[self].grad;
                       const Tensor& y = t.val(self);
                       Tensor& gx = t.grad_buf(xi);
                       double gsum = 0.0;
                       for (size_t i = 0; i < g.size(); ++i) gsum += g[i];
                       for (size_t i = 0; i < g.size(); ++i)
                         gx[i] += g[i] - std::exp(y[i]) * gsum;
                     })};
}

Var Tape::clamp(Var x, double lo, double hi) {
  const Tensor& vx = val(x.idx);
  Tensor out(vx.shape());
  for (size_t i = 0; i < out.size(); ++i)
    out[i] = std::min(hi, std::max(lo, vx[i]));
  uint32_t xi = x.idx;
  return Var{push_op(std::move(out), wants_grad(x),
                     [xi, lo, hi](Tape& t, uint32_t self) {
                       if (!t.nodes_[xi].needs_grad) return;
                       const Tensor& g = t.nodes_[self].grad;
                       const Tensor& vx = t.val(xi);
                       Tensor& gx = t.grad_buf(xi);
                       for (size_t i = 0; i < g.size(); ++i)
                         if (vx[i] > lo && vx[i] < hi) gx[i] += g[i];
                     })};
}

Var Tape::concat(Var a, Var b) {
  const Tensor& va = val(a.idx);
  const Tensor& vb = val(b.idx);
  if (va.rank() != 1 || vb.rank() != 1) {
    throw ConfigError("concat: rank-1 inputs required");
  }
  Tensor out({va.size() + vb.size()});
  for (size_t i = 0; i < va.size(); ++i) out[i] = va[i];
  for (size_t i = 0; i < vb.size(); ++i) out[va.size() + i] = vb[i];
  uint32_t ai = a.idx, bi = b.idx;
  size_t na = va.size();
  return Var{push_op(std::move(out), wants_grad(a) || wants_grad(b),
                     [ai, bi, na](Tape& t, uint32_t self) {
                       const Tensor& g = t.nodes_[self].grad;
                       if (t.nodes_[ai].needs_grad) {
                         Tensor& ga = t.grad_buf(ai);
                         for (size_t i = 0; i < na; ++i) ga[i] += g[i];
                       }
                       if (t.nodes_[bi].needs_grad) {
                         Tensor& gb = t.grad_buf(bi);
                         for (size_t i = na; i < g.size(); ++i)
                           gb[i - na] += g[i];
                       }
                     })};
}

Var Tape::row(Var matrix, size_t r) {
  const Tensor& vm = val(matrix.idx);
  if (vm.rank() != 2) throw ConfigError("row: rank-2 input required");
  if (r >= vm.rows()) throw ConfigError("row: index out of range");
  size_t c = vm.cols();
  Tensor out({c});
  for (size_t j = 0; j < c; ++j) out[j] = vm.data()[r * c + j];
  uint32_t mi = matrix.idx;
  return Var{push_op(std::move(out), wants_grad(matrix),
                     [mi, r, c](Tape& t, uint32_t self) {
                       if (!t.nodes_[mi].needs_grad) return;
                       const Tensor& g = t.nodes_[self].grad;
                       Tensor& gm = t.grad_buf(mi);
                       double* grow = gm.data() + r * c;
                       for (size_t j = 0; j < c; ++j) grow[j] += g[j];
                     })};
}

Var Tape::pick(Var v, size_t i) {
  const Tensor& vv = val(v.idx);
  if (vv.rank() != 1) throw ConfigError("pick: rank-1 input required");
  if (i >= vv.size()) throw ConfigError("pick: index out of range");
  uint32_t vi = v.idx;
  return Var{push_op(Tensor::scalar(vv[i]), wants_grad(v),
                     [vi, i](Tape& t, uint32_t self) {
                       if (!t.nodes_[vi].needs_grad) return;
                       const Tensor& g = t.nodes_[self].grad;
                       t.grad_buf(vi)[i] += g[0];
                     })};
}

Var Tape::dot(Var a, Var b) {
  const Tensor& va = val(a.idx);
  const Tensor& vb = val(b.idx);
  if (va.size() != vb.size()) throw ConfigError("dot: size mismatch");
  double acc = 0.0;
  for (size_t i = 0; i < va.size(); ++i) acc += va[i] * vb[i];
  uint32_t ai = a.idx, bi = b.idx;
  return Var{push_op(Tensor::scalar(acc), wants_grad(a) || wants_grad(b),
                     [ai, bi](Tape& t, uint32_t self) {
                       double g = t.nodes_[self].grad[0];
                       const Tensor& va = t.val(ai);
                       const Tensor& vb = t.val(bi);
                       if (t.nodes_[ai].needs_grad) {
                         Tensor& ga = t.grad_buf(ai);
                         for (size_t i = 0; i < va.size(); ++i)
                           ga[i] += g * vb[i];
                       }
                       if (t.nodes_[bi].needs_grad) {
                         Tensor& gb = t.grad_buf(bi);
                         for (size_t i = 0; i < vb.size(); ++i)
                           gb[i] += g * va[i];
                       }
                     })};
}

Var Tape::sum(Var x) {
  const Tensor& vx = val(x.idx);
  double acc = 0.0;
  for (size_t i = 0; i < vx.size(); ++i) acc += vx[i];
  uint32_t xi = x.idx;
  return Var{push_op(Tensor::scalar(acc), wants_grad(x),
                     [xi](Tape& t, uint32_t self) {
                       if (!t.nodes_[xi].needs_grad) return;
                       double g = t.nodes_[self].grad[0];
                       Tensor& gx = t.grad_buf(xi);
                       for (size_t i = 0; i < gx.size(); ++i) gx[i] += g;
                     })};
}

void Tape::backward(Var loss) {
  if (!grad_enabled_) throw ConfigError("backward on a no-grad tape");
  if (backward_done_) throw ConfigError("backward already ran on this tape");
  backward_done_ = true;
  const Tensor& lv = val(loss.idx);
  if (lv.size() != 1) throw ConfigError("backward: loss must be scalar");
  if (!nodes_[loss.idx].needs_grad) {
    // loss does not depend on any parameter; gradients are all zero
    return;
  }
  grad_buf(loss.idx)[0] = 1.0;
  for (uint32_t i = loss.idx + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.needs_grad || !n.backprop) continue;
    if (n.grad.size() == 0) continue;  // never touched: zero gradient
    n.backprop(*this, i);
  }
  for (const auto& [name, idx] : param_nodes_) {
    const Node& n = nodes_[idx];
    if (n.grad.size() == 0) continue;
    Tensor& g = store_->grad(name);
    for (size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
  }
}

// -------------------------------------------------- finite_difference_check

GradCheckReport finite_difference_check(const std::function<Var(Tape&)>& build,
                                        ParamStore& store, double h,
                                        double abs_floor) {
  if (h < 1e-6 || h > 1e-3) {
    throw ConfigError("finite difference step must lie in [1e-6, 1e-3]");
  }
  auto eval = [&]() {
    Tape tape(&store, false);
    Var loss = build(tape);
    double v = tape.scalar(loss);
    if (std::isnan(v)) throw NumericError("finite_difference_check: NaN loss");
    return v;
  };

  store.zero_grads();
  {
    Tape tape(&store, true);
    Var loss = build(tape);
    if (std::isnan(tape.scalar(loss))) {
      throw NumericError("finite_difference_check: NaN loss");
    }
    tape.backward(loss);
  }

  GradCheckReport report;
  for (const auto& name : store.names()) {
    Tensor& p = store.param(name);
    const Tensor& g = store.grad(name);
    for (size_t i = 0; i < p.size(); ++i) {
      double saved = p[i];
      p[i] = saved + h;
      double up = eval();
      p[i] = saved - h;
      double down = eval();
      p[i] = saved;
      double numeric = (up - down) / (2.0 * h);
      double analytic = g[i];
      double diff = std::abs(analytic - numeric);
      double rel = 0.0;
      if (diff > abs_floor) {
        rel = diff / std::max(std::abs(analytic), std::abs(numeric));
      }
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_param = name;
        report.worst_index = i;
        report.analytic = analytic;
        report.numeric = numeric;
      }
    }
  }
  return report;
}

}  // namespace topicrnn
