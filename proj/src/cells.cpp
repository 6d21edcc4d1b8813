#include "topicrnn/cells.hpp"

#include "topicrnn/errors.hpp"

namespace topicrnn {

CellKind cell_kind_from_string(const std::string& name) {
  if (name == "rnn") return CellKind::rnn;
  if (name == "gru") return CellKind::gru;
  if (name == "lstm") return CellKind::lstm;
  throw ConfigError("unknown cell kind: " + name);
}

std::string to_string(CellKind kind) {
  switch (kind) {
    case CellKind::rnn: return "rnn";
    case CellKind::gru: return "gru";
    case CellKind::lstm: return "lstm";
  }
  throw ConfigError("unknown cell kind");
}

RecurrentCell::RecurrentCell(CellConfig config, std::string prefix)
    : config_(config), prefix_(std::move(prefix)) {
  if (config_.hidden < 1 || config_.layers < 1) {
    throw ConfigError("cell requires hidden >= 1 and layers >= 1");
  }
}

std::string RecurrentCell::layer_prefix(size_t layer) const {
  return prefix_ + ".l" + std::to_string(layer) + ".";
}

void RecurrentCell::register_params(ParamStore& store) const {
  size_t h = config_.hidden;
  for (size_t l = 0; l < config_.layers; ++l) {
    size_t in = l == 0 ? config_.input_size() : h;
    std::string p = layer_prefix(l);
    auto gate = [&](const std::string& name) {
      store.add(p + "w_" + name, {h, in});
      store.add(p + "u_" + name, {h, h});
      store.add(p + "b_" + name, {h});
    };
    switch (config_.kind) {
      case CellKind::rnn:
        store.add(p + "w_ih", {h, in});
        store.add(p + "w_hh", {h, h});
        store.add(p + "b", {h});
        break;
      case CellKind::gru:
        gate("z");
        gate("r");
        gate("h");
        break;
      case CellKind::lstm:
        gate("i");
        gate("f");
        gate("g");
        gate("o");
        break;
    }
  }
}

size_t RecurrentCell::param_count() const {
  size_t h = config_.hidden;
  size_t gates;
  switch (config_.kind) {
    case CellKind::rnn: gates = 1; break;
    case CellKind::gru: gates = 3; break;
    case CellKind::lstm: gates = 4; break;
    default: throw ConfigError("unknown cell kind");
  }
  size_t total = 0;
  for (size_t l = 0; l < config_.layers; ++l) {
    size_t in = l == 0 ? config_.input_size() : h;
    total += gates * (h * in + h * h + h);
  }
  return total;
}

std::vector<LayerState> RecurrentCell::init_state() const {
  std::vector<LayerState> state(config_.layers);
  for (auto& layer : state) {
    layer.h = Tensor({config_.hidden});
    if (config_.kind == CellKind::lstm) layer.c = Tensor({config_.hidden});
  }
  return state;
}

std::vector<LayerStateVars> RecurrentCell::lift(
    Tape& tape, const std::vector<LayerState>& state) const {
  std::vector<LayerStateVars> out(state.size());
  for (size_t l = 0; l < state.size(); ++l) {
    out[l].h = tape.constant(state[l].h);
    if (config_.kind == CellKind::lstm) out[l].c = tape.constant(state[l].c);
  }
  return out;
}

std::vector<LayerState> RecurrentCell::lower(
    const Tape& tape, const std::vector<LayerStateVars>& state) const {
  std::vector<LayerState> out(state.size());
  for (size_t l = 0; l < state.size(); ++l) {
    out[l].h = tape.value(state[l].h);
    if (config_.kind == CellKind::lstm) out[l].c = tape.value(state[l].c);
  }
  return out;
}

std::vector<LayerStateVars> RecurrentCell::detach(
    Tape& tape, const std::vector<LayerStateVars>& state) const {
  std::vector<LayerStateVars> out(state.size());
  for (size_t l = 0; l < state.size(); ++l) {
    out[l].h = tape.detach(state[l].h);
    if (config_.kind == CellKind::lstm) out[l].c = tape.detach(state[l].c);
  }
  return out;
}

LayerStateVars RecurrentCell::step_rnn(Tape& tape, const std::string& p, Var x,
                                       const LayerStateVars& prev) const {
  Var pre = tape.add(tape.add(tape.matmul(tape.param(p + "w_ih"), x),
                              tape.matmul(tape.param(p + "w_hh"), prev.h)),
                     tape.param(p + "b"));
  return {tape.tanh_(pre), Var{}};
}

LayerStateVars RecurrentCell::step_gru(Tape& tape, const std::string& p, Var x,
                                       const LayerStateVars& prev) const {
  auto gate_pre = [&](const std::string& name, Var hh) {
    return tape.add(tape.add(tape.matmul(tape.param(p + "w_" + name), x),
                             tape.matmul(tape.param(p + "u_" + name), hh)),
                    tape.param(p + "b_" + name));
  };
  Var z = tape.sigmoid_(gate_pre("z", prev.h));
  Var r = tape.sigmoid_(gate_pre("r", prev.h));
  Var candidate = tape.tanh_(gate_pre("h", tape.mul(r, prev.h)));
  // h' = z * h_prev + (1 - z) * candidate
  Var one = tape.constant(Tensor({config_.hidden}, std::vector<double>(
                                                       config_.hidden, 1.0)));
  Var keep = tape.mul(z, prev.h);
  Var update = tape.mul(tape.sub(one, z), candidate);
  return {tape.add(keep, update), Var{}};
}

LayerStateVars RecurrentCell::step_lstm(Tape& tape, const std::string& p,
                                        Var x,
                                        const LayerStateVars& prev) const {
  auto gate_pre = [&](const std::string& name) {
    return tape.add(tape.add(tape.matmul(tape.param(p + "w_" + name), x),
                             tape.matmul(tape.param(p + "u_" + name), prev.h)),
                    tape.param(p + "b_" + name));
  };
  Var i = tape.sigmoid_(gate_pre("i"));
  Var f = tape.sigmoid_(gate_pre("f"));
  Var g = tape.tanh_(gate_pre("g"));
  Var o = tape.sigmoid_(gate_pre("o"));
  Var c = tape.add(tape.mul(f, prev.c), tape.mul(i, g));
  Var h = tape.mul(o, tape.tanh_(c));
  return {h, c};
}

std::vector<LayerStateVars> RecurrentCell::step(
    Tape& tape, Var x, const std::vector<LayerStateVars>& prev) const {
  if (prev.size() != config_.layers) {
    throw ConfigError("hidden state layer count mismatch");
  }
  std::vector<LayerStateVars> next(config_.layers);
  Var input = x;
  for (size_t l = 0; l < config_.layers; ++l) {
    std::string p = layer_prefix(l);
    switch (config_.kind) {
      case CellKind::rnn: next[l] = step_rnn(tape, p, input, prev[l]); break;
      case CellKind::gru: next[l] = step_gru(tape, p, input, prev[l]); break;
      case CellKind::lstm: next[l] = step_lstm(tape, p, input, prev[l]); break;
    }
    input = next[l].h;
  }
  return next;
}

}  // namespace topicrnn
