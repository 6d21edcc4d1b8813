#ifndef TOPICRNN_CELLS_HPP
#define TOPICRNN_CELLS_HPP

#include <string>
#include <vector>

#include "topicrnn/autodiff.hpp"
#include "topicrnn/tensor.hpp"

namespace topicrnn {

enum class CellKind { rnn, gru, lstm };

CellKind cell_kind_from_string(const std::string& name);
std::string to_string(CellKind kind);

struct CellConfig {
  CellKind kind = CellKind::rnn;
  size_t hidden = 16;  // H
  size_t input = 0;    // embedding dim; 0 means same as hidden
  size_t layers = 1;

  size_t input_size() const { return input ? input : hidden; }
};

// Per-layer state; c is used by lstm only.
struct LayerState {
  Tensor h;
  Tensor c;
};

struct LayerStateVars {
  Var h;
  Var c;
};

// Stacked recurrent cell over a ParamStore, parameters registered under
// "<prefix>.l<k>.". Layer k feeds layer k+1.
class RecurrentCell {
 public:
  RecurrentCell(CellConfig config, std::string prefix);

  const CellConfig& config() const { return config_; }
  void register_params(ParamStore& store) const;
  size_t param_count() const;

  std::vector<LayerState> init_state() const;
  std::vector<LayerStateVars> lift(Tape& tape,
                                   const std::vector<LayerState>& state) const;
  std::vector<LayerState> lower(const Tape& tape,
                                const std::vector<LayerStateVars>& state) const;
  std::vector<LayerStateVars> detach(
      Tape& tape, const std::vector<LayerStateVars>& state) const;
  std::vector<LayerStateVars> step(
      Tape& tape, Var x, const std::vector<LayerStateVars>& prev) const;

 private:
  std::string layer_prefix(size_t layer) const;
  LayerStateVars step_rnn(Tape& tape, const std::string& p, Var x,
                          const LayerStateVars& prev) const;
  LayerStateVars step_gru(Tape& tape, const std::string& p, Var x,
                          const LayerStateVars& prev) const;
  LayerStateVars step_lstm(Tape& tape, const std::string& p, Var x,
                           const LayerStateVars& prev) const;

  CellConfig config_;
  std::string prefix_;
};

}  // namespace topicrnn

#endif  // TOPICRNN_CELLS_HPP
