#ifndef OPENSLOT_CONTEXT_ENCODER_HPP
#define OPENSLOT_CONTEXT_ENCODER_HPP

#include <string>

#include "openslot/autodiff.hpp"
#include "openslot/rng.hpp"

namespace openslot {

// Single-layer BiLSTM. Each direction `prefix.fwd` / `prefix.bwd` owns
//   w_x [in, 4h], w_h [h, 4h], b [1, 4h]
// with gate blocks ordered input, forget, output, candidate. Zero initial
// states, no peepholes.
struct BiLstm {
  std::string prefix;
  std::size_t input_size = 50;
  std::size_t hidden_per_direction = 50;

  std::size_t output_size() const { return 2 * hidden_per_direction; }

  // Weights uniform in [-0.1, 0.1]; forget-gate bias 1, other biases 0.
  void InitParams(ParamStore& params, Rng& rng) const;

  // [n, in] -> [n, 2h]; row t is forward state t followed by backward
  // state t.
  Var Encode(Graph& graph, const ParamStore& params, Var inputs) const;

  // One direction over [n, in], returned in input order. `reverse` runs
  // from the last row to the first.
  Var Run(Graph& graph, const ParamStore& params, const std::string& direction,
          Var inputs, bool reverse) const;
};

}  // namespace openslot

#endif  // OPENSLOT_CONTEXT_ENCODER_HPP
