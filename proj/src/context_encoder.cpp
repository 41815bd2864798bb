#include "openslot/context_encoder.hpp"

#include <vector>

#include "openslot/layers.hpp"

namespace openslot {

void BiLstm::InitParams(ParamStore& params, Rng& rng) const {
  const std::size_t h = hidden_per_direction;
  for (const char* direction : {"fwd", "bwd"}) {
    const std::string base = prefix + "." + direction;
    params.Add(base + ".w_x", UniformArray({input_size, 4 * h}, kWeightInitRange, rng));
    params.Add(base + ".w_h", UniformArray({h, 4 * h}, kWeightInitRange, rng));
    Array bias({1, 4 * h});
    for (std::size_t j = h; j < 2 * h; ++j) bias[j] = 1.0;
    params.Add(base + ".b", std::move(bias));
  }
}

Var BiLstm::Run(Graph& graph, const ParamStore& params,
                const std::string& direction, Var inputs, bool reverse) const {
  const std::size_t n = inputs.value().rows();
  if (n == 0 || inputs.value().rank() != 2) {
    throw Error("BiLSTM needs at least one input row");
  }
  if (inputs.value().cols() != input_size) {
    throw Error("BiLSTM input width " + std::to_string(inputs.value().cols()) +
                " != " + std::to_string(input_size));
  }
  const std::size_t h = hidden_per_direction;
  const std::string base = prefix + "." + direction;
  Var w_h = graph.Param(params, base + ".w_h");
  // Input projections for all positions at once.
  Var projected = Add(Matmul(inputs, graph.Param(params, base + ".w_x")),
                      RepeatRow(graph, graph.Param(params, base + ".b"), n));

  std::vector<Var> states(n);
  Var hidden{};
  Var cell{};
  for (std::size_t step = 0; step < n; ++step) {
    const std::size_t t = reverse ? n - 1 - step : step;
    Var gates = Slice(projected, 0, t, t + 1);
    if (step > 0) gates = Add(gates, Matmul(hidden, w_h));
    Var sig = Sigmoid(Slice(gates, 1, 0, 3 * h));
    Var candidate = Tanh(Slice(gates, 1, 3 * h, 4 * h));
    Var in_gate = Slice(sig, 1, 0, h);
    Var out_gate = Slice(sig, 1, 2 * h, 3 * h);
    Var written = Mul(in_gate, candidate);
    if (step == 0) {
      cell = written;
    } else {
      Var forget = Slice(sig, 1, h, 2 * h);
      cell = Add(Mul(forget, cell), written);
    }
    hidden = Mul(out_gate, Tanh(cell));
    states[t] = hidden;
  }
  return Concat(states, 0);
}

Var BiLstm::Encode(Graph& graph, const ParamStore& params, Var inputs) const {
  Var forward = Run(graph, params, "fwd", inputs, false);
  Var backward = Run(graph, params, "bwd", inputs, true);
  return Concat({forward, backward}, 1);
}

}  // namespace openslot
