#include "openslot/layers.hpp"

namespace openslot {

Array UniformArray(Shape shape, double range, Rng& rng) {
  Array a(std::move(shape));
  for (double& v : a.data()) v = rng.Uniform(-range, range);
  return a;
}

Var RepeatRow(Graph& graph, Var row, std::size_t times) {
  if (times == 1) return row;
  return Matmul(graph.Constant(Array({times, 1}, 1.0)), row);
}

void InitDense(ParamStore& params, const std::string& prefix, std::size_t in,
               std::size_t out, Rng& rng) {
  params.Add(prefix + ".w", UniformArray({in, out}, kWeightInitRange, rng));
  params.Add(prefix + ".b", Array({1, out}));
}

Var Dense(Graph& graph, const ParamStore& params, const std::string& prefix,
          Var input) {
  Var product = Matmul(input, graph.Param(params, prefix + ".w"));
  Var bias = RepeatRow(graph, graph.Param(params, prefix + ".b"),
                       input.value().rows());
  return Add(product, bias);
}

void InitFeedForward(ParamStore& params, const std::string& prefix,
                     std::size_t in, std::size_t hidden, std::size_t out,
                     Rng& rng) {
  InitDense(params, prefix + ".l1", in, hidden, rng);
  InitDense(params, prefix + ".l2", hidden, out, rng);
}

Var FeedForward(Graph& graph, const ParamStore& params,
                const std::string& prefix, Var input) {
  Var hidden = Tanh(Dense(graph, params, prefix + ".l1", input));
  return Dense(graph, params, prefix + ".l2", hidden);
}

}  // namespace openslot
