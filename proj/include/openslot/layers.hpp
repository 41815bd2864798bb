#ifndef OPENSLOT_LAYERS_HPP
#define OPENSLOT_LAYERS_HPP

#include <string>

#include "openslot/autodiff.hpp"
#include "openslot/rng.hpp"

namespace openslot {

inline constexpr double kWeightInitRange = 0.1;

Array UniformArray(Shape shape, double range, Rng& rng);

// Repeats a [1, c] row r times via ones[r,1] x row.
Var RepeatRow(Graph& graph, Var row, std::size_t times);

// x W + b with W [in, out] under `prefix.w` and b [1, out] under `prefix.b`.
// Accepts any number of input rows.
void InitDense(ParamStore& params, const std::string& prefix, std::size_t in,
               std::size_t out, Rng& rng);
Var Dense(Graph& graph, const ParamStore& params, const std::string& prefix,
          Var input);

// tanh hidden layer followed by a linear head; layers `prefix.l1`,
// `prefix.l2`.
void InitFeedForward(ParamStore& params, const std::string& prefix,
                     std::size_t in, std::size_t hidden, std::size_t out,
                     Rng& rng);
Var FeedForward(Graph& graph, const ParamStore& params,
                const std::string& prefix, Var input);

}  // namespace openslot

#endif  // OPENSLOT_LAYERS_HPP
