#ifndef OPENSLOT_GRADCHECK_HPP
#define OPENSLOT_GRADCHECK_HPP

#include <cstdint>

#include "openslot/model.hpp"

namespace openslot {

struct GradCheckOptions {
  std::size_t tokens = 3;
  std::size_t slots = 2;
  ModelDims dims{6, 4, 5};
  // Parameters are redrawn uniformly from +-param_range. At the small
  // training init the deep LSTM gradients sit near 1e-8, where central
  // differences are mostly rounding noise.
  double param_range = 1.0;
  FiniteDiffOptions finite_diff;
};

// Finite-difference check of a freshly initialized model's training loss
// on a random instance drawn from `seed`. Every parameter is trainable.
FiniteDiffResult RunGradCheck(ModelKind kind, std::uint64_t seed,
                              const GradCheckOptions& options = {});

}  // namespace openslot

#endif  // OPENSLOT_GRADCHECK_HPP
