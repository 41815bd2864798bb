// Linear-chain scoring with position-independent edge potentials:
//
//   score(Y) = sum_i node[i][y_i] + sum_i edge[y_i][y_{i+1}]
//
// No start/stop potentials. Every routine has a plain-array form for
// inference and a graph form for training.

#ifndef OPENSLOT_CRF_HPP
#define OPENSLOT_CRF_HPP

#include <optional>
#include <span>
#include <vector>

#include "openslot/autodiff.hpp"

namespace openslot {

using LabelSequence = std::vector<std::size_t>;

struct PotentialTable {
  Array node;  // [n, |S|]
  Array edge;  // [|S|, |S|]

  std::size_t length() const { return node.rows(); }
  std::size_t num_labels() const { return node.cols(); }
};

// Validates shapes and finiteness.
void CheckTable(const PotentialTable& table);

double ScoreSequence(std::span<const std::size_t> labels,
                     const PotentialTable& table);

// Forward algorithm in log space.
double LogPartition(const PotentialTable& table);

double LogLikelihood(std::span<const std::size_t> labels,
                     const PotentialTable& table);

struct ViterbiResult {
  LabelSequence labels;
  double score = 0.0;
};

// Ties go to the smaller label index, both in the backpointers and in the
// final position. `score` is ScoreSequence(labels).
ViterbiResult ViterbiDecode(const PotentialTable& table);

// Graph forms. A missing edge table means the edge term is masked: it
// contributes nothing and nothing flows back through it.
Var SequenceScore(Graph& graph, Var node, std::optional<Var> edge,
                  std::span<const std::size_t> labels);
Var LogPartition(Graph& graph, Var node, std::optional<Var> edge);
// log Z - score(Y), shape [1].
Var NegLogLikelihood(Graph& graph, Var node, std::optional<Var> edge,
                     std::span<const std::size_t> labels);

}  // namespace openslot

#endif  // OPENSLOT_CRF_HPP
