#include "openslot/crf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace openslot {

void CheckTable(const PotentialTable& table) {
  const Array& node = table.node;
  const Array& edge = table.edge;
  if (node.rank() != 2 || edge.rank() != 2 || edge.rows() != edge.cols() ||
      edge.rows() != node.cols()) {
    throw Error("potential table shapes do not conform: node " +
                ShapeString(node.shape()) + ", edge " +
                ShapeString(edge.shape()));
  }
  if (!node.AllFinite() || !edge.AllFinite()) {
    throw Error("potential table has non-finite entries");
  }
}

namespace {

void CheckLabels(std::span<const std::size_t> labels,
                 const PotentialTable& table) {
  if (labels.size() != table.length()) {
    throw Error("label sequence length " + std::to_string(labels.size()) +
                " != utterance length " + std::to_string(table.length()));
  }
  for (std::size_t y : labels) {
    if (y >= table.num_labels()) {
      throw Error("label index " + std::to_string(y) + " outside [0, " +
                  std::to_string(table.num_labels()) + ")");
    }
  }
}

double LogSumExp(std::span<const double> values) {
  const double peak = *std::max_element(values.begin(), values.end());
  double acc = 0.0;
  for (double v : values) acc += std::exp(v - peak);
  return peak + std::log(acc);
}

}  // namespace

double ScoreSequence(std::span<const std::size_t> labels,
                     const PotentialTable& table) {
  CheckTable(table);
  CheckLabels(labels, table);
  double node_sum = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    node_sum += table.node.at(i, labels[i]);
  }
  double edge_sum = 0.0;
  for (std::size_t i = 0; i + 1 < labels.size(); ++i) {
    edge_sum += table.edge.at(labels[i], labels[i + 1]);
  }
  return node_sum + edge_sum;
}

double LogPartition(const PotentialTable& table) {
  CheckTable(table);
  const std::size_t n = table.length();
  const std::size_t s = table.num_labels();
  std::vector<double> alpha(table.node.data().begin(),
                            table.node.data().begin() + s);
  std::vector<double> next(s);
  std::vector<double> terms(s);
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t k = 0; k < s; ++k) {
      for (std::size_t j = 0; j < s; ++j) {
        terms[j] = alpha[j] + table.edge.at(j, k);
      }
      next[k] = LogSumExp(terms) + table.node.at(i, k);
    }
    alpha.swap(next);
  }
  return LogSumExp(alpha);
}

double LogLikelihood(std::span<const std::size_t> labels,
                     const PotentialTable& table) {
  return ScoreSequence(labels, table) - LogPartition(table);
}

ViterbiResult ViterbiDecode(const PotentialTable& table) {
  CheckTable(table);
  const std::size_t n = table.length();
  const std::size_t s = table.num_labels();
  std::vector<double> delta(table.node.data().begin(),
                            table.node.data().begin() + s);
  std::vector<double> next(s);
  std::vector<std::size_t> back(n * s, 0);
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t k = 0; k < s; ++k) {
      double best = -std::numeric_limits<double>::infinity();
      std::size_t arg = 0;
      for (std::size_t j = 0; j < s; ++j) {
        const double v = delta[j] + table.edge.at(j, k);
        if (v > best) {
          best = v;
          arg = j;
        }
      }
      next[k] = best + table.node.at(i, k);
      back[i * s + k] = arg;
    }
    delta.swap(next);
  }
  ViterbiResult result;
  result.labels.assign(n, 0);
  std::size_t last = 0;
  for (std::size_t k = 1; k < s; ++k) {
    if (delta[k] > delta[last]) last = k;
  }
  result.labels[n - 1] = last;
  for (std::size_t i = n - 1; i > 0; --i) {
    result.labels[i - 1] = back[i * s + result.labels[i]];
  }
  result.score = ScoreSequence(result.labels, table);
  return result;
}

Var SequenceScore(Graph& graph, Var node, std::optional<Var> edge,
                  std::span<const std::size_t> labels) {
  const Array& nv = node.value();
  const std::size_t s = nv.cols();
  PotentialTable shape_probe{nv, edge ? edge->value() : Array({s, s})};
  CheckLabels(labels, shape_probe);

  Array picks(nv.shape());
  for (std::size_t i = 0; i < labels.size(); ++i) picks.at(i, labels[i]) = 1.0;
  Var score = Sum(Mul(node, graph.Constant(std::move(picks))));
  if (edge && labels.size() > 1) {
    Array transitions({s, s});
    for (std::size_t i = 0; i + 1 < labels.size(); ++i) {
      transitions.at(labels[i], labels[i + 1]) += 1.0;
    }
    score = Add(score, Sum(Mul(*edge, graph.Constant(std::move(transitions)))));
  }
  return score;
}

Var LogPartition(Graph& graph, Var node, std::optional<Var> edge) {
  const std::size_t n = node.value().rows();
  const std::size_t s = node.value().cols();
  if (!edge || n == 1) {
    // Positions decouple: log Z = sum_i logsumexp_k node[i][k].
    return Sum(LogSumExp(node, 1));
  }
  if (edge->value().rows() != s || edge->value().cols() != s) {
    throw Error("edge table " + ShapeString(edge->value().shape()) +
                " does not match " + std::to_string(s) + " labels");
  }
  Var spread = graph.Constant(Array({1, s}, 1.0));
  Var alpha = Slice(node, 0, 0, 1);
  for (std::size_t i = 1; i < n; ++i) {
    // from_prev[j][k] = alpha[j]
    Var from_prev = Matmul(alpha, spread, true, false);
    Var reached = LogSumExp(Add(*edge, from_prev), 0);
    alpha = Add(reached, Slice(node, 0, i, i + 1));
  }
  return Sum(LogSumExp(alpha, 1));
}

Var NegLogLikelihood(Graph& graph, Var node, std::optional<Var> edge,
                     std::span<const std::size_t> labels) {
  Var score = SequenceScore(graph, node, edge, labels);
  return Add(LogPartition(graph, node, edge), Scale(score, -1.0));
}

}  // namespace openslot
