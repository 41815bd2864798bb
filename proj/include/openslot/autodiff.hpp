// Reverse-mode differentiation over dense row-major double arrays.
//
// A Graph is a tape: every primitive appends one node, and backward() walks
// the tape in reverse creation order, which is a topological order of the
// DAG. Parameters live in a ParamStore and enter a graph as leaves through
// Graph::param(); a name is bound to at most one leaf per graph.

#ifndef OPENSLOT_AUTODIFF_HPP
#define OPENSLOT_AUTODIFF_HPP

#include <cstddef>
#include <deque>
#include <functional>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace openslot {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Shape = std::vector<std::size_t>;

std::string ShapeString(const Shape& shape);

class Array {
 public:
  Array() = default;
  explicit Array(Shape shape, double fill = 0.0);
  Array(Shape shape, std::vector<double> data);

  static Array Vector(std::vector<double> values);
  static Array Matrix(std::size_t rows, std::size_t cols,
                      std::vector<double> values);
  static Array Scalar(double value);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::vector<double>& storage() { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  bool AllFinite() const;

  friend bool operator==(const Array&, const Array&) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

struct Param {
  Array value;
  bool trainable = true;
};

// Named parameter arrays. Iteration order is lexicographic by name, which
// fixes the order of every derived computation (optimizer, checkpoint).
class ParamStore {
 public:
  void Add(const std::string& name, Array value, bool trainable = true);
  bool Contains(const std::string& name) const;
  const Array& Get(const std::string& name) const;
  Array& Mutable(const std::string& name);
  bool Trainable(const std::string& name) const;
  void SetTrainable(const std::string& name, bool trainable);

  const std::map<std::string, Param>& entries() const { return entries_; }
  std::size_t TotalSize() const;

 private:
  std::map<std::string, Param> entries_;
};

using Gradients = std::map<std::string, Array>;

enum class Op {
  kConstant,
  kParam,
  kMatmul,
  kAdd,
  kMul,
  kConcat,
  kTanh,
  kSigmoid,
  kExp,
  kLog,
  kLogSumExp,
  kRows,
  kSlice,
  kSum,
  kScale,
};

const char* OpName(Op op);

class Graph;

// Handle to a node on a Graph's tape.
struct Var {
  Graph* graph = nullptr;
  std::size_t id = 0;

  const Array& value() const;
};

class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var Constant(Array value);
  // Leaf bound to params[name]. Repeated calls return the same node.
  Var Param(const ParamStore& params, const std::string& name);

  const Array& value(Var v) const { return nodes_[v.id].value; }
  std::size_t size() const { return nodes_.size(); }

  // Exact reverse-mode gradients of a scalar loss for every trainable
  // parameter in `params`; parameters the loss does not reach get zeros.
  Gradients Backward(Var loss, const ParamStore& params) const;

 private:
  friend Var ForwardPrimitive(Op, std::span<const Var>);
  friend Var Matmul(Var, Var, bool, bool);
  friend Var Concat(std::span<const Var>, std::size_t);
  friend Var LogSumExp(Var, std::size_t);
  friend Var Rows(Var, std::vector<std::size_t>);
  friend Var Slice(Var, std::size_t, std::size_t, std::size_t);
  friend Var Scale(Var, double);

  struct Node {
    Op op = Op::kConstant;
    Array value;
    std::vector<std::size_t> inputs;
    // Per-op saved attributes.
    std::size_t axis = 0;
    std::size_t begin = 0;
    std::size_t end = 0;
    bool trans_a = false;
    bool trans_b = false;
    double factor = 1.0;
    std::vector<std::size_t> indices;
    std::string param_name;
  };

  Var Push(Node node);
  const Node& node(Var v) const { return nodes_[v.id]; }

  // A deque keeps value() references valid while the tape grows.
  std::deque<Node> nodes_;
  std::map<std::string, std::size_t> param_leaves_;
};

// The closed primitive set. Shape rules:
//   Matmul     rank-2 only, optional transposes: op(a)[m,k] x op(b)[k,n]
//   Add, Mul   identical shapes
//   Concat     along `axis`; other extents must agree
//   LogSumExp  rank-1 -> [1]; rank-2 reduces `axis` keeping it as extent 1
//   Rows       table[r,c] gathered by row index -> [len(indices), c]
//   Slice      [begin,end) along `axis`
//   Sum        any -> [1]
Var Matmul(Var a, Var b, bool trans_a = false, bool trans_b = false);
Var Add(Var a, Var b);
Var Mul(Var a, Var b);
Var Concat(std::span<const Var> parts, std::size_t axis = 0);
Var Tanh(Var x);
Var Sigmoid(Var x);
Var Exp(Var x);
Var Log(Var x);
Var LogSumExp(Var x, std::size_t axis = 0);
Var Rows(Var table, std::vector<std::size_t> indices);
Var Slice(Var x, std::size_t axis, std::size_t begin, std::size_t end);
Var Sum(Var x);
Var Scale(Var x, double factor);

// Generic entry point for the attribute-free primitives (add, mul, tanh,
// sigmoid, exp, log, sum).
Var ForwardPrimitive(Op op, std::span<const Var> inputs);

inline Var Concat(std::initializer_list<Var> parts, std::size_t axis = 0) {
  return Concat(std::span<const Var>(parts.begin(), parts.size()), axis);
}

// Builds the loss graph for the current parameter values.
using LossBuilder = std::function<Var(Graph&, const ParamStore&)>;

struct FiniteDiffOptions {
  double step = 1e-5;
  // 0 checks every coordinate; otherwise at most this many per parameter,
  // chosen with `seed`.
  std::size_t max_coords_per_param = 0;
  unsigned long long seed = 0;
};

struct FiniteDiffResult {
  double max_relative_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  std::size_t coords_checked = 0;
  std::map<std::string, double> per_param;  // max error per parameter
};

// Compares Backward() against central differences coordinate by
// coordinate; error is |g_ad - g_fd| / max(1e-8, |g_ad| + |g_fd|).
FiniteDiffResult FiniteDiffCheck(const LossBuilder& loss_fn,
                                 const ParamStore& params,
                                 const FiniteDiffOptions& options = {});

}  // namespace openslot

#endif  // OPENSLOT_AUTODIFF_HPP
