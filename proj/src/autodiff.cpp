#include "openslot/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "openslot/rng.hpp"

namespace openslot {

std::string ShapeString(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ',';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

namespace {

std::size_t Product(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

}  // namespace

Array::Array(Shape shape, double fill)
    : shape_(std::move(shape)), data_(Product(shape_), fill) {
  for (std::size_t extent : shape_) {
    if (extent == 0) throw Error("array extents must be positive");
  }
}

Array::Array(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  for (std::size_t extent : shape_) {
    if (extent == 0) throw Error("array extents must be positive");
  }
  if (Product(shape_) != data_.size()) {
    throw Error("array data length " + std::to_string(data_.size()) +
                " does not match shape " + ShapeString(shape_));
  }
}

Array Array::Vector(std::vector<double> values) {
  Shape shape{values.size()};
  return Array(std::move(shape), std::move(values));
}

Array Array::Matrix(std::size_t rows, std::size_t cols,
                    std::vector<double> values) {
  return Array({rows, cols}, std::move(values));
}

Array Array::Scalar(double value) { return Array({1}, {value}); }

std::size_t Array::rows() const {
  return shape_.size() == 2 ? shape_[0] : 1;
}

std::size_t Array::cols() const { return shape_.empty() ? 0 : shape_.back(); }

bool Array::AllFinite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double x) { return std::isfinite(x); });
}

void ParamStore::Add(const std::string& name, Array value, bool trainable) {
  if (entries_.count(name)) throw Error("duplicate parameter '" + name + "'");
  entries_.emplace(name, Param{std::move(value), trainable});
}

bool ParamStore::Contains(const std::string& name) const {
  return entries_.count(name) != 0;
}

const Array& ParamStore::Get(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw Error("unknown parameter '" + name + "'");
  return it->second.value;
}

Array& ParamStore::Mutable(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw Error("unknown parameter '" + name + "'");
  return it->second.value;
}

bool ParamStore::Trainable(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw Error("unknown parameter '" + name + "'");
  return it->second.trainable;
}

void ParamStore::SetTrainable(const std::string& name, bool trainable) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw Error("unknown parameter '" + name + "'");
  it->second.trainable = trainable;
}

std::size_t ParamStore::TotalSize() const {
  std::size_t total = 0;
  for (const auto& [name, param] : entries_) total += param.value.size();
  return total;
}

const char* OpName(Op op) {
  switch (op) {
    case Op::kConstant: return "constant";
    case Op::kParam: return "param";
    case Op::kMatmul: return "matmul";
    case Op::kAdd: return "add";
    case Op::kMul: return "mul";
    case Op::kConcat: return "concat";
    case Op::kTanh: return "tanh";
    case Op::kSigmoid: return "sigmoid";
    case Op::kExp: return "exp";
    case Op::kLog: return "log";
    case Op::kLogSumExp: return "logsumexp";
    case Op::kRows: return "rows";
    case Op::kSlice: return "slice";
    case Op::kSum: return "sum";
    case Op::kScale: return "scale";
  }
  return "?";
}

const Array& Var::value() const { return graph->value(*this); }

namespace {

// C = op(A) * op(B) for rank-2 arrays.
Array MatmulRaw(const Array& a, const Array& b, bool ta, bool tb) {
  const std::size_t m = ta ? a.cols() : a.rows();
  const std::size_t k = ta ? a.rows() : a.cols();
  const std::size_t n = tb ? b.rows() : b.cols();
  const std::size_t a_i = ta ? 1 : a.cols();
  const std::size_t a_p = ta ? a.cols() : 1;
  const std::size_t b_p = tb ? 1 : b.cols();
  const std::size_t b_j = tb ? b.cols() : 1;
  Array c({m, n});
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* pc = c.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    double* row = pc + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = pa[i * a_i + p * a_p];
      if (av == 0.0) continue;
      const double* bp = pb + p * b_p;
      if (b_j == 1) {
        for (std::size_t j = 0; j < n; ++j) row[j] += av * bp[j];
      } else {
        for (std::size_t j = 0; j < n; ++j) row[j] += av * bp[j * b_j];
      }
    }
  }
  return c;
}

void Accumulate(Array& target, const Array& delta) {
  if (target.size() == 0) {
    target = delta;
    return;
  }
  auto t = target.data();
  auto d = delta.data();
  for (std::size_t i = 0; i < t.size(); ++i) t[i] += d[i];
}

// Views a shape as [outer, extent(axis), inner].
struct AxisView {
  std::size_t outer = 1;
  std::size_t extent = 1;
  std::size_t inner = 1;
};

AxisView ViewAlong(const Shape& shape, std::size_t axis) {
  AxisView view;
  for (std::size_t d = 0; d < axis; ++d) view.outer *= shape[d];
  view.extent = shape[axis];
  for (std::size_t d = axis + 1; d < shape.size(); ++d) view.inner *= shape[d];
  return view;
}

void RequireRank2(const Array& a, const char* op) {
  if (a.rank() != 2) {
    throw Error(std::string(op) + ": expected rank-2 operand, got shape " +
                ShapeString(a.shape()));
  }
}

void RequireSameGraph(Var a, Var b) {
  if (a.graph != b.graph || a.graph == nullptr) {
    throw Error("operands belong to different graphs");
  }
}

}  // namespace

Var Graph::Push(Node node) {
  if (!node.value.AllFinite()) {
    throw Error(std::string(OpName(node.op)) + ": non-finite value (shape " +
                ShapeString(node.value.shape()) + ")");
  }
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

Var Graph::Constant(Array value) {
  Node node;
  node.op = Op::kConstant;
  node.value = std::move(value);
  return Push(std::move(node));
}

Var Graph::Param(const ParamStore& params, const std::string& name) {
  auto it = param_leaves_.find(name);
  if (it != param_leaves_.end()) return Var{this, it->second};
  Node node;
  node.op = Op::kParam;
  node.value = params.Get(name);
  node.param_name = name;
  Var v = Push(std::move(node));
  param_leaves_.emplace(name, v.id);
  return v;
}

Var ForwardPrimitive(Op op, std::span<const Var> inputs) {
  if (inputs.empty()) throw Error(std::string(OpName(op)) + ": no inputs");
  Graph* g = inputs[0].graph;
  Graph::Node node;
  node.op = op;
  for (Var v : inputs) {
    RequireSameGraph(inputs[0], v);
    node.inputs.push_back(v.id);
  }
  const Array& x = g->node(inputs[0]).value;

  switch (op) {
    case Op::kAdd:
    case Op::kMul: {
      if (inputs.size() != 2) throw Error(std::string(OpName(op)) + ": needs 2 inputs");
      const Array& y = g->node(inputs[1]).value;
      if (x.shape() != y.shape()) {
        throw Error(std::string(OpName(op)) + ": shape mismatch " +
                    ShapeString(x.shape()) + " vs " + ShapeString(y.shape()));
      }
      node.value = x;
      auto out = node.value.data();
      auto yd = y.data();
      if (op == Op::kAdd) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += yd[i];
      } else {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] *= yd[i];
      }
      break;
    }
    case Op::kTanh:
    case Op::kSigmoid:
    case Op::kExp:
    case Op::kLog: {
      node.value = x;
      for (double& v : node.value.data()) {
        switch (op) {
          case Op::kTanh: v = std::tanh(v); break;
          case Op::kSigmoid: v = 1.0 / (1.0 + std::exp(-v)); break;
          case Op::kExp: v = std::exp(v); break;
          default:
            if (v <= 0.0) throw Error("log: non-positive input");
            v = std::log(v);
        }
      }
      break;
    }
    case Op::kSum: {
      double total = 0.0;
      for (double v : x.data()) total += v;
      node.value = Array::Scalar(total);
      break;
    }
    default:
      throw Error(std::string(OpName(op)) +
                  ": not an attribute-free primitive");
  }
  return g->Push(std::move(node));
}

Var Add(Var a, Var b) {
  const Var in[] = {a, b};
  return ForwardPrimitive(Op::kAdd, in);
}
Var Mul(Var a, Var b) {
  const Var in[] = {a, b};
  return ForwardPrimitive(Op::kMul, in);
}
Var Tanh(Var x) { return ForwardPrimitive(Op::kTanh, {&x, 1}); }
Var Sigmoid(Var x) { return ForwardPrimitive(Op::kSigmoid, {&x, 1}); }
Var Exp(Var x) { return ForwardPrimitive(Op::kExp, {&x, 1}); }
Var Log(Var x) { return ForwardPrimitive(Op::kLog, {&x, 1}); }
Var Sum(Var x) { return ForwardPrimitive(Op::kSum, {&x, 1}); }

Var Matmul(Var a, Var b, bool trans_a, bool trans_b) {
  RequireSameGraph(a, b);
  Graph* g = a.graph;
  const Array& av = g->node(a).value;
  const Array& bv = g->node(b).value;
  RequireRank2(av, "matmul");
  RequireRank2(bv, "matmul");
  const std::size_t k_a = trans_a ? av.rows() : av.cols();
  const std::size_t k_b = trans_b ? bv.cols() : bv.rows();
  if (k_a != k_b) {
    throw Error("matmul: inner dimensions differ: " + ShapeString(av.shape()) +
                (trans_a ? "^T" : "") + " x " + ShapeString(bv.shape()) +
                (trans_b ? "^T" : ""));
  }
  Graph::Node node;
  node.op = Op::kMatmul;
  node.inputs = {a.id, b.id};
  node.trans_a = trans_a;
  node.trans_b = trans_b;
  node.value = MatmulRaw(av, bv, trans_a, trans_b);
  return g->Push(std::move(node));
}

Var Concat(std::span<const Var> parts, std::size_t axis) {
  if (parts.empty()) throw Error("concat: no inputs");
  Graph* g = parts[0].graph;
  const Shape& first = g->node(parts[0]).value.shape();
  if (axis >= first.size()) {
    throw Error("concat: axis " + std::to_string(axis) + " out of range for " +
                ShapeString(first));
  }
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (Var p : parts) {
    RequireSameGraph(parts[0], p);
    const Shape& s = g->node(p).value.shape();
    Shape probe = s;
    Shape ref = first;
    if (s.size() == first.size()) {
      probe[axis] = 0;
      ref[axis] = 0;
    }
    if (probe != ref) {
      throw Error("concat: shape mismatch " + ShapeString(first) + " vs " +
                  ShapeString(s) + " along axis " + std::to_string(axis));
    }
    out_shape[axis] += s[axis];
  }
  Graph::Node node;
  node.op = Op::kConcat;
  node.axis = axis;
  node.value = Array(out_shape);
  const AxisView out_view = ViewAlong(out_shape, axis);
  auto out = node.value.data();
  std::size_t offset = 0;
  for (Var p : parts) {
    node.inputs.push_back(p.id);
    const Array& pv = g->node(p).value;
    const AxisView pview = ViewAlong(pv.shape(), axis);
    const std::size_t chunk = pview.extent * pview.inner;
    for (std::size_t o = 0; o < pview.outer; ++o) {
      std::copy_n(pv.data().begin() + o * chunk, chunk,
                  out.begin() + o * out_view.extent * out_view.inner +
                      offset * out_view.inner);
    }
    offset += pview.extent;
  }
  return g->Push(std::move(node));
}

Var LogSumExp(Var x, std::size_t axis) {
  Graph* g = x.graph;
  const Array& xv = g->node(x).value;
  if (xv.rank() > 2 || axis >= xv.rank()) {
    throw Error("logsumexp: axis " + std::to_string(axis) +
                " invalid for shape " + ShapeString(xv.shape()));
  }
  Shape out_shape = xv.rank() == 1 ? Shape{1} : xv.shape();
  if (xv.rank() == 2) out_shape[axis] = 1;
  const AxisView view = ViewAlong(xv.shape(), axis);
  Graph::Node node;
  node.op = Op::kLogSumExp;
  node.axis = axis;
  node.inputs = {x.id};
  node.value = Array(out_shape);
  auto in = xv.data();
  auto out = node.value.data();
  for (std::size_t o = 0; o < view.outer; ++o) {
    for (std::size_t i = 0; i < view.inner; ++i) {
      const std::size_t base = o * view.extent * view.inner + i;
      double peak = in[base];
      for (std::size_t e = 1; e < view.extent; ++e) {
        peak = std::max(peak, in[base + e * view.inner]);
      }
      double acc = 0.0;
      for (std::size_t e = 0; e < view.extent; ++e) {
        acc += std::exp(in[base + e * view.inner] - peak);
      }
      out[o * view.inner + i] = peak + std::log(acc);
    }
  }
  return g->Push(std::move(node));
}

Var Rows(Var table, std::vector<std::size_t> indices) {
  Graph* g = table.graph;
  const Array& tv = g->node(table).value;
  RequireRank2(tv, "rows");
  if (indices.empty()) throw Error("rows: empty index list");
  const std::size_t cols = tv.cols();
  Graph::Node node;
  node.op = Op::kRows;
  node.inputs = {table.id};
  node.value = Array({indices.size(), cols});
  auto out = node.value.data();
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] >= tv.rows()) {
      throw Error("rows: index " + std::to_string(indices[r]) +
                  " out of range for shape " + ShapeString(tv.shape()));
    }
    std::copy_n(tv.data().begin() + indices[r] * cols, cols,
                out.begin() + r * cols);
  }
  node.indices = std::move(indices);
  return g->Push(std::move(node));
}

Var Slice(Var x, std::size_t axis, std::size_t begin, std::size_t end) {
  Graph* g = x.graph;
  const Array& xv = g->node(x).value;
  if (axis >= xv.rank() || begin >= end || end > xv.shape()[axis]) {
    throw Error("slice: range [" + std::to_string(begin) + "," +
                std::to_string(end) + ") on axis " + std::to_string(axis) +
                " invalid for shape " + ShapeString(xv.shape()));
  }
  Shape out_shape = xv.shape();
  out_shape[axis] = end - begin;
  const AxisView view = ViewAlong(xv.shape(), axis);
  Graph::Node node;
  node.op = Op::kSlice;
  node.axis = axis;
  node.begin = begin;
  node.end = end;
  node.inputs = {x.id};
  node.value = Array(out_shape);
  const std::size_t chunk = (end - begin) * view.inner;
  for (std::size_t o = 0; o < view.outer; ++o) {
    std::copy_n(xv.data().begin() + (o * view.extent + begin) * view.inner,
                chunk, node.value.data().begin() + o * chunk);
  }
  return g->Push(std::move(node));
}

Var Scale(Var x, double factor) {
  Graph* g = x.graph;
  Graph::Node node;
  node.op = Op::kScale;
  node.inputs = {x.id};
  node.factor = factor;
  node.value = g->node(x).value;
  for (double& v : node.value.data()) v *= factor;
  return g->Push(std::move(node));
}

Gradients Graph::Backward(Var loss, const ParamStore& params) const {
  if (loss.graph != this) throw Error("backward: loss from another graph");
  const Array& lv = nodes_[loss.id].value;
  if (lv.size() != 1) {
    throw Error("backward: loss must be scalar, got shape " +
                ShapeString(lv.shape()));
  }
  std::vector<Array> grads(loss.id + 1);
  grads[loss.id] = Array(lv.shape(), 1.0);

  for (std::size_t id = loss.id + 1; id-- > 0;) {
    const Array& dy = grads[id];
    if (dy.size() == 0) continue;
    const Node& n = nodes_[id];
    auto input = [&](std::size_t k) -> const Array& {
      return nodes_[n.inputs[k]].value;
    };
    auto grad_of = [&](std::size_t k) -> Array& { return grads[n.inputs[k]]; };

    switch (n.op) {
      case Op::kConstant:
      case Op::kParam:
        break;
      case Op::kMatmul: {
        const Array& a = input(0);
        const Array& b = input(1);
        Array da = n.trans_a ? MatmulRaw(b, dy, n.trans_b, true)
                             : MatmulRaw(dy, b, false, !n.trans_b);
        Array db = n.trans_b ? MatmulRaw(dy, a, true, n.trans_a)
                             : MatmulRaw(a, dy, !n.trans_a, false);
        Accumulate(grad_of(0), da);
        Accumulate(grad_of(1), db);
        break;
      }
      case Op::kAdd:
        Accumulate(grad_of(0), dy);
        Accumulate(grad_of(1), dy);
        break;
      case Op::kMul: {
        Array da = dy;
        Array db = dy;
        auto a = input(0).data();
        auto b = input(1).data();
        for (std::size_t i = 0; i < da.size(); ++i) {
          da[i] *= b[i];
          db[i] *= a[i];
        }
        Accumulate(grad_of(0), da);
        Accumulate(grad_of(1), db);
        break;
      }
      case Op::kConcat: {
        const AxisView out_view = ViewAlong(n.value.shape(), n.axis);
        std::size_t offset = 0;
        for (std::size_t k = 0; k < n.inputs.size(); ++k) {
          const Array& part = input(k);
          const AxisView pview = ViewAlong(part.shape(), n.axis);
          const std::size_t chunk = pview.extent * pview.inner;
          Array dp(part.shape());
          for (std::size_t o = 0; o < pview.outer; ++o) {
            std::copy_n(dy.data().begin() +
                            o * out_view.extent * out_view.inner +
                            offset * out_view.inner,
                        chunk, dp.data().begin() + o * chunk);
          }
          Accumulate(grad_of(k), dp);
          offset += pview.extent;
        }
        break;
      }
      case Op::kTanh:
      case Op::kSigmoid:
      case Op::kExp:
      case Op::kLog: {
        Array dx = dy;
        auto y = n.value.data();
        auto x = input(0).data();
        for (std::size_t i = 0; i < dx.size(); ++i) {
          switch (n.op) {
            case Op::kTanh: dx[i] *= 1.0 - y[i] * y[i]; break;
            case Op::kSigmoid: dx[i] *= y[i] * (1.0 - y[i]); break;
            case Op::kExp: dx[i] *= y[i]; break;
            default: dx[i] /= x[i];
          }
        }
        Accumulate(grad_of(0), dx);
        break;
      }
      case Op::kLogSumExp: {
        const Array& x = input(0);
        const AxisView view = ViewAlong(x.shape(), n.axis);
        Array dx(x.shape());
        for (std::size_t o = 0; o < view.outer; ++o) {
          for (std::size_t i = 0; i < view.inner; ++i) {
            const double lse = n.value[o * view.inner + i];
            const double g = dy[o * view.inner + i];
            for (std::size_t e = 0; e < view.extent; ++e) {
              const std::size_t at = (o * view.extent + e) * view.inner + i;
              dx[at] = g * std::exp(x[at] - lse);
            }
          }
        }
        Accumulate(grad_of(0), dx);
        break;
      }
      case Op::kRows: {
        const Array& table = input(0);
        Array dt(table.shape());
        const std::size_t cols = table.cols();
        for (std::size_t r = 0; r < n.indices.size(); ++r) {
          double* dst = dt.data().data() + n.indices[r] * cols;
          const double* src = dy.data().data() + r * cols;
          for (std::size_t c = 0; c < cols; ++c) dst[c] += src[c];
        }
        Accumulate(grad_of(0), dt);
        break;
      }
      case Op::kSlice: {
        const Array& x = input(0);
        const AxisView view = ViewAlong(x.shape(), n.axis);
        Array dx(x.shape());
        const std::size_t chunk = (n.end - n.begin) * view.inner;
        for (std::size_t o = 0; o < view.outer; ++o) {
          std::copy_n(dy.data().begin() + o * chunk, chunk,
                      dx.data().begin() +
                          (o * view.extent + n.begin) * view.inner);
        }
        Accumulate(grad_of(0), dx);
        break;
      }
      case Op::kSum:
        Accumulate(grad_of(0), Array(input(0).shape(), dy[0]));
        break;
      case Op::kScale: {
        Array dx = dy;
        for (double& v : dx.data()) v *= n.factor;
        Accumulate(grad_of(0), dx);
        break;
      }
    }
  }

  Gradients out;
  for (const auto& [name, param] : params.entries()) {
    if (!param.trainable) continue;
    auto it = param_leaves_.find(name);
    if (it != param_leaves_.end() && it->second <= loss.id &&
        grads[it->second].size() != 0) {
      out.emplace(name, grads[it->second]);
    } else {
      out.emplace(name, Array(param.value.shape()));
    }
  }
  return out;
}

FiniteDiffResult FiniteDiffCheck(const LossBuilder& loss_fn,
                                 const ParamStore& params,
                                 const FiniteDiffOptions& options) {
  if (!(options.step > 0.0)) throw Error("finite differences: step must be > 0");
  ParamStore work = params;
  Gradients analytic;
  {
    Graph g;
    Var loss = loss_fn(g, work);
    analytic = g.Backward(loss, work);
  }
  auto evaluate = [&]() {
    Graph g;
    return loss_fn(g, work).value()[0];
  };

  FiniteDiffResult result;
  Rng rng(options.seed);
  for (const auto& [name, grad] : analytic) {
    Array& value = work.Mutable(name);
    double& param_max = result.per_param[name];
    std::vector<std::size_t> coords(value.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (options.max_coords_per_param != 0 &&
        coords.size() > options.max_coords_per_param) {
      rng.Shuffle(coords);
      coords.resize(options.max_coords_per_param);
      std::sort(coords.begin(), coords.end());
    }
    for (std::size_t i : coords) {
      const double saved = value[i];
      value[i] = saved + options.step;
      const double plus = evaluate();
      value[i] = saved - options.step;
      const double minus = evaluate();
      value[i] = saved;
      const double numeric = (plus - minus) / (2.0 * options.step);
      const double err = std::abs(grad[i] - numeric) /
                         std::max(1e-8, std::abs(grad[i]) + std::abs(numeric));
      ++result.coords_checked;
      param_max = std::max(param_max, err);
      if (err > result.max_relative_error) {
        result.max_relative_error = err;
        result.worst_param = name;
        result.worst_index = i;
      }
    }
  }
  return result;
}

}  // namespace openslot
