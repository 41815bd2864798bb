#include <cmath>

#include "doctest.h"
#include "openslot/autodiff.hpp"
#include "openslot/layers.hpp"
#include "openslot/rng.hpp"
#include "support/test_util.hpp"

using namespace openslot;

namespace {

Array RandomArray(Shape shape, Rng& rng) {
  Array a(std::move(shape));
  for (double& v : a.data()) v = rng.Uniform(-1.0, 1.0);
  return a;
}

}  // namespace

TEST_SUITE("autodiff") {

TEST_CASE("primitive values") {
  Graph g;
  CHECK(Tanh(g.Constant(Array::Vector({0.0}))).value() == Array::Vector({0.0}));
  CHECK(Concat({g.Constant(Array::Vector({1, 2})), g.Constant(Array::Vector({3}))})
            .value() == Array::Vector({1, 2, 3}));
  CHECK(LogSumExp(g.Constant(Array::Vector({0, 0, 0}))).value()[0] ==
        doctest::Approx(std::log(3.0)).epsilon(1e-15));

  Var a = g.Constant(Array::Matrix(2, 3, {1, 2, 3, 4, 5, 6}));
  Var b = g.Constant(Array::Matrix(3, 1, {1, 0, -1}));
  CHECK(Matmul(a, b).value() == Array::Matrix(2, 1, {-2, -2}));
  CHECK(Matmul(a, a, false, true).value() == Array::Matrix(2, 2, {14, 32, 32, 77}));
  CHECK(Matmul(a, a, true, false).value().shape() == Shape{3, 3});
  CHECK(Slice(a, 1, 1, 3).value() == Array::Matrix(2, 2, {2, 3, 5, 6}));
  CHECK(Slice(a, 0, 1, 2).value() == Array::Matrix(1, 3, {4, 5, 6}));
  CHECK(Rows(a, {1, 0, 1}).value() ==
        Array::Matrix(3, 3, {4, 5, 6, 1, 2, 3, 4, 5, 6}));
  CHECK(Sum(a).value() == Array::Vector({21}));
  CHECK(Scale(a, 0.5).value() == Array::Matrix(2, 3, {0.5, 1, 1.5, 2, 2.5, 3}));
  CHECK(Mul(a, a).value() == Array::Matrix(2, 3, {1, 4, 9, 16, 25, 36}));
  CHECK(Add(a, a).value() == Scale(a, 2.0).value());
  CHECK(Sigmoid(g.Constant(Array::Vector({0.0}))).value()[0] == 0.5);
  CHECK(Exp(g.Constant(Array::Vector({0.0}))).value()[0] == 1.0);
  CHECK(Log(g.Constant(Array::Vector({1.0}))).value()[0] == 0.0);

  const Array rows = LogSumExp(a, 1).value();
  CHECK(rows.shape() == Shape{2, 1});
  CHECK(rows[0] == doctest::Approx(3.0 + std::log(1 + std::exp(-1.0) + std::exp(-2.0))));
  const Array cols = LogSumExp(a, 0).value();
  CHECK(cols.shape() == Shape{1, 3});
  CHECK(cols[2] == doctest::Approx(6.0 + std::log(1 + std::exp(-3.0))));
}

TEST_CASE("generic entry point matches the named primitives") {
  Graph g;
  Var x = g.Constant(Array::Vector({0.5, -1.0}));
  const Var inputs[] = {x, x};
  CHECK(ForwardPrimitive(Op::kAdd, inputs).value() == Add(x, x).value());
  CHECK(ForwardPrimitive(Op::kTanh, std::span<const Var>(inputs, 1)).value() ==
        Tanh(x).value());
  CHECK_THROWS_AS(ForwardPrimitive(Op::kMatmul, inputs), Error);
}

TEST_CASE("logsumexp does not overflow") {
  Graph g;
  const double v = LogSumExp(g.Constant(Array::Vector({1000, 1000}))).value()[0];
  CHECK(std::isfinite(v));
  CHECK(v == 1000.0 + std::log(2.0));
}

TEST_CASE("shape errors name both shapes") {
  Graph g;
  Var a = g.Constant(Array(Shape{2, 3}));
  Var b = g.Constant(Array(Shape{2, 2}));
  try {
    Add(a, b);
    FAIL("expected an error");
  } catch (const Error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("[2,3]") != std::string::npos);
    CHECK(msg.find("[2,2]") != std::string::npos);
  }
  CHECK_THROWS_AS(Matmul(a, a), Error);
  CHECK_THROWS_AS(Concat({a, b}, 0), Error);
  CHECK_THROWS_AS(Slice(a, 1, 2, 4), Error);
  CHECK_THROWS_AS(Rows(a, {2}), Error);
}

TEST_CASE("non-finite values are rejected") {
  Graph g;
  CHECK_THROWS_AS(g.Constant(Array::Vector({NAN})), Error);
  CHECK_THROWS_AS(Log(g.Constant(Array::Vector({0.0}))), Error);
  CHECK_THROWS_AS(Exp(g.Constant(Array::Vector({1000.0}))), Error);
}

TEST_CASE("backward: analytic examples") {
  ParamStore params;
  params.Add("x", Array::Vector({3.0}));
  {
    Graph g;
    Var x = g.Param(params, "x");
    const Gradients grads = g.Backward(Mul(x, x), params);
    CHECK(grads.at("x")[0] == 6.0);
  }
  params.Add("v", Array::Vector({0.3, -1.2, 2.0, 0.0}));
  Graph g;
  Var v = g.Param(params, "v");
  const Gradients grads = g.Backward(LogSumExp(v), params);
  double z = 0.0;
  for (double e : params.Get("v").data()) z += std::exp(e);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(grads.at("v")[i] == doctest::Approx(std::exp(params.Get("v")[i]) / z).epsilon(1e-14));
  }
  // Unreached trainable parameters get zeros.
  CHECK(grads.at("x") == Array::Vector({0.0}));
}

TEST_CASE("backward rejects non-scalar losses") {
  ParamStore params;
  params.Add("v", Array::Vector({1, 2}));
  Graph g;
  Var v = g.Param(params, "v");
  CHECK_THROWS_AS(g.Backward(v, params), Error);
}

TEST_CASE("frozen parameters get no gradient entry") {
  ParamStore params;
  params.Add("a", Array::Vector({1.0}));
  params.Add("b", Array::Vector({2.0}), false);
  Graph g;
  const Gradients grads = g.Backward(Mul(g.Param(params, "a"), g.Param(params, "b")), params);
  CHECK(grads.count("a") == 1);
  CHECK(grads.count("b") == 0);
  CHECK(grads.at("a")[0] == 2.0);
}

TEST_CASE("a parameter leaf is shared across uses") {
  ParamStore params;
  params.Add("x", Array::Vector({1.5}));
  Graph g;
  Var a = g.Param(params, "x");
  Var b = g.Param(params, "x");
  CHECK(a.id == b.id);
  const Gradients grads = g.Backward(Add(Mul(a, b), a), params);
  CHECK(grads.at("x")[0] == doctest::Approx(2 * 1.5 + 1));
}

TEST_CASE("concat splits gradients by original extents") {
  ParamStore params;
  params.Add("a", Array::Matrix(2, 2, {1, 2, 3, 4}));
  params.Add("b", Array::Matrix(2, 3, {1, 1, 1, 1, 1, 1}));
  Graph g;
  Var c = Concat({g.Param(params, "a"), g.Param(params, "b")}, 1);
  Var weights = g.Constant(Array::Matrix(2, 5, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10}));
  const Gradients grads = g.Backward(Sum(Mul(c, weights)), params);
  CHECK(grads.at("a").size() + grads.at("b").size() == c.value().size());
  CHECK(grads.at("a") == Array::Matrix(2, 2, {1, 2, 6, 7}));
  CHECK(grads.at("b") == Array::Matrix(2, 3, {3, 4, 5, 8, 9, 10}));
}

TEST_CASE("finite differences: quadratic is exact up to rounding") {
  ParamStore params;
  params.Add("w", Array::Vector({0.3, -0.7, 1.1}));
  auto loss = [](Graph& g, const ParamStore& p) {
    Var w = g.Param(p, "w");
    return Sum(Mul(w, w));
  };
  CHECK(FiniteDiffCheck(loss, params).max_relative_error < 1e-9);
}

TEST_CASE("finite differences: constant parameter has zero gradient") {
  ParamStore params;
  params.Add("used", Array::Vector({0.5}));
  params.Add("unused", Array::Vector({0.25, 0.75}));
  auto loss = [](Graph& g, const ParamStore& p) { return Tanh(g.Param(p, "used")); };
  const FiniteDiffResult r = FiniteDiffCheck(loss, params);
  CHECK(r.per_param.at("unused") == 0.0);
  Graph g;
  const Gradients grads = g.Backward(loss(g, params), params);
  for (double v : grads.at("unused").data()) CHECK(std::abs(v) < 1e-10);
}

TEST_CASE("finite differences: random two-layer network") {
  Rng rng(7);
  ParamStore params;
  params.Add("l1.w", RandomArray({3, 4}, rng));
  params.Add("l1.b", RandomArray({1, 4}, rng));
  params.Add("l2.w", RandomArray({4, 2}, rng));
  params.Add("l2.b", RandomArray({1, 2}, rng));
  params.Add("x", RandomArray({2, 3}, rng));
  CHECK(params.entries().size() == 5);
  auto loss = [](Graph& g, const ParamStore& p) {
    Var h = Tanh(Dense(g, p, "l1", g.Param(p, "x")));
    Var out = Sigmoid(Dense(g, p, "l2", h));
    return Sum(LogSumExp(Concat({out, Exp(Scale(out, 0.5))}, 1), 1));
  };
  CHECK(FiniteDiffCheck(loss, params).max_relative_error < 1e-6);
}

TEST_CASE("finite differences: every primitive") {
  Rng rng(11);
  ParamStore params;
  params.Add("a", RandomArray({3, 4}, rng));
  params.Add("b", RandomArray({4, 2}, rng));
  params.Add("c", RandomArray({3, 2}, rng));
  params.Add("t", RandomArray({5, 2}, rng));
  // Each primitive in its own small loss so a failure points at one rule.
  const std::vector<std::pair<const char*, LossBuilder>> cases = {
      {"matmul", [](Graph& g, const ParamStore& p) {
         return Sum(Tanh(Matmul(g.Param(p, "a"), g.Param(p, "b"))));
       }},
      {"matmul trans", [](Graph& g, const ParamStore& p) {
         Var a = g.Param(p, "a");
         return Sum(Tanh(Matmul(Matmul(a, a, true, false), g.Param(p, "b"), false, false)));
       }},
      {"matmul trans_b", [](Graph& g, const ParamStore& p) {
         Var c = g.Param(p, "c");
         return Sum(Tanh(Matmul(c, g.Param(p, "t"), false, true)));
       }},
      {"add mul", [](Graph& g, const ParamStore& p) {
         Var c = g.Param(p, "c");
         return Sum(Mul(Add(c, c), Tanh(c)));
       }},
      {"sigmoid exp log", [](Graph& g, const ParamStore& p) {
         return Sum(Log(Add(Exp(g.Param(p, "c")), Sigmoid(g.Param(p, "c")))));
       }},
      {"logsumexp axes", [](Graph& g, const ParamStore& p) {
         Var a = g.Param(p, "a");
         return Add(Sum(LogSumExp(a, 0)), Sum(Tanh(LogSumExp(a, 1))));
       }},
      {"rows", [](Graph& g, const ParamStore& p) {
         return Sum(Tanh(Rows(g.Param(p, "t"), {4, 0, 4, 2})));
       }},
      {"slice concat scale", [](Graph& g, const ParamStore& p) {
         Var a = g.Param(p, "a");
         Var parts = Concat({Slice(a, 1, 0, 2), Scale(Slice(a, 1, 2, 4), -3.0)}, 0);
         return Sum(Tanh(Mul(parts, parts)));
       }},
  };
  for (const auto& [name, fn] : cases) {
    INFO(name);
    CHECK(FiniteDiffCheck(fn, params).max_relative_error < 1e-6);
  }
}

TEST_CASE("backward is deterministic") {
  Rng rng(3);
  ParamStore params;
  params.Add("w", RandomArray({4, 4}, rng));
  auto run = [&] {
    Graph g;
    Var w = g.Param(params, "w");
    return g.Backward(Sum(LogSumExp(Matmul(w, Tanh(w)), 1)), params);
  };
  CHECK(run() == run());
}

}  // TEST_SUITE
