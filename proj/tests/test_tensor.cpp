#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <functional>

#include "navfield/checkpoint.hpp"
#include "navfield/ops.hpp"
#include "navfield/optim.hpp"
#include "navfield/rng.hpp"

using namespace navfield;
namespace op = navfield::ops;

namespace {

using LossFn = std::function<TensorPtr(const std::vector<TensorPtr>&)>;

TensorPtr random_tensor(Shape s, Rng& rng, double lo = -1.5, double hi = 1.5) {
  std::vector<double> d(static_cast<std::size_t>(shape_numel(s)));
  for (auto& x : d) x = rng.uniform(lo, hi);
  return Tensor::from_vector(std::move(s), std::move(d), true);
}

// Central finite differences against the reverse-mode gradient; returns the
// worst relative error over every input element.
double fd_max_rel_err(const LossFn& f, std::vector<TensorPtr> inputs,
                      double h = 1e-6) {
  auto loss = f(inputs);
  REQUIRE(loss->numel() == 1);
  for (auto& t : inputs) t->zero_grad();
  backward(loss);
  double worst = 0.0;
  for (auto& t : inputs) {
    REQUIRE(!t->grad.empty());
    for (std::size_t i = 0; i < t->data.size(); ++i) {
      const double keep = t->data[i];
      t->data[i] = keep + h;
      const double up = f(inputs)->item();
      t->data[i] = keep - h;
      const double dn = f(inputs)->item();
      t->data[i] = keep;
      const double fd = (up - dn) / (2.0 * h);
      const double an = t->grad[i];
      const double rel =
          std::fabs(an - fd) / std::max({1.0, std::fabs(an), std::fabs(fd)});
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("elementwise forward values and broadcasting") {
  auto a = Tensor::from_vector({2, 3}, {1, 2, 3, 4, 5, 6});
  auto row = Tensor::from_vector({1, 3}, {10, 20, 30});
  auto col = Tensor::from_vector({2, 1}, {100, 200});
  auto s1 = op::add(a, row);
  CHECK(s1->data == std::vector<double>{11, 22, 33, 14, 25, 36});
  auto s2 = op::mul(a, col);
  CHECK(s2->data == std::vector<double>{100, 200, 300, 800, 1000, 1200});
  auto s3 = op::add(a, Tensor::scalar(1.0));
  CHECK(s3->data == std::vector<double>{2, 3, 4, 5, 6, 7});
  CHECK_THROWS_AS(op::add(a, Tensor::from_vector({2, 2}, {1, 2, 3, 4})),
                  ShapeError);
}

TEST_CASE("finite differences: elementwise and reductions") {
  Rng rng(21);
  auto fd1 = [&](const LossFn& f, Shape s, double lo = -1.5, double hi = 1.5) {
    return fd_max_rel_err(f, {random_tensor(std::move(s), rng, lo, hi)});
  };
  auto sum0 = [](const TensorPtr& x) { return op::sum_all(x); };
  CHECK(fd1([&](auto& in) { return sum0(op::relu(in[0])); }, {3, 4}) < 1e-4);
  CHECK(fd1([&](auto& in) { return sum0(op::sigmoid(in[0])); }, {3, 4}) < 1e-4);
  CHECK(fd1([&](auto& in) { return sum0(op::softplus(in[0])); }, {3, 4}) < 1e-4);
  CHECK(fd1([&](auto& in) { return sum0(op::exp(in[0])); }, {3, 4}) < 1e-4);
  CHECK(fd1([&](auto& in) { return sum0(op::log(in[0])); }, {3, 4}, 0.5, 2.5) <
        1e-4);
  CHECK(fd1([&](auto& in) { return sum0(op::sin(in[0])); }, {3, 4}) < 1e-4);
  CHECK(fd1([&](auto& in) { return sum0(op::cos(in[0])); }, {3, 4}) < 1e-4);
  CHECK(fd1([&](auto& in) { return sum0(op::square(in[0])); }, {3, 4}) < 1e-4);
  CHECK(fd1([&](auto& in) { return sum0(op::abs(in[0])); }, {3, 4}, 0.2, 2.0) <
        1e-4);
  CHECK(fd1([&](auto& in) { return sum0(op::neg(in[0])); }, {5}) < 1e-4);
  CHECK(fd1([&](auto& in) { return op::mean_all(op::square(in[0])); }, {4, 3}) <
        1e-4);
  CHECK(fd1([&](auto& in) {
          return op::sum_all(op::square(op::sum_axis(in[0], 0)));
        },
        {3, 4}) < 1e-4);
  CHECK(fd1([&](auto& in) {
          return op::sum_all(op::square(op::mean_axis(in[0], 1, true)));
        },
        {3, 4}) < 1e-4);
  CHECK(fd1([&](auto& in) {
          return op::sum_all(op::cumsum_exclusive_last(op::square(in[0])));
        },
        {2, 5}) < 1e-4);
  CHECK(fd1([&](auto& in) {
          return op::sum_all(op::square(op::softmax_last(in[0])));
        },
        {2, 4}) < 1e-4);
  // max_axis routes gradient to the argmax only; keep entries distinct
  auto mx = Tensor::from_vector({2, 3}, {0.1, 0.9, 0.4, 0.8, 0.2, 0.3}, true);
  CHECK(fd_max_rel_err(
            [](auto& in) {
              return op::sum_all(op::square(op::max_axis(in[0], 1, true)));
            },
            {mx}) < 1e-4);
}

TEST_CASE("finite differences: binary ops with broadcasting") {
  Rng rng(22);
  auto a = random_tensor({2, 3}, rng);
  auto b = random_tensor({1, 3}, rng, 0.5, 2.0);
  CHECK(fd_max_rel_err(
            [](auto& in) { return op::sum_all(op::mul(in[0], in[1])); },
            {a, b}) < 1e-4);
  CHECK(fd_max_rel_err(
            [](auto& in) { return op::sum_all(op::div(in[0], in[1])); },
            {a, b}) < 1e-4);
  auto c = random_tensor({2, 1}, rng);
  CHECK(fd_max_rel_err(
            [](auto& in) {
              return op::sum_all(op::square(op::sub(in[0], in[1])));
            },
            {a, c}) < 1e-4);
}

TEST_CASE("finite differences: matmul, conv1d, concat, transpose, reshape") {
  Rng rng(23);
  auto a = random_tensor({3, 4}, rng);
  auto b = random_tensor({4, 2}, rng);
  CHECK(fd_max_rel_err(
            [](auto& in) {
              return op::sum_all(op::square(op::matmul(in[0], in[1])));
            },
            {a, b}) < 1e-4);
  auto x = random_tensor({2, 8}, rng);
  auto w = random_tensor({3, 2, 3}, rng);
  for (std::int64_t stride : {1, 2, 4}) {
    CHECK(fd_max_rel_err(
              [stride](auto& in) {
                return op::sum_all(
                    op::square(op::conv1d(in[0], in[1], stride, 1)));
              },
              {x, w}) < 1e-4);
  }
  auto p = random_tensor({2, 3}, rng);
  auto q = random_tensor({2, 2}, rng);
  CHECK(fd_max_rel_err(
            [](auto& in) {
              return op::sum_all(op::square(op::concat({in[0], in[1]}, 1)));
            },
            {p, q}) < 1e-4);
  CHECK(fd_max_rel_err(
            [](auto& in) {
              return op::sum_all(op::square(op::transpose2d(in[0])));
            },
            {p}) < 1e-4);
  CHECK(fd_max_rel_err(
            [](auto& in) {
              return op::sum_all(op::square(op::reshape(in[0], {6, 1})));
            },
            {p}) < 1e-4);
}

TEST_CASE("finite differences: two-layer perceptron with reused parameters") {
  Rng rng(24);
  auto x = random_tensor({4, 3}, rng);
  auto w1 = random_tensor({3, 5}, rng);
  auto b1 = random_tensor({1, 5}, rng);
  auto w2 = random_tensor({5, 2}, rng);
  auto loss = [](auto& in) {
    auto h = op::relu(op::add(op::matmul(in[0], in[1]), in[2]));
    auto y = op::sigmoid(op::matmul(h, in[3]));
    // reuse w2 a second time so gradients must accumulate
    auto z = op::matmul(h, in[3]);
    return op::mean_all(op::add(op::square(y), op::square(z)));
  };
  CHECK(fd_max_rel_err(loss, {x, w1, b1, w2}) < 1e-4);
}

TEST_CASE("softmax rows sum to one and shift invariance") {
  auto x = Tensor::from_vector({2, 3}, {1, 2, 3, -5, 0, 5});
  auto s = op::softmax_last(x);
  for (int r = 0; r < 2; ++r) {
    double acc = 0.0;
    for (int c = 0; c < 3; ++c) acc += s->data[static_cast<std::size_t>(r * 3 + c)];
    CHECK(acc == doctest::Approx(1.0).epsilon(1e-12));
  }
  auto shifted = op::softmax_last(op::add(x, Tensor::scalar(1000.0)));
  for (std::size_t i = 0; i < 6; ++i)
    CHECK(shifted->data[i] == doctest::Approx(s->data[i]).epsilon(1e-9));
}

TEST_CASE("graph errors and numeric guards") {
  auto v = Tensor::from_vector({2}, {1, 2});
  CHECK_THROWS_AS(backward(v), GraphError);  // non-scalar loss
  CHECK_THROWS_AS(op::matmul(v, v), ShapeError);
  CHECK_THROWS_AS(op::reshape(v, {3}), ShapeError);
  CHECK_THROWS_AS(
      op::apply_primitive(static_cast<op::Primitive>(999), {v}), GraphError);
}

TEST_CASE("apply_primitive dispatches like the named ops") {
  auto a = Tensor::from_vector({2, 2}, {1, 2, 3, 4});
  auto b = Tensor::from_vector({2, 2}, {5, 6, 7, 8});
  CHECK(op::apply_primitive(op::Primitive::Add, {a, b})->data ==
        op::add(a, b)->data);
  CHECK(op::apply_primitive(op::Primitive::MatMul, {a, b})->data ==
        op::matmul(a, b)->data);
  op::PrimAttrs attrs;
  attrs.shape = {4, 1};
  CHECK(op::apply_primitive(op::Primitive::Reshape, {a}, attrs)->data ==
        op::reshape(a, {4, 1})->data);
}

TEST_CASE("no-grad guard suppresses the tape") {
  auto x = Tensor::from_vector({2}, {1, 2}, true);
  NoGradGuard ng;
  auto y = op::square(x);
  CHECK(y->parents.empty());
  CHECK_FALSE(y->requires_grad);
}

TEST_CASE("optimizer decreases a convex loss and clears gradients") {
  ParamSet ps;
  auto w = ps.add("w", Tensor::from_vector({2}, {5.0, -3.0}));
  Adam opt(0.05);
  double prev = 1e300;
  for (int it = 0; it < 200; ++it) {
    ps.zero_grad();
    auto loss = op::sum_all(op::square(w));
    backward(loss);
    opt.step(ps);
    const double now = op::sum_all(op::square(w))->item();
    if (it > 0) CHECK(now < prev + 1e-9);
    prev = now;
  }
  CHECK(prev < 1e-2);
  for (double g : w->grad) CHECK(g == 0.0);  // step() consumed gradients
  CHECK(opt.steps_taken() == 200);
}

TEST_CASE("optimizer first step magnitude is the learning rate") {
  // with bias correction the first update is lr * sign(grad)
  ParamSet ps;
  auto w = ps.add("w", Tensor::from_vector({2}, {1.0, -2.0}));
  Adam opt(1e-3);
  ps.zero_grad();
  backward(op::sum_all(op::mul(w, Tensor::from_vector({2}, {3.0, -7.0}))));
  opt.step(ps);
  CHECK(w->data[0] == doctest::Approx(1.0 - 1e-3).epsilon(1e-9));
  CHECK(w->data[1] == doctest::Approx(-2.0 + 1e-3).epsilon(1e-9));
}

TEST_CASE("checkpoint round-trip is exact") {
  Rng rng(25);
  ParamSet ps;
  ps.add("layer.w", random_tensor({3, 4}, rng));
  ps.add("layer.b", random_tensor({1, 4}, rng));
  const std::string path = "roundtrip_test.ckpt";
  save_checkpoint(path, ps);

  ParamSet loaded;
  loaded.add("layer.w", Tensor::zeros({3, 4}));
  loaded.add("layer.b", Tensor::zeros({1, 4}));
  load_checkpoint(path, loaded);
  CHECK(loaded.get("layer.w")->data == ps.get("layer.w")->data);
  CHECK(loaded.get("layer.b")->data == ps.get("layer.b")->data);

  ParamSet wrong_shape;
  wrong_shape.add("layer.w", Tensor::zeros({4, 3}));
  wrong_shape.add("layer.b", Tensor::zeros({1, 4}));
  CHECK_THROWS(load_checkpoint(path, wrong_shape));
  ParamSet wrong_name;
  wrong_name.add("other.w", Tensor::zeros({3, 4}));
  wrong_name.add("layer.b", Tensor::zeros({1, 4}));
  CHECK_THROWS(load_checkpoint(path, wrong_name));
  std::remove(path.c_str());
}

TEST_CASE("named rng substreams are deterministic and independent") {
  Rng a(99), b(99);
  CHECK(a.stream("x").uniform() == b.stream("x").uniform());
  CHECK(a.stream("x", 3).uniform() == b.stream("x", 3).uniform());
  CHECK(a.stream("x").uniform() != a.stream("y").uniform());
  CHECK(a.stream("x", 1).uniform() != a.stream("x", 2).uniform());
}
