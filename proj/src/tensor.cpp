#include "navfield/tensor.hpp"

#include <cmath>
#include <sstream>
#include <unordered_set>

namespace navfield {

std::int64_t shape_numel(const Shape& s) {
  std::int64_t n = 1;
  for (auto d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << ")";
  return os.str();
}

Tensor::Tensor(Shape s, std::vector<double> d, bool rg)
    : shape(std::move(s)), data(std::move(d)), requires_grad(rg) {
  if (shape_numel(shape) != static_cast<std::int64_t>(data.size()))
    throw ShapeError("tensor data size " + std::to_string(data.size()) +
                     " does not match shape " + shape_str(shape));
}

double Tensor::item() const {
  if (data.size() != 1)
    throw ShapeError("item() on non-scalar tensor " + shape_str(shape));
  return data[0];
}

void Tensor::ensure_grad() {
  if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
}

void Tensor::zero_grad() { grad.clear(); }

void Tensor::accumulate_grad(const double* g, std::int64_t n) {
  if (n != numel()) throw ShapeError("gradient size mismatch");
  ensure_grad();
  for (std::int64_t i = 0; i < n; ++i) grad[static_cast<std::size_t>(i)] += g[i];
}

void Tensor::check_finite(const char* what) const {
  for (std::size_t i = 0; i < data.size(); ++i)
    if (!std::isfinite(data[i]))
      throw NumericError(std::string(what) + ": non-finite value at index " +
                         std::to_string(i));
}

TensorPtr Tensor::zeros(Shape s, bool rg) {
  auto n = static_cast<std::size_t>(shape_numel(s));
  return std::make_shared<Tensor>(std::move(s), std::vector<double>(n, 0.0), rg);
}

TensorPtr Tensor::full(Shape s, double v, bool rg) {
  auto n = static_cast<std::size_t>(shape_numel(s));
  return std::make_shared<Tensor>(std::move(s), std::vector<double>(n, v), rg);
}

TensorPtr Tensor::scalar(double v, bool rg) {
  return std::make_shared<Tensor>(Shape{1}, std::vector<double>{v}, rg);
}

TensorPtr Tensor::from_vector(Shape s, std::vector<double> d, bool rg) {
  return std::make_shared<Tensor>(std::move(s), std::move(d), rg);
}

namespace {

void topo_visit(const TensorPtr& t, std::unordered_set<Tensor*>& seen,
                std::vector<TensorPtr>& order) {
  if (seen.count(t.get())) return;
  seen.insert(t.get());
  for (const auto& p : t->parents) topo_visit(p, seen, order);
  order.push_back(t);
}

thread_local bool g_grad_enabled = true;

}  // namespace

void backward(const TensorPtr& loss) {
  if (!loss) throw GraphError("backward on null tensor");
  if (loss->numel() != 1)
    throw GraphError("backward requires a scalar loss, got " +
                     shape_str(loss->shape));
  if (!loss->requires_grad)
    throw GraphError("backward on a tensor detached from the tape");
  std::unordered_set<Tensor*> seen;
  std::vector<TensorPtr> order;
  topo_visit(loss, seen, order);
  loss->ensure_grad();
  loss->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Tensor& t = **it;
    if (t.backprop && !t.grad.empty()) t.backprop(t);
  }
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

}  // namespace navfield
