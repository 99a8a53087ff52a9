#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace navfield {

struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct GraphError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Shape = std::vector<std::int64_t>;

std::int64_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

class Tensor;
using TensorPtr = std::shared_ptr<Tensor>;

// Dense 64-bit float tensor doubling as a node of the reverse-mode tape.
// Ops in ops.hpp record parents and a backprop closure on their outputs;
// backward() runs the tape in reverse topological order. Gradients
// accumulate additively; call zero_grad() between optimizer steps.
class Tensor {
 public:
  Shape shape;
  std::vector<double> data;
  bool requires_grad = false;
  std::vector<double> grad;  // empty until touched by backward()

  std::vector<TensorPtr> parents;
  std::function<void(Tensor&)> backprop;  // pushes grad into parents

  Tensor() = default;
  Tensor(Shape s, std::vector<double> d, bool rg = false);

  std::int64_t numel() const { return static_cast<std::int64_t>(data.size()); }
  std::int64_t dim(int i) const { return shape[static_cast<std::size_t>(i)]; }
  int rank() const { return static_cast<int>(shape.size()); }

  double item() const;
  void ensure_grad();
  void zero_grad();
  void accumulate_grad(const double* g, std::int64_t n);
  void check_finite(const char* what) const;

  static TensorPtr zeros(Shape s, bool requires_grad = false);
  static TensorPtr full(Shape s, double v, bool requires_grad = false);
  static TensorPtr scalar(double v, bool requires_grad = false);
  static TensorPtr from_vector(Shape s, std::vector<double> d,
                               bool requires_grad = false);
};

// Runs reverse-mode accumulation from a scalar loss over the recorded tape.
void backward(const TensorPtr& loss);

// Scoped switch that stops ops from recording the tape (inference rollouts).
bool grad_enabled();
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

}  // namespace navfield
