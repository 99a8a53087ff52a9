#pragma once

#include "navfield/tensor.hpp"

namespace navfield::ops {

// Elementwise binary ops with numpy-style broadcasting.
TensorPtr add(const TensorPtr& a, const TensorPtr& b);
TensorPtr sub(const TensorPtr& a, const TensorPtr& b);
TensorPtr mul(const TensorPtr& a, const TensorPtr& b);
TensorPtr div(const TensorPtr& a, const TensorPtr& b);

TensorPtr neg(const TensorPtr& x);
TensorPtr relu(const TensorPtr& x);
TensorPtr sigmoid(const TensorPtr& x);
TensorPtr softplus(const TensorPtr& x);
TensorPtr exp(const TensorPtr& x);
TensorPtr log(const TensorPtr& x);
TensorPtr sin(const TensorPtr& x);
TensorPtr cos(const TensorPtr& x);
TensorPtr square(const TensorPtr& x);
TensorPtr abs(const TensorPtr& x);
// Maps to (-pi, pi]; gradient is identity (piecewise shift).
TensorPtr wrap_angle(const TensorPtr& x);

TensorPtr matmul(const TensorPtr& a, const TensorPtr& b);
// x: (C_in, L), w: (C_out, C_in, k) -> (C_out, L_out), zero padding.
TensorPtr conv1d(const TensorPtr& x, const TensorPtr& w, std::int64_t stride,
                 std::int64_t pad);

TensorPtr softmax_last(const TensorPtr& x);
TensorPtr sum_axis(const TensorPtr& x, int axis, bool keepdim = false);
TensorPtr mean_axis(const TensorPtr& x, int axis, bool keepdim = false);
TensorPtr max_axis(const TensorPtr& x, int axis, bool keepdim = false);
TensorPtr sum_all(const TensorPtr& x);
TensorPtr mean_all(const TensorPtr& x);

TensorPtr concat(const std::vector<TensorPtr>& xs, int axis);
TensorPtr reshape(const TensorPtr& x, Shape s);
TensorPtr transpose2d(const TensorPtr& x);
TensorPtr cumsum_exclusive_last(const TensorPtr& x);

// Copies values off the tape (no parents, no grad).
TensorPtr detach(const TensorPtr& x);

// Generic entry point mirroring the op-by-identifier contract.
enum class Primitive {
  MatMul,
  Conv1D,
  Add,
  Mul,
  Div,
  Relu,
  Sigmoid,
  Softplus,
  SoftmaxLast,
  AvgPool,
  MaxPool,
  Concat,
  Reshape,
  Sum,
  Mean,
  Log,
  Square,
};

struct PrimAttrs {
  int axis = -1;
  std::int64_t stride = 1;
  std::int64_t pad = 0;
  bool keepdim = false;
  Shape shape;  // for Reshape
};

TensorPtr apply_primitive(Primitive kind, const std::vector<TensorPtr>& inputs,
                          const PrimAttrs& attrs = {});

}  // namespace navfield::ops
