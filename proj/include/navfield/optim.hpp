#pragma once

#include <map>
#include <string>
#include <vector>

#include "navfield/tensor.hpp"

namespace navfield {

// Ordered, named collection of learnable tensors. Order is the checkpoint
// and optimizer-state order, so it must be construction-deterministic.
class ParamSet {
 public:
  TensorPtr add(const std::string& name, TensorPtr t);
  TensorPtr get(const std::string& name) const;
  bool has(const std::string& name) const { return index_.count(name) != 0; }
  void merge(const ParamSet& other);  // rejects duplicate names

  const std::vector<std::pair<std::string, TensorPtr>>& entries() const {
    return entries_;
  }
  std::size_t size() const { return entries_.size(); }
  void zero_grad();

 private:
  std::vector<std::pair<std::string, TensorPtr>> entries_;
  std::map<std::string, std::size_t> index_;
};

// Bias-corrected adaptive-moment optimizer. One instance owns the state for
// one ParamSet; step() consumes and clears the accumulated gradients.
class Adam {
 public:
  explicit Adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(ParamSet& params);
  std::int64_t steps_taken() const { return t_; }
  double learning_rate() const { return lr_; }
  void set_learning_rate(double lr) { lr_ = lr; }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::int64_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace navfield
