#include "navfield/optim.hpp"

#include <cmath>

namespace navfield {

TensorPtr ParamSet::add(const std::string& name, TensorPtr t) {
  if (index_.count(name))
    throw GraphError("duplicate parameter name: " + name);
  t->requires_grad = true;
  index_[name] = entries_.size();
  entries_.emplace_back(name, t);
  return entries_.back().second;
}

TensorPtr ParamSet::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw GraphError("unknown parameter: " + name);
  return entries_[it->second].second;
}

void ParamSet::merge(const ParamSet& other) {
  for (const auto& [name, t] : other.entries_) add(name, t);
}

void ParamSet::zero_grad() {
  for (auto& [name, t] : entries_) t->zero_grad();
}

void Adam::step(ParamSet& params) {
  if (m_.empty()) {
    m_.resize(params.size());
    v_.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto n = params.entries()[i].second->data.size();
      m_[i].assign(n, 0.0);
      v_[i].assign(n, 0.0);
    }
  }
  if (m_.size() != params.size())
    throw GraphError("optimizer state does not match parameter set");
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& [name, p] = params.entries()[i];
    if (p->grad.size() != p->data.size())
      throw GraphError("adam step with missing gradient on " + name);
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t j = 0; j < p->data.size(); ++j) {
      const double g = p->grad[j];
      m[j] = beta1_ * m[j] + (1.0 - beta1_) * g;
      v[j] = beta2_ * v[j] + (1.0 - beta2_) * g * g;
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      p->data[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
    p->zero_grad();
  }
}

}  // namespace navfield
