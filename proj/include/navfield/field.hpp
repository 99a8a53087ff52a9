#pragma once

#include <deque>

#include "navfield/optim.hpp"
#include "navfield/rng.hpp"
#include "navfield/world.hpp"

namespace navfield {

struct FieldConfig {
  int pos_freqs = 8;        // frequency count for position encoding
  int dir_freqs = 4;        // frequency count for direction encoding
  int hidden = 64;
  int feat_dim = 16;        // rendered feature channels
  int samples_per_ray = 32;
  double near = 0.05;
  double far = 21.3;        // overridden with the scene diagonal
  double beta_min = 0.01;   // variance floor under the softplus
  double lr = 1e-3;

  int pos_enc_dim() const { return 2 * (1 + 2 * pos_freqs); }
  int dir_enc_dim() const { return 1 + 2 * dir_freqs; }
  void validate() const;
};

// gamma(v): raw components followed by [sin(2^k pi v), cos(2^k pi v)] for
// k = 0..L-1. Input (N, D) -> (N, D * (1 + 2L)).
TensorPtr positional_encode(const TensorPtr& v, int freqs);

struct FieldOutputs {
  TensorPtr sigma;       // (N, 1), softplus >= 0
  TensorPtr feat;        // (N, D_f), unconstrained trunk feature
  TensorPtr beta2;       // (N, 1), softplus + beta_min
  TensorPtr color;       // (N, 3), sigmoid
  TensorPtr color_feat;  // (N, D_f), penultimate color-head representation
};

// The two-headed density/color network with a predictive-variance output.
// One instance is owned by one episode; weights are freshly initialized.
class Field {
 public:
  Field(FieldConfig cfg, Rng rng);

  const FieldConfig& cfg() const { return cfg_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }

  // points: (N, 2) world positions, dirs: (N, 1) ray angles.
  FieldOutputs forward(const TensorPtr& points, const TensorPtr& dirs) const;

 private:
  FieldConfig cfg_;
  ParamSet params_;
};

// Mean over rays of ||gt - mean||^2 / (2 var) + log(var) / 2.
TensorPtr nll_loss(const TensorPtr& mean, const TensorPtr& var,
                   const TensorPtr& gt);

struct RayRecord {
  Vec2 origin;
  double angle = 0.0;
  Rgb gt_color;
};

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {}
  void push(const RayRecord& r);
  std::size_t size() const { return records_.size(); }
  std::size_t capacity() const { return capacity_; }
  const RayRecord& at(std::size_t i) const { return records_[i]; }
  const RayRecord& sample(Rng& rng) const;

 private:
  std::size_t capacity_;
  std::deque<RayRecord> records_;
};

// One ray record per strip column, origin at the pose.
void add_observation(ReplayBuffer& buffer, const AgentPose& pose,
                     const ObservationStrip& strip);

// Field + replay buffer + optimizer for one episode's online training.
class OnlineField {
 public:
  OnlineField(FieldConfig cfg, std::size_t replay_capacity, Rng init_rng);

  Field& field() { return field_; }
  const Field& field() const { return field_; }
  ReplayBuffer& buffer() { return buffer_; }
  const ReplayBuffer& buffer() const { return buffer_; }

  void observe(const AgentPose& pose, const ObservationStrip& strip);
  // Stratified sampling, one adaptive-moment update; returns the loss.
  double train_step(int batch_rays, Rng& rng);

 private:
  Field field_;
  ReplayBuffer buffer_;
  Adam opt_;
};

}  // namespace navfield
