#pragma once

#include <functional>

#include "navfield/extractors.hpp"
#include "navfield/field.hpp"

namespace navfield {

struct AblationConfig {
  bool use_fu = true;    // exploration feature
  bool use_at = true;    // auxiliary angle task
  bool use_cbam = true;  // attention in both extractors
  std::string name() const;
  static AblationConfig from_name(const std::string& name);
};

struct PolicyConfig {
  int strip_w = 64;
  double fov = M_PI / 2.0;
  int feat_dim = 16;
  double lambda_aux = 0.5;
  bool detach_field = false;  // cut policy gradients at the rendered maps
  AblationConfig ablation;
  ExtractorConfig extractor_cfg() const;
};

struct StepOutput {
  TensorPtr f_p, f_u, f_cog;  // (1, 64) each
  TensorPtr fused;            // (1, 64)
  TensorPtr logits, probs;    // (1, 4)
  TensorPtr aux_vec;          // (1, 2), unnormalized (sin, cos) of the bearing
  TensorPtr aux_angle;        // (1, 1), in (-pi, pi], derived from aux_vec
  TensorPtr iu;               // (1, W), kept for saliency
};

// Perception encoder + cognition extractors + adaptive fusion + action head.
class Policy {
 public:
  Policy(PolicyConfig cfg, Rng init_rng);
  // extractors keep pointers into params_, so the object must not move
  Policy(const Policy&) = delete;
  Policy& operator=(const Policy&) = delete;

  const PolicyConfig& cfg() const { return cfg_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }

  StepOutput forward(const Field& field, const AgentPose& pose,
                     const ObservationStrip& obs,
                     const ObservationStrip& target_image) const;

  TensorPtr perception_encode(const ObservationStrip& obs, double far) const;
  TensorPtr fuse(const TensorPtr& f_cog, const TensorPtr& f_u,
                 const TensorPtr& f_p) const;
  TensorPtr action_logits(const TensorPtr& fused) const;

 private:
  PolicyConfig cfg_;
  ParamSet params_;
  std::unique_ptr<UncertaintyExtractor> unc_;
  std::unique_ptr<SpatialExtractor> cog_;
  std::unique_ptr<AuxAngleHead> aux_;
};

TensorPtr strip_to_tensor(const ObservationStrip& strip);  // rgb rows, (3, W)

Action select_action(const std::vector<double>& probs, bool greedy, Rng& rng);

// Cross-entropy against the expert action plus the weighted L1 distance
// between the predicted and true (sin, cos) of the goal bearing (dropped when
// the auxiliary task is ablated).
TensorPtr imitation_step_loss(const StepOutput& out, Action expert,
                              double true_angle, double lambda_aux,
                              bool use_at);

double bearing_to(const AgentPose& pose, Vec2 target);  // signed, (-pi, pi]

struct TrainConfig {
  int episodes = 400;
  int start_episode = 0;  // resume point; per-episode rng streams are indexed
  int max_steps = 100;
  int field_steps_per_action = 2;
  int field_batch = 96;
  std::size_t replay_capacity = 50000;
  double expert_floor = 0.25;  // expert probability anneals 1.0 -> floor
  double anneal_fraction = 0.5;
  double lr = 1e-3;
  double tier_weights[3] = {0.4, 0.4, 0.2};  // easy / medium / hard
  FieldConfig field_cfg;
};

struct EpisodeLogEntry {
  int episode = 0;
  double ce = 0.0;
  double aux = 0.0;
  bool success = false;
  int steps = 0;
};

// Imitation learning over episodes: per-step losses are summed and applied
// in one optimizer step per episode; executed actions mix the expert with
// the policy under an annealed expert probability.
std::vector<EpisodeLogEntry> train_policy(
    Policy& policy, const std::vector<Scene>& scenes, const TrainConfig& cfg,
    Rng rng,
    const std::function<void(const EpisodeLogEntry&)>& on_episode = nullptr);

}  // namespace navfield
