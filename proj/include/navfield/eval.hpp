#pragma once

#include "navfield/policy.hpp"

namespace navfield {

struct EpisodeResult {
  bool success = false;
  int steps = 0;
  double path_length = 0.0;     // sum of realized forward displacements
  double shortest_path = 0.0;   // geodesic at start
  double final_distance = 0.0;  // geodesic to target at termination
  int collisions = 0;
  std::vector<AgentPose> trajectory;  // includes the start pose
};

struct Metrics {
  double sr = 0.0;
  double spl = 0.0;
  double dts = 0.0;
  int n = 0;
};

// SR = mean success; SPL = mean of S * l / max(p, l); DTS = mean of
// max(0, final geodesic - success radius). Throws on an empty list.
Metrics compute_metrics(const std::vector<EpisodeResult>& results);

struct RolloutConfig {
  int max_steps = 800;
  int strip_w = 64;
  double fov = M_PI / 2.0;
  bool use_field = true;  // skip field updates for policies that ignore it
  int field_steps_per_action = 2;
  int field_batch = 96;
  std::size_t replay_capacity = 50000;
  FieldConfig field_cfg;
};

// Per-step decision: full view of the rollout state, returns the action.
using StepPolicy = std::function<Action(
    const Scene& scene, const OnlineField& field, const AgentPose& pose,
    const ObservationStrip& obs, const Episode& episode, Rng& rng)>;

EpisodeResult run_episode(const Scene& scene, const Episode& episode,
                          const StepPolicy& policy, const RolloutConfig& cfg,
                          Rng rng);

// Reference policies.
StepPolicy learned_policy(const Policy& policy, bool greedy);
StepPolicy expert_policy();
StepPolicy random_walk_policy();  // Forward/TurnLeft/TurnRight uniform
StepPolicy always_stop_policy();
StepPolicy uncertainty_greedy_policy();

// One decision of the uncertainty-greedy rule. Each candidate heading
// (current, one turn step left, one turn step right) is scored by the mean
// rendered uncertainty a few forward steps along it. Forward wins ties and
// near-ties; a turn never immediately reverses `prev`, which would otherwise
// lock the deterministic rule into left-right oscillation.
Action uncertainty_greedy_action(const Scene& scene, const Field& field,
                                 const AgentPose& pose, int strip_w, double fov,
                                 Action prev = Action::Stop);

// Visited free cells (agent center within 0.5 units of the cell center)
// over total free cells.
double coverage(const std::vector<AgentPose>& trajectory, const Scene& scene);

// Fixed episode set shared across configs: deterministic in (seed, scenes,
// episodes_per_tier), independent of any policy.
struct EvalEpisode {
  std::size_t scene_index = 0;
  Tier tier = Tier::Easy;
  Episode episode;
};
std::vector<EvalEpisode> build_eval_set(const std::vector<Scene>& scenes,
                                        int episodes_per_tier,
                                        std::uint64_t seed, int strip_w,
                                        double fov);

// Rollouts over a fixed episode set; results indexed like the set. Episodes
// run on `workers` threads; aggregation order is by episode index.
std::vector<EpisodeResult> run_eval_set(const std::vector<Scene>& scenes,
                                        const std::vector<EvalEpisode>& set,
                                        const StepPolicy& policy,
                                        const RolloutConfig& cfg,
                                        std::uint64_t seed, int workers = 1);

struct GridRow {
  std::string config;
  std::string tier;  // tier name or "total"
  Metrics metrics;
};

// Paired ablation table: every config row is evaluated on the same episode
// set. Returns per-tier rows plus a "total" row per config.
std::vector<GridRow> evaluate_grid(
    const std::vector<std::pair<std::string, const Policy*>>& policies,
    const std::vector<Scene>& scenes, int episodes_per_tier,
    const RolloutConfig& cfg, std::uint64_t seed, int workers = 1);

std::string grid_csv(const std::vector<GridRow>& rows);

}  // namespace navfield
