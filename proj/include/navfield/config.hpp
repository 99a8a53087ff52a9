#pragma once

#include "navfield/eval.hpp"

namespace navfield {

// Flat key=value run configuration covering every module default. Unknown
// keys are rejected; values are validated against module preconditions.
struct RunConfig {
  std::uint64_t seed = 7;
  std::string out_dir = "runs/default";

  int scene_train = 21;
  int scene_val = 14;
  SceneConfig scene;

  FieldConfig field;
  PolicyConfig policy;
  TrainConfig train;

  int eval_episodes_per_tier = 40;
  int eval_max_steps = 800;
  int eval_workers = 1;

  void validate() const;
  std::string to_text() const;  // snapshot, parseable by parse/load
  void set(const std::string& key, const std::string& value);

  static RunConfig parse(const std::string& text);
  static RunConfig load(const std::string& path);
  void save(const std::string& path) const;

  RolloutConfig rollout_cfg() const;
};

}  // namespace navfield
