#include "navfield/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <thread>
#include <unordered_set>

#include "navfield/ops.hpp"
#include "navfield/render.hpp"

namespace navfield {

Metrics compute_metrics(const std::vector<EpisodeResult>& results) {
  if (results.empty())
    throw std::runtime_error("compute_metrics: empty result list");
  Metrics m;
  m.n = static_cast<int>(results.size());
  for (const auto& r : results) {
    m.sr += r.success ? 1.0 : 0.0;
    if (r.success)
      m.spl += r.shortest_path / std::max(r.path_length, r.shortest_path);
    m.dts += std::max(0.0, r.final_distance - kSuccessRadius);
  }
  m.sr /= m.n;
  m.spl /= m.n;
  m.dts /= m.n;
  return m;
}

EpisodeResult run_episode(const Scene& scene, const Episode& episode,
                          const StepPolicy& policy, const RolloutConfig& cfg,
                          Rng rng) {
  DistanceField to_target(scene, episode.target);
  FieldConfig fcfg = cfg.field_cfg;
  fcfg.far = scene.far_clip();
  OnlineField field(fcfg, cfg.replay_capacity, rng.stream("field-init"));
  Rng sample_rng = rng.stream("field-sample");
  Rng act_rng = rng.stream("policy");

  EpisodeResult r;
  r.shortest_path = episode.shortest_path;
  AgentPose pose = episode.start;
  r.trajectory.push_back(pose);
  for (int step = 0; step < cfg.max_steps; ++step) {
    const auto obs = render_observation(scene, pose, cfg.strip_w, cfg.fov);
    if (cfg.use_field) {
      field.observe(pose, obs);
      for (int k = 0; k < cfg.field_steps_per_action; ++k)
        field.train_step(cfg.field_batch, sample_rng);
    }
    const Action a = policy(scene, field, pose, obs, episode, act_rng);
    const auto result = step_agent(scene, pose, a);
    r.path_length += std::hypot(result.pose.x - pose.x, result.pose.y - pose.y);
    if (result.collided) ++r.collisions;
    pose = result.pose;
    r.trajectory.push_back(pose);
    r.steps = step + 1;
    if (to_target.distance({pose.x, pose.y}) <= kSuccessRadius) {
      r.success = true;
      break;
    }
    if (a == Action::Stop) break;
  }
  r.final_distance = to_target.distance({pose.x, pose.y});
  return r;
}

StepPolicy learned_policy(const Policy& policy, bool greedy) {
  return [&policy, greedy](const Scene&, const OnlineField& field,
                           const AgentPose& pose, const ObservationStrip& obs,
                           const Episode& episode, Rng& rng) {
    NoGradGuard ng;
    auto out = policy.forward(field.field(), pose, obs, episode.target_image);
    return select_action(out.probs->data, greedy, rng);
  };
}

StepPolicy expert_policy() {
  return [](const Scene& scene, const OnlineField&, const AgentPose& pose,
            const ObservationStrip&, const Episode& episode, Rng&) {
    return expert_action(scene, pose, episode.target);
  };
}

StepPolicy random_walk_policy() {
  return [](const Scene&, const OnlineField&, const AgentPose&,
            const ObservationStrip&, const Episode&, Rng& rng) {
    return static_cast<Action>(rng.uniform_int(0, 2));  // never Stop
  };
}

StepPolicy always_stop_policy() {
  return [](const Scene&, const OnlineField&, const AgentPose&,
            const ObservationStrip&, const Episode&, Rng&) {
    return Action::Stop;
  };
}

// Scores a heading by the view uncertainty a few forward steps out, so the
// walker is drawn toward poorly observed space rather than judging turns by
// the view from where it already stands.
static double heading_uncertainty(const Scene& scene, const Field& field,
                                  AgentPose p, int strip_w, double fov,
                                  int lookahead) {
  NoGradGuard ng;
  for (int i = 0; i < lookahead; ++i) {
    if (forward_blocked(scene, p)) break;
    p = step_agent(scene, p, Action::Forward).pose;
  }
  auto maps = render_maps(field, p, strip_w, fov);
  return ops::mean_all(maps.uncertainty)->item();
}

Action uncertainty_greedy_action(const Scene& scene, const Field& field,
                                 const AgentPose& pose, int strip_w, double fov,
                                 Action prev) {
  constexpr int kLookahead = 4;
  AgentPose l = pose, r = pose;
  l.theta = wrap_two_pi(pose.theta + kTurnStep);
  r.theta = wrap_two_pi(pose.theta - kTurnStep);
  const bool blocked = forward_blocked(scene, pose);
  const double fwd =
      blocked ? -1.0
              : heading_uncertainty(scene, field, pose, strip_w, fov, kLookahead);
  double left = heading_uncertainty(scene, field, l, strip_w, fov, kLookahead);
  double right = heading_uncertainty(scene, field, r, strip_w, fov, kLookahead);
  // A turn may not immediately undo the previous turn; without this the
  // greedy rule locks into left-right oscillation on flat uncertainty.
  if (prev == Action::TurnLeft) right = -2.0;
  if (prev == Action::TurnRight) left = -2.0;
  // Slight stickiness: keep moving unless a turn is clearly better.
  if (!blocked && fwd >= 0.95 * std::max(left, right)) return Action::Forward;
  if (fwd >= left && fwd >= right) return Action::Forward;
  return left >= right ? Action::TurnLeft : Action::TurnRight;
}

StepPolicy uncertainty_greedy_policy() {
  auto prev = std::make_shared<Action>(Action::Stop);
  return [prev](const Scene& scene, const OnlineField& field,
                const AgentPose& pose, const ObservationStrip& obs,
                const Episode&, Rng&) {
    const Action a = uncertainty_greedy_action(scene, field.field(), pose,
                                               obs.width, obs.fov, *prev);
    *prev = a;
    return a;
  };
}

double coverage(const std::vector<AgentPose>& trajectory, const Scene& scene) {
  const int total = scene.free_cell_count();
  if (total == 0) return 0.0;
  std::unordered_set<int> visited;
  for (const auto& p : trajectory) {
    const int cx0 = static_cast<int>(std::floor(p.x - 0.5));
    const int cy0 = static_cast<int>(std::floor(p.y - 0.5));
    for (int cy = cy0; cy <= cy0 + 1; ++cy)
      for (int cx = cx0; cx <= cx0 + 1; ++cx) {
        if (scene.wall(cx, cy)) continue;
        const double dx = p.x - (cx + 0.5), dy = p.y - (cy + 0.5);
        if (dx * dx + dy * dy <= 0.25) visited.insert(cy * scene.width() + cx);
      }
  }
  return static_cast<double>(visited.size()) / total;
}

std::vector<EvalEpisode> build_eval_set(const std::vector<Scene>& scenes,
                                        int episodes_per_tier,
                                        std::uint64_t seed, int strip_w,
                                        double fov) {
  if (scenes.empty()) throw std::runtime_error("build_eval_set: no scenes");
  Rng base(seed);
  std::vector<EvalEpisode> set;
  set.reserve(static_cast<std::size_t>(3 * episodes_per_tier));
  const Tier tiers[3] = {Tier::Easy, Tier::Medium, Tier::Hard};
  for (int t = 0; t < 3; ++t) {
    for (int i = 0; i < episodes_per_tier; ++i) {
      bool placed = false;
      for (std::size_t attempt = 0; attempt < scenes.size() && !placed;
           ++attempt) {
        const std::size_t si = (static_cast<std::size_t>(i) + attempt) %
                               scenes.size();
        Rng er = base.stream(tier_name(tiers[t]),
                             static_cast<std::uint64_t>(i) * 64 + attempt);
        try {
          EvalEpisode ee;
          ee.scene_index = si;
          ee.tier = tiers[t];
          ee.episode = sample_episode(scenes[si], tiers[t], er, strip_w, fov);
          set.push_back(std::move(ee));
          placed = true;
        } catch (const std::exception&) {
        }
      }
      if (!placed)
        throw std::runtime_error(std::string("build_eval_set: no scene admits a ") +
                                 tier_name(tiers[t]) + " episode");
    }
  }
  return set;
}

std::vector<EpisodeResult> run_eval_set(const std::vector<Scene>& scenes,
                                        const std::vector<EvalEpisode>& set,
                                        const StepPolicy& policy,
                                        const RolloutConfig& cfg,
                                        std::uint64_t seed, int workers) {
  std::vector<EpisodeResult> results(set.size());
  Rng base(seed);
  auto worker = [&](std::size_t first, std::size_t stride) {
    for (std::size_t i = first; i < set.size(); i += stride) {
      const auto& ee = set[i];
      results[i] = run_episode(scenes[ee.scene_index], ee.episode, policy, cfg,
                               base.stream("rollout", i));
    }
  };
  if (workers <= 1) {
    worker(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t)
      pool.emplace_back(worker, static_cast<std::size_t>(t),
                        static_cast<std::size_t>(workers));
    for (auto& th : pool) th.join();
  }
  return results;
}

std::vector<GridRow> evaluate_grid(
    const std::vector<std::pair<std::string, const Policy*>>& policies,
    const std::vector<Scene>& scenes, int episodes_per_tier,
    const RolloutConfig& cfg, std::uint64_t seed, int workers) {
  const auto set =
      build_eval_set(scenes, episodes_per_tier, seed, cfg.strip_w, cfg.fov);
  std::vector<GridRow> rows;
  for (const auto& [name, policy] : policies) {
    if (!policy)
      throw std::runtime_error("evaluate_grid: missing policy for config " +
                               name);
    const auto results =
        run_eval_set(scenes, set, learned_policy(*policy, false), cfg, seed,
                     workers);
    const Tier tiers[3] = {Tier::Easy, Tier::Medium, Tier::Hard};
    for (Tier t : tiers) {
      std::vector<EpisodeResult> sub;
      for (std::size_t i = 0; i < set.size(); ++i)
        if (set[i].tier == t) sub.push_back(results[i]);
      if (!sub.empty())
        rows.push_back({name, tier_name(t), compute_metrics(sub)});
    }
    rows.push_back({name, "total", compute_metrics(results)});
  }
  return rows;
}

std::string grid_csv(const std::vector<GridRow>& rows) {
  std::string out = "config,tier,n,sr,spl,dts\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%s,%d,%.6f,%.6f,%.6f\n",
                  r.config.c_str(), r.tier.c_str(), r.metrics.n, r.metrics.sr,
                  r.metrics.spl, r.metrics.dts);
    out += buf;
  }
  return out;
}

}  // namespace navfield
