#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "navfield/eval.hpp"

using namespace navfield;

namespace {

FieldConfig small_field_cfg() {
  FieldConfig cfg;
  cfg.pos_freqs = 2;
  cfg.dir_freqs = 1;
  cfg.hidden = 8;
  cfg.feat_dim = 4;
  cfg.samples_per_ray = 4;
  return cfg;
}

PolicyConfig small_policy_cfg() {
  PolicyConfig cfg;
  cfg.strip_w = 16;
  cfg.feat_dim = 4;
  return cfg;
}

RolloutConfig small_rollout_cfg() {
  RolloutConfig cfg;
  cfg.max_steps = 30;
  cfg.strip_w = 16;
  cfg.field_steps_per_action = 1;
  cfg.field_batch = 16;
  cfg.field_cfg = small_field_cfg();
  return cfg;
}

// A field whose predictive variance grows with world x and whose density is
// constant, so ray uncertainties are exactly comparable across headings.
Field crafted_field(double slope) {
  Field f(small_field_cfg(), Rng(0));
  for (const auto& [name, t] : f.params().entries())
    for (auto& v : t->data) v = 0.0;
  f.params().get("trunk.l1.w")->data[0] = 1.0;  // h1[0] = relu(x) = x
  f.params().get("trunk.l2.w")->data[0] = 1.0;  // h2[0] = x
  f.params().get("head.beta2.w")->data[0] = slope;
  f.params().get("head.sigma.b")->data[0] = 1.0;  // constant density
  return f;
}

bool same_result(const EpisodeResult& a, const EpisodeResult& b) {
  return a.success == b.success && a.steps == b.steps &&
         a.path_length == b.path_length && a.final_distance == b.final_distance &&
         a.collisions == b.collisions;
}

}  // namespace

TEST_CASE("metric definitions on hand examples") {
  EpisodeResult ideal;
  ideal.success = true;
  ideal.shortest_path = 4.0;
  ideal.path_length = 4.0;
  ideal.final_distance = 0.3;
  auto m = compute_metrics({ideal});
  CHECK(m.sr == 1.0);
  CHECK(m.spl == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m.dts == 0.0);

  EpisodeResult fail;
  fail.success = false;
  fail.shortest_path = 4.0;
  fail.path_length = 10.0;
  fail.final_distance = 2.8;
  m = compute_metrics({fail});
  CHECK(m.sr == 0.0);
  CHECK(m.spl == 0.0);
  CHECK(m.dts == doctest::Approx(2.0).epsilon(1e-12));  // 2.8 - 0.8

  // detours discount SPL; success inside the radius zeroes DTS
  EpisodeResult detour = ideal;
  detour.path_length = 8.0;
  m = compute_metrics({ideal, fail, detour});
  CHECK(m.sr == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(m.spl == doctest::Approx((1.0 + 0.5) / 3.0).epsilon(1e-12));
  CHECK(m.spl <= m.sr);
  CHECK(m.n == 3);

  // a success shorter than the geodesic cannot exceed SPL 1
  EpisodeResult lucky = ideal;
  lucky.path_length = 2.0;  // ended within the radius early
  m = compute_metrics({lucky});
  CHECK(m.spl == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS(compute_metrics({}));
}

TEST_CASE("episode rollouts: expert succeeds, stop policy stops") {
  Scene s = Scene::generate(91);
  Episode ep;
  Rng er(92);
  ep = sample_episode(s, Tier::Easy, er, 16, M_PI / 2.0);
  const auto cfg = small_rollout_cfg();

  RolloutConfig expert_cfg = cfg;
  expert_cfg.use_field = false;  // the scripted expert never reads the field
  expert_cfg.max_steps = 200;
  const auto r = run_episode(s, ep, expert_policy(), expert_cfg, Rng(93));
  CHECK(r.success);
  CHECK(r.final_distance <= kSuccessRadius);
  CHECK(r.steps <= 200);
  CHECK(r.shortest_path == ep.shortest_path);
  CHECK(r.trajectory.size() == static_cast<std::size_t>(r.steps) + 1);
  CHECK(r.path_length >= 0.0);

  const auto stop = run_episode(s, ep, always_stop_policy(), expert_cfg, Rng(93));
  CHECK(stop.steps == 1);
  CHECK_FALSE(stop.success);  // tiers start at least 1.5 away

  // spawned within the success radius: the stop step succeeds immediately
  Episode close = ep;
  close.start.x = ep.target.x + 0.3;
  close.start.y = ep.target.y;
  if (s.free_at(close.start.x, close.start.y)) {
    const auto near_r =
        run_episode(s, close, always_stop_policy(), expert_cfg, Rng(93));
    CHECK(near_r.success);
    CHECK(near_r.steps == 1);
  }

  // identical seeds reproduce the full result record
  const auto again = run_episode(s, ep, expert_policy(), expert_cfg, Rng(93));
  CHECK(same_result(r, again));
}

TEST_CASE("learned-policy rollouts are deterministic") {
  Scene s = Scene::generate(94);
  Rng er(95);
  const auto ep = sample_episode(s, Tier::Easy, er, 16, M_PI / 2.0);
  Policy policy(small_policy_cfg(), Rng(96));
  const auto cfg = small_rollout_cfg();
  const auto a = run_episode(s, ep, learned_policy(policy, false), cfg, Rng(97));
  const auto b = run_episode(s, ep, learned_policy(policy, false), cfg, Rng(97));
  CHECK(same_result(a, b));
  CHECK(a.steps >= 1);
}

TEST_CASE("uncertainty-greedy rule: exact tie goes forward, else turn to max") {
  Scene s = Scene::from_grid(1, {"#######",
                                 "#.....#",
                                 "#.....#",
                                 "#.....#",
                                 "#.....#",
                                 "#.....#",
                                 "#######"});
  // constant-uncertainty field: perfect tie, keep the current heading
  Field flat = crafted_field(0.0);
  CHECK(uncertainty_greedy_action(s, flat, {3.5, 3.5, M_PI / 2.0}, 8,
                                  M_PI / 2.0) == Action::Forward);
  // blocked forward on a tie turns left
  CHECK(uncertainty_greedy_action(s, flat, {5.85, 3.5, 0.0}, 8, M_PI / 2.0) ==
        Action::TurnLeft);
  // variance rising with +x, heading +y: the right turn sees more of +x
  Field rising = crafted_field(1.0);
  CHECK(uncertainty_greedy_action(s, rising, {3.5, 3.5, M_PI / 2.0}, 8,
                                  M_PI / 2.0) == Action::TurnRight);
  // and the mirrored field sends it left
  Field falling = crafted_field(-1.0);
  CHECK(uncertainty_greedy_action(s, falling, {3.5, 3.5, M_PI / 2.0}, 8,
                                  M_PI / 2.0) == Action::TurnLeft);
}

TEST_CASE("coverage: empty, exhaustive, monotone") {
  Scene s = Scene::from_grid(1, {"#####",
                                 "#...#",
                                 "#...#",
                                 "#...#",
                                 "#####"});
  CHECK(coverage({}, s) == 0.0);
  std::vector<AgentPose> all;
  for (int cy = 1; cy <= 3; ++cy)
    for (int cx = 1; cx <= 3; ++cx) all.push_back({cx + 0.5, cy + 0.5, 0.0});
  CHECK(coverage(all, s) == doctest::Approx(1.0).epsilon(1e-12));
  double prev = 0.0;
  for (std::size_t n = 0; n <= all.size(); ++n) {
    const double c =
        coverage(std::vector<AgentPose>(all.begin(), all.begin() + n), s);
    CHECK(c >= prev);
    prev = c;
  }
}

TEST_CASE("evaluation sets are paired and the grid is deterministic") {
  std::vector<Scene> scenes = {Scene::generate(98), Scene::generate(99),
                               Scene::generate(100)};
  const auto set1 = build_eval_set(scenes, 2, 1234, 16, M_PI / 2.0);
  const auto set2 = build_eval_set(scenes, 2, 1234, 16, M_PI / 2.0);
  REQUIRE(set1.size() == 6);
  for (std::size_t i = 0; i < set1.size(); ++i) {
    CHECK(set1[i].scene_index == set2[i].scene_index);
    CHECK(set1[i].episode.start.x == set2[i].episode.start.x);
    CHECK(set1[i].episode.target.x == set2[i].episode.target.x);
    const auto band = tier_band(set1[i].tier);
    CHECK(set1[i].episode.shortest_path >= band.first - 1e-9);
    CHECK(set1[i].episode.shortest_path <= band.second + 1e-9);
  }

  Policy policy(small_policy_cfg(), Rng(101));
  const auto rows1 = evaluate_grid({{"full", &policy}}, scenes, 2,
                                   small_rollout_cfg(), 1234, 1);
  const auto rows2 = evaluate_grid({{"full", &policy}}, scenes, 2,
                                   small_rollout_cfg(), 1234, 1);
  REQUIRE(rows1.size() == 4);  // three tiers + total
  CHECK(rows1[3].tier == "total");
  for (std::size_t i = 0; i < rows1.size(); ++i) {
    CHECK(rows1[i].metrics.sr == rows2[i].metrics.sr);
    CHECK(rows1[i].metrics.spl == rows2[i].metrics.spl);
    CHECK(rows1[i].metrics.dts == rows2[i].metrics.dts);
    CHECK(rows1[i].metrics.spl <= rows1[i].metrics.sr + 1e-12);
    CHECK(rows1[i].metrics.sr >= 0.0);
    CHECK(rows1[i].metrics.sr <= 1.0);
    CHECK(rows1[i].metrics.dts >= 0.0);
  }
  CHECK(grid_csv(rows1).rfind("config,tier,n,sr,spl,dts\n", 0) == 0);
  CHECK_THROWS_WITH_AS(
      evaluate_grid({{"ghost", nullptr}}, scenes, 1, small_rollout_cfg(), 1, 1),
      doctest::Contains("ghost"), std::runtime_error);
}

TEST_CASE("multi-worker evaluation matches single-worker results") {
  std::vector<Scene> scenes = {Scene::generate(102), Scene::generate(103)};
  const auto set = build_eval_set(scenes, 1, 55, 16, M_PI / 2.0);
  Policy policy(small_policy_cfg(), Rng(104));
  const auto cfg = small_rollout_cfg();
  const auto one =
      run_eval_set(scenes, set, learned_policy(policy, false), cfg, 55, 1);
  const auto two =
      run_eval_set(scenes, set, learned_policy(policy, false), cfg, 55, 2);
  REQUIRE(one.size() == two.size());
  for (std::size_t i = 0; i < one.size(); ++i)
    CHECK(same_result(one[i], two[i]));
}
