#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "navfield/checkpoint.hpp"
#include "navfield/config.hpp"
#include "navfield/io.hpp"
#include "navfield/ops.hpp"
#include "navfield/render.hpp"

namespace nf = navfield;

namespace {

struct CommonArgs {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out_dir;
  std::string ablate;
  int workers = 0;
  bool dump_viz = false;
};

nf::RunConfig resolve_config(const CommonArgs& a) {
  nf::RunConfig cfg;
  if (!a.config_path.empty()) cfg = nf::RunConfig::load(a.config_path);
  if (a.seed_set) cfg.seed = a.seed;
  if (!a.out_dir.empty()) cfg.out_dir = a.out_dir;
  if (!a.ablate.empty())
    cfg.policy.ablation = nf::AblationConfig::from_name(a.ablate);
  if (a.workers > 0) cfg.eval_workers = a.workers;
  cfg.train.field_cfg = cfg.field;
  cfg.train.field_cfg.feat_dim = cfg.policy.feat_dim;
  cfg.validate();
  return cfg;
}

std::string scenes_dir(const nf::RunConfig& cfg) {
  return cfg.out_dir + "/scenes";
}

void cmd_gen_scenes(const nf::RunConfig& cfg) {
  const std::string dir = scenes_dir(cfg);
  nf::ensure_dir(dir);
  nf::Rng root(cfg.seed);
  std::string manifest;
  char name[64];
  auto emit = [&](const char* split, int index, std::uint64_t scene_seed) {
    std::snprintf(name, sizeof(name), "%s_%03d.scene", split, index);
    nf::Scene::generate(scene_seed, cfg.scene).save(dir + "/" + name);
    manifest += std::string(split) + " " + name + "\n";
  };
  for (int i = 0; i < cfg.scene_train; ++i)
    emit("train", i, root.stream("scene-train", static_cast<std::uint64_t>(i))
                         .uniform_int(0, INT64_MAX));
  for (int i = 0; i < cfg.scene_val; ++i)
    emit("val", i, root.stream("scene-val", static_cast<std::uint64_t>(i))
                       .uniform_int(0, INT64_MAX));
  nf::write_text_file(dir + "/manifest.txt", manifest);
  std::printf("wrote %d train + %d val scenes to %s\n", cfg.scene_train,
              cfg.scene_val, dir.c_str());
}

std::vector<nf::Scene> load_split(const nf::RunConfig& cfg,
                                  const std::string& split) {
  const std::string dir = scenes_dir(cfg);
  std::istringstream manifest(nf::read_text_file(dir + "/manifest.txt"));
  std::vector<nf::Scene> scenes;
  std::string kind, file;
  while (manifest >> kind >> file)
    if (kind == split) scenes.push_back(nf::Scene::load(dir + "/" + file));
  if (scenes.empty())
    throw std::runtime_error("no '" + split + "' scenes in " + dir +
                             " (run gen-scenes first)");
  return scenes;
}

std::string ckpt_path(const nf::RunConfig& cfg, const nf::AblationConfig& ab) {
  return cfg.out_dir + "/policy_" + ab.name() + ".ckpt";
}

std::unique_ptr<nf::Policy> make_policy(const nf::RunConfig& cfg,
                                        const nf::AblationConfig& ab) {
  nf::PolicyConfig pcfg = cfg.policy;
  pcfg.ablation = ab;
  // same init stream for every ablation row: shared architecture, paired init
  return std::make_unique<nf::Policy>(pcfg,
                                      nf::Rng(cfg.seed).stream("policy-init"));
}

void cmd_train(const nf::RunConfig& cfg) {
  nf::ensure_dir(cfg.out_dir);
  const auto ab = cfg.policy.ablation;
  const std::string tag = ab.name();
  // resolved snapshot is on disk before any episode runs
  cfg.save(cfg.out_dir + "/config_" + tag + ".snapshot");
  auto scenes = load_split(cfg, "train");
  auto policy_ptr = make_policy(cfg, ab);
  nf::Policy& policy = *policy_ptr;

  nf::TrainConfig tcfg = cfg.train;
  const std::string ckpt = ckpt_path(cfg, ab);
  const std::string progress = cfg.out_dir + "/progress_" + tag + ".txt";
  if (std::filesystem::exists(progress) && std::filesystem::exists(ckpt)) {
    nf::load_checkpoint(ckpt, policy.params());
    std::ifstream(progress) >> tcfg.start_episode;
    std::printf("resuming %s from episode %d\n", tag.c_str(),
                tcfg.start_episode);
  }
  if (tcfg.start_episode >= tcfg.episodes) {
    std::printf("%s already trained (%d episodes)\n", tag.c_str(),
                tcfg.episodes);
    return;
  }

  std::ofstream log(cfg.out_dir + "/train_log_" + tag + ".txt",
                    std::ios::app);
  int done = tcfg.start_episode;
  auto on_episode = [&](const nf::EpisodeLogEntry& e) {
    log << nf::episode_log_line(e) << "\n";
    log.flush();
    done = e.episode + 1;
    if (done % 25 == 0 || done == tcfg.episodes) {
      nf::save_checkpoint(ckpt, policy.params());
      nf::write_text_file(progress, std::to_string(done) + "\n");
    }
    if (done % 10 == 0)
      std::printf("[%s] episode %d/%d ce=%.4f\n", tag.c_str(), done,
                  tcfg.episodes, e.ce);
  };
  nf::train_policy(policy, scenes, tcfg,
                   nf::Rng(cfg.seed).stream("train"), on_episode);
  nf::save_checkpoint(ckpt, policy.params());
  nf::write_text_file(progress, std::to_string(tcfg.episodes) + "\n");
  std::printf("trained %s -> %s\n", tag.c_str(), ckpt.c_str());
}

void dump_episode_viz(const nf::Scene& scene, const nf::Episode& episode,
                      const nf::Policy& policy, const nf::RolloutConfig& rcfg,
                      nf::Rng rng, const std::string& dir, int dump_steps) {
  nf::ensure_dir(dir);
  nf::FieldConfig fcfg = rcfg.field_cfg;
  fcfg.far = scene.far_clip();
  nf::OnlineField field(fcfg, rcfg.replay_capacity, rng.stream("field-init"));
  nf::Rng srng = rng.stream("field-sample");
  nf::Rng arng = rng.stream("policy");
  nf::DistanceField to_target(scene, episode.target);
  nf::AgentPose pose = episode.start;
  std::vector<nf::AgentPose> traj{pose};
  char name[64];
  for (int step = 0; step < rcfg.max_steps; ++step) {
    const auto obs =
        nf::render_observation(scene, pose, rcfg.strip_w, rcfg.fov);
    field.observe(pose, obs);
    for (int k = 0; k < rcfg.field_steps_per_action; ++k)
      field.train_step(rcfg.field_batch, srng);
    auto out = policy.forward(field.field(), pose, obs, episode.target_image);
    nf::Action a;
    {
      nf::NoGradGuard ng;
      a = nf::select_action(out.probs->data, false, arng);
    }
    if (step < dump_steps) {
      std::snprintf(name, sizeof(name), "%s/step%03d_obs.ppm", dir.c_str(),
                    step);
      nf::write_strip_ppm(name, obs.rgb);
      std::snprintf(name, sizeof(name), "%s/step%03d_uncertainty.ppm",
                    dir.c_str(), step);
      nf::write_scalar_strip_ppm(name, out.iu->data);
      // gradient of the chosen action's logit over the uncertainty strip
      std::vector<double> onehot(nf::kNumActions, 0.0);
      onehot[static_cast<std::size_t>(a)] = 1.0;
      auto chosen = nf::ops::sum_all(nf::ops::mul(
          out.logits,
          nf::Tensor::from_vector({1, nf::kNumActions}, onehot)));
      auto sal = nf::saliency_over_uncertainty(chosen, out.iu);
      const_cast<nf::Policy&>(policy).params().zero_grad();
      field.field().params().zero_grad();
      std::snprintf(name, sizeof(name), "%s/step%03d_saliency.ppm",
                    dir.c_str(), step);
      nf::write_scalar_strip_ppm(name, sal);
    }
    pose = nf::step_agent(scene, pose, a).pose;
    traj.push_back(pose);
    if (to_target.distance({pose.x, pose.y}) <= nf::kSuccessRadius) break;
    if (a == nf::Action::Stop) break;
  }
  nf::write_text_file(dir + "/trajectory.csv", nf::trajectory_csv(traj));
}

std::vector<std::pair<std::string, const nf::Policy*>> collect_policies(
    const nf::RunConfig& cfg, const std::vector<std::string>& tags,
    std::vector<std::unique_ptr<nf::Policy>>& storage) {
  std::vector<std::pair<std::string, const nf::Policy*>> out;
  for (const auto& tag : tags) {
    const auto ab = nf::AblationConfig::from_name(tag);
    const std::string path = ckpt_path(cfg, ab);
    if (!std::filesystem::exists(path))
      throw std::runtime_error("missing checkpoint for config '" + tag +
                               "': " + path);
    storage.push_back(make_policy(cfg, ab));
    nf::load_checkpoint(path, storage.back()->params());
    out.emplace_back(tag, storage.back().get());
  }
  return out;
}

int cmd_eval(const nf::RunConfig& cfg, bool dump_viz) {
  auto scenes = load_split(cfg, "val");
  std::vector<std::string> tags;
  if (std::filesystem::exists(ckpt_path(cfg, cfg.policy.ablation))) {
    tags.push_back(cfg.policy.ablation.name());
  }
  if (tags.empty())
    throw std::runtime_error("missing checkpoint: " +
                             ckpt_path(cfg, cfg.policy.ablation));
  std::vector<std::unique_ptr<nf::Policy>> storage;
  auto policies = collect_policies(cfg, tags, storage);
  auto rows = nf::evaluate_grid(policies, scenes, cfg.eval_episodes_per_tier,
                                cfg.rollout_cfg(),
                                nf::Rng(cfg.seed).stream("eval").uniform_int(
                                    0, INT64_MAX),
                                cfg.eval_workers);
  const std::string csv = nf::grid_csv(rows);
  nf::ensure_dir(cfg.out_dir);
  nf::write_text_file(cfg.out_dir + "/metrics.csv", csv);
  std::fputs(csv.c_str(), stdout);
  if (dump_viz) {
    const auto set = nf::build_eval_set(scenes, 1,
                                        nf::Rng(cfg.seed)
                                            .stream("eval")
                                            .uniform_int(0, INT64_MAX),
                                        cfg.policy.strip_w, cfg.policy.fov);
    for (std::size_t i = 0; i < set.size(); ++i) {
      char dir[128];
      std::snprintf(dir, sizeof(dir), "%s/viz/%s_ep%zu", cfg.out_dir.c_str(),
                    nf::tier_name(set[i].tier), i);
      dump_episode_viz(scenes[set[i].scene_index], set[i].episode,
                       *storage.front(), cfg.rollout_cfg(),
                       nf::Rng(cfg.seed).stream("viz", i), dir, 12);
    }
    std::printf("visual dumps under %s/viz\n", cfg.out_dir.c_str());
  }
  return 0;
}

const char* kAblationRows[6] = {"full",    "no-fu",   "no-at",
                                "no-cbam", "fu-only", "none"};

int cmd_ablate(nf::RunConfig cfg) {
  for (const char* tag : kAblationRows) {
    cfg.policy.ablation = nf::AblationConfig::from_name(tag);
    cmd_train(cfg);
  }
  auto scenes = load_split(cfg, "val");
  std::vector<std::string> tags(std::begin(kAblationRows),
                                std::end(kAblationRows));
  std::vector<std::unique_ptr<nf::Policy>> storage;
  auto policies = collect_policies(cfg, tags, storage);
  auto rows = nf::evaluate_grid(policies, scenes, cfg.eval_episodes_per_tier,
                                cfg.rollout_cfg(),
                                nf::Rng(cfg.seed).stream("eval").uniform_int(
                                    0, INT64_MAX),
                                cfg.eval_workers);
  const std::string csv = nf::grid_csv(rows);
  nf::write_text_file(cfg.out_dir + "/ablation.csv", csv);
  std::fputs(csv.c_str(), stdout);
  return 0;
}

int cmd_viz(const nf::RunConfig& cfg) {
  auto scenes = load_split(cfg, "val");
  const auto ab = cfg.policy.ablation;
  auto policy_ptr = make_policy(cfg, ab);
  nf::Policy& policy = *policy_ptr;
  const std::string path = ckpt_path(cfg, ab);
  if (std::filesystem::exists(path))
    nf::load_checkpoint(path, policy.params());
  else
    std::printf("no checkpoint at %s; visualizing the untrained policy\n",
                path.c_str());
  const auto set = nf::build_eval_set(
      scenes, 1, nf::Rng(cfg.seed).stream("viz-set").uniform_int(0, INT64_MAX),
      cfg.policy.strip_w, cfg.policy.fov);
  for (std::size_t i = 0; i < set.size(); ++i) {
    char dir[128];
    std::snprintf(dir, sizeof(dir), "%s/viz/%s_ep%zu", cfg.out_dir.c_str(),
                  nf::tier_name(set[i].tier), i);
    dump_episode_viz(scenes[set[i].scene_index], set[i].episode, policy,
                     cfg.rollout_cfg(), nf::Rng(cfg.seed).stream("viz", i),
                     dir, 12);
    std::printf("wrote %s\n", dir);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"navfield: online radiance-field navigation testbed"};
  app.require_subcommand(1);

  CommonArgs args;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", args.config_path, "key=value config file");
    sub->add_option("--seed", args.seed, "root seed override")
        ->each([&](const std::string&) { args.seed_set = true; });
    sub->add_option("--out", args.out_dir, "output directory override");
    sub->add_option("--ablate", args.ablate,
                    "ablation row: full, no-fu, no-at, no-cbam, fu-only, none");
    sub->add_option("--workers", args.workers, "evaluation worker threads");
    sub->add_flag("--dump-viz", args.dump_viz,
                  "write per-episode image dumps during eval");
  };

  auto* gen = app.add_subcommand("gen-scenes", "generate the scene splits");
  auto* train = app.add_subcommand("train", "imitation-train one policy");
  auto* eval = app.add_subcommand("eval", "evaluate checkpoints on the validation split");
  auto* ablate = app.add_subcommand("ablate", "train + evaluate all ablation rows");
  auto* viz = app.add_subcommand("viz", "dump uncertainty/saliency strips for sample episodes");
  for (auto* sub : {gen, train, eval, ablate, viz}) add_common(sub);

  CLI11_PARSE(app, argc, argv);

  try {
    const nf::RunConfig cfg = resolve_config(args);
    if (gen->parsed()) cmd_gen_scenes(cfg);
    if (train->parsed()) cmd_train(cfg);
    if (eval->parsed()) return cmd_eval(cfg, args.dump_viz);
    if (ablate->parsed()) return cmd_ablate(cfg);
    if (viz->parsed()) return cmd_viz(cfg);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
