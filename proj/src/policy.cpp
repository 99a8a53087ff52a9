#include "navfield/policy.hpp"

#include <cmath>

#include "navfield/ops.hpp"
#include "navfield/render.hpp"

namespace navfield {

std::string AblationConfig::name() const {
  if (use_fu && use_at && use_cbam) return "full";
  if (!use_fu && use_at && use_cbam) return "no-fu";
  if (use_fu && !use_at && use_cbam) return "no-at";
  if (use_fu && use_at && !use_cbam) return "no-cbam";
  if (use_fu && !use_at && !use_cbam) return "fu-only";
  if (!use_fu && !use_at && !use_cbam) return "none";
  return std::string(use_fu ? "fu" : "nofu") + (use_at ? "-at" : "-noat") +
         (use_cbam ? "-cbam" : "-nocbam");
}

AblationConfig AblationConfig::from_name(const std::string& name) {
  if (name == "full") return {true, true, true};
  if (name == "no-fu") return {false, true, true};
  if (name == "no-at") return {true, false, true};
  if (name == "no-cbam") return {true, true, false};
  if (name == "fu-only") return {true, false, false};
  if (name == "none") return {false, false, false};
  throw std::runtime_error("unknown ablation name: " + name);
}

ExtractorConfig PolicyConfig::extractor_cfg() const {
  ExtractorConfig e;
  e.strip_w = strip_w;
  e.feat_dim = feat_dim;
  return e;
}

namespace {

TensorPtr mat_xavier(std::int64_t in, std::int64_t out, Rng& rng) {
  const double limit = std::sqrt(6.0 / (in + out));
  std::vector<double> data(static_cast<std::size_t>(in * out));
  for (auto& d : data) d = rng.uniform(-limit, limit);
  return Tensor::from_vector({in, out}, std::move(data));
}

TensorPtr conv_xavier(std::int64_t out_ch, std::int64_t in_ch, std::int64_t k,
                      Rng& rng) {
  const double limit = std::sqrt(6.0 / (static_cast<double>(in_ch * k) +
                                        static_cast<double>(out_ch * k)));
  std::vector<double> data(static_cast<std::size_t>(out_ch * in_ch * k));
  for (auto& d : data) d = rng.uniform(-limit, limit);
  return Tensor::from_vector({out_ch, in_ch, k}, std::move(data));
}

void add_linear(ParamSet& ps, const std::string& name, std::int64_t in,
                std::int64_t out, Rng& rng) {
  ps.add(name + ".w", mat_xavier(in, out, rng));
  ps.add(name + ".b", Tensor::zeros({1, out}));
}

void add_conv(ParamSet& ps, const std::string& name, std::int64_t in_ch,
              std::int64_t out_ch, std::int64_t k, Rng& rng) {
  ps.add(name + ".w", conv_xavier(out_ch, in_ch, k, rng));
  ps.add(name + ".b", Tensor::zeros({out_ch, 1}));
}

TensorPtr linear(const ParamSet& ps, const std::string& name, const TensorPtr& x) {
  return ops::add(ops::matmul(x, ps.get(name + ".w")), ps.get(name + ".b"));
}

TensorPtr conv_bias(const ParamSet& ps, const std::string& name,
                    const TensorPtr& x, std::int64_t stride, std::int64_t pad) {
  return ops::add(ops::conv1d(x, ps.get(name + ".w"), stride, pad),
                  ps.get(name + ".b"));
}

}  // namespace

Policy::Policy(PolicyConfig cfg, Rng rng) : cfg_(cfg) {
  const auto ecfg = cfg_.extractor_cfg();
  unc_ = std::make_unique<UncertaintyExtractor>(ecfg, rng, params_);
  cog_ = std::make_unique<SpatialExtractor>(ecfg, rng, params_);
  aux_ = std::make_unique<AuxAngleHead>(ecfg, rng, params_);
  add_conv(params_, "perc.conv1", 4, 8, 3, rng);
  add_conv(params_, "perc.conv2", 8, 16, 3, rng);
  add_linear(params_, "perc.fc", 16 * (cfg_.strip_w / 16), 64, rng);
  add_linear(params_, "fusion.attn", 192, 192, rng);
  add_linear(params_, "fusion.fc", 192, 64, rng);
  add_linear(params_, "head.fc1", 64, 32, rng);
  add_linear(params_, "head.fc2", 32, 4, rng);
}

TensorPtr strip_to_tensor(const ObservationStrip& strip) {
  const std::int64_t w = strip.width;
  std::vector<double> data(static_cast<std::size_t>(3 * w));
  for (std::int64_t i = 0; i < w; ++i)
    for (int c = 0; c < 3; ++c)
      data[static_cast<std::size_t>(c * w + i)] =
          strip.rgb[static_cast<std::size_t>(i) * 3 + c];
  return Tensor::from_vector({3, w}, std::move(data));
}

TensorPtr Policy::perception_encode(const ObservationStrip& obs,
                                    double far) const {
  const std::int64_t w = obs.width;
  std::vector<double> data(static_cast<std::size_t>(4 * w));
  for (std::int64_t i = 0; i < w; ++i) {
    for (int c = 0; c < 3; ++c)
      data[static_cast<std::size_t>(c * w + i)] =
          obs.rgb[static_cast<std::size_t>(i) * 3 + c];
    data[static_cast<std::size_t>(3 * w + i)] =
        obs.depth[static_cast<std::size_t>(i)] / far;
  }
  auto x = Tensor::from_vector({4, w}, std::move(data));
  auto h = ops::relu(conv_bias(params_, "perc.conv1", x, 4, 1));
  h = ops::relu(conv_bias(params_, "perc.conv2", h, 4, 1));
  auto flat = ops::reshape(h, {1, h->numel()});
  return ops::relu(linear(params_, "perc.fc", flat));
}

TensorPtr Policy::fuse(const TensorPtr& f_cog, const TensorPtr& f_u,
                       const TensorPtr& f_p) const {
  auto cat1 = ops::concat({f_cog, f_u, f_p}, 1);  // (1, 192)
  auto w = ops::sigmoid(linear(params_, "fusion.attn", cat1));
  return ops::relu(linear(params_, "fusion.fc", ops::mul(w, cat1)));
}

TensorPtr Policy::action_logits(const TensorPtr& fused) const {
  auto h = ops::relu(linear(params_, "head.fc1", fused));
  return linear(params_, "head.fc2", h);
}

StepOutput Policy::forward(const Field& field, const AgentPose& pose,
                           const ObservationStrip& obs,
                           const ObservationStrip& target_image) const {
  StepOutput out;
  auto maps = render_maps(field, pose, cfg_.strip_w, cfg_.fov);
  auto iu = maps.uncertainty;
  auto icog = maps.feature;
  if (cfg_.detach_field) {
    iu = ops::detach(iu);
    icog = ops::detach(icog);
  }
  out.iu = iu;
  out.f_u = cfg_.ablation.use_fu ? unc_->forward(iu, cfg_.ablation.use_cbam)
                                 : Tensor::zeros({1, 64});
  out.f_cog = cog_->forward(icog, strip_to_tensor(target_image),
                            cfg_.ablation.use_cbam);
  out.f_p = perception_encode(obs, field.cfg().far);
  out.fused = fuse(out.f_cog, out.f_u, out.f_p);
  out.logits = action_logits(out.fused);
  out.probs = ops::softmax_last(out.logits);
  out.aux_vec = aux_->forward(out.f_cog);
  {
    NoGradGuard ng;
    double a = std::atan2(out.aux_vec->data[0], out.aux_vec->data[1]);
    if (a <= -M_PI) a = M_PI;
    out.aux_angle = Tensor::scalar(a);
  }
  return out;
}

Action select_action(const std::vector<double>& probs, bool greedy, Rng& rng) {
  if (probs.size() != kNumActions)
    throw std::runtime_error("select_action expects 4 probabilities");
  if (greedy) {
    int best = 0;
    for (int i = 1; i < kNumActions; ++i)
      if (probs[static_cast<std::size_t>(i)] > probs[static_cast<std::size_t>(best)])
        best = i;
    return static_cast<Action>(best);
  }
  const double u = rng.uniform(0.0, 1.0);
  double acc = 0.0;
  for (int i = 0; i < kNumActions; ++i) {
    acc += probs[static_cast<std::size_t>(i)];
    if (u < acc) return static_cast<Action>(i);
  }
  return Action::Stop;
}

TensorPtr imitation_step_loss(const StepOutput& out, Action expert,
                              double true_angle, double lambda_aux,
                              bool use_at) {
  // stable cross-entropy from logits
  auto mx = ops::max_axis(out.logits, 1, true);
  auto lse = ops::add(
      ops::log(ops::sum_axis(ops::exp(ops::sub(out.logits, mx)), 1, true)), mx);
  std::vector<double> onehot(kNumActions, 0.0);
  onehot[static_cast<std::size_t>(expert)] = 1.0;
  auto picked = ops::sum_axis(
      ops::mul(out.logits, Tensor::from_vector({1, kNumActions}, onehot)), 1,
      true);
  auto ce = ops::sub(lse, picked);
  if (!use_at || lambda_aux == 0.0) return ops::mean_all(ce);
  auto target = Tensor::from_vector(
      {1, 2}, {std::sin(true_angle), std::cos(true_angle)});
  auto aux = ops::sum_all(ops::abs(ops::sub(out.aux_vec, target)));
  return ops::add(ops::mean_all(ce),
                  ops::mul(aux, Tensor::scalar(lambda_aux)));
}

double bearing_to(const AgentPose& pose, Vec2 target) {
  const double abs_angle = std::atan2(target.y - pose.y, target.x - pose.x);
  double rel = std::remainder(abs_angle - pose.theta, 2.0 * M_PI);
  if (rel <= -M_PI) rel = M_PI;
  return rel;
}

std::vector<EpisodeLogEntry> train_policy(
    Policy& policy, const std::vector<Scene>& scenes, const TrainConfig& cfg,
    Rng rng,
    const std::function<void(const EpisodeLogEntry&)>& on_episode) {
  if (scenes.empty()) throw std::runtime_error("train_policy: no scenes");
  Adam opt(cfg.lr);
  std::vector<EpisodeLogEntry> log;
  log.reserve(static_cast<std::size_t>(cfg.episodes));
  const double wsum =
      cfg.tier_weights[0] + cfg.tier_weights[1] + cfg.tier_weights[2];
  for (int ep = cfg.start_episode; ep < cfg.episodes; ++ep) {
    Rng ep_rng = rng.stream("train-episode", static_cast<std::uint64_t>(ep));
    const Scene& scene = scenes[static_cast<std::size_t>(ep) % scenes.size()];
    const double tier_draw = ep_rng.uniform(0.0, wsum);
    Tier tier = tier_draw < cfg.tier_weights[0] ? Tier::Easy
                : tier_draw < cfg.tier_weights[0] + cfg.tier_weights[1]
                    ? Tier::Medium
                    : Tier::Hard;
    Episode episode;
    try {
      episode = sample_episode(scene, tier, ep_rng, policy.cfg().strip_w,
                               policy.cfg().fov);
    } catch (const std::exception&) {
      episode = sample_episode(scene, Tier::Easy, ep_rng, policy.cfg().strip_w,
                               policy.cfg().fov);
    }
    FieldConfig fcfg = cfg.field_cfg;
    fcfg.far = scene.far_clip();
    OnlineField field(fcfg, cfg.replay_capacity, ep_rng.stream("field-init"));
    Rng sample_rng = ep_rng.stream("field-sample");
    Rng act_rng = ep_rng.stream("actions");
    DistanceField to_target(scene, episode.target);
    const double progress =
        cfg.episodes <= 1 ? 1.0
                          : static_cast<double>(ep) /
                                (cfg.anneal_fraction * (cfg.episodes - 1));
    const double p_expert =
        std::max(cfg.expert_floor, 1.0 - (1.0 - cfg.expert_floor) *
                                             std::min(1.0, progress));
    AgentPose pose = episode.start;
    std::vector<TensorPtr> step_losses;
    EpisodeLogEntry entry;
    entry.episode = ep;
    double ce_sum = 0.0, aux_sum = 0.0;
    for (int step = 0; step < cfg.max_steps; ++step) {
      const auto obs = render_observation(scene, pose, policy.cfg().strip_w,
                                          policy.cfg().fov);
      field.observe(pose, obs);
      for (int k = 0; k < cfg.field_steps_per_action; ++k)
        field.train_step(cfg.field_batch, sample_rng);
      auto out = policy.forward(field.field(), pose, obs, episode.target_image);
      const Action expert =
          expert_action(scene, pose, episode.target, to_target);
      const double angle = bearing_to(pose, episode.target);
      auto loss = imitation_step_loss(out, expert, angle,
                                      policy.cfg().lambda_aux,
                                      policy.cfg().ablation.use_at);
      step_losses.push_back(loss);
      {
        NoGradGuard ng;
        auto ce_only = imitation_step_loss(out, expert, angle, 0.0, false);
        ce_sum += ce_only->item();
        aux_sum += circular_error(out.aux_angle->item(), angle);
      }
      const bool take_expert = act_rng.uniform(0.0, 1.0) < p_expert;
      Action a = expert;
      if (!take_expert) a = select_action(out.probs->data, false, act_rng);
      pose = step_agent(scene, pose, a).pose;
      entry.steps = step + 1;
      if (to_target.distance({pose.x, pose.y}) <= kSuccessRadius) {
        entry.success = true;
        break;
      }
      if (a == Action::Stop) break;
    }
    if (!step_losses.empty()) {
      auto total = step_losses[0];
      for (std::size_t i = 1; i < step_losses.size(); ++i)
        total = ops::add(total, step_losses[i]);
      total = ops::mul(total,
                       Tensor::scalar(1.0 / static_cast<double>(step_losses.size())));
      policy.params().zero_grad();
      backward(total);
      // ablated branches get no gradient at all; treat them as zero
      for (const auto& [name, t] : policy.params().entries()) t->ensure_grad();
      opt.step(policy.params());
    }
    entry.ce = ce_sum / std::max(1, entry.steps);
    entry.aux = aux_sum / std::max(1, entry.steps);
    log.push_back(entry);
    if (on_episode) on_episode(entry);
  }
  return log;
}

}  // namespace navfield
