#include "navfield/field.hpp"

#include <cmath>

#include "navfield/ops.hpp"
#include "navfield/render.hpp"

namespace navfield {

void FieldConfig::validate() const {
  if (near >= far) throw std::runtime_error("field config: near must be < far");
  if (samples_per_ray < 2)
    throw std::runtime_error("field config: samples_per_ray must be >= 2");
  if (beta_min <= 0) throw std::runtime_error("field config: beta_min must be > 0");
  if (pos_freqs < 0 || dir_freqs < 0)
    throw std::runtime_error("field config: frequency counts must be >= 0");
}

TensorPtr positional_encode(const TensorPtr& v, int freqs) {
  std::vector<TensorPtr> parts{v};
  for (int k = 0; k < freqs; ++k) {
    auto scaled = ops::mul(v, Tensor::scalar(std::pow(2.0, k) * M_PI));
    parts.push_back(ops::sin(scaled));
    parts.push_back(ops::cos(scaled));
  }
  return ops::concat(parts, v->rank() - 1);
}

namespace {

TensorPtr xavier(Shape shape, Rng& rng) {
  const double fan_in = static_cast<double>(shape[0]);
  const double fan_out = static_cast<double>(shape[1]);
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  std::vector<double> data(static_cast<std::size_t>(shape_numel(shape)));
  for (auto& d : data) d = rng.uniform(-limit, limit);
  return Tensor::from_vector(std::move(shape), std::move(data));
}

void add_linear(ParamSet& ps, const std::string& name, std::int64_t in,
                std::int64_t out, Rng& rng) {
  ps.add(name + ".w", xavier({in, out}, rng));
  ps.add(name + ".b", Tensor::zeros({1, out}));
}

TensorPtr linear(const ParamSet& ps, const std::string& name, const TensorPtr& x) {
  return ops::add(ops::matmul(x, ps.get(name + ".w")), ps.get(name + ".b"));
}

}  // namespace

Field::Field(FieldConfig cfg, Rng rng) : cfg_(cfg) {
  cfg_.validate();
  const std::int64_t h = cfg_.hidden, df = cfg_.feat_dim;
  add_linear(params_, "trunk.l1", cfg_.pos_enc_dim(), h, rng);
  add_linear(params_, "trunk.l2", h, h, rng);
  add_linear(params_, "head.sigma", h, 1, rng);
  add_linear(params_, "head.beta2", h, 1, rng);
  add_linear(params_, "head.feat", h, df, rng);
  add_linear(params_, "color.l1", df + cfg_.dir_enc_dim(), h, rng);
  add_linear(params_, "color.l2", h, df, rng);
  add_linear(params_, "color.out", df, 3, rng);
}

FieldOutputs Field::forward(const TensorPtr& points, const TensorPtr& dirs) const {
  if (points->rank() != 2 || points->dim(1) != 2)
    throw ShapeError("field forward expects (N,2) points");
  if (dirs->rank() != 2 || dirs->dim(1) != 1 || dirs->dim(0) != points->dim(0))
    throw ShapeError("field forward expects (N,1) direction angles");
  auto enc_x = positional_encode(points, cfg_.pos_freqs);
  auto h = ops::relu(linear(params_, "trunk.l1", enc_x));
  h = ops::relu(linear(params_, "trunk.l2", h));
  FieldOutputs out;
  out.sigma = ops::softplus(linear(params_, "head.sigma", h));
  out.beta2 = ops::add(ops::softplus(linear(params_, "head.beta2", h)),
                       Tensor::scalar(cfg_.beta_min));
  out.feat = linear(params_, "head.feat", h);
  auto enc_d = positional_encode(dirs, cfg_.dir_freqs);
  auto c_in = ops::concat({out.feat, enc_d}, 1);
  auto hc = ops::relu(linear(params_, "color.l1", c_in));
  out.color_feat = ops::relu(linear(params_, "color.l2", hc));
  out.color = ops::sigmoid(linear(params_, "color.out", out.color_feat));
  out.sigma->check_finite("field sigma");
  out.beta2->check_finite("field beta2");
  out.color->check_finite("field color");
  return out;
}

TensorPtr nll_loss(const TensorPtr& mean, const TensorPtr& var,
                   const TensorPtr& gt) {
  if (mean->shape != gt->shape)
    throw ShapeError("nll_loss: mean and gt shapes differ");
  if (var->dim(0) != mean->dim(0) || var->shape.back() != 1)
    throw ShapeError("nll_loss: var must be (R,1)");
  for (double v : var->data)
    if (!(v > 0.0))
      throw NumericError("nll_loss: variance must be strictly positive");
  auto residual = ops::sub(gt, mean);
  auto l2 = ops::sum_axis(ops::square(residual), 1, true);  // (R,1)
  auto term = ops::add(ops::div(l2, ops::mul(var, Tensor::scalar(2.0))),
                       ops::mul(ops::log(var), Tensor::scalar(0.5)));
  return ops::mean_all(term);
}

void ReplayBuffer::push(const RayRecord& r) {
  if (records_.size() == capacity_) records_.pop_front();
  records_.push_back(r);
}

const RayRecord& ReplayBuffer::sample(Rng& rng) const {
  if (records_.empty()) throw std::runtime_error("replay buffer is empty");
  return records_[static_cast<std::size_t>(
      rng.uniform_int(0, static_cast<std::int64_t>(records_.size()) - 1))];
}

void add_observation(ReplayBuffer& buffer, const AgentPose& pose,
                     const ObservationStrip& strip) {
  const auto angles = strip_angles(pose.theta, strip.width, strip.fov);
  for (int i = 0; i < strip.width; ++i) {
    RayRecord r;
    r.origin = {pose.x, pose.y};
    r.angle = angles[static_cast<std::size_t>(i)];
    r.gt_color = {strip.rgb[static_cast<std::size_t>(i) * 3 + 0],
                  strip.rgb[static_cast<std::size_t>(i) * 3 + 1],
                  strip.rgb[static_cast<std::size_t>(i) * 3 + 2]};
    buffer.push(r);
  }
}

OnlineField::OnlineField(FieldConfig cfg, std::size_t replay_capacity,
                         Rng init_rng)
    : field_(cfg, init_rng), buffer_(replay_capacity), opt_(cfg.lr) {}

void OnlineField::observe(const AgentPose& pose, const ObservationStrip& strip) {
  add_observation(buffer_, pose, strip);
}

double OnlineField::train_step(int batch_rays, Rng& rng) {
  if (buffer_.size() == 0)
    throw std::runtime_error("train_step on an empty replay buffer");
  const auto& cfg = field_.cfg();
  const std::int64_t rays = batch_rays;
  const std::int64_t ns = cfg.samples_per_ray;
  std::vector<double> pts(static_cast<std::size_t>(rays * ns) * 2);
  std::vector<double> dirs(static_cast<std::size_t>(rays * ns));
  std::vector<double> deltas(static_cast<std::size_t>(rays * ns));
  std::vector<double> depths(static_cast<std::size_t>(rays * ns));
  std::vector<double> gts(static_cast<std::size_t>(rays) * 3);
  for (std::int64_t r = 0; r < rays; ++r) {
    const RayRecord& rec = buffer_.sample(rng);
    const auto t = sample_depths(cfg.near, cfg.far, static_cast<int>(ns),
                                 DepthMode::Stratified, &rng);
    const auto d = depth_deltas(t, cfg.far);
    const double cx = std::cos(rec.angle), sy = std::sin(rec.angle);
    for (std::int64_t i = 0; i < ns; ++i) {
      const auto idx = static_cast<std::size_t>(r * ns + i);
      pts[idx * 2 + 0] = rec.origin.x + t[static_cast<std::size_t>(i)] * cx;
      pts[idx * 2 + 1] = rec.origin.y + t[static_cast<std::size_t>(i)] * sy;
      dirs[idx] = rec.angle;
      deltas[idx] = d[static_cast<std::size_t>(i)];
      depths[idx] = t[static_cast<std::size_t>(i)];
    }
    gts[static_cast<std::size_t>(r) * 3 + 0] = rec.gt_color.r;
    gts[static_cast<std::size_t>(r) * 3 + 1] = rec.gt_color.g;
    gts[static_cast<std::size_t>(r) * 3 + 2] = rec.gt_color.b;
  }
  auto points_t = Tensor::from_vector({rays * ns, 2}, std::move(pts));
  auto dirs_t = Tensor::from_vector({rays * ns, 1}, std::move(dirs));
  auto deltas_t = Tensor::from_vector({rays, ns}, std::move(deltas));
  auto depths_t = Tensor::from_vector({rays, ns}, std::move(depths));
  auto gt_t = Tensor::from_vector({rays, 3}, std::move(gts));
  auto out = field_.forward(points_t, dirs_t);
  auto comp = composite(out, deltas_t, depths_t, rays, ns, cfg.beta_min);
  auto loss = nll_loss(comp.color, comp.loss_var, gt_t);
  backward(loss);
  opt_.step(field_.params());
  return loss->item();
}

}  // namespace navfield
