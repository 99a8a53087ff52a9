#include "navfield/render.hpp"

#include <cmath>

#include "navfield/ops.hpp"

namespace navfield {

std::vector<double> sample_depths(double near, double far, int n, DepthMode mode,
                                  Rng* rng) {
  if (!(near < far)) throw std::runtime_error("sample_depths: near must be < far");
  if (n < 2) throw std::runtime_error("sample_depths: need at least 2 samples");
  std::vector<double> out(static_cast<std::size_t>(n));
  const double bin = (far - near) / n;
  for (int i = 0; i < n; ++i) {
    const double u = mode == DepthMode::Midpoint
                         ? 0.5
                         : (rng ? rng->uniform(0.0, 1.0) : 0.5);
    out[static_cast<std::size_t>(i)] = near + (i + u) * bin;
  }
  return out;
}

std::vector<double> depth_deltas(const std::vector<double>& depths, double far) {
  std::vector<double> d(depths.size());
  for (std::size_t i = 0; i + 1 < depths.size(); ++i)
    d[i] = depths[i + 1] - depths[i];
  d.back() = far - depths.back();
  if (d.back() <= 0.0) d.back() = 1e-12;  // guard when t_last == far
  return d;
}

TensorPtr compute_alphas(const TensorPtr& sigma, const TensorPtr& deltas) {
  if (sigma->shape != deltas->shape)
    throw ShapeError("compute_alphas: sigma and deltas shapes differ");
  auto sd = ops::mul(sigma, deltas);
  auto transmittance = ops::exp(ops::neg(ops::cumsum_exclusive_last(sd)));
  auto absorb = ops::sub(Tensor::scalar(1.0), ops::exp(ops::neg(sd)));
  return ops::mul(transmittance, absorb);
}

Composited composite(const FieldOutputs& out, const TensorPtr& deltas,
                     const TensorPtr& depths, std::int64_t rays, std::int64_t n,
                     double beta_min) {
  Composited c;
  auto sigma = ops::reshape(out.sigma, {rays, n});
  auto beta2 = ops::reshape(out.beta2, {rays, n});
  c.alphas = compute_alphas(sigma, deltas);
  auto alpha3 = ops::reshape(c.alphas, {rays, n, 1});
  const std::int64_t df = out.color_feat->dim(1);
  auto colors = ops::reshape(out.color, {rays, n, 3});
  c.color = ops::sum_axis(ops::mul(alpha3, colors), 1);
  c.uncertainty = ops::sum_axis(ops::mul(c.alphas, beta2), 1, true);
  auto raw_var = ops::sum_axis(ops::mul(ops::square(c.alphas), beta2), 1, true);
  // floor at beta_min: max(x, m) = m + relu(x - m)
  c.loss_var = ops::add(Tensor::scalar(beta_min),
                        ops::relu(ops::sub(raw_var, Tensor::scalar(beta_min))));
  auto feats = ops::reshape(out.color_feat, {rays, n, df});
  c.feature = ops::sum_axis(ops::mul(alpha3, feats), 1);
  c.depth = ops::sum_axis(ops::mul(c.alphas, depths), 1, true);
  return c;
}

RenderedMaps render_maps(const Field& field, const AgentPose& pose, int w,
                         double fov) {
  const auto& cfg = field.cfg();
  const std::int64_t ns = cfg.samples_per_ray;
  const auto t = sample_depths(cfg.near, cfg.far, static_cast<int>(ns),
                               DepthMode::Midpoint, nullptr);
  const auto d = depth_deltas(t, cfg.far);
  const auto angles = strip_angles(pose.theta, w, fov);
  std::vector<double> pts(static_cast<std::size_t>(w * ns) * 2);
  std::vector<double> dirs(static_cast<std::size_t>(w * ns));
  std::vector<double> deltas(static_cast<std::size_t>(w * ns));
  std::vector<double> depths(static_cast<std::size_t>(w * ns));
  for (int r = 0; r < w; ++r) {
    const double a = angles[static_cast<std::size_t>(r)];
    const double cx = std::cos(a), sy = std::sin(a);
    for (std::int64_t i = 0; i < ns; ++i) {
      const auto idx = static_cast<std::size_t>(r * ns + i);
      pts[idx * 2 + 0] = pose.x + t[static_cast<std::size_t>(i)] * cx;
      pts[idx * 2 + 1] = pose.y + t[static_cast<std::size_t>(i)] * sy;
      dirs[idx] = a;
      deltas[idx] = d[static_cast<std::size_t>(i)];
      depths[idx] = t[static_cast<std::size_t>(i)];
    }
  }
  auto points_t = Tensor::from_vector({w * ns, 2}, std::move(pts));
  auto dirs_t = Tensor::from_vector({w * ns, 1}, std::move(dirs));
  auto deltas_t = Tensor::from_vector({w, ns}, std::move(deltas));
  auto depths_t = Tensor::from_vector({w, ns}, std::move(depths));
  auto out = field.forward(points_t, dirs_t);
  auto comp = composite(out, deltas_t, depths_t, w, ns, cfg.beta_min);
  RenderedMaps maps;
  maps.color_strip = comp.color;
  maps.uncertainty = ops::transpose2d(comp.uncertainty);  // (1, W)
  maps.feature = ops::transpose2d(comp.feature);          // (D_f, W)
  maps.depth = comp.depth;
  return maps;
}

namespace {

TensorPtr row_tensor(const std::vector<double>& v) {
  return Tensor::from_vector({1, static_cast<std::int64_t>(v.size())},
                             std::vector<double>(v.begin(), v.end()));
}

}  // namespace

std::vector<double> compute_alphas_plain(const std::vector<double>& sigma,
                                         const std::vector<double>& deltas) {
  NoGradGuard ng;
  auto a = compute_alphas(row_tensor(sigma), row_tensor(deltas));
  return a->data;
}

Rgb render_color_plain(const std::vector<double>& alphas,
                       const std::vector<Rgb>& colors) {
  Rgb out;
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    out.r += alphas[i] * colors[i].r;
    out.g += alphas[i] * colors[i].g;
    out.b += alphas[i] * colors[i].b;
  }
  return out;
}

double render_uncertainty_plain(const std::vector<double>& alphas,
                                const std::vector<double>& beta2) {
  double acc = 0.0;
  for (std::size_t i = 0; i < alphas.size(); ++i) acc += alphas[i] * beta2[i];
  return acc;
}

double render_loss_variance_plain(const std::vector<double>& alphas,
                                  const std::vector<double>& beta2,
                                  double beta_min) {
  double acc = 0.0;
  for (std::size_t i = 0; i < alphas.size(); ++i)
    acc += alphas[i] * alphas[i] * beta2[i];
  return std::max(acc, beta_min);
}

}  // namespace navfield
