#include "navfield/extractors.hpp"

#include <cmath>

#include "navfield/ops.hpp"

namespace navfield {

void ExtractorConfig::validate() const {
  if (strip_w % 16 != 0)
    throw ShapeError("extractor config: strip width must be divisible by 16");
  if (unc_channels % reduction != 0 || cog_channels % reduction != 0)
    throw ShapeError("extractor config: channels must divide by the reduction");
}

namespace {

TensorPtr conv_xavier(std::int64_t out_ch, std::int64_t in_ch, std::int64_t k,
                      Rng& rng) {
  const double limit = std::sqrt(6.0 / (static_cast<double>(in_ch * k) +
                                        static_cast<double>(out_ch * k)));
  std::vector<double> data(static_cast<std::size_t>(out_ch * in_ch * k));
  for (auto& d : data) d = rng.uniform(-limit, limit);
  return Tensor::from_vector({out_ch, in_ch, k}, std::move(data));
}

TensorPtr mat_xavier(std::int64_t in, std::int64_t out, Rng& rng) {
  const double limit = std::sqrt(6.0 / (in + out));
  std::vector<double> data(static_cast<std::size_t>(in * out));
  for (auto& d : data) d = rng.uniform(-limit, limit);
  return Tensor::from_vector({in, out}, std::move(data));
}

TensorPtr conv_bias(const ParamSet& ps, const std::string& name,
                    const TensorPtr& x, std::int64_t stride, std::int64_t pad) {
  return ops::add(ops::conv1d(x, ps.get(name + ".w"), stride, pad),
                  ps.get(name + ".b"));
}

TensorPtr linear(const ParamSet& ps, const std::string& name, const TensorPtr& x) {
  return ops::add(ops::matmul(x, ps.get(name + ".w")), ps.get(name + ".b"));
}

void add_conv(ParamSet& ps, const std::string& name, std::int64_t in_ch,
              std::int64_t out_ch, std::int64_t k, Rng& rng) {
  ps.add(name + ".w", conv_xavier(out_ch, in_ch, k, rng));
  ps.add(name + ".b", Tensor::zeros({out_ch, 1}));
}

void add_linear(ParamSet& ps, const std::string& name, std::int64_t in,
                std::int64_t out, Rng& rng) {
  ps.add(name + ".w", mat_xavier(in, out, rng));
  ps.add(name + ".b", Tensor::zeros({1, out}));
}

}  // namespace

void add_res_block(ParamSet& ps, const std::string& prefix, std::int64_t in_ch,
                   std::int64_t out_ch, Rng& rng) {
  add_conv(ps, prefix + ".conv1", in_ch, out_ch, 3, rng);
  add_conv(ps, prefix + ".conv2", out_ch, out_ch, 3, rng);
  add_conv(ps, prefix + ".skip", in_ch, out_ch, 1, rng);
}

TensorPtr res_block(const ParamSet& ps, const std::string& prefix,
                    const TensorPtr& x) {
  auto main = conv_bias(ps, prefix + ".conv1", x, 4, 1);
  main = conv_bias(ps, prefix + ".conv2", ops::relu(main), 1, 1);
  auto skip = conv_bias(ps, prefix + ".skip", x, 4, 0);
  return ops::add(main, skip);
}

void add_cbam(ParamSet& ps, const std::string& prefix, std::int64_t channels,
              int reduction, Rng& rng) {
  add_linear(ps, prefix + ".ca.fc1", channels, channels / reduction, rng);
  add_linear(ps, prefix + ".ca.fc2", channels / reduction, channels, rng);
  add_conv(ps, prefix + ".sa.conv", 2, 1, 7, rng);
}

AttentionMaps cbam_attention(const ParamSet& ps, const std::string& prefix,
                             const TensorPtr& f) {
  // channel attention: shared bottleneck perceptron over both pooled vectors
  auto pool_mlp = [&](const TensorPtr& v) {  // v: (C,1)
    auto row = ops::transpose2d(v);          // (1,C)
    auto h = ops::relu(linear(ps, prefix + ".ca.fc1", row));
    return linear(ps, prefix + ".ca.fc2", h);  // (1,C)
  };
  auto avg_c = ops::mean_axis(f, 1, true);
  auto max_c = ops::max_axis(f, 1, true);
  AttentionMaps maps;
  maps.channel = ops::transpose2d(
      ops::sigmoid(ops::add(pool_mlp(avg_c), pool_mlp(max_c))));  // (C,1)
  // spatial attention: pool over channels, k=7 conv, sigmoid
  auto avg_s = ops::mean_axis(f, 0, true);  // (1,L)
  auto max_s = ops::max_axis(f, 0, true);
  auto stacked = ops::concat({avg_s, max_s}, 0);  // (2,L)
  maps.spatial = ops::sigmoid(conv_bias(ps, prefix + ".sa.conv", stacked, 1, 3));
  return maps;
}

TensorPtr cbam_apply(const ParamSet& ps, const std::string& prefix,
                     const TensorPtr& f, bool enabled) {
  if (!enabled) return f;
  auto maps = cbam_attention(ps, prefix, f);
  return ops::mul(ops::mul(f, maps.channel), maps.spatial);
}

UncertaintyExtractor::UncertaintyExtractor(const ExtractorConfig& cfg, Rng& rng,
                                           ParamSet& ps)
    : cfg_(cfg), params_(&ps) {
  cfg_.validate();
  add_res_block(ps, "unc.block1", 1, cfg.unc_channels, rng);
  add_res_block(ps, "unc.block2", cfg.unc_channels, cfg.unc_channels, rng);
  add_cbam(ps, "unc.cbam", cfg.unc_channels, cfg.reduction, rng);
  add_linear(ps, "unc.fc", cfg.unc_channels * (cfg.strip_w / 16), cfg.out_len,
             rng);
}

TensorPtr UncertaintyExtractor::forward(const TensorPtr& iu,
                                        bool use_cbam) const {
  if (iu->rank() != 2 || iu->dim(0) != 1)
    throw ShapeError("uncertainty extractor expects a (1,W) map");
  if (iu->dim(1) % 16 != 0)
    throw ShapeError("uncertainty extractor: W must be divisible by 16");
  auto f = res_block(*params_, "unc.block1", iu);
  f = res_block(*params_, "unc.block2", f);
  f = cbam_apply(*params_, "unc.cbam", f, use_cbam);
  auto flat = ops::reshape(f, {1, f->numel()});
  return ops::relu(linear(*params_, "unc.fc", flat));
}

SpatialExtractor::SpatialExtractor(const ExtractorConfig& cfg, Rng& rng,
                                   ParamSet& ps)
    : cfg_(cfg), params_(&ps) {
  cfg_.validate();
  add_res_block(ps, "cog.block1", cfg.feat_dim + 3, cfg.cog_channels, rng);
  add_res_block(ps, "cog.block2", cfg.cog_channels, cfg.cog_channels, rng);
  add_cbam(ps, "cog.cbam", cfg.cog_channels, cfg.reduction, rng);
  add_linear(ps, "cog.fc", cfg.cog_channels * (cfg.strip_w / 16), cfg.out_len,
             rng);
}

TensorPtr SpatialExtractor::forward(const TensorPtr& icog,
                                    const TensorPtr& target_rgb,
                                    bool use_cbam) const {
  if (icog->rank() != 2 || target_rgb->rank() != 2 ||
      icog->dim(1) != target_rgb->dim(1))
    throw ShapeError("spatial extractor: feature map and target lengths differ");
  auto f = ops::concat({icog, target_rgb}, 0);  // (D_f+3, W)
  f = res_block(*params_, "cog.block1", f);
  f = res_block(*params_, "cog.block2", f);
  f = cbam_apply(*params_, "cog.cbam", f, use_cbam);
  auto flat = ops::reshape(f, {1, f->numel()});
  return ops::relu(linear(*params_, "cog.fc", flat));
}

AuxAngleHead::AuxAngleHead(const ExtractorConfig& cfg, Rng& rng, ParamSet& ps)
    : params_(&ps) {
  add_linear(ps, "aux.fc1", cfg.out_len, 32, rng);
  add_linear(ps, "aux.fc2", 32, 2, rng);
}

// The head regresses (sin, cos) of the goal bearing rather than a raw wrapped
// angle: an angle-valued output trained with a circular loss has a second
// equilibrium at the antipode of the target distribution and can stall there.
TensorPtr AuxAngleHead::forward(const TensorPtr& f_cog) const {
  auto h = ops::relu(linear(*params_, "aux.fc1", f_cog));
  return linear(*params_, "aux.fc2", h);
}

TensorPtr circular_l1(const TensorPtr& pred, const TensorPtr& target) {
  return ops::abs(ops::wrap_angle(ops::sub(pred, target)));
}

double circular_error(double a, double b) {
  return std::fabs(std::remainder(a - b, 2.0 * M_PI));
}

std::vector<double> saliency_over_uncertainty(const TensorPtr& scalar_out,
                                              const TensorPtr& iu) {
  std::vector<double> out(iu->data.size(), 0.0);
  if (scalar_out->requires_grad) {
    backward(scalar_out);
    if (!iu->grad.empty()) {
      double mx = 0.0;
      for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = std::fabs(iu->grad[i]);
        mx = std::max(mx, out[i]);
      }
      if (mx > 0.0)
        for (auto& v : out) v /= mx;
    }
  }
  return out;
}

}  // namespace navfield
