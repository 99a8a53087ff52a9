#pragma once

#include "navfield/optim.hpp"
#include "navfield/rng.hpp"

namespace navfield {

struct ExtractorConfig {
  int strip_w = 64;       // must be divisible by 16
  int feat_dim = 16;      // channels of the rendered feature map
  int unc_channels = 16;  // compressed uncertainty-map channels
  int cog_channels = 32;  // compressed spatial-map channels
  int reduction = 4;      // channel-attention bottleneck ratio
  int out_len = 64;
  void validate() const;
};

struct AttentionMaps {
  TensorPtr channel;  // (C, 1), entries in (0,1)
  TensorPtr spatial;  // (1, L), entries in (0,1)
};

// Residual downsample block: conv(k=3,s=4) -> relu -> conv(k=3,s=1), plus a
// stride-4 1x1 projection skip. Length shrinks by 4.
TensorPtr res_block(const ParamSet& ps, const std::string& prefix,
                    const TensorPtr& x);
void add_res_block(ParamSet& ps, const std::string& prefix, std::int64_t in_ch,
                   std::int64_t out_ch, Rng& rng);

AttentionMaps cbam_attention(const ParamSet& ps, const std::string& prefix,
                             const TensorPtr& f);
void add_cbam(ParamSet& ps, const std::string& prefix, std::int64_t channels,
              int reduction, Rng& rng);
// Multiplies both attention maps onto f; identity when enabled is false.
TensorPtr cbam_apply(const ParamSet& ps, const std::string& prefix,
                     const TensorPtr& f, bool enabled);

// Uncertainty map (1, W) -> exploration feature (1, 64).
class UncertaintyExtractor {
 public:
  UncertaintyExtractor(const ExtractorConfig& cfg, Rng& rng,
                       ParamSet& shared_params);
  TensorPtr forward(const TensorPtr& iu, bool use_cbam) const;

 private:
  ExtractorConfig cfg_;
  const ParamSet* params_;
};

// Rendered feature map (D_f, W) + target image (3, W) -> exploitation
// feature (1, 64).
class SpatialExtractor {
 public:
  SpatialExtractor(const ExtractorConfig& cfg, Rng& rng, ParamSet& shared_params);
  TensorPtr forward(const TensorPtr& icog, const TensorPtr& target_rgb,
                    bool use_cbam) const;

 private:
  ExtractorConfig cfg_;
  const ParamSet* params_;
};

// Two-layer head regressing the bearing to the target, wrapped to (-pi, pi].
class AuxAngleHead {
 public:
  AuxAngleHead(const ExtractorConfig& cfg, Rng& rng, ParamSet& shared_params);
  TensorPtr forward(const TensorPtr& f_cog) const;

 private:
  const ParamSet* params_;
};

// min_k |a - b + 2 pi k|, in [0, pi].
TensorPtr circular_l1(const TensorPtr& pred, const TensorPtr& target);
double circular_error(double a, double b);

// Absolute input gradient of a scalar (e.g. the chosen action's logit) with
// respect to the uncertainty map, max-normalized to [0,1]. All-zero when the
// map is not on the scalar's tape. Touches .grad buffers; callers clear
// parameter grads afterwards when run outside training.
std::vector<double> saliency_over_uncertainty(const TensorPtr& scalar_out,
                                              const TensorPtr& iu);

}  // namespace navfield
