#pragma once

#include "navfield/field.hpp"

namespace navfield {

enum class DepthMode { Midpoint, Stratified };

// Strictly increasing depths in [near, far]: bin centers (midpoint) or one
// uniform draw per bin (stratified).
std::vector<double> sample_depths(double near, double far, int n, DepthMode mode,
                                  Rng* rng);

// delta_i = t_{i+1} - t_i, with the last delta reaching the far plane.
std::vector<double> depth_deltas(const std::vector<double>& depths, double far);

// Compositing weights alpha_i = T_i (1 - exp(-sigma_i delta_i)) with
// transmittance T_i = exp(-sum_{j<i} sigma_j delta_j). sigma, deltas: (R, N).
TensorPtr compute_alphas(const TensorPtr& sigma, const TensorPtr& deltas);

struct Composited {
  TensorPtr alphas;       // (R, N)
  TensorPtr color;        // (R, 3)  sum alpha_i c_i
  TensorPtr uncertainty;  // (R, 1)  sum alpha_i beta2_i  (linear weights)
  TensorPtr loss_var;     // (R, 1)  sum alpha_i^2 beta2_i, floored at beta_min
  TensorPtr feature;      // (R, D_f) sum alpha_i f_i
  TensorPtr depth;        // (R, 1)  sum alpha_i t_i, diagnostic
};

// out holds flattened (R*N, .) field outputs; deltas/depths are (R, N).
Composited composite(const FieldOutputs& out, const TensorPtr& deltas,
                     const TensorPtr& depths, std::int64_t rays, std::int64_t n,
                     double beta_min);

struct RenderedMaps {
  TensorPtr color_strip;  // (W, 3)
  TensorPtr uncertainty;  // (1, W)
  TensorPtr feature;      // (D_f, W)
  TensorPtr depth;        // (W, 1)
};

// Full per-pose render with deterministic midpoint depths.
RenderedMaps render_maps(const Field& field, const AgentPose& pose, int w,
                         double fov);

// Plain-value single-ray helpers (shared code path with the tensor version).
std::vector<double> compute_alphas_plain(const std::vector<double>& sigma,
                                         const std::vector<double>& deltas);
Rgb render_color_plain(const std::vector<double>& alphas,
                       const std::vector<Rgb>& colors);
double render_uncertainty_plain(const std::vector<double>& alphas,
                                const std::vector<double>& beta2);
double render_loss_variance_plain(const std::vector<double>& alphas,
                                  const std::vector<double>& beta2,
                                  double beta_min);

}  // namespace navfield
