#pragma once

#include <string>
#include <vector>

#include "rng.hpp"
#include "tensor.hpp"

namespace ar {

struct NamedParam {
  std::string name;
  Tensor tensor;
};

using ParamList = std::vector<NamedParam>;

inline void append_params(ParamList& dst, const ParamList& src,
                          const std::string& prefix) {
  for (const auto& p : src) dst.push_back({prefix + "." + p.name, p.tensor});
}

// Plain 2D convolution layer.
struct Conv2dLayer {
  Tensor w, b;
  int stride = 1, pad = 0, dilation = 1;

  Conv2dLayer() = default;
  Conv2dLayer(int cin, int cout, int k, int stride, int pad, Rng& rng,
              int dilation = 1);
  Tensor forward(const Tensor& x) const;
  ParamList params(const std::string& prefix) const;
};

// Gated convolution: feature = act(conv_f(x)) * sigmoid(conv_g(x)).
struct GatedConv2dLayer {
  Conv2dLayer conv_f, conv_g;
  bool linear_feature = false;  // skip the feature activation (output layers)

  GatedConv2dLayer() = default;
  GatedConv2dLayer(int cin, int cout, int k, int stride, int pad, Rng& rng,
                   int dilation = 1, bool linear_feature = false);
  Tensor forward(const Tensor& x) const;
  ParamList params(const std::string& prefix) const;
};

// Temporal aggregation: one 3D convolution kernel spanning all F frames,
// applied as a sum of per-frame 2D convolutions. Weight per frame:
// (Co,Ci,k,k); shared bias.
struct TemporalConv3dLayer {
  std::vector<Conv2dLayer> per_frame;  // biases unused except frame 0
  Tensor bias;
  int frames = 0;

  TemporalConv3dLayer() = default;
  TemporalConv3dLayer(int frames, int cin, int cout, int k, int pad, Rng& rng);
  Tensor forward(const std::vector<Tensor>& frame_feats) const;
  ParamList params(const std::string& prefix) const;
};

// Spectral normalization state for one conv layer (power iteration vectors).
struct SpectralNormState {
  std::vector<double> u;  // left singular vector estimate, size Co
  double sigma = 1.0;
};

// Estimates the spectral norm of w reshaped to (Co, rest) by power
// iteration, updating the cached u vector in place.
double power_iteration_sigma(const Tensor& w, SpectralNormState& state,
                             int iters = 3);

// Returns w / sigma with sigma treated as a constant (gradient flows to w).
Tensor spectral_normalize(const Tensor& w, SpectralNormState& state,
                          int iters = 3);

// Kaiming-style fan-in init used by all conv layers.
Tensor conv_weight_init(int cout, int cin, int kh, int kw, Rng& rng);

}  // namespace ar
