#include "nn.hpp"

#include <cmath>

namespace ar {

Tensor conv_weight_init(int cout, int cin, int kh, int kw, Rng& rng) {
  int fan_in = cin * kh * kw;
  double stddev = std::sqrt(2.0 / fan_in);
  std::vector<double> data(static_cast<size_t>(cout) * cin * kh * kw);
  for (auto& v : data) v = rng.normal(0.0, stddev);
  return Tensor::from_data({cout, cin, kh, kw}, std::move(data), true);
}

Conv2dLayer::Conv2dLayer(int cin, int cout, int k, int stride, int pad,
                         Rng& rng, int dilation)
    : stride(stride), pad(pad), dilation(dilation) {
  w = conv_weight_init(cout, cin, k, k, rng);
  b = Tensor::zeros({cout}, true);
}

Tensor Conv2dLayer::forward(const Tensor& x) const {
  return conv2d(x, w, b, stride, pad, dilation);
}

ParamList Conv2dLayer::params(const std::string& prefix) const {
  return {{prefix + ".w", w}, {prefix + ".b", b}};
}

GatedConv2dLayer::GatedConv2dLayer(int cin, int cout, int k, int stride,
                                   int pad, Rng& rng, int dilation,
                                   bool linear_feature)
    : conv_f(cin, cout, k, stride, pad, rng, dilation),
      conv_g(cin, cout, k, stride, pad, rng, dilation),
      linear_feature(linear_feature) {}

Tensor GatedConv2dLayer::forward(const Tensor& x) const {
  Tensor f = conv_f.forward(x);
  if (!linear_feature) f = leaky_relu(f);
  Tensor g = sigmoid(conv_g.forward(x));
  return mul(f, g);
}

ParamList GatedConv2dLayer::params(const std::string& prefix) const {
  ParamList out;
  append_params(out, conv_f.params("f"), prefix);
  append_params(out, conv_g.params("g"), prefix);
  return out;
}

TemporalConv3dLayer::TemporalConv3dLayer(int frames, int cin, int cout, int k,
                                         int pad, Rng& rng)
    : frames(frames) {
  per_frame.reserve(frames);
  for (int f = 0; f < frames; ++f) {
    Conv2dLayer layer;
    layer.w = conv_weight_init(cout, cin, k, k, rng);
    // Scale so the sum over frames has the usual variance.
    for (auto& v : layer.w.data()) v /= std::sqrt(static_cast<double>(frames));
    layer.stride = 1;
    layer.pad = pad;
    per_frame.push_back(std::move(layer));
  }
  bias = Tensor::zeros({cout}, true);
}

Tensor TemporalConv3dLayer::forward(const std::vector<Tensor>& frame_feats) const {
  if (static_cast<int>(frame_feats.size()) != frames)
    fail(ErrorKind::BadSequence, "temporal conv: frame count mismatch");
  Tensor acc;
  for (int f = 0; f < frames; ++f) {
    Tensor y = conv2d(frame_feats[f], per_frame[f].w,
                      f == 0 ? bias : Tensor(), 1, per_frame[f].pad, 1);
    acc = (f == 0) ? y : add(acc, y);
  }
  return acc;
}

ParamList TemporalConv3dLayer::params(const std::string& prefix) const {
  ParamList out;
  for (int f = 0; f < frames; ++f)
    out.push_back({prefix + ".w" + std::to_string(f), per_frame[f].w});
  out.push_back({prefix + ".b", bias});
  return out;
}

double power_iteration_sigma(const Tensor& w, SpectralNormState& state,
                             int iters) {
  const auto& shape = w.shape();
  int co = shape[0];
  int rest = static_cast<int>(w.numel() / co);
  const auto& wd = w.data();
  if (static_cast<int>(state.u.size()) != co) {
    // cold start: burn in until u tracks the leading singular vector, so
    // the very first normalization already respects the sigma <= 1 bound
    state.u.assign(co, 1.0 / std::sqrt(static_cast<double>(co)));
    iters = std::max(iters, 50);
  }
  std::vector<double> v(rest);
  for (int it = 0; it < iters; ++it) {
    // v = W^T u, normalized
    for (int j = 0; j < rest; ++j) {
      double s = 0.0;
      for (int i = 0; i < co; ++i)
        s += wd[static_cast<size_t>(i) * rest + j] * state.u[i];
      v[j] = s;
    }
    double vn = 0.0;
    for (double x : v) vn += x * x;
    vn = std::sqrt(vn) + 1e-12;
    for (double& x : v) x /= vn;
    // u = W v, normalized
    for (int i = 0; i < co; ++i) {
      double s = 0.0;
      for (int j = 0; j < rest; ++j)
        s += wd[static_cast<size_t>(i) * rest + j] * v[j];
      state.u[i] = s;
    }
    double un = 0.0;
    for (double x : state.u) un += x * x;
    un = std::sqrt(un) + 1e-12;
    for (double& x : state.u) x /= un;
  }
  // sigma = u^T W v
  double sigma = 0.0;
  for (int i = 0; i < co; ++i) {
    double s = 0.0;
    for (int j = 0; j < rest; ++j)
      s += wd[static_cast<size_t>(i) * rest + j] * v[j];
    sigma += state.u[i] * s;
  }
  state.sigma = std::max(sigma, 1e-12);
  return state.sigma;
}

Tensor spectral_normalize(const Tensor& w, SpectralNormState& state,
                          int iters) {
  double sigma = power_iteration_sigma(w, state, iters);
  return mul_scalar(w, 1.0 / sigma);
}

}  // namespace ar
