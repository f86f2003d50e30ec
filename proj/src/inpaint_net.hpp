#pragma once

#include "attention.hpp"
#include "core/checkpoint.hpp"
#include "core/nn.hpp"
#include "geometry.hpp"
#include "types.hpp"

namespace ar {

struct InpaintNetConfig {
  int frames = 5;           // F, odd
  int coarse_channels = 16;
  int feat_channels = 16;   // extractor output width
  int disc_channels = 16;
  int disc_layers = 3;      // stride-2 layers before the score head
  double ca_scale = 10.0;
  int ca_patch = 3;
  bool use_warping = true;            // ablation switch
  bool use_contextual_attention = true;
};

// Coarse gated-convolution encoder-decoder, applied per frame with shared
// weights. Input: frame (3) + mask (1); output (3,H,W) in [-1,1].
class CoarseNet {
 public:
  CoarseNet(int channels, Rng& rng);
  Tensor forward(const Tensor& frame, const MaskMap& mask) const;
  ParamList params() const;

 private:
  std::vector<GatedConv2dLayer> enc_;
  std::vector<GatedConv2dLayer> dilated_;
  std::vector<GatedConv2dLayer> dec_;
  Conv2dLayer head_;
};

// Gated-conv feature extractor to 1/4 resolution.
class FeatureExtractor {
 public:
  FeatureExtractor(int out_channels, Rng& rng);
  Tensor forward(const Tensor& frame4ch) const;
  ParamList params() const;

 private:
  std::vector<GatedConv2dLayer> layers_;
};

class Decoder {
 public:
  Decoder(int in_channels, Rng& rng);
  Tensor forward(const Tensor& feats) const;
  ParamList params() const;

 private:
  GatedConv2dLayer pre_;
  GatedConv2dLayer up1_, up2_;
  Conv2dLayer head_;
};

class Generator {
 public:
  Generator(const InpaintNetConfig& cfg, Rng& rng);

  std::vector<Frame> coarse_forward(const std::vector<Frame>& frames_in,
                                    const std::vector<MaskMap>& masks) const;

  // Full refinement path: warp -> extract(x2) -> aggregate(3D conv) ->
  // CA(target fg vs aggregated bg) -> merge(3D conv) -> concat -> decode.
  Frame refine_forward(const std::vector<Frame>& coarse,
                       const std::vector<MaskMap>& masks,
                       const std::vector<FlowField>& flows,
                       int target_index) const;

  ParamList params() const;
  const InpaintNetConfig& config() const { return cfg_; }
  InpaintNetConfig& mutable_config() { return cfg_; }

  Checkpoint to_checkpoint() const;
  static Generator from_checkpoint(const Checkpoint& ck);

 private:
  InpaintNetConfig cfg_;
  CoarseNet coarse_;
  FeatureExtractor ca_extractor_, global_extractor_;
  TemporalConv3dLayer aggregator_3d_, merger_3d_;
  Decoder decoder_;
};

// Spectrally normalized fully convolutional patch discriminator.
class Discriminator {
 public:
  Discriminator(int channels, int layers, Rng& rng);

  // Normalizes all weights in place (power iteration), then runs the
  // forward pass on frame (3) + mask (1). Raw scores, no sigmoid.
  Tensor forward(const Tensor& frame, const MaskMap& mask);

  // Spectral norm estimate per layer after the last normalization.
  std::vector<double> layer_spectral_norms() const;

  ParamList params() const;
  int num_layers() const { return static_cast<int>(convs_.size()); }

  Checkpoint to_checkpoint() const;
  static Discriminator from_checkpoint(const Checkpoint& ck);

  // Power-iteration state travels with checkpoints so that a resumed run
  // reproduces the uninterrupted loss trajectory exactly.
  void store_sn_state(Checkpoint& ck) const;
  void restore_sn_state(const Checkpoint& ck);

 private:
  int channels_, layers_;
  std::vector<Conv2dLayer> convs_;  // stride-2 stack + 1-channel head
  std::vector<SpectralNormState> sn_;
};

// Paste-back: known pixels come bit-exact from the input.
Frame composite_output(const Frame& pred, const Frame& in_target,
                       const MaskMap& mask);

// Downsample a mask by factor (area average, >= 0.5 -> known).
MaskMap downsample_mask(const MaskMap& mask, int factor);

}  // namespace ar
