#pragma once

#include "core/checkpoint.hpp"
#include "core/nn.hpp"
#include "types.hpp"

namespace ar {

// Encoder-decoder with skip connections mapping RGB + object mask to a
// per-pixel shadow probability. The mask input channel codes the object as
// 1 (hole) to highlight it.
class ShadowNet {
 public:
  ShadowNet(int depth, int base_channels, Rng& rng);

  // rgb (3,H,W), mask H*W; returns (1,H,W) probabilities.
  Tensor forward(const Tensor& rgb, const MaskMap& object_mask) const;

  ParamList params() const;
  int depth() const { return depth_; }
  int base_channels() const { return base_; }

  Checkpoint to_checkpoint() const;
  static ShadowNet from_checkpoint(const Checkpoint& ck);

  void validate_finite() const;

 private:
  int depth_, base_;
  std::vector<Conv2dLayer> enc_conv_;   // per level
  std::vector<Conv2dLayer> down_;       // stride-2, per level
  Conv2dLayer bottleneck_;
  std::vector<Conv2dLayer> up_conv_;    // conv after nearest upsample
  std::vector<Conv2dLayer> dec_conv_;   // conv after skip concat
  Conv2dLayer head_;
};

// Class-balanced binary cross entropy. Labels use the project mask coding:
// 0 = shadow (positive class), 1 = background. With both classes present
// the per-class weights are w_pos = N_neg/N and w_neg = N_pos/N and the
// loss is normalized by the total weight, so balanced labels at p = 0.5
// give ln 2; with a single class present it reduces to plain BCE.
Tensor shadow_loss(const Tensor& pred, const MaskMap& shadow_labels);

// Intersection-over-union of thresholded prediction vs labels (shadow = 0
// coded), threshold 0.5.
double shadow_iou(const Tensor& pred, const MaskMap& shadow_labels);

}  // namespace ar
