#pragma once

#include "types.hpp"

namespace ar {

struct LossWeights {
  double alpha = 1.0;       // coarse-term balance
  double adv_weight = 0.01;  // generator adversarial term scale
};

// L1 reconstruction loss over valid pixels:
//   alpha * mean_valid |coarse - gt| (pooled over all F frames)
//   + mean_valid |refined - gt_target|.
// valid_loss_mask excludes real-object pixels (0 = excluded).
Tensor reconstruction_loss(const std::vector<Tensor>& coarse_out,
                           const Tensor& refined_target,
                           const std::vector<Tensor>& gt, int target_index,
                           const MaskMap& valid_loss_mask, double alpha);

// Hinge losses of the SN-PatchGAN:
//   L_D = mean max(0, 1 - D(real)) + mean max(0, 1 + D(fake))
//   L_G = -mean D(fake)
Tensor d_hinge_loss(const Tensor& d_real, const Tensor& d_fake);
Tensor g_hinge_loss(const Tensor& d_fake);

// Gradient-validity mask: pixels that are NOT real (unlabeled-background)
// objects. Synthetic holes stay valid; real-object pixels are excluded.
MaskMap build_loss_validity(const MaskMap& real_object_masks,
                            const MaskMap& synthetic_hole_masks);

}  // namespace ar
