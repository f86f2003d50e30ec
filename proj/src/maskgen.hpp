#pragma once

#include "core/rng.hpp"
#include "geometry.hpp"
#include "types.hpp"

namespace ar {

// Propagates a target-frame hole to every reference frame: warp by the
// frame's flow, then translate by a random per-frame displacement drawn
// uniformly from [-jitter_px, +jitter_px]^2. One output mask per flow.
std::vector<MaskMap> generate_temporal_masks(const MaskMap& base_mask,
                                             const std::vector<FlowField>& flows,
                                             Rng& rng, double jitter_px);

// Hole union: output hole = object hole OR {shadow_prob >= threshold}.
MaskMap merge_shadow_mask(const MaskMap& object_mask,
                          const std::vector<double>& shadow_prob,
                          double threshold);

// Morphological dilation of the hole (0-region) with an L1 disc.
MaskMap dilate_mask(const MaskMap& mask, int radius);

// Sub-pixel translation of a mask (content moves by (dx,dy)); pixels pulled
// from outside become 0.
MaskMap translate_mask(const MaskMap& mask, double dx, double dy);

}  // namespace ar
