#pragma once

#include <string>

#include "types.hpp"

namespace ar {

struct WarpResult {
  Tensor warped;                   // same shape as source
  std::vector<uint8_t> in_bounds;  // H*W, 1 where all four taps were inside
};

// Reprojection flow from the target camera (intrinsics + pose + depth) into
// a reference camera at pose_ref (world-from-camera, 4x4 row-major).
FlowField flow_from_depth(const CameraModel& depth_target,
                          const std::array<double, 16>& pose_ref);

// Differentiable bilinear warp: warped(p) = source(p + flow(p)).
// flow is a (2,H,W) tensor, channel 0 = dx, channel 1 = dy. Gradients flow
// to both source and flow. Out-of-bounds taps give warped = 0, in_bounds = 0.
WarpResult warp_bilinear(const Tensor& source, const Tensor& flow);

// Convenience overload for a non-differentiable FlowField; pixels with
// flow.valid == 0 are forced out-of-bounds.
WarpResult warp_bilinear(const Tensor& source, const FlowField& flow);

// Warp of a binary mask: bilinear, threshold at 0.5; out-of-bounds or
// invalid-flow pixels become 0 (unknown).
MaskMap warp_mask(const MaskMap& mask, const FlowField& flow);

// (2,H,W) tensor view of a FlowField (constant, no grad).
Tensor flow_to_tensor(const FlowField& flow);

// Flow cache files: header (H, W u32 LE), row-major float32 (dx,dy) pairs,
// then row-major u8 validity.
void save_flow(const FlowField& flow, const std::string& path);
FlowField load_flow(const std::string& path);

}  // namespace ar
