#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "core/tensor.hpp"

namespace ar {

// RGB frame, channels-first (3,H,W), values in [-1,1].
struct Frame {
  Tensor pixels;
  int frame_id = 0;

  int height() const { return pixels.shape()[1]; }
  int width() const { return pixels.shape()[2]; }
};

// Binary map: 1 = known background, 0 = hole / foreground.
struct MaskMap {
  int H = 0, W = 0;
  std::vector<uint8_t> values;

  static MaskMap ones(int H, int W) {
    return {H, W, std::vector<uint8_t>(static_cast<size_t>(H) * W, 1)};
  }
  uint8_t at(int y, int x) const { return values[static_cast<size_t>(y) * W + x]; }
  uint8_t& at(int y, int x) { return values[static_cast<size_t>(y) * W + x]; }
  int64_t hole_count() const {
    int64_t n = 0;
    for (auto v : values) n += (v == 0);
    return n;
  }
};

// Dense per-pixel displacement from a target-frame pixel to its position in
// a reference frame, with validity.
struct FlowField {
  int H = 0, W = 0;
  std::vector<double> dx, dy;     // row-major H*W
  std::vector<uint8_t> valid;

  static FlowField zeros(int H, int W) {
    FlowField f;
    f.H = H;
    f.W = W;
    size_t n = static_cast<size_t>(H) * W;
    f.dx.assign(n, 0.0);
    f.dy.assign(n, 0.0);
    f.valid.assign(n, 1);
    return f;
  }
  bool empty() const { return dx.empty(); }
};

struct CameraModel {
  double fx = 0, fy = 0, cx = 0, cy = 0;
  std::array<double, 16> pose{};      // 4x4 row-major, world-from-camera
  int H = 0, W = 0;
  std::vector<double> depth;          // meters, row-major
  std::vector<uint8_t> depth_valid;

  static std::array<double, 16> identity_pose() {
    return {1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1};
  }
};

struct VideoSequence {
  std::vector<Frame> frames;
  std::vector<MaskMap> masks;
  // flows[i] = flow from target frame to frame i; the entry at the target
  // index is an identity (zero) flow so indices line up with frames.
  std::vector<FlowField> flows;
  std::vector<CameraModel> cameras;   // may be empty when no depth/poses
  int target_index = 0;
  int delta = 0;

  int frame_count() const { return static_cast<int>(frames.size()); }
  int height() const { return frames.at(0).height(); }
  int width() const { return frames.at(0).width(); }
};

}  // namespace ar
