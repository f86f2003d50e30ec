#pragma once

#include <string>

#include "geometry.hpp"
#include "types.hpp"

namespace ar {

// All metric values are reported on the 8-bit 0..255 scale; PSNR is capped
// at 99 dB for identical inputs.
constexpr double kPsnrCap = 99.0;

struct FrameMetrics {
  int frame_id = 0;
  double mae = 0, rmse = 0, psnr = 0, ssim = 0;
  int64_t hole_pixels = 0;
};

struct EvalReport {
  double mae = 0, rmse = 0, psnr = 0, ssim = 0, twe = 0;
  bool has_twe = false;
  std::vector<FrameMetrics> per_frame;
  int64_t hole_pixel_count = 0;
};

double masked_mae(const Frame& pred, const Frame& gt, const MaskMap& hole);
double masked_rmse(const Frame& pred, const Frame& gt, const MaskMap& hole);
double masked_psnr(const Frame& pred, const Frame& gt, const MaskMap& hole);
// Mean local SSIM over 11x11 Gaussian windows (sigma 1.5) centered on hole
// pixels; windows are clipped at the image border with renormalized weights.
double masked_ssim(const Frame& pred, const Frame& gt, const MaskMap& hole);

// Temporal warping error: for each consecutive pair, resample frame t onto
// frame t+1's grid (flows_consecutive[t] is defined on frame t+1's grid and
// points into frame t) and take the RMSE against frame t+1 over
// valid-warp AND hole pixels of frame t+1; mean over pairs.
double twe(const std::vector<Frame>& frames,
           const std::vector<FlowField>& flows_consecutive,
           const std::vector<MaskMap>& holes);

// Aggregate over frames: MAE/RMSE pooled over all hole pixels, PSNR derived
// from the pooled RMSE, SSIM weighted by hole pixel count.
EvalReport evaluate_frames(const std::vector<Frame>& pred,
                           const std::vector<Frame>& gt,
                           const std::vector<MaskMap>& holes,
                           const std::vector<FlowField>* flows_consecutive);

// Line-delimited per-frame records followed by a summary line; also prints
// a human-readable table to the returned string.
std::string write_report(const EvalReport& report, const std::string& path);

}  // namespace ar
