#pragma once

#include <functional>
#include <optional>
#include <string>

#include "core/adam.hpp"
#include "dataset.hpp"
#include "inpaint_net.hpp"
#include "losses.hpp"
#include "shadow_net.hpp"

namespace ar {

struct TrainConfig {
  double learning_rate = 1e-4;
  int batch_size = 8;
  int max_iters = 2000;
  int seq_len = 5;  // F
  uint64_t seed = 1;
  int checkpoint_every = 500;
  CropSizes crops;

  // architecture (desk-scale defaults; production values via config file)
  int coarse_channels = 16;
  int feat_channels = 16;
  int disc_channels = 16;
  int disc_layers = 3;
  int shadow_depth = 4;
  int shadow_base_channels = 32;

  double alpha = 1.0;
  double adv_weight = 0.01;
  double ca_scale = 10.0;
  double adam_beta1 = 0.5;
  double adam_beta2 = 0.999;
  double shadow_threshold = 0.5;
  double jitter_px = 3.0;
  bool use_warping = true;
  bool use_contextual_attention = true;

  void validate() const;
  static TrainConfig from_file(const std::string& path);
  void save(const std::string& path) const;
};

struct TrainRecord {
  int64_t iter = 0;
  double l_g = 0, l_G = 0, l_D = 0;
  int64_t wall_ms = 0;
};

// One labeled image for the shadow branch.
struct ShadowSample {
  Frame rgb;
  MaskMap object_mask;
  MaskMap shadow_labels;  // 0 = shadow
};

struct InpaintTrainState {
  Generator generator;
  Discriminator discriminator;
  std::vector<TrainRecord> log;
};

// GAN training loop: alternating 1 D-step : 1 G-step per iteration, Adam,
// gradient masking via each sample's loss-validity mask. Samples must be
// preprocessed F-frame windows; loss_validity empty means all-valid.
struct InpaintSample {
  VideoSequence seq;      // frames = ground truth; masks = holes
  MaskMap loss_validity;  // optional; empty = all valid
};

InpaintTrainState train_inpainting(
    const TrainConfig& config, const std::vector<InpaintSample>& data,
    const std::string& out_dir,
    const std::string& resume_checkpoint = "");

struct ShadowTrainState {
  ShadowNet net;
  std::vector<TrainRecord> log;  // l_g = shadow loss, l_G = held-out IoU
};

ShadowTrainState train_shadow(const TrainConfig& config,
                              const std::vector<ShadowSample>& data,
                              const std::string& out_dir,
                              const std::string& resume_checkpoint = "");

// Builds I_in = I_gt * M for one sequence.
std::vector<Frame> apply_masks(const std::vector<Frame>& gt,
                               const std::vector<MaskMap>& masks);

void append_log(const std::vector<TrainRecord>& log, const std::string& path);

}  // namespace ar
