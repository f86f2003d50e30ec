#pragma once

#include <string>
#include <vector>

#include "metrics.hpp"
#include "trainer.hpp"

namespace ar {

// Flow-cache root resolution: explicit --out wins, then the
// AUTOREMOVER_CACHE environment variable, then the data root itself.
std::string flow_cache_root(const std::string& explicit_out,
                            const std::string& data_root);

// Computes reprojection flows for one F-frame window (center_frame < 0 picks
// the middle of the sequence) and writes <cache>/<seq>/flow/<m>_<i>.bin.
// Returns the number of files written (F - 1).
int write_flow_cache(const std::string& data_root, const std::string& seq_id,
                     int center_frame, int delta,
                     const std::string& cache_root);

// Propagates the target frame's hole mask to every frame of the window and
// writes <out>/<seq>/mask_gen/<frame_id>.png. Returns the ids written.
std::vector<int> write_generated_masks(const std::string& data_root,
                                       const std::string& seq_id,
                                       int center_frame, int delta,
                                       double jitter_px, uint64_t seed,
                                       const std::string& out_dir);

struct InferOptions {
  std::string data_root, seq_id, out_dir;
  std::string inpaint_checkpoint;
  std::string shadow_checkpoint;  // ignored when use_shadow is false
  bool use_shadow = true;
  double shadow_threshold = 0.5;
  int dilate_radius = 0;   // applied to the merged hole
  std::string flow_cache;  // "" = resolve via flow_cache_root
};

// Sliding-window inference: each frame is the middle of a stride-1 window of
// F frames (F from the generator checkpoint; boundary windows clamp and
// duplicate edge frames). Writes the
// composited frame to <out>/<id>.png and the hole actually inpainted to
// <out>/holes/<id>.png. Returns the processed frame ids in order.
std::vector<int> run_inference(const InferOptions& opts);

// Core used by the C API's pipeline handle: networks already loaded
// (shadow = nullptr disables the shadow branch regardless of opts).
std::vector<int> run_inference(const InferOptions& opts, const Generator& gen,
                               const ShadowNet* shadow);

struct EvaluateOptions {
  std::string pred_dir, gt_dir, holes_dir;
  std::string flows_dir;    // "" = skip TWE; file <t+1>_<t>.bin per pair
  std::string report_path;  // line-delimited records + summary
  std::string emit_dir;     // "" = skip; frames + difference images
};

// Matches *.png by numeric stem across the three directories.
EvalReport run_evaluation(const EvaluateOptions& opts, std::string* table_out);

// Training fixture loaders. Inpainting: <root>/<seq>/{image,mask,...} per
// sequence, one F-frame window each, optional <seq>/validity.png. Shadow:
// <root>/<sample>/{image.png, object_mask.png, shadow_labels.png}.
std::vector<InpaintSample> load_inpaint_dataset(const std::string& data_root,
                                                const TrainConfig& cfg);
std::vector<ShadowSample> load_shadow_dataset(const std::string& data_root);

// Loads a generator from either a bare generator checkpoint or a combined
// training checkpoint ("g."-prefixed tensors).
Generator load_generator(const std::string& path);

}  // namespace ar
