#pragma once

#include <map>
#include <string>

#include "core/rng.hpp"
#include "types.hpp"

namespace ar {

struct CropSizes {
  int bottom_w = 562, bottom_h = 226;  // pre-crop applied before training crop
  int train_w = 384, train_h = 192;
  int eval_w = 560, eval_h = 448;
};

// Directory layout: <root>/<seq_id>/{image,mask,depth}/<frame_id>.png,
// <root>/<seq_id>/poses.txt (frame_id + 16 row-major floats per line),
// <root>/<seq_id>/intrinsics.txt (fx fy cx cy).
VideoSequence load_sequence(const std::string& root, const std::string& seq_id,
                            int center_frame, int delta);

// Bottom crop to bottom_w x bottom_h, then a random train_w x train_h crop
// positioned so it intersects the union of holes. Same seed, same crop.
VideoSequence preprocess_train(const VideoSequence& seq, Rng& rng,
                               const CropSizes& sizes = {});

// Deterministic center crop to eval_w x eval_h.
VideoSequence preprocess_eval(const VideoSequence& seq,
                              const CropSizes& sizes = {});

// Shared crop primitive: identical window applied to frames, masks, depth,
// and flows (flow vectors re-indexed, values unchanged).
VideoSequence crop_sequence(const VideoSequence& seq, int ox, int oy, int w,
                            int h);

// Recomputes seq.flows from cameras (depth + poses); requires cameras.
void attach_flows_from_depth(VideoSequence& seq);

// poses.txt / intrinsics.txt parsers (shared with the orchestration layer).
std::map<int, std::array<double, 16>> load_poses(const std::string& path);
void load_intrinsics(const std::string& path, CameraModel& cam);

}  // namespace ar
