#pragma once

#include "types.hpp"

namespace ar {

// Patches sliced from one or more feature maps, rows flattened (c,ky,kx).
struct PatchSet {
  Tensor patches;                        // (N, k*k*C)
  std::vector<std::array<int, 2>> origins;  // (y0, x0) per patch
  std::vector<uint8_t> source_validity;  // 1 = entirely in known region
  int k = 3, stride = 1;
  bool same_pad = true;
  int C = 0, H = 0, W = 0;

  int count() const { return patches.shape()[0]; }
  int valid_count() const {
    int n = 0;
    for (auto v : source_validity) n += (v != 0);
    return n;
  }
};

// Slice a feature map into patches. When mask is given, patches overlapping
// any hole pixel get source_validity = 0.
PatchSet extract_patches(const Tensor& features, int k, int stride,
                         bool same_pad, const MaskMap* mask = nullptr);

// Concatenate patch sets from several frames (same geometry).
PatchSet merge_patch_sets(const std::vector<PatchSet>& sets);

struct AttentionResult {
  Tensor reconstructed;  // (C,H,W)
  Tensor scores;         // (N_fg, N_bg); undefined when want_scores = false
};

// Cosine-similarity contextual attention: every foreground patch is scored
// against all valid background patches, softmax(scale * cos) weights a
// patch overlap-add reconstruction. Evaluated in row chunks to bound the
// score-matrix working set.
AttentionResult contextual_attention(const Tensor& fg, const PatchSet& bg,
                                     const MaskMap& fg_mask, double scale,
                                     bool want_scores = true,
                                     int chunk_rows = 4096);

}  // namespace ar
