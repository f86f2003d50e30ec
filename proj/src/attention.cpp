#include "attention.hpp"

namespace ar {

namespace {
struct Geom {
  int OH, OW, pad_top, pad_left;
};

Geom geom_for(int H, int W, int k, int stride, bool same_pad) {
  Geom g;
  if (same_pad) {
    g.OH = (H + stride - 1) / stride;
    g.OW = (W + stride - 1) / stride;
    int ph = std::max(0, (g.OH - 1) * stride + k - H);
    int pw = std::max(0, (g.OW - 1) * stride + k - W);
    g.pad_top = ph / 2;
    g.pad_left = pw / 2;
  } else {
    g.OH = (H - k) / stride + 1;
    g.OW = (W - k) / stride + 1;
    g.pad_top = 0;
    g.pad_left = 0;
  }
  return g;
}
}  // namespace

PatchSet extract_patches(const Tensor& features, int k, int stride,
                         bool same_pad, const MaskMap* mask) {
  if (features.shape().size() != 3)
    fail(ErrorKind::ShapeMismatch, "extract_patches: expects (C,H,W)");
  if (k % 2 == 0) fail(ErrorKind::BadArgument, "extract_patches: k must be odd");
  if (stride < 1) fail(ErrorKind::BadArgument, "extract_patches: stride >= 1");
  int H = features.shape()[1], W = features.shape()[2];
  int pad = same_pad ? (k - 1) / 2 : 0;
  if (k > std::min(H, W) + 2 * pad)
    fail(ErrorKind::ShapeMismatch, "extract_patches: kernel larger than map");
  if (mask && (mask->H != H || mask->W != W))
    fail(ErrorKind::ShapeMismatch, "extract_patches: mask shape");

  PatchSet ps;
  ps.k = k;
  ps.stride = stride;
  ps.same_pad = same_pad;
  ps.C = features.shape()[0];
  ps.H = H;
  ps.W = W;
  ps.patches = extract_patches_t(features, k, stride, same_pad);
  Geom g = geom_for(H, W, k, stride, same_pad);
  ps.origins.reserve(static_cast<size_t>(g.OH) * g.OW);
  ps.source_validity.reserve(static_cast<size_t>(g.OH) * g.OW);
  for (int oy = 0; oy < g.OH; ++oy)
    for (int ox = 0; ox < g.OW; ++ox) {
      int y0 = oy * stride - g.pad_top;
      int x0 = ox * stride - g.pad_left;
      ps.origins.push_back({y0, x0});
      uint8_t valid = 1;
      if (mask) {
        for (int ky = 0; ky < k && valid; ++ky) {
          int y = y0 + ky;
          if (y < 0 || y >= H) continue;
          for (int kx = 0; kx < k; ++kx) {
            int x = x0 + kx;
            if (x < 0 || x >= W) continue;
            if (mask->at(y, x) == 0) { valid = 0; break; }
          }
        }
      }
      ps.source_validity.push_back(valid);
    }
  return ps;
}

PatchSet merge_patch_sets(const std::vector<PatchSet>& sets) {
  if (sets.empty()) fail(ErrorKind::BadArgument, "merge_patch_sets: empty");
  PatchSet out = sets[0];
  std::vector<Tensor> mats;
  out.origins.clear();
  out.source_validity.clear();
  for (const auto& s : sets) {
    if (s.k != out.k || s.stride != out.stride || s.C != out.C)
      fail(ErrorKind::ShapeMismatch, "merge_patch_sets: geometry mismatch");
    mats.push_back(s.patches);
    out.origins.insert(out.origins.end(), s.origins.begin(), s.origins.end());
    out.source_validity.insert(out.source_validity.end(),
                               s.source_validity.begin(),
                               s.source_validity.end());
  }
  out.patches = concat_rows(mats);
  return out;
}

AttentionResult contextual_attention(const Tensor& fg, const PatchSet& bg,
                                     const MaskMap& fg_mask, double scale,
                                     bool want_scores, int chunk_rows) {
  if (scale <= 0.0) fail(ErrorKind::BadArgument, "contextual_attention: scale > 0");
  if (fg.shape().size() != 3 || fg.shape()[0] != bg.C)
    fail(ErrorKind::ShapeMismatch, "contextual_attention: fg channels");
  if (bg.valid_count() == 0)
    fail(ErrorKind::NoBackground, "contextual_attention: no valid bg patch");
  if (fg_mask.H != fg.shape()[1] || fg_mask.W != fg.shape()[2])
    fail(ErrorKind::ShapeMismatch, "contextual_attention: fg mask shape");

  int C = fg.shape()[0], H = fg.shape()[1], W = fg.shape()[2];
  Tensor fg_patches = extract_patches_t(fg, bg.k, bg.stride, bg.same_pad);
  Tensor fg_norm = normalize_rows(fg_patches);
  Tensor bg_norm = normalize_rows(bg.patches);

  int nf = fg_patches.shape()[0];
  std::vector<Tensor> recon_parts, score_parts;
  for (int r0 = 0; r0 < nf; r0 += chunk_rows) {
    int r1 = std::min(nf, r0 + chunk_rows);
    Tensor fchunk = (r0 == 0 && r1 == nf) ? fg_norm : slice_rows(fg_norm, r0, r1);
    Tensor sim = matmul_nt(fchunk, bg_norm);
    Tensor sc = softmax_rows(sim, bg.source_validity, scale);
    recon_parts.push_back(matmul(sc, bg.patches));
    if (want_scores) score_parts.push_back(sc);
  }
  Tensor recon_patches =
      recon_parts.size() == 1 ? recon_parts[0] : concat_rows(recon_parts);

  AttentionResult res;
  res.reconstructed =
      fold_patches_t(recon_patches, C, H, W, bg.k, bg.stride, bg.same_pad);
  if (want_scores)
    res.scores = score_parts.size() == 1 ? score_parts[0] : concat_rows(score_parts);
  return res;
}

}  // namespace ar
