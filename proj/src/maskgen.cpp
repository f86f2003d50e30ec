#include "maskgen.hpp"

#include <deque>

namespace ar {

MaskMap translate_mask(const MaskMap& mask, double dx, double dy) {
  FlowField f = FlowField::zeros(mask.H, mask.W);
  // content moves by +d, so each output pixel samples at p - d
  std::fill(f.dx.begin(), f.dx.end(), -dx);
  std::fill(f.dy.begin(), f.dy.end(), -dy);
  return warp_mask(mask, f);
}

std::vector<MaskMap> generate_temporal_masks(const MaskMap& base_mask,
                                             const std::vector<FlowField>& flows,
                                             Rng& rng, double jitter_px) {
  std::vector<MaskMap> out;
  out.reserve(flows.size());
  for (const auto& flow : flows) {
    if (flow.H != base_mask.H || flow.W != base_mask.W)
      fail(ErrorKind::ShapeMismatch, "generate_temporal_masks: flow shape");
    MaskMap m = warp_mask(base_mask, flow);
    double dx = rng.uniform(-jitter_px, jitter_px);
    double dy = rng.uniform(-jitter_px, jitter_px);
    if (dx != 0.0 || dy != 0.0) m = translate_mask(m, dx, dy);
    out.push_back(std::move(m));
  }
  return out;
}

MaskMap merge_shadow_mask(const MaskMap& object_mask,
                          const std::vector<double>& shadow_prob,
                          double threshold) {
  if (shadow_prob.size() != object_mask.values.size())
    fail(ErrorKind::ShapeMismatch, "merge_shadow_mask: prob map size");
  if (threshold <= 0.0 || threshold >= 1.0)
    fail(ErrorKind::BadArgument, "merge_shadow_mask: threshold in (0,1)");
  MaskMap out = object_mask;
  for (size_t i = 0; i < out.values.size(); ++i)
    if (shadow_prob[i] >= threshold) out.values[i] = 0;
  return out;
}

MaskMap dilate_mask(const MaskMap& mask, int radius) {
  if (radius < 0) fail(ErrorKind::BadArgument, "dilate_mask: negative radius");
  if (radius == 0) return mask;
  // multi-source BFS from hole pixels under the L1 metric
  MaskMap out = mask;
  std::vector<int> dist(mask.values.size(), -1);
  std::deque<std::pair<int, int>> q;
  for (int y = 0; y < mask.H; ++y)
    for (int x = 0; x < mask.W; ++x)
      if (mask.at(y, x) == 0) {
        dist[static_cast<size_t>(y) * mask.W + x] = 0;
        q.emplace_back(y, x);
      }
  const int dy[4] = {-1, 1, 0, 0};
  const int dx[4] = {0, 0, -1, 1};
  while (!q.empty()) {
    auto [y, x] = q.front();
    q.pop_front();
    int d = dist[static_cast<size_t>(y) * mask.W + x];
    if (d >= radius) continue;
    for (int k = 0; k < 4; ++k) {
      int ny = y + dy[k], nx = x + dx[k];
      if (ny < 0 || ny >= mask.H || nx < 0 || nx >= mask.W) continue;
      size_t i = static_cast<size_t>(ny) * mask.W + nx;
      if (dist[i] >= 0) continue;
      dist[i] = d + 1;
      out.values[i] = 0;
      q.emplace_back(ny, nx);
    }
  }
  return out;
}

}  // namespace ar
