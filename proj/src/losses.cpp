#include "losses.hpp"

namespace ar {

namespace {
// per-channel replication of the validity map as multiplier weights
std::vector<double> validity_weights(const MaskMap& valid, int channels,
                                     double scale) {
  size_t plane = valid.values.size();
  std::vector<double> w(static_cast<size_t>(channels) * plane);
  for (int c = 0; c < channels; ++c)
    for (size_t i = 0; i < plane; ++i)
      w[c * plane + i] = valid.values[i] ? scale : 0.0;
  return w;
}
}  // namespace

Tensor reconstruction_loss(const std::vector<Tensor>& coarse_out,
                           const Tensor& refined_target,
                           const std::vector<Tensor>& gt, int target_index,
                           const MaskMap& valid_loss_mask, double alpha) {
  if (coarse_out.size() != gt.size() || coarse_out.empty())
    fail(ErrorKind::ShapeMismatch, "reconstruction_loss: frame count");
  int C = gt[0].shape()[0];
  int64_t valid_px = 0;
  for (auto v : valid_loss_mask.values) valid_px += (v != 0);
  if (valid_px == 0)
    fail(ErrorKind::EmptyLossSupport, "reconstruction_loss: no valid pixels");

  int F = static_cast<int>(coarse_out.size());
  double coarse_norm = 1.0 / (static_cast<double>(valid_px) * C * F);
  double refined_norm = 1.0 / (static_cast<double>(valid_px) * C);
  std::vector<double> wc = validity_weights(valid_loss_mask, C, coarse_norm);
  std::vector<double> wr = validity_weights(valid_loss_mask, C, refined_norm);

  Tensor acc;
  for (int f = 0; f < F; ++f) {
    check_same_shape(coarse_out[f], gt[f], "reconstruction_loss");
    Tensor t = sum(mul_const(abs_t(sub(coarse_out[f], gt[f])), wc));
    acc = f == 0 ? t : add(acc, t);
  }
  check_same_shape(refined_target, gt[target_index], "reconstruction_loss");
  Tensor refined =
      sum(mul_const(abs_t(sub(refined_target, gt[target_index])), wr));
  return add(mul_scalar(acc, alpha), refined);
}

Tensor d_hinge_loss(const Tensor& d_real, const Tensor& d_fake) {
  Tensor real_term = mean(relu(add_scalar(neg(d_real), 1.0)));
  Tensor fake_term = mean(relu(add_scalar(d_fake, 1.0)));
  return add(real_term, fake_term);
}

Tensor g_hinge_loss(const Tensor& d_fake) { return neg(mean(d_fake)); }

MaskMap build_loss_validity(const MaskMap& real_object_masks,
                            const MaskMap& synthetic_hole_masks) {
  if (real_object_masks.H != synthetic_hole_masks.H ||
      real_object_masks.W != synthetic_hole_masks.W)
    fail(ErrorKind::ShapeMismatch, "build_loss_validity: shapes");
  // validity follows the real-object mask alone: synthetic holes have known
  // ground truth, real objects do not.
  return real_object_masks;
}

}  // namespace ar
