#include "shadow_net.hpp"

#include <cmath>

namespace ar {

ShadowNet::ShadowNet(int depth, int base_channels, Rng& rng)
    : depth_(depth), base_(base_channels) {
  if (depth < 1 || base_channels < 1)
    fail(ErrorKind::BadParams, "ShadowNet: bad depth or channels");
  int cin = 4;
  int c = base_channels;
  for (int l = 0; l < depth; ++l) {
    enc_conv_.emplace_back(cin, c, 3, 1, 1, rng);
    down_.emplace_back(c, c * 2, 3, 2, 1, rng);
    cin = c * 2;
    c *= 2;
  }
  bottleneck_ = Conv2dLayer(cin, cin, 3, 1, 1, rng);
  for (int l = depth - 1; l >= 0; --l) {
    int skip_c = base_channels << l;
    up_conv_.emplace_back(skip_c * 2, skip_c, 3, 1, 1, rng);
    dec_conv_.emplace_back(skip_c * 2, skip_c, 3, 1, 1, rng);
  }
  head_ = Conv2dLayer(base_channels, 1, 1, 1, 0, rng);
}

Tensor ShadowNet::forward(const Tensor& rgb, const MaskMap& object_mask) const {
  if (rgb.shape().size() != 3 || rgb.shape()[0] != 3)
    fail(ErrorKind::ShapeMismatch, "shadow_forward: rgb must be (3,H,W)");
  int H = rgb.shape()[1], W = rgb.shape()[2];
  if (object_mask.H != H || object_mask.W != W)
    fail(ErrorKind::ShapeMismatch, "shadow_forward: mask shape");
  int div = 1 << depth_;
  if (H % div != 0 || W % div != 0)
    fail(ErrorKind::ShapeMismatch,
         "shadow_forward: H and W must be divisible by 2^depth");

  // object-highlight channel: hole = 1
  std::vector<double> mk(object_mask.values.size());
  for (size_t i = 0; i < mk.size(); ++i)
    mk[i] = object_mask.values[i] ? 0.0 : 1.0;
  Tensor x = concat_channels({rgb, Tensor::from_data({1, H, W}, std::move(mk))});

  std::vector<Tensor> skips;
  for (int l = 0; l < depth_; ++l) {
    x = leaky_relu(enc_conv_[l].forward(x));
    skips.push_back(x);
    x = leaky_relu(down_[l].forward(x));
  }
  x = leaky_relu(bottleneck_.forward(x));
  for (int l = 0; l < depth_; ++l) {
    x = leaky_relu(up_conv_[l].forward(upsample_nearest2(x)));
    x = concat_channels({x, skips[depth_ - 1 - l]});
    x = leaky_relu(dec_conv_[l].forward(x));
  }
  return sigmoid(head_.forward(x));
}

ParamList ShadowNet::params() const {
  ParamList out;
  for (int l = 0; l < depth_; ++l) {
    append_params(out, enc_conv_[l].params("conv"), "enc" + std::to_string(l));
    append_params(out, down_[l].params("down"), "enc" + std::to_string(l));
  }
  append_params(out, bottleneck_.params("conv"), "bottleneck");
  for (int l = 0; l < depth_; ++l) {
    append_params(out, up_conv_[l].params("up"), "dec" + std::to_string(l));
    append_params(out, dec_conv_[l].params("conv"), "dec" + std::to_string(l));
  }
  append_params(out, head_.params("conv"), "head");
  return out;
}

Checkpoint ShadowNet::to_checkpoint() const {
  nlohmann::json meta;
  meta["kind"] = "shadow_net";
  meta["version"] = 1;
  meta["depth"] = depth_;
  meta["base_channels"] = base_;
  return Checkpoint::from_params(params(), meta);
}

ShadowNet ShadowNet::from_checkpoint(const Checkpoint& ck) {
  if (!ck.metadata.contains("kind") || ck.metadata["kind"] != "shadow_net")
    fail(ErrorKind::BadParams, "checkpoint is not a shadow_net");
  Rng rng(0);
  ShadowNet net(ck.metadata["depth"], ck.metadata["base_channels"], rng);
  ck.restore_params(net.params());
  return net;
}

void ShadowNet::validate_finite() const {
  for (const auto& p : params())
    for (double v : p.tensor.data())
      if (!std::isfinite(v))
        fail(ErrorKind::BadParams, "non-finite parameter in " + p.name);
}

Tensor shadow_loss(const Tensor& pred, const MaskMap& labels) {
  int64_t n = pred.numel();
  if (static_cast<int64_t>(labels.values.size()) != n)
    fail(ErrorKind::ShapeMismatch, "shadow_loss: label size");
  for (auto v : labels.values)
    if (v > 1) fail(ErrorKind::BadLabels, "shadow_loss: labels must be binary");

  int64_t n_pos = labels.hole_count();  // shadow coded as 0
  int64_t n_neg = n - n_pos;
  double w_pos, w_neg;
  if (n_pos == 0 || n_neg == 0) {
    w_pos = w_neg = 1.0;
  } else {
    w_pos = static_cast<double>(n_neg) / n;
    w_neg = static_cast<double>(n_pos) / n;
  }
  double total_w = w_pos * n_pos + w_neg * n_neg;

  const double eps = 1e-7;
  Tensor p = clamp(pred, eps, 1.0 - eps);
  std::vector<double> wp(n), wn(n);
  for (int64_t i = 0; i < n; ++i) {
    bool shadow = labels.values[i] == 0;
    wp[i] = shadow ? w_pos / total_w : 0.0;
    wn[i] = shadow ? 0.0 : w_neg / total_w;
  }
  Tensor pos_term = sum(mul_const(log_t(p), wp));
  Tensor neg_term = sum(mul_const(log_t(sub(Tensor::full(p.shape(), 1.0), p)), wn));
  return neg(add(pos_term, neg_term));
}

double shadow_iou(const Tensor& pred, const MaskMap& labels) {
  int64_t inter = 0, uni = 0;
  const auto& pv = pred.data();
  for (size_t i = 0; i < labels.values.size(); ++i) {
    bool p = pv[i] >= 0.5;
    bool g = labels.values[i] == 0;
    inter += (p && g);
    uni += (p || g);
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / uni;
}

}  // namespace ar
