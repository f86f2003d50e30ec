#include "inpaint_net.hpp"

namespace ar {

namespace {
Tensor frame_mask_input(const Tensor& pixels, const MaskMap& mask) {
  int H = pixels.shape()[1], W = pixels.shape()[2];
  if (mask.H != H || mask.W != W)
    fail(ErrorKind::ShapeMismatch, "frame/mask shape mismatch");
  std::vector<double> mk(mask.values.size());
  for (size_t i = 0; i < mk.size(); ++i) mk[i] = mask.values[i] ? 1.0 : 0.0;
  return concat_channels({pixels, Tensor::from_data({1, H, W}, std::move(mk))});
}
}  // namespace

// ---- CoarseNet -----------------------------------------------------------

CoarseNet::CoarseNet(int c, Rng& rng) {
  enc_.emplace_back(4, c, 5, 1, 2, rng);
  enc_.emplace_back(c, 2 * c, 3, 2, 1, rng);
  enc_.emplace_back(2 * c, 2 * c, 3, 1, 1, rng);
  enc_.emplace_back(2 * c, 4 * c, 3, 2, 1, rng);
  dilated_.emplace_back(4 * c, 4 * c, 3, 1, 2, rng, 2);
  dilated_.emplace_back(4 * c, 4 * c, 3, 1, 4, rng, 4);
  dec_.emplace_back(4 * c, 2 * c, 3, 1, 1, rng);
  dec_.emplace_back(2 * c, c, 3, 1, 1, rng);
  head_ = Conv2dLayer(c, 3, 3, 1, 1, rng);
}

Tensor CoarseNet::forward(const Tensor& frame, const MaskMap& mask) const {
  int H = frame.shape()[1], W = frame.shape()[2];
  if (H % 8 != 0 || W % 8 != 0)
    fail(ErrorKind::ShapeMismatch, "coarse_forward: H,W must be divisible by 8");
  Tensor x = frame_mask_input(frame, mask);
  for (const auto& l : enc_) x = l.forward(x);
  for (const auto& l : dilated_) x = l.forward(x);
  x = dec_[0].forward(upsample_nearest2(x));
  x = dec_[1].forward(upsample_nearest2(x));
  return tanh_t(head_.forward(x));
}

ParamList CoarseNet::params() const {
  ParamList out;
  for (size_t i = 0; i < enc_.size(); ++i)
    append_params(out, enc_[i].params("gc"), "enc" + std::to_string(i));
  for (size_t i = 0; i < dilated_.size(); ++i)
    append_params(out, dilated_[i].params("gc"), "dil" + std::to_string(i));
  for (size_t i = 0; i < dec_.size(); ++i)
    append_params(out, dec_[i].params("gc"), "dec" + std::to_string(i));
  append_params(out, head_.params("conv"), "head");
  return out;
}

// ---- FeatureExtractor ----------------------------------------------------

FeatureExtractor::FeatureExtractor(int cf, Rng& rng) {
  layers_.emplace_back(4, cf / 2 > 0 ? cf / 2 : cf, 5, 1, 2, rng);
  int c0 = cf / 2 > 0 ? cf / 2 : cf;
  layers_.emplace_back(c0, cf, 3, 2, 1, rng);
  layers_.emplace_back(cf, cf, 3, 1, 1, rng);
  layers_.emplace_back(cf, cf, 3, 2, 1, rng);
  layers_.emplace_back(cf, cf, 3, 1, 1, rng);
}

Tensor FeatureExtractor::forward(const Tensor& x4) const {
  Tensor x = x4;
  for (const auto& l : layers_) x = l.forward(x);
  return x;
}

ParamList FeatureExtractor::params() const {
  ParamList out;
  for (size_t i = 0; i < layers_.size(); ++i)
    append_params(out, layers_[i].params("gc"), "l" + std::to_string(i));
  return out;
}

// ---- Decoder -------------------------------------------------------------

Decoder::Decoder(int cin, Rng& rng)
    : pre_(cin, cin, 3, 1, 1, rng),
      up1_(cin, cin / 2, 3, 1, 1, rng),
      up2_(cin / 2, cin / 4 > 0 ? cin / 4 : 1, 3, 1, 1, rng),
      head_(cin / 4 > 0 ? cin / 4 : 1, 3, 3, 1, 1, rng) {}

Tensor Decoder::forward(const Tensor& feats) const {
  Tensor x = pre_.forward(feats);
  x = up1_.forward(upsample_nearest2(x));
  x = up2_.forward(upsample_nearest2(x));
  return tanh_t(head_.forward(x));
}

ParamList Decoder::params() const {
  ParamList out;
  append_params(out, pre_.params("gc"), "pre");
  append_params(out, up1_.params("gc"), "up1");
  append_params(out, up2_.params("gc"), "up2");
  append_params(out, head_.params("conv"), "head");
  return out;
}

// ---- Generator -----------------------------------------------------------

Generator::Generator(const InpaintNetConfig& cfg, Rng& rng)
    : cfg_(cfg),
      coarse_(cfg.coarse_channels, rng),
      ca_extractor_(cfg.feat_channels, rng),
      global_extractor_(cfg.feat_channels, rng),
      aggregator_3d_(cfg.frames, cfg.feat_channels, cfg.feat_channels, 3, 1, rng),
      merger_3d_(cfg.frames, cfg.feat_channels, cfg.feat_channels, 3, 1, rng),
      decoder_(2 * cfg.feat_channels, rng) {
  if (cfg.frames < 1 || cfg.frames % 2 == 0)
    fail(ErrorKind::BadParams, "InpaintNetConfig: frames must be odd");
}

std::vector<Frame> Generator::coarse_forward(
    const std::vector<Frame>& frames_in,
    const std::vector<MaskMap>& masks) const {
  if (frames_in.size() != masks.size() || frames_in.empty())
    fail(ErrorKind::ShapeMismatch, "coarse_forward: frame/mask counts");
  std::vector<Frame> out;
  out.reserve(frames_in.size());
  for (size_t i = 0; i < frames_in.size(); ++i) {
    Frame f;
    f.frame_id = frames_in[i].frame_id;
    f.pixels = coarse_.forward(frames_in[i].pixels, masks[i]);
    out.push_back(std::move(f));
  }
  return out;
}

Frame Generator::refine_forward(const std::vector<Frame>& coarse,
                                const std::vector<MaskMap>& masks,
                                const std::vector<FlowField>& flows,
                                int target_index) const {
  int F = cfg_.frames;
  if (static_cast<int>(coarse.size()) != F ||
      static_cast<int>(masks.size()) != F)
    fail(ErrorKind::BadSequence, "refine_forward: expected F frames");
  if (static_cast<int>(flows.size()) != F)
    fail(ErrorKind::BadSequence, "refine_forward: missing flow fields");
  int H = coarse[0].height(), W = coarse[0].width();

  // 1) temporal warping of every reference frame onto the target grid
  std::vector<Tensor> warped(F);
  std::vector<MaskMap> warped_masks(F);
  for (int i = 0; i < F; ++i) {
    if (i == target_index || !cfg_.use_warping) {
      warped[i] = coarse[i].pixels;
      warped_masks[i] = masks[i];
    } else {
      warped[i] = warp_bilinear(coarse[i].pixels, flows[i]).warped;
      warped_masks[i] = warp_mask(masks[i], flows[i]);
    }
  }

  // 2) dual feature extraction on warped frames + warped masks
  std::vector<Tensor> ca_feats(F), global_feats(F);
  for (int i = 0; i < F; ++i) {
    Tensor in = frame_mask_input(warped[i], warped_masks[i]);
    ca_feats[i] = ca_extractor_.forward(in);
    global_feats[i] = global_extractor_.forward(in);
  }

  // 3) aggregate all F frames with the depth-F 3D kernel
  Tensor aggregated = aggregator_3d_.forward(ca_feats);

  // 4) contextual attention: target features vs aggregated background.
  // A feature pixel counts as background when it is known in any frame.
  Tensor ca_used = ca_feats[target_index];
  if (cfg_.use_contextual_attention) {
    MaskMap bg_known = downsample_mask(warped_masks[0], 4);
    for (int i = 1; i < F; ++i) {
      MaskMap mi = downsample_mask(warped_masks[i], 4);
      for (size_t p = 0; p < bg_known.values.size(); ++p)
        bg_known.values[p] = bg_known.values[p] || mi.values[p];
    }
    MaskMap fg_mask = downsample_mask(masks[target_index], 4);
    PatchSet bg = extract_patches(aggregated, cfg_.ca_patch, 1, true, &bg_known);
    if (bg.valid_count() > 0) {
      AttentionResult att = contextual_attention(
          ca_used, bg, fg_mask, cfg_.ca_scale, /*want_scores=*/false);
      // keep known target features, reconstruct only the hole
      size_t plane = fg_mask.values.size();
      int C = ca_used.shape()[0];
      std::vector<double> keep(C * plane), fill(C * plane);
      for (int c = 0; c < C; ++c)
        for (size_t p = 0; p < plane; ++p) {
          keep[c * plane + p] = fg_mask.values[p] ? 1.0 : 0.0;
          fill[c * plane + p] = fg_mask.values[p] ? 0.0 : 1.0;
        }
      ca_used = add(mul_const(ca_used, keep),
                    mul_const(att.reconstructed, fill));
    }
  }

  // 5) merge global features, 6) concat, 7) decode
  Tensor merged = merger_3d_.forward(global_feats);
  Tensor decoded = decoder_.forward(concat_channels({ca_used, merged}));
  if (decoded.shape()[1] != H || decoded.shape()[2] != W)
    fail(ErrorKind::Internal, "refine_forward: decoder shape mismatch");

  Frame out;
  out.frame_id = coarse[target_index].frame_id;
  out.pixels = decoded;
  return out;
}

ParamList Generator::params() const {
  ParamList out;
  append_params(out, coarse_.params(), "coarse");
  append_params(out, ca_extractor_.params(), "ca_extractor");
  append_params(out, global_extractor_.params(), "global_extractor");
  append_params(out, aggregator_3d_.params("agg"), "assembler");
  append_params(out, merger_3d_.params("merge"), "assembler");
  append_params(out, decoder_.params(), "decoder");
  return out;
}

Checkpoint Generator::to_checkpoint() const {
  nlohmann::json meta;
  meta["kind"] = "inpaint_generator";
  meta["version"] = 1;
  meta["frames"] = cfg_.frames;
  meta["coarse_channels"] = cfg_.coarse_channels;
  meta["feat_channels"] = cfg_.feat_channels;
  meta["ca_scale"] = cfg_.ca_scale;
  meta["ca_patch"] = cfg_.ca_patch;
  meta["use_warping"] = cfg_.use_warping;
  meta["use_contextual_attention"] = cfg_.use_contextual_attention;
  return Checkpoint::from_params(params(), meta);
}

Generator Generator::from_checkpoint(const Checkpoint& ck) {
  if (!ck.metadata.contains("kind") || ck.metadata["kind"] != "inpaint_generator")
    fail(ErrorKind::BadParams, "checkpoint is not an inpaint generator");
  InpaintNetConfig cfg;
  cfg.frames = ck.metadata["frames"];
  cfg.coarse_channels = ck.metadata["coarse_channels"];
  cfg.feat_channels = ck.metadata["feat_channels"];
  cfg.ca_scale = ck.metadata["ca_scale"];
  cfg.ca_patch = ck.metadata["ca_patch"];
  cfg.use_warping = ck.metadata["use_warping"];
  cfg.use_contextual_attention = ck.metadata["use_contextual_attention"];
  Rng rng(0);
  Generator g(cfg, rng);
  ck.restore_params(g.params());
  return g;
}

// ---- Discriminator -------------------------------------------------------

Discriminator::Discriminator(int channels, int layers, Rng& rng)
    : channels_(channels), layers_(layers) {
  int cin = 4;
  int c = channels;
  for (int l = 0; l < layers; ++l) {
    convs_.emplace_back(cin, c, 5, 2, 2, rng);
    cin = c;
    c = std::min(c * 2, 4 * channels);
  }
  convs_.emplace_back(cin, 1, 3, 1, 1, rng);  // score head
  sn_.resize(convs_.size());
}

Tensor Discriminator::forward(const Tensor& frame, const MaskMap& mask) {
  Tensor x = frame_mask_input(frame, mask);
  for (size_t l = 0; l < convs_.size(); ++l) {
    Tensor wn = spectral_normalize(convs_[l].w, sn_[l], 8);
    x = conv2d(x, wn, convs_[l].b, convs_[l].stride, convs_[l].pad, 1);
    if (l + 1 < convs_.size()) x = leaky_relu(x);
  }
  return x;
}

std::vector<double> Discriminator::layer_spectral_norms() const {
  std::vector<double> out;
  for (size_t l = 0; l < convs_.size(); ++l) {
    // accurate norm of the normalized weight used by the last forward
    SpectralNormState fresh;
    double sigma_true = power_iteration_sigma(convs_[l].w, fresh, 50);
    double sigma_used = sn_[l].sigma > 0 ? sn_[l].sigma : sigma_true;
    out.push_back(sigma_true / sigma_used);
  }
  return out;
}

ParamList Discriminator::params() const {
  ParamList out;
  for (size_t i = 0; i < convs_.size(); ++i)
    append_params(out, convs_[i].params("conv"), "d" + std::to_string(i));
  return out;
}

Checkpoint Discriminator::to_checkpoint() const {
  nlohmann::json meta;
  meta["kind"] = "discriminator";
  meta["version"] = 1;
  meta["channels"] = channels_;
  meta["layers"] = layers_;
  Checkpoint ck = Checkpoint::from_params(params(), meta);
  store_sn_state(ck);
  return ck;
}

void Discriminator::store_sn_state(Checkpoint& ck) const {
  for (size_t l = 0; l < sn_.size(); ++l) {
    if (sn_[l].u.empty()) continue;
    std::string base = "sn" + std::to_string(l);
    ck.tensors.emplace(base + ".u",
                       Tensor::from_data({static_cast<int>(sn_[l].u.size())},
                                         sn_[l].u));
    ck.tensors.emplace(base + ".sigma",
                       Tensor::from_data({1}, {sn_[l].sigma}));
  }
}

void Discriminator::restore_sn_state(const Checkpoint& ck) {
  for (size_t l = 0; l < sn_.size(); ++l) {
    std::string base = "sn" + std::to_string(l);
    auto it = ck.tensors.find(base + ".u");
    if (it == ck.tensors.end()) continue;
    sn_[l].u = it->second.data();
    sn_[l].sigma = ck.tensors.at(base + ".sigma").data()[0];
  }
}

Discriminator Discriminator::from_checkpoint(const Checkpoint& ck) {
  if (!ck.metadata.contains("kind") || ck.metadata["kind"] != "discriminator")
    fail(ErrorKind::BadParams, "checkpoint is not a discriminator");
  Rng rng(0);
  Discriminator d(ck.metadata["channels"], ck.metadata["layers"], rng);
  ck.restore_params(d.params());
  d.restore_sn_state(ck);
  return d;
}

// ---- plumbing ------------------------------------------------------------

Frame composite_output(const Frame& pred, const Frame& in_target,
                       const MaskMap& mask) {
  check_same_shape(pred.pixels, in_target.pixels, "composite_output");
  if (mask.H != pred.height() || mask.W != pred.width())
    fail(ErrorKind::ShapeMismatch, "composite_output: mask shape");
  size_t plane = mask.values.size();
  int C = pred.pixels.shape()[0];
  std::vector<double> known(C * plane), hole(C * plane);
  for (int c = 0; c < C; ++c)
    for (size_t i = 0; i < plane; ++i) {
      known[c * plane + i] = mask.values[i] ? 1.0 : 0.0;
      hole[c * plane + i] = mask.values[i] ? 0.0 : 1.0;
    }
  Frame out;
  out.frame_id = in_target.frame_id;
  out.pixels = add(mul_const(in_target.pixels, known),
                   mul_const(pred.pixels, hole));
  return out;
}

MaskMap downsample_mask(const MaskMap& mask, int factor) {
  MaskMap out;
  out.H = mask.H / factor;
  out.W = mask.W / factor;
  out.values.resize(static_cast<size_t>(out.H) * out.W);
  for (int y = 0; y < out.H; ++y)
    for (int x = 0; x < out.W; ++x) {
      int known = 0;
      for (int dy = 0; dy < factor; ++dy)
        for (int dx = 0; dx < factor; ++dx)
          known += mask.at(y * factor + dy, x * factor + dx);
      out.values[static_cast<size_t>(y) * out.W + x] =
          2 * known >= factor * factor ? 1 : 0;
    }
  return out;
}

}  // namespace ar
