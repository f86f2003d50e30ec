#include <doctest.h>

#include "inpaint_net.hpp"
#include "helpers.hpp"

using namespace ar;

namespace {
InpaintNetConfig small_cfg(int frames = 3) {
  InpaintNetConfig cfg;
  cfg.frames = frames;
  cfg.coarse_channels = 4;
  cfg.feat_channels = 4;
  cfg.disc_channels = 4;
  cfg.disc_layers = 2;
  return cfg;
}

std::vector<Frame> texture_frames(int F, int H, int W, uint64_t seed) {
  th::Texture tex = th::Texture::random(seed);
  std::vector<Frame> out;
  for (int i = 0; i < F; ++i) out.push_back(tex.frame(H, W, 1.5 * i, 0, i));
  return out;
}
}  // namespace

TEST_CASE("coarse_forward: per-frame outputs in range, divisibility check") {
  Rng rng(701);
  Generator gen(small_cfg(), rng);
  int H = 16, W = 24;
  std::vector<Frame> frames = texture_frames(3, H, W, 1);
  std::vector<MaskMap> masks(3, th::rect_hole(H, W, 4, 4, 6, 6));
  std::vector<Frame> coarse = gen.coarse_forward(frames, masks);
  REQUIRE(coarse.size() == 3);
  for (const auto& f : coarse) {
    CHECK(f.pixels.shape() == Shape{3, H, W});
    for (double v : f.pixels.data()) {
      CHECK(v >= -1.0);
      CHECK(v <= 1.0);
    }
  }

  std::vector<Frame> bad = texture_frames(3, 12, 24, 2);  // 12 % 8 != 0
  std::vector<MaskMap> bad_m(3, MaskMap::ones(12, 24));
  CHECK_THROWS_AS(gen.coarse_forward(bad, bad_m), Error);
}

TEST_CASE("refine_forward produces a full-resolution target frame") {
  Rng rng(703);
  Generator gen(small_cfg(), rng);
  int H = 16, W = 24;
  std::vector<Frame> frames = texture_frames(3, H, W, 3);
  std::vector<MaskMap> masks(3, th::rect_hole(H, W, 6, 4, 5, 5));
  std::vector<FlowField> flows(3, FlowField::zeros(H, W));
  std::vector<Frame> coarse = gen.coarse_forward(frames, masks);
  Frame refined = gen.refine_forward(coarse, masks, flows, 1);
  CHECK(refined.pixels.shape() == Shape{3, H, W});
  for (double v : refined.pixels.data()) CHECK(std::isfinite(v));

  // deterministic: same inputs, same outputs
  Frame again = gen.refine_forward(coarse, masks, flows, 1);
  CHECK(th::max_abs_diff(refined.pixels.data(), again.pixels.data()) == 0.0);
}

TEST_CASE("ablation switches keep the interface and change the path") {
  Rng rng(707);
  InpaintNetConfig cfg = small_cfg();
  Generator gen(cfg, rng);
  int H = 16, W = 24;
  std::vector<Frame> frames = texture_frames(3, H, W, 5);
  std::vector<MaskMap> masks(3, th::rect_hole(H, W, 6, 4, 5, 5));
  FlowField shift = FlowField::zeros(H, W);
  std::fill(shift.dx.begin(), shift.dx.end(), 4.0);
  std::vector<FlowField> flows{shift, FlowField::zeros(H, W), shift};
  std::vector<Frame> coarse = gen.coarse_forward(frames, masks);

  Frame full = gen.refine_forward(coarse, masks, flows, 1);
  gen.mutable_config().use_warping = false;
  Frame no_warp = gen.refine_forward(coarse, masks, flows, 1);
  gen.mutable_config().use_warping = true;
  gen.mutable_config().use_contextual_attention = false;
  Frame no_ca = gen.refine_forward(coarse, masks, flows, 1);

  CHECK(no_warp.pixels.shape() == full.pixels.shape());
  CHECK(no_ca.pixels.shape() == full.pixels.shape());
  CHECK(th::max_abs_diff(full.pixels.data(), no_warp.pixels.data()) > 0.0);
  CHECK(th::max_abs_diff(full.pixels.data(), no_ca.pixels.data()) > 0.0);
}

TEST_CASE("composite_output pastes known pixels bit-exactly") {
  Rng rng(709);
  Frame pred, in;
  pred.pixels = th::rand_tensor(rng, {3, 6, 6}, -1, 1);
  in.pixels = th::rand_tensor(rng, {3, 6, 6}, -1, 1);
  MaskMap mask = th::rect_hole(6, 6, 2, 2, 2, 2);
  Frame out = composite_output(pred, in, mask);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 6; ++y)
      for (int x = 0; x < 6; ++x) {
        size_t i = (static_cast<size_t>(c) * 6 + y) * 6 + x;
        if (mask.at(y, x))
          CHECK(out.pixels.data()[i] == in.pixels.data()[i]);
        else
          CHECK(out.pixels.data()[i] == pred.pixels.data()[i]);
      }

  // all-known mask: output is the input, bit for bit
  Frame pass = composite_output(pred, in, MaskMap::ones(6, 6));
  CHECK(pass.pixels.data() == in.pixels.data());
}

TEST_CASE("downsample_mask: majority vote per block") {
  MaskMap m = MaskMap::ones(4, 4);
  m.at(0, 0) = 0;              // 1/4 hole -> known
  m.at(2, 0) = m.at(2, 1) = 0; // 2/4 hole -> known (>= 0.5 known)
  m.at(0, 2) = m.at(0, 3) = m.at(1, 2) = 0;  // 3/4 hole -> hole
  MaskMap d = downsample_mask(m, 2);
  CHECK(d.H == 2);
  CHECK(d.W == 2);
  CHECK(d.at(0, 0) == 1);
  CHECK(d.at(1, 0) == 1);
  CHECK(d.at(0, 1) == 0);
  CHECK(d.at(1, 1) == 1);
}

TEST_CASE("discriminator: score map and spectral norm bound") {
  Rng rng(711);
  Discriminator disc(4, 2, rng);
  Tensor frame = th::rand_tensor(rng, {3, 16, 16}, -1, 1);
  MaskMap mask = th::rect_hole(16, 16, 4, 4, 6, 6);
  Tensor scores = disc.forward(frame, mask);
  REQUIRE(scores.shape().size() == 3);
  CHECK(scores.shape()[0] == 1);
  CHECK(scores.shape()[1] == 4);  // two stride-2 stages from 16
  for (double v : scores.data()) CHECK(std::isfinite(v));

  for (double ratio : disc.layer_spectral_norms()) CHECK(ratio <= 1.0 + 1e-3);
}

TEST_CASE("generator checkpoint round trip reproduces outputs bit-exactly") {
  Rng rng(713);
  Generator gen(small_cfg(), rng);
  th::TempDir tmp("gen_ckpt");
  std::string path = (tmp.path / "gen.ckpt").string();
  gen.to_checkpoint().save(path);
  Generator back = Generator::from_checkpoint(Checkpoint::load(path));
  CHECK(back.config().frames == 3);

  int H = 16, W = 16;
  std::vector<Frame> frames = texture_frames(3, H, W, 9);
  std::vector<MaskMap> masks(3, th::rect_hole(H, W, 5, 5, 4, 4));
  std::vector<FlowField> flows(3, FlowField::zeros(H, W));
  std::vector<Frame> c1 = gen.coarse_forward(frames, masks);
  std::vector<Frame> c2 = back.coarse_forward(frames, masks);
  for (int i = 0; i < 3; ++i)
    CHECK(th::max_abs_diff(c1[i].pixels.data(), c2[i].pixels.data()) == 0.0);
  Frame r1 = gen.refine_forward(c1, masks, flows, 1);
  Frame r2 = back.refine_forward(c2, masks, flows, 1);
  CHECK(th::max_abs_diff(r1.pixels.data(), r2.pixels.data()) == 0.0);
}
