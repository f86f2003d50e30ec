#include <doctest.h>

#include "dataset.hpp"
#include "imageio.hpp"
#include "helpers.hpp"

using namespace ar;

TEST_CASE("frame PNG round trip stays within one 8-bit step") {
  Rng rng(601);
  th::TempDir tmp("imageio");
  Frame f;
  f.pixels = th::rand_tensor(rng, {3, 6, 9}, -1, 1);
  std::string path = (tmp.path / "f.png").string();
  save_frame(f, path);
  Frame g = load_frame(path, 7);
  CHECK(g.frame_id == 7);
  REQUIRE(g.pixels.shape() == Shape{3, 6, 9});
  CHECK(th::max_abs_diff(g.pixels.data(), f.pixels.data()) <= 1.01 / 255.0 * 2.0);

  // second round trip is lossless (already quantized)
  save_frame(g, path);
  CHECK(th::max_abs_diff(load_frame(path).pixels.data(), g.pixels.data()) == 0.0);

  CHECK_THROWS_AS(load_frame((tmp.path / "missing.png").string()), Error);
}

TEST_CASE("mask and depth round trips") {
  Rng rng(607);
  th::TempDir tmp("maskio");
  MaskMap m = th::rand_mask(rng, 7, 5, 0.4);
  std::string mp = (tmp.path / "m.png").string();
  save_mask(m, mp);
  CHECK(load_mask(mp).values == m.values);

  std::vector<double> depth(12);
  for (auto& v : depth) v = rng.uniform(0.5, 60.0);
  depth[3] = 0.0;  // invalid
  std::string dp = (tmp.path / "d.png").string();
  save_depth(depth, 3, 4, dp);
  std::vector<double> back;
  std::vector<uint8_t> valid;
  int H, W;
  load_depth(dp, back, valid, H, W);
  CHECK(H == 3);
  CHECK(W == 4);
  CHECK(valid[3] == 0);
  for (int i = 0; i < 12; ++i)
    if (valid[i]) CHECK(std::abs(back[i] - depth[i]) <= 5.5e-4);  // mm storage
}

TEST_CASE("downsample_area averages blocks") {
  std::vector<double> ch{0, 2, 4, 6, 2, 4, 6, 8};
  std::vector<double> px;
  for (int c = 0; c < 3; ++c)
    for (double v : ch) px.push_back(v + c);  // distinct per channel
  Frame f;
  f.pixels = Tensor::from_data({3, 2, 4}, std::move(px));
  // pixel range is [-1,1]; these values are out of range but the filter is
  // linear, so the block-mean oracle still applies
  Frame d = downsample_area(f, 2);
  REQUIRE(d.pixels.shape() == Shape{3, 1, 2});
  for (int c = 0; c < 3; ++c) {
    CHECK(d.pixels.data()[2 * c + 0] == doctest::Approx(2.0 + c));
    CHECK(d.pixels.data()[2 * c + 1] == doctest::Approx(6.0 + c));
  }
}

TEST_CASE("load_sequence: layout, defaults, and cameras") {
  th::Texture tex = th::Texture::random(3);
  th::TempDir tmp("seq");
  int H = 12, W = 16;
  std::vector<Frame> frames;
  std::vector<MaskMap> masks;
  std::vector<CameraModel> cams;
  for (int i = 0; i < 5; ++i) {
    frames.push_back(tex.frame(H, W, 2.0 * i, 0, i));
    masks.push_back(th::rect_hole(H, W, 4, 4, 3, 3));
    cams.push_back(th::plane_camera(H, W, 30, 30, 5.0,
                                    th::translated_pose(0.4 * i, 0, 0)));
  }
  th::write_sequence(tmp.path / "seq0", frames, &masks, &cams);

  VideoSequence seq = load_sequence(tmp.str(), "seq0", 2, 2);
  CHECK(seq.frame_count() == 5);
  CHECK(seq.target_index == 2);
  CHECK(seq.frames[0].frame_id == 0);
  CHECK(seq.cameras.size() == 5);
  REQUIRE(seq.flows.size() == 5);
  // identity at the target, translation flow elsewhere
  CHECK(seq.flows[2].dx[0] == 0.0);
  CHECK(seq.flows[3].dx[40] == doctest::Approx(-30 * 0.4 / 5.0).epsilon(1e-6));
  CHECK(seq.masks[0].hole_count() == 9);

  CHECK_THROWS_AS(load_sequence(tmp.str(), "seq0", 4, 2), Error);  // frame 6
  CHECK_THROWS_AS(load_sequence(tmp.str(), "nope", 2, 2), Error);

  // masks are optional and default to all-known
  th::TempDir tmp2("seq_nomask");
  th::write_sequence(tmp2.path / "s", frames);
  VideoSequence bare = load_sequence(tmp2.str(), "s", 2, 1);
  CHECK(bare.cameras.empty());
  CHECK(bare.flows.empty());
  for (const auto& m : bare.masks) CHECK(m.hole_count() == 0);
}

TEST_CASE("crop_sequence applies one window to every field") {
  th::Texture tex = th::Texture::random(9);
  int H = 10, W = 14;
  VideoSequence seq;
  seq.target_index = 0;
  seq.frames.push_back(tex.frame(H, W));
  seq.masks.push_back(th::rect_hole(H, W, 5, 3, 2, 2));
  FlowField f = FlowField::zeros(H, W);
  for (size_t i = 0; i < f.dx.size(); ++i) f.dx[i] = static_cast<double>(i);
  seq.flows.push_back(f);

  VideoSequence c = crop_sequence(seq, 3, 2, 8, 6);
  CHECK(c.width() == 8);
  CHECK(c.height() == 6);
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 8; ++x) {
      CHECK(c.frames[0].pixels.data()[static_cast<size_t>(y) * 8 + x] ==
            seq.frames[0].pixels.data()[static_cast<size_t>(y + 2) * W + x + 3]);
      CHECK(c.masks[0].at(y, x) == seq.masks[0].at(y + 2, x + 3));
      CHECK(c.flows[0].dx[static_cast<size_t>(y) * 8 + x] ==
            static_cast<double>((y + 2) * W + x + 3));
    }
  CHECK_THROWS_AS(crop_sequence(seq, 8, 0, 8, 6), Error);
}

TEST_CASE("preprocess_train: crop size, hole coverage, determinism") {
  th::Texture tex = th::Texture::random(11);
  int H = 40, W = 60;
  VideoSequence seq;
  seq.target_index = 1;
  for (int i = 0; i < 3; ++i) {
    seq.frames.push_back(tex.frame(H, W, i, 0, i));
    seq.masks.push_back(th::rect_hole(H, W, 30, 25, 4, 4));
    seq.flows.push_back(FlowField::zeros(H, W));
  }
  CropSizes sizes;
  sizes.bottom_w = 56;
  sizes.bottom_h = 32;
  sizes.train_w = 24;
  sizes.train_h = 16;

  Rng r1(5), r2(5), r3(6);
  VideoSequence a = preprocess_train(seq, r1, sizes);
  CHECK(a.width() == 24);
  CHECK(a.height() == 16);
  int64_t holes = 0;
  for (const auto& m : a.masks) holes += m.hole_count();
  CHECK(holes > 0);

  VideoSequence b = preprocess_train(seq, r2, sizes);
  CHECK(a.frames[0].pixels.data() == b.frames[0].pixels.data());
  // different seed is allowed to differ (usually does)
  VideoSequence c = preprocess_train(seq, r3, sizes);
  CHECK(a.masks[0].values.size() == c.masks[0].values.size());

  CropSizes too_big;
  too_big.train_w = 600;
  CHECK_THROWS_AS(preprocess_train(seq, r1, too_big), Error);
}

TEST_CASE("preprocess_eval center crops deterministically") {
  th::Texture tex = th::Texture::random(13);
  VideoSequence seq;
  seq.target_index = 0;
  seq.frames.push_back(tex.frame(20, 30));
  seq.masks.push_back(MaskMap::ones(20, 30));
  CropSizes sizes;
  sizes.eval_w = 16;
  sizes.eval_h = 12;
  VideoSequence e = preprocess_eval(seq, sizes);
  CHECK(e.width() == 16);
  CHECK(e.height() == 12);
  CHECK(e.frames[0].pixels.data()[0] ==
        seq.frames[0].pixels.data()[static_cast<size_t>(4) * 30 + 7]);
}
