#include <doctest.h>

#include "geometry.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace ar;
using th::oracle_sample;

TEST_CASE("warp_bilinear matches the per-pixel oracle on random cases") {
  Rng rng(101);
  for (int trial = 0; trial < 40; ++trial) {
    int H = 16, W = 16;
    Tensor src = th::rand_tensor(rng, {3, H, W}, -1, 1);
    Tensor flow = th::rand_tensor(rng, {2, H, W}, -4, 4);
    WarpResult res = warp_bilinear(src, flow);
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        size_t i = static_cast<size_t>(y) * W + x;
        bool inside;
        for (int c = 0; c < 3; ++c) {
          double v = oracle_sample(src.data(), c, H, W, x + flow.data()[i],
                                   y + flow.data()[H * W + i], &inside);
          CHECK(std::abs(res.warped.data()[c * H * W + i] - v) < 1e-9);
        }
        CHECK(res.in_bounds[i] == (inside ? 1 : 0));
      }
  }
}

TEST_CASE("zero flow is the identity warp") {
  Rng rng(5);
  Tensor src = th::rand_tensor(rng, {2, 7, 9}, -1, 1);
  WarpResult res = warp_bilinear(src, FlowField::zeros(7, 9));
  CHECK(th::max_abs_diff(res.warped.data(), src.data()) == 0.0);
  for (auto b : res.in_bounds) CHECK(b == 1);

  MaskMap m = th::rand_mask(rng, 7, 9, 0.4);
  MaskMap w = warp_mask(m, FlowField::zeros(7, 9));
  CHECK(w.values == m.values);
}

TEST_CASE("warp gradients wrt source and flow vs finite differences") {
  Rng rng(23);
  int H = 8, W = 8;
  Tensor src = th::rand_tensor(rng, {2, H, W}, -1, 1, true);
  // keep sample points away from integer-coordinate kinks
  std::vector<double> fd(2 * H * W);
  for (auto& v : fd) v = rng.uniform(-2.0, 2.0);
  for (auto& v : fd) {
    double fr = v - std::floor(v);
    if (fr < 0.1) v += 0.15;
    if (fr > 0.9) v -= 0.15;
  }
  Tensor flow = Tensor::from_data({2, H, W}, fd, true);

  Tensor weights = th::rand_tensor(rng, {2, H, W}, -1, 1);
  auto loss = [&] {
    return mean(mul(warp_bilinear(src, flow).warped, weights));
  };
  CHECK(th::grad_check(src, loss, th::pick_indices(rng, src.numel(), 10)) < 1e-5);
  CHECK(th::grad_check(flow, loss, th::pick_indices(rng, flow.numel(), 10), 1e-6) < 1e-4);
}

TEST_CASE("invalid flow pixels are forced out of bounds") {
  Rng rng(31);
  Tensor src = th::rand_tensor(rng, {1, 6, 6}, 0.5, 1.0);
  FlowField f = FlowField::zeros(6, 6);
  f.valid[10] = 0;
  WarpResult res = warp_bilinear(src, f);
  CHECK(res.in_bounds[10] == 0);
  CHECK(res.warped.data()[10] == 0.0);
  CHECK(res.warped.data()[11] == src.data()[11]);
}

TEST_CASE("flow_from_depth matches the analytic translation flow") {
  int H = 24, W = 32;
  double fx = 40, fy = 36, Z = 8.0, tx = 1.5, ty = -0.75;
  CameraModel cam = th::plane_camera(H, W, fx, fy, Z);
  FlowField flow = flow_from_depth(cam, th::translated_pose(tx, ty, 0));
  for (size_t i = 0; i < flow.dx.size(); ++i) {
    REQUIRE(flow.valid[i] == 1);
    CHECK(std::abs(flow.dx[i] - (-fx * tx / Z)) < 1e-3);
    CHECK(std::abs(flow.dy[i] - (-fy * ty / Z)) < 1e-3);
  }

  // invalid depth propagates to invalid flow
  cam.depth_valid[5] = 0;
  FlowField f2 = flow_from_depth(cam, th::translated_pose(tx, 0, 0));
  CHECK(f2.valid[5] == 0);

  cam.fx = 0;
  CHECK_THROWS_AS(flow_from_depth(cam, th::translated_pose(1, 0, 0)), Error);
}

TEST_CASE("flow file round trip") {
  Rng rng(41);
  FlowField f = FlowField::zeros(5, 7);
  for (size_t i = 0; i < f.dx.size(); ++i) {
    f.dx[i] = rng.uniform(-30, 30);
    f.dy[i] = rng.uniform(-30, 30);
    f.valid[i] = rng.uniform(0, 1) < 0.2 ? 0 : 1;
  }
  th::TempDir tmp("flowio");
  std::string path = (tmp.path / "0_1.bin").string();
  save_flow(f, path);
  FlowField g = load_flow(path);
  CHECK(g.H == 5);
  CHECK(g.W == 7);
  CHECK(g.valid == f.valid);
  // float32 storage
  CHECK(th::max_abs_diff(g.dx, f.dx) < 1e-4);
  CHECK(th::max_abs_diff(g.dy, f.dy) < 1e-4);

  CHECK_THROWS_AS(load_flow((tmp.path / "missing.bin").string()), Error);
}
