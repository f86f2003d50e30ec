#include <doctest.h>

#include "maskgen.hpp"
#include "helpers.hpp"

using namespace ar;

TEST_CASE("integer translation shifts the mask exactly") {
  Rng rng(7);
  MaskMap m = th::rand_mask(rng, 9, 11, 0.4);
  int dx = 3, dy = -2;
  MaskMap t = translate_mask(m, dx, dy);
  for (int y = 0; y < 9; ++y)
    for (int x = 0; x < 11; ++x) {
      int sy = y - dy, sx = x - dx;
      uint8_t expect =
          (sy >= 0 && sy < 9 && sx >= 0 && sx < 11) ? m.at(sy, sx) : 0;
      CHECK(t.at(y, x) == expect);
    }
}

TEST_CASE("sub-pixel translation thresholds at one half") {
  // single known column at x=4; shifting content +0.5 px leaves the
  // bilinear value at both x=4 and x=5 exactly 0.5, which counts as known
  MaskMap m{2, 9, std::vector<uint8_t>(18, 0)};
  m.at(0, 4) = 1;
  m.at(1, 4) = 1;
  MaskMap t = translate_mask(m, 0.5, 0.0);
  CHECK(t.at(0, 4) == 1);
  CHECK(t.at(0, 5) == 1);
  CHECK(t.at(0, 3) == 0);
  CHECK(t.at(0, 6) == 0);
}

TEST_CASE("generate_temporal_masks with zero jitter equals the warp oracle") {
  Rng rng(13);
  MaskMap base = th::rect_hole(10, 12, 4, 3, 3, 4);
  std::vector<FlowField> flows;
  for (int i = 0; i < 3; ++i) {
    FlowField f = FlowField::zeros(10, 12);
    for (size_t j = 0; j < f.dx.size(); ++j) {
      f.dx[j] = rng.uniform(-2, 2);
      f.dy[j] = rng.uniform(-2, 2);
    }
    flows.push_back(std::move(f));
  }
  Rng gen_rng(99);
  std::vector<MaskMap> out = generate_temporal_masks(base, flows, gen_rng, 0.0);
  REQUIRE(out.size() == 3);
  for (int i = 0; i < 3; ++i)
    CHECK(out[i].values == warp_mask(base, flows[i]).values);
}

TEST_CASE("generate_temporal_masks is seed deterministic") {
  MaskMap base = th::rect_hole(8, 8, 2, 2, 3, 3);
  std::vector<FlowField> flows(4, FlowField::zeros(8, 8));
  Rng a(42), b(42), c(43);
  auto ra = generate_temporal_masks(base, flows, a, 2.5);
  auto rb = generate_temporal_masks(base, flows, b, 2.5);
  auto rc = generate_temporal_masks(base, flows, c, 2.5);
  bool differs = false;
  for (int i = 0; i < 4; ++i) {
    CHECK(ra[i].values == rb[i].values);
    differs = differs || ra[i].values != rc[i].values;
  }
  CHECK(differs);

  std::vector<FlowField> bad(1, FlowField::zeros(4, 4));
  Rng r(1);
  CHECK_THROWS_AS(generate_temporal_masks(base, bad, r, 0.0), Error);
}

TEST_CASE("merge_shadow_mask unions hole and thresholded probability") {
  MaskMap object = th::rect_hole(4, 4, 0, 0, 2, 2);
  std::vector<double> prob(16, 0.0);
  prob[10] = 0.5;   // exactly at threshold -> shadow
  prob[11] = 0.49;  // below -> stays known
  MaskMap merged = merge_shadow_mask(object, prob, 0.5);
  CHECK(merged.values[0] == 0);   // object hole preserved
  CHECK(merged.values[10] == 0);  // shadow added
  CHECK(merged.values[11] == 1);
  CHECK(merged.hole_count() == object.hole_count() + 1);

  CHECK_THROWS_AS(merge_shadow_mask(object, prob, 0.0), Error);
  CHECK_THROWS_AS(merge_shadow_mask(object, prob, 1.0), Error);
  CHECK_THROWS_AS(merge_shadow_mask(object, std::vector<double>(4, 0.0), 0.5),
                  Error);
}

TEST_CASE("dilate_mask matches the L1-distance oracle") {
  Rng rng(17);
  MaskMap m = th::rand_mask(rng, 10, 10, 0.15);
  int radius = 2;
  MaskMap d = dilate_mask(m, radius);
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 10; ++x) {
      int best = 1 << 20;
      for (int yy = 0; yy < 10; ++yy)
        for (int xx = 0; xx < 10; ++xx)
          if (m.at(yy, xx) == 0)
            best = std::min(best, std::abs(yy - y) + std::abs(xx - x));
      CHECK(d.at(y, x) == (best <= radius ? 0 : 1));
    }

  CHECK(dilate_mask(m, 0).values == m.values);
  CHECK_THROWS_AS(dilate_mask(m, -1), Error);
}
