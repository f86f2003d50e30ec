#include <doctest.h>

#include <fstream>

#include "metrics.hpp"
#include "helpers.hpp"

using namespace ar;

namespace {
Frame frame_of(Tensor t, int id = 0) {
  Frame f;
  f.pixels = std::move(t);
  f.frame_id = id;
  return f;
}
}  // namespace

TEST_CASE("identical images: zero error, capped PSNR, SSIM 1") {
  Rng rng(501);
  Frame a = frame_of(th::rand_tensor(rng, {3, 8, 8}, -1, 1));
  MaskMap hole = th::rect_hole(8, 8, 2, 2, 4, 4);
  CHECK(masked_mae(a, a, hole) == 0.0);
  CHECK(masked_rmse(a, a, hole) == 0.0);
  CHECK(masked_psnr(a, a, hole) == kPsnrCap);
  CHECK(masked_ssim(a, a, hole) == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(masked_mae(a, a, MaskMap::ones(8, 8)), Error);
}

TEST_CASE("uniform 8-bit offset of 10: MAE = RMSE = 10, PSNR ~ 28.13 dB") {
  Rng rng(503);
  Frame gt = frame_of(th::rand_tensor(rng, {3, 10, 10}, -0.5, 0.5));
  std::vector<double> shifted = gt.pixels.data();
  for (auto& v : shifted) v += 10.0 / 127.5;
  Frame pred = frame_of(Tensor::from_data({3, 10, 10}, std::move(shifted)));
  MaskMap hole = th::rect_hole(10, 10, 1, 1, 5, 6);
  CHECK(masked_mae(pred, gt, hole) == doctest::Approx(10.0).epsilon(1e-9));
  CHECK(masked_rmse(pred, gt, hole) == doctest::Approx(10.0).epsilon(1e-9));
  CHECK(masked_psnr(pred, gt, hole) ==
        doctest::Approx(20.0 * std::log10(25.5)).epsilon(1e-9));
}

TEST_CASE("MAE/RMSE/PSNR match the loop oracle and each other") {
  Rng rng(509);
  for (int trial = 0; trial < 10; ++trial) {
    Frame gt = frame_of(th::rand_tensor(rng, {3, 8, 8}, -1, 1));
    Frame pred = frame_of(th::rand_tensor(rng, {3, 8, 8}, -1, 1));
    MaskMap hole = th::rand_mask(rng, 8, 8, 0.5);
    double abs_sum = 0, sq = 0;
    int64_t n = 0;
    for (int c = 0; c < 3; ++c)
      for (int i = 0; i < 64; ++i) {
        if (hole.values[i]) continue;
        double d = (pred.pixels.data()[c * 64 + i] -
                    gt.pixels.data()[c * 64 + i]) * 127.5;
        abs_sum += std::abs(d);
        sq += d * d;
        ++n;
      }
    double mae = masked_mae(pred, gt, hole);
    double rmse = masked_rmse(pred, gt, hole);
    CHECK(mae == doctest::Approx(abs_sum / n).epsilon(1e-9));
    CHECK(rmse == doctest::Approx(std::sqrt(sq / n)).epsilon(1e-9));
    CHECK(mae <= rmse + 1e-12);
    CHECK(masked_psnr(pred, gt, hole) ==
          doctest::Approx(20.0 * std::log10(255.0 / rmse)).epsilon(1e-9));
  }
}

TEST_CASE("masked SSIM: interior windows match the direct formula") {
  Rng rng(521);
  int H = 20, W = 20;
  Frame gt = frame_of(th::rand_tensor(rng, {3, H, W}, -0.8, 0.8));
  std::vector<double> noisy = gt.pixels.data();
  for (auto& v : noisy) v = std::clamp(v + rng.uniform(-0.1, 0.1), -1.0, 1.0);
  Frame pred = frame_of(Tensor::from_data({3, H, W}, std::move(noisy)));
  // single interior hole pixel: the 11x11 window fits entirely
  MaskMap hole = th::rect_hole(H, W, 9, 9, 1, 1);

  // direct formula at the window centered on (9,9)
  std::vector<double> kern(11);
  for (int i = 0; i < 11; ++i) {
    double d = i - 5;
    kern[i] = std::exp(-d * d / (2 * 1.5 * 1.5));
  }
  double expect = 0;
  for (int c = 0; c < 3; ++c) {
    double wsum = 0, mp = 0, mg = 0;
    auto at = [&](const Frame& f, int y, int x) {
      return (f.pixels.data()[(c * H + y) * W + x] + 1.0) * 127.5;
    };
    for (int dy = -5; dy <= 5; ++dy)
      for (int dx = -5; dx <= 5; ++dx) {
        double w = kern[dy + 5] * kern[dx + 5];
        wsum += w;
        mp += w * at(pred, 9 + dy, 9 + dx);
        mg += w * at(gt, 9 + dy, 9 + dx);
      }
    mp /= wsum;
    mg /= wsum;
    double vp = 0, vg = 0, cov = 0;
    for (int dy = -5; dy <= 5; ++dy)
      for (int dx = -5; dx <= 5; ++dx) {
        double w = kern[dy + 5] * kern[dx + 5] / wsum;
        double ep = at(pred, 9 + dy, 9 + dx) - mp;
        double eg = at(gt, 9 + dy, 9 + dx) - mg;
        vp += w * ep * ep;
        vg += w * eg * eg;
        cov += w * ep * eg;
      }
    double c1 = 2.55 * 2.55, c2 = 7.65 * 7.65;
    expect += ((2 * mp * mg + c1) * (2 * cov + c2)) /
              ((mp * mp + mg * mg + c1) * (vp + vg + c2));
  }
  CHECK(masked_ssim(pred, gt, hole) ==
        doctest::Approx(expect / 3).epsilon(1e-6));
}

TEST_CASE("SSIM of a full-range inversion is negative") {
  th::Texture tex = th::Texture::random(77);
  Frame gt = tex.frame(16, 16);
  std::vector<double> inv = gt.pixels.data();
  for (auto& v : inv) v = -v;
  Frame pred = frame_of(Tensor::from_data({3, 16, 16}, std::move(inv)));
  MaskMap hole = th::rect_hole(16, 16, 6, 6, 4, 4);
  CHECK(masked_ssim(pred, gt, hole) < 0.0);
}

TEST_CASE("TWE: static scene zero, self-consistent warp < 1e-6") {
  th::Texture tex = th::Texture::random(31);
  int H = 12, W = 16;
  std::vector<Frame> frames{tex.frame(H, W, 0, 0, 0), tex.frame(H, W, 0, 0, 1)};
  std::vector<MaskMap> holes(2, th::rect_hole(H, W, 2, 2, 6, 6));
  std::vector<FlowField> zero{FlowField::zeros(H, W)};
  CHECK(twe(frames, zero, holes) == 0.0);

  // integer-shift sequence with the exact flow: resampling is lossless
  int s = 3;
  std::vector<Frame> moving{tex.frame(H, W, 0, 0, 0), tex.frame(H, W, s, 0, 1)};
  FlowField f = FlowField::zeros(H, W);
  std::fill(f.dx.begin(), f.dx.end(), static_cast<double>(s));
  std::vector<MaskMap> all_hole(2, MaskMap{H, W, std::vector<uint8_t>(H * W, 0)});
  CHECK(twe(moving, {f}, all_hole) < 1e-6);

  CHECK_THROWS_AS(twe(frames, {}, holes), Error);
}

TEST_CASE("evaluate_frames pools over frames and writes a report") {
  Rng rng(541);
  std::vector<Frame> gt, pred;
  std::vector<MaskMap> holes;
  for (int i = 0; i < 3; ++i) {
    gt.push_back(frame_of(th::rand_tensor(rng, {3, 8, 8}, -1, 1), i));
    pred.push_back(frame_of(th::rand_tensor(rng, {3, 8, 8}, -1, 1), i));
    holes.push_back(th::rand_mask(rng, 8, 8, 0.4));
  }
  EvalReport rep = evaluate_frames(pred, gt, holes, nullptr);
  CHECK(rep.per_frame.size() == 3);
  CHECK(rep.mae <= rep.rmse + 1e-12);
  CHECK(rep.psnr == doctest::Approx(20 * std::log10(255.0 / rep.rmse)).epsilon(1e-9));
  int64_t total = 0;
  for (const auto& h : holes) total += h.hole_count();
  CHECK(rep.hole_pixel_count == total);

  th::TempDir tmp("report");
  std::string path = (tmp.path / "report.jsonl").string();
  std::string table = write_report(rep, path);
  CHECK(table.find("RMSE") != std::string::npos);
  std::ifstream is(path);
  int lines = 0;
  std::string line;
  while (std::getline(is, line)) ++lines;
  CHECK(lines == 4);  // 3 frames + summary
}
