#include "metrics.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace ar {

namespace {
inline double to8(double v) { return (v + 1.0) * 127.5; }

struct ErrSums {
  double abs_sum = 0, sq_sum = 0;
  int64_t n = 0;
};

ErrSums hole_errors(const Frame& pred, const Frame& gt, const MaskMap& hole) {
  check_same_shape(pred.pixels, gt.pixels, "metrics");
  int H = pred.height(), W = pred.width();
  if (hole.H != H || hole.W != W)
    fail(ErrorKind::ShapeMismatch, "metrics: hole mask shape");
  size_t plane = static_cast<size_t>(H) * W;
  const auto& p = pred.pixels.data();
  const auto& g = gt.pixels.data();
  ErrSums s;
  for (size_t i = 0; i < plane; ++i) {
    if (hole.values[i] != 0) continue;  // only inpainted (hole) pixels
    for (int c = 0; c < 3; ++c) {
      double d = to8(p[c * plane + i]) - to8(g[c * plane + i]);
      s.abs_sum += std::abs(d);
      s.sq_sum += d * d;
      ++s.n;
    }
  }
  if (s.n == 0) fail(ErrorKind::EmptyRegion, "metrics: empty hole region");
  return s;
}

double psnr_from_rmse(double rmse) {
  if (rmse <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 20.0 * std::log10(255.0 / rmse));
}
}  // namespace

double masked_mae(const Frame& pred, const Frame& gt, const MaskMap& hole) {
  ErrSums s = hole_errors(pred, gt, hole);
  return s.abs_sum / s.n;
}

double masked_rmse(const Frame& pred, const Frame& gt, const MaskMap& hole) {
  ErrSums s = hole_errors(pred, gt, hole);
  return std::sqrt(s.sq_sum / s.n);
}

double masked_psnr(const Frame& pred, const Frame& gt, const MaskMap& hole) {
  return psnr_from_rmse(masked_rmse(pred, gt, hole));
}

namespace {
constexpr int kSsimWin = 11;
constexpr double kSsimSigma = 1.5;
constexpr double kC1 = (0.01 * 255) * (0.01 * 255);
constexpr double kC2 = (0.03 * 255) * (0.03 * 255);

const std::vector<double>& gaussian_kernel() {
  static std::vector<double> k = [] {
    std::vector<double> v(kSsimWin);
    int r = kSsimWin / 2;
    for (int i = 0; i < kSsimWin; ++i) {
      double d = i - r;
      v[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
    }
    return v;
  }();
  return k;
}
}  // namespace

double masked_ssim(const Frame& pred, const Frame& gt, const MaskMap& hole) {
  check_same_shape(pred.pixels, gt.pixels, "masked_ssim");
  int H = pred.height(), W = pred.width();
  if (hole.H != H || hole.W != W)
    fail(ErrorKind::ShapeMismatch, "masked_ssim: hole mask shape");
  const auto& kern = gaussian_kernel();
  int r = kSsimWin / 2;
  size_t plane = static_cast<size_t>(H) * W;
  const auto& pv = pred.pixels.data();
  const auto& gv = gt.pixels.data();

  double total = 0.0;
  int64_t count = 0;
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      if (hole.at(y, x) != 0) continue;
      for (int c = 0; c < 3; ++c) {
        double wsum = 0, mp = 0, mg = 0;
        for (int dy = -r; dy <= r; ++dy) {
          int yy = y + dy;
          if (yy < 0 || yy >= H) continue;
          for (int dx = -r; dx <= r; ++dx) {
            int xx = x + dx;
            if (xx < 0 || xx >= W) continue;
            double w = kern[dy + r] * kern[dx + r];
            size_t i = c * plane + static_cast<size_t>(yy) * W + xx;
            wsum += w;
            mp += w * to8(pv[i]);
            mg += w * to8(gv[i]);
          }
        }
        mp /= wsum;
        mg /= wsum;
        double vp = 0, vg = 0, cov = 0;
        for (int dy = -r; dy <= r; ++dy) {
          int yy = y + dy;
          if (yy < 0 || yy >= H) continue;
          for (int dx = -r; dx <= r; ++dx) {
            int xx = x + dx;
            if (xx < 0 || xx >= W) continue;
            double w = kern[dy + r] * kern[dx + r] / wsum;
            size_t i = c * plane + static_cast<size_t>(yy) * W + xx;
            double ep = to8(pv[i]) - mp;
            double eg = to8(gv[i]) - mg;
            vp += w * ep * ep;
            vg += w * eg * eg;
            cov += w * ep * eg;
          }
        }
        double s = ((2 * mp * mg + kC1) * (2 * cov + kC2)) /
                   ((mp * mp + mg * mg + kC1) * (vp + vg + kC2));
        total += s;
        ++count;
      }
    }
  if (count == 0) fail(ErrorKind::EmptyRegion, "masked_ssim: empty hole region");
  return total / count;
}

double twe(const std::vector<Frame>& frames,
           const std::vector<FlowField>& flows_consecutive,
           const std::vector<MaskMap>& holes) {
  if (frames.size() < 2 || flows_consecutive.size() + 1 != frames.size() ||
      holes.size() != frames.size())
    fail(ErrorKind::ShapeMismatch, "twe: sequence lengths");
  double total = 0.0;
  int pairs = 0;
  for (size_t t = 0; t + 1 < frames.size(); ++t) {
    WarpResult w = warp_bilinear(frames[t].pixels, flows_consecutive[t]);
    int H = frames[t + 1].height(), W = frames[t + 1].width();
    size_t plane = static_cast<size_t>(H) * W;
    const auto& wp = w.warped.data();
    const auto& nx = frames[t + 1].pixels.data();
    double sq = 0.0;
    int64_t n = 0;
    for (size_t i = 0; i < plane; ++i) {
      if (!w.in_bounds[i]) continue;
      if (holes[t + 1].values[i] != 0) continue;
      for (int c = 0; c < 3; ++c) {
        double d = to8(wp[c * plane + i]) - to8(nx[c * plane + i]);
        sq += d * d;
        ++n;
      }
    }
    if (n == 0) continue;
    total += std::sqrt(sq / n);
    ++pairs;
  }
  if (pairs == 0) fail(ErrorKind::EmptyRegion, "twe: no valid pixels in any pair");
  return total / pairs;
}

EvalReport evaluate_frames(const std::vector<Frame>& pred,
                           const std::vector<Frame>& gt,
                           const std::vector<MaskMap>& holes,
                           const std::vector<FlowField>* flows_consecutive) {
  if (pred.size() != gt.size() || pred.size() != holes.size() || pred.empty())
    fail(ErrorKind::ShapeMismatch, "evaluate_frames: counts");
  EvalReport rep;
  double abs_sum = 0, sq_sum = 0, ssim_sum = 0;
  int64_t n = 0;
  for (size_t i = 0; i < pred.size(); ++i) {
    ErrSums s = hole_errors(pred[i], gt[i], holes[i]);
    FrameMetrics fm;
    fm.frame_id = pred[i].frame_id;
    fm.hole_pixels = holes[i].hole_count();
    fm.mae = s.abs_sum / s.n;
    fm.rmse = std::sqrt(s.sq_sum / s.n);
    fm.psnr = psnr_from_rmse(fm.rmse);
    fm.ssim = masked_ssim(pred[i], gt[i], holes[i]);
    rep.per_frame.push_back(fm);
    abs_sum += s.abs_sum;
    sq_sum += s.sq_sum;
    ssim_sum += fm.ssim * s.n;
    n += s.n;
    rep.hole_pixel_count += fm.hole_pixels;
  }
  rep.mae = abs_sum / n;
  rep.rmse = std::sqrt(sq_sum / n);
  rep.psnr = psnr_from_rmse(rep.rmse);
  rep.ssim = ssim_sum / n;
  if (flows_consecutive) {
    rep.twe = twe(pred, *flows_consecutive, holes);
    rep.has_twe = true;
  }
  return rep;
}

std::string write_report(const EvalReport& report, const std::string& path) {
  std::ofstream os(path);
  if (!os) fail(ErrorKind::BadData, "cannot write report: " + path);
  for (const auto& fm : report.per_frame) {
    nlohmann::json j;
    j["frame_id"] = fm.frame_id;
    j["mae"] = fm.mae;
    j["rmse"] = fm.rmse;
    j["psnr"] = fm.psnr;
    j["ssim"] = fm.ssim;
    j["hole_pixels"] = fm.hole_pixels;
    os << j.dump() << "\n";
  }
  nlohmann::json s;
  s["summary"] = true;
  s["mae"] = report.mae;
  s["rmse"] = report.rmse;
  s["psnr"] = report.psnr;
  s["ssim"] = report.ssim;
  if (report.has_twe) s["twe"] = report.twe;
  s["hole_pixel_count"] = report.hole_pixel_count;
  os << s.dump() << "\n";

  std::ostringstream table;
  table << "metric    value\n";
  table << "MAE       " << report.mae << "\n";
  table << "RMSE      " << report.rmse << "\n";
  table << "PSNR      " << report.psnr << "\n";
  table << "SSIM      " << report.ssim << "\n";
  if (report.has_twe) table << "TWE       " << report.twe << "\n";
  table << "hole px   " << report.hole_pixel_count << "\n";
  return table.str();
}

}  // namespace ar
