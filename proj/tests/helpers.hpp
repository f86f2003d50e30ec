#pragma once

#include <unistd.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "core/rng.hpp"
#include "core/tensor.hpp"
#include "imageio.hpp"
#include "types.hpp"

namespace th {

namespace fs = std::filesystem;

// Scratch directory removed on destruction.
struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("ar_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string str() const { return path.string(); }
};

inline ar::Tensor rand_tensor(ar::Rng& rng, const ar::Shape& shape, double lo,
                              double hi, bool requires_grad = false) {
  std::vector<double> d(ar::numel_of(shape));
  for (auto& v : d) v = rng.uniform(lo, hi);
  return ar::Tensor::from_data(shape, std::move(d), requires_grad);
}

inline ar::MaskMap rand_mask(ar::Rng& rng, int H, int W, double hole_prob) {
  ar::MaskMap m = ar::MaskMap::ones(H, W);
  for (auto& v : m.values) v = rng.uniform(0, 1) < hole_prob ? 0 : 1;
  // guarantee both classes
  m.values.front() = 1;
  m.values.back() = 0;
  return m;
}

inline ar::MaskMap rect_hole(int H, int W, int x0, int y0, int w, int h) {
  ar::MaskMap m = ar::MaskMap::ones(H, W);
  for (int y = y0; y < y0 + h; ++y)
    for (int x = x0; x < x0 + w; ++x) m.at(y, x) = 0;
  return m;
}

// Smooth band-limited RGB texture, defined on the continuous plane so that
// sub-pixel-translated frames can be rendered exactly.
struct Texture {
  struct Wave {
    double a, fx, fy, ph;
  };
  std::array<std::array<Wave, 5>, 3> waves;

  static Texture random(uint64_t seed) {
    ar::Rng rng(seed);
    Texture t;
    for (auto& ch : t.waves)
      for (auto& w : ch)
        w = {rng.uniform(0.4, 1.0), rng.uniform(0.06, 0.5),
             rng.uniform(0.06, 0.5), rng.uniform(0.0, 6.28)};
    return t;
  }

  double value(int c, double x, double y) const {
    double s = 0;
    for (const auto& w : waves[c]) s += w.a * std::sin(w.fx * x + w.fy * y + w.ph);
    return std::clamp(0.35 * s, -0.95, 0.95);
  }

  ar::Frame frame(int H, int W, double ox = 0, double oy = 0, int id = 0) const {
    std::vector<double> d(static_cast<size_t>(3) * H * W);
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
          d[(static_cast<size_t>(c) * H + y) * W + x] = value(c, x + ox, y + oy);
    ar::Frame f;
    f.frame_id = id;
    f.pixels = ar::Tensor::from_data({3, H, W}, std::move(d));
    return f;
  }
};

// Fronto-parallel plane at constant depth viewed by a translating camera;
// analytic reprojection flow is dx = -fx * tx / Z, dy = -fy * ty / Z.
inline ar::CameraModel plane_camera(int H, int W, double fx, double fy,
                                    double Z,
                                    std::array<double, 16> pose =
                                        ar::CameraModel::identity_pose()) {
  ar::CameraModel cam;
  cam.fx = fx;
  cam.fy = fy;
  cam.cx = W / 2.0;
  cam.cy = H / 2.0;
  cam.H = H;
  cam.W = W;
  cam.pose = pose;
  cam.depth.assign(static_cast<size_t>(H) * W, Z);
  cam.depth_valid.assign(cam.depth.size(), 1);
  return cam;
}

inline std::array<double, 16> translated_pose(double tx, double ty, double tz) {
  auto p = ar::CameraModel::identity_pose();
  p[3] = tx;
  p[7] = ty;
  p[11] = tz;
  return p;
}

// On-disk sequence in the loader's layout. Masks/cameras optional.
inline void write_sequence(const fs::path& seq_dir,
                           const std::vector<ar::Frame>& frames,
                           const std::vector<ar::MaskMap>* masks = nullptr,
                           const std::vector<ar::CameraModel>* cams = nullptr) {
  fs::create_directories(seq_dir / "image");
  if (masks) fs::create_directories(seq_dir / "mask");
  if (cams) fs::create_directories(seq_dir / "depth");
  for (size_t i = 0; i < frames.size(); ++i) {
    std::string name = std::to_string(frames[i].frame_id) + ".png";
    ar::save_frame(frames[i], (seq_dir / "image" / name).string());
    if (masks) ar::save_mask((*masks)[i], (seq_dir / "mask" / name).string());
    if (cams)
      ar::save_depth((*cams)[i].depth, (*cams)[i].H, (*cams)[i].W,
                     (seq_dir / "depth" / name).string());
  }
  if (cams) {
    std::ofstream poses(seq_dir / "poses.txt");
    for (size_t i = 0; i < frames.size(); ++i) {
      poses << frames[i].frame_id;
      for (double v : (*cams)[i].pose) poses << " " << v;
      poses << "\n";
    }
    std::ofstream intr(seq_dir / "intrinsics.txt");
    intr << (*cams)[0].fx << " " << (*cams)[0].fy << " " << (*cams)[0].cx
         << " " << (*cams)[0].cy << "\n";
  }
}

// Central-difference gradient check: rebuilds the loss graph from the same
// leaf, compares analytic d(loss)/d(leaf[i]) at the given indices. Returns
// the max relative error.
inline double grad_check(ar::Tensor& leaf,
                         const std::function<ar::Tensor()>& loss_fn,
                         const std::vector<int64_t>& idxs, double h = 1e-5) {
  leaf.set_requires_grad(true);
  leaf.zero_grad();
  ar::Tensor loss = loss_fn();
  loss.backward();
  std::vector<double> analytic;
  for (int64_t i : idxs) analytic.push_back(leaf.grad()[i]);

  double worst = 0;
  for (size_t k = 0; k < idxs.size(); ++k) {
    double& x = leaf.data()[idxs[k]];
    double x0 = x;
    x = x0 + h;
    double fp = loss_fn().item();
    x = x0 - h;
    double fm = loss_fn().item();
    x = x0;
    double numeric = (fp - fm) / (2 * h);
    double denom = std::max({std::abs(numeric), std::abs(analytic[k]), 1e-6});
    worst = std::max(worst, std::abs(analytic[k] - numeric) / denom);
  }
  return worst;
}

inline std::vector<int64_t> pick_indices(ar::Rng& rng, int64_t numel, int n) {
  std::vector<int64_t> out;
  for (int i = 0; i < n; ++i)
    out.push_back(rng.uniform_int(0, static_cast<int>(numel - 1)));
  return out;
}

inline double max_abs_diff(const std::vector<double>& a,
                           const std::vector<double>& b) {
  double m = 0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace th
