#include "geometry.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstring>
#include <fstream>

namespace ar {

FlowField flow_from_depth(const CameraModel& cam,
                          const std::array<double, 16>& pose_ref) {
  if (cam.fx <= 0.0 || cam.fy <= 0.0)
    fail(ErrorKind::BadCamera, "flow_from_depth: non-positive focal length");
  if (static_cast<int>(cam.depth.size()) != cam.H * cam.W)
    fail(ErrorKind::ShapeMismatch, "flow_from_depth: depth size mismatch");

  Eigen::Matrix4d Tt, Tr;
  for (int i = 0; i < 16; ++i) {
    Tt(i / 4, i % 4) = cam.pose[i];
    Tr(i / 4, i % 4) = pose_ref[i];
  }
  // camera_ref <- camera_target
  Eigen::Matrix4d rel = Tr.inverse() * Tt;

  FlowField out = FlowField::zeros(cam.H, cam.W);
  for (int y = 0; y < cam.H; ++y) {
    for (int x = 0; x < cam.W; ++x) {
      size_t i = static_cast<size_t>(y) * cam.W + x;
      double z = cam.depth[i];
      bool dv = cam.depth_valid.empty() ? (z > 0.0) : (cam.depth_valid[i] != 0 && z > 0.0);
      if (!dv) {
        out.valid[i] = 0;
        out.dx[i] = 0.0;
        out.dy[i] = 0.0;
        continue;
      }
      Eigen::Vector4d pc;
      pc << (x - cam.cx) / cam.fx * z, (y - cam.cy) / cam.fy * z, z, 1.0;
      Eigen::Vector4d pr = rel * pc;
      if (pr(2) <= 0.0) {
        out.valid[i] = 0;
        out.dx[i] = 0.0;
        out.dy[i] = 0.0;
        continue;
      }
      double xr = cam.fx * pr(0) / pr(2) + cam.cx;
      double yr = cam.fy * pr(1) / pr(2) + cam.cy;
      out.dx[i] = xr - x;
      out.dy[i] = yr - y;
      out.valid[i] = 1;
    }
  }
  return out;
}

Tensor flow_to_tensor(const FlowField& flow) {
  size_t n = static_cast<size_t>(flow.H) * flow.W;
  std::vector<double> data(2 * n);
  std::copy(flow.dx.begin(), flow.dx.end(), data.begin());
  std::copy(flow.dy.begin(), flow.dy.end(), data.begin() + n);
  return Tensor::from_data({2, flow.H, flow.W}, std::move(data));
}

namespace {
struct Tap {
  int x0, y0;
  double fx, fy;  // fractional parts
  bool inside;
};

inline Tap tap_at(double xs, double ys, int W, int H) {
  Tap t;
  t.inside = (xs >= 0.0 && xs <= W - 1.0 && ys >= 0.0 && ys <= H - 1.0);
  double fx0 = std::floor(xs), fy0 = std::floor(ys);
  t.x0 = static_cast<int>(fx0);
  t.y0 = static_cast<int>(fy0);
  t.fx = xs - fx0;
  t.fy = ys - fy0;
  // exact right/bottom edge: shift to the previous cell with weight 1
  if (t.inside && t.x0 >= W - 1) { t.x0 = W - 2; t.fx = 1.0; }
  if (t.inside && t.y0 >= H - 1) { t.y0 = H - 2; t.fy = 1.0; }
  return t;
}
}  // namespace

WarpResult warp_bilinear(const Tensor& source, const Tensor& flow) {
  if (source.shape().size() != 3 || flow.shape().size() != 3 ||
      flow.shape()[0] != 2 || flow.shape()[1] != source.shape()[1] ||
      flow.shape()[2] != source.shape()[2])
    fail(ErrorKind::ShapeMismatch, "warp_bilinear: flow/source shapes");
  int C = source.shape()[0], H = source.shape()[1], W = source.shape()[2];
  if (H < 2 || W < 2)
    fail(ErrorKind::ShapeMismatch, "warp_bilinear: needs at least 2x2");
  size_t plane = static_cast<size_t>(H) * W;
  const auto& sv = source.data();
  const auto& fv = flow.data();

  std::vector<double> out(static_cast<size_t>(C) * plane, 0.0);
  std::vector<uint8_t> in_bounds(plane, 0);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      size_t i = static_cast<size_t>(y) * W + x;
      Tap t = tap_at(x + fv[i], y + fv[plane + i], W, H);
      if (!t.inside) continue;
      in_bounds[i] = 1;
      for (int c = 0; c < C; ++c) {
        const double* p = sv.data() + c * plane;
        double v00 = p[static_cast<size_t>(t.y0) * W + t.x0];
        double v01 = p[static_cast<size_t>(t.y0) * W + t.x0 + 1];
        double v10 = p[static_cast<size_t>(t.y0 + 1) * W + t.x0];
        double v11 = p[static_cast<size_t>(t.y0 + 1) * W + t.x0 + 1];
        out[c * plane + i] = (1 - t.fy) * ((1 - t.fx) * v00 + t.fx * v01) +
                             t.fy * ((1 - t.fx) * v10 + t.fx * v11);
      }
    }
  }
  auto sn = source.node();
  auto fn = flow.node();
  auto ib = std::make_shared<std::vector<uint8_t>>(in_bounds);
  Tensor warped = make_op(
      source.shape(), std::move(out), {source, flow},
      [sn, fn, ib, C, H, W, plane](TensorNode& n) {
        for (int y = 0; y < H; ++y) {
          for (int x = 0; x < W; ++x) {
            size_t i = static_cast<size_t>(y) * W + x;
            if (!(*ib)[i]) continue;
            Tap t = tap_at(x + fn->data[i], y + fn->data[plane + i], W, H);
            double dgx = 0.0, dgy = 0.0;
            for (int c = 0; c < C; ++c) {
              double g = n.grad[c * plane + i];
              if (g == 0.0) continue;
              size_t b = c * plane;
              size_t i00 = b + static_cast<size_t>(t.y0) * W + t.x0;
              size_t i01 = i00 + 1;
              size_t i10 = b + static_cast<size_t>(t.y0 + 1) * W + t.x0;
              size_t i11 = i10 + 1;
              if (sn->requires_grad) {
                sn->ensure_grad();
                sn->grad[i00] += g * (1 - t.fy) * (1 - t.fx);
                sn->grad[i01] += g * (1 - t.fy) * t.fx;
                sn->grad[i10] += g * t.fy * (1 - t.fx);
                sn->grad[i11] += g * t.fy * t.fx;
              }
              if (fn->requires_grad) {
                double v00 = sn->data[i00], v01 = sn->data[i01];
                double v10 = sn->data[i10], v11 = sn->data[i11];
                dgx += g * ((1 - t.fy) * (v01 - v00) + t.fy * (v11 - v10));
                dgy += g * ((1 - t.fx) * (v10 - v00) + t.fx * (v11 - v01));
              }
            }
            if (fn->requires_grad) {
              fn->ensure_grad();
              fn->grad[i] += dgx;
              fn->grad[plane + i] += dgy;
            }
          }
        }
      });
  WarpResult res;
  res.warped = warped;
  res.in_bounds = std::move(in_bounds);
  return res;
}

WarpResult warp_bilinear(const Tensor& source, const FlowField& flow) {
  WarpResult res = warp_bilinear(source, flow_to_tensor(flow));
  if (!flow.valid.empty()) {
    // force invalid-flow pixels out of bounds and zero them
    int C = source.shape()[0];
    size_t plane = res.in_bounds.size();
    std::vector<double> keep(static_cast<size_t>(C) * plane, 1.0);
    bool any = false;
    for (size_t i = 0; i < plane; ++i) {
      if (!flow.valid[i] && res.in_bounds[i]) {
        res.in_bounds[i] = 0;
        any = true;
      }
      if (!res.in_bounds[i])
        for (int c = 0; c < C; ++c) keep[c * plane + i] = 0.0;
    }
    if (any) res.warped = mul_const(res.warped, keep);
  }
  return res;
}

MaskMap warp_mask(const MaskMap& mask, const FlowField& flow) {
  if (mask.H != flow.H || mask.W != flow.W)
    fail(ErrorKind::ShapeMismatch, "warp_mask: shape mismatch");
  size_t n = mask.values.size();
  std::vector<double> data(n);
  for (size_t i = 0; i < n; ++i) data[i] = mask.values[i] ? 1.0 : 0.0;
  Tensor m = Tensor::from_data({1, mask.H, mask.W}, std::move(data));
  WarpResult res = warp_bilinear(m, flow);
  MaskMap out;
  out.H = mask.H;
  out.W = mask.W;
  out.values.resize(n);
  const auto& wv = res.warped.data();
  for (size_t i = 0; i < n; ++i)
    out.values[i] = (res.in_bounds[i] && wv[i] >= 0.5) ? 1 : 0;
  return out;
}

void save_flow(const FlowField& flow, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::BadData, "cannot write flow file: " + path);
  uint32_t h = static_cast<uint32_t>(flow.H), w = static_cast<uint32_t>(flow.W);
  os.write(reinterpret_cast<const char*>(&h), 4);
  os.write(reinterpret_cast<const char*>(&w), 4);
  size_t n = static_cast<size_t>(flow.H) * flow.W;
  std::vector<float> buf(2 * n);
  for (size_t i = 0; i < n; ++i) {
    buf[2 * i] = static_cast<float>(flow.dx[i]);
    buf[2 * i + 1] = static_cast<float>(flow.dy[i]);
  }
  os.write(reinterpret_cast<const char*>(buf.data()),
           static_cast<std::streamsize>(buf.size() * sizeof(float)));
  os.write(reinterpret_cast<const char*>(flow.valid.data()),
           static_cast<std::streamsize>(n));
  if (!os) fail(ErrorKind::BadData, "flow write failed: " + path);
}

FlowField load_flow(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::BadData, "cannot open flow file: " + path);
  uint32_t h = 0, w = 0;
  is.read(reinterpret_cast<char*>(&h), 4);
  is.read(reinterpret_cast<char*>(&w), 4);
  FlowField flow;
  flow.H = static_cast<int>(h);
  flow.W = static_cast<int>(w);
  size_t n = static_cast<size_t>(h) * w;
  std::vector<float> buf(2 * n);
  is.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(buf.size() * sizeof(float)));
  flow.dx.resize(n);
  flow.dy.resize(n);
  for (size_t i = 0; i < n; ++i) {
    flow.dx[i] = buf[2 * i];
    flow.dy[i] = buf[2 * i + 1];
  }
  flow.valid.resize(n);
  is.read(reinterpret_cast<char*>(flow.valid.data()),
          static_cast<std::streamsize>(n));
  if (!is) fail(ErrorKind::BadData, "truncated flow file: " + path);
  return flow;
}

}  // namespace ar
