#include "imageio.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <filesystem>

namespace ar {

bool file_exists(const std::string& path) {
  return std::filesystem::exists(path);
}

Frame load_frame(const std::string& path, int frame_id) {
  cv::Mat img = cv::imread(path, cv::IMREAD_COLOR);
  if (img.empty()) fail(ErrorKind::MissingFrame, "cannot read image: " + path);
  int H = img.rows, W = img.cols;
  std::vector<double> data(static_cast<size_t>(3) * H * W);
  size_t plane = static_cast<size_t>(H) * W;
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      cv::Vec3b bgr = img.at<cv::Vec3b>(y, x);
      size_t i = static_cast<size_t>(y) * W + x;
      data[0 * plane + i] = bgr[2] / 127.5 - 1.0;  // R
      data[1 * plane + i] = bgr[1] / 127.5 - 1.0;  // G
      data[2 * plane + i] = bgr[0] / 127.5 - 1.0;  // B
    }
  Frame f;
  f.pixels = Tensor::from_data({3, H, W}, std::move(data));
  f.frame_id = frame_id;
  return f;
}

void save_frame(const Frame& frame, const std::string& path) {
  int H = frame.height(), W = frame.width();
  size_t plane = static_cast<size_t>(H) * W;
  const auto& d = frame.pixels.data();
  cv::Mat img(H, W, CV_8UC3);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      size_t i = static_cast<size_t>(y) * W + x;
      auto q = [&](int c) {
        double v = (d[c * plane + i] + 1.0) * 127.5;
        return static_cast<uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
      };
      img.at<cv::Vec3b>(y, x) = cv::Vec3b(q(2), q(1), q(0));
    }
  if (!cv::imwrite(path, img))
    fail(ErrorKind::BadData, "cannot write image: " + path);
}

MaskMap load_mask(const std::string& path) {
  cv::Mat img = cv::imread(path, cv::IMREAD_GRAYSCALE);
  if (img.empty()) fail(ErrorKind::MissingFrame, "cannot read mask: " + path);
  MaskMap m;
  m.H = img.rows;
  m.W = img.cols;
  m.values.resize(static_cast<size_t>(m.H) * m.W);
  for (int y = 0; y < m.H; ++y)
    for (int x = 0; x < m.W; ++x)
      m.values[static_cast<size_t>(y) * m.W + x] =
          img.at<uint8_t>(y, x) >= 128 ? 1 : 0;
  return m;
}

void save_mask(const MaskMap& mask, const std::string& path) {
  cv::Mat img(mask.H, mask.W, CV_8UC1);
  for (int y = 0; y < mask.H; ++y)
    for (int x = 0; x < mask.W; ++x)
      img.at<uint8_t>(y, x) = mask.at(y, x) ? 255 : 0;
  if (!cv::imwrite(path, img))
    fail(ErrorKind::BadData, "cannot write mask: " + path);
}

void load_depth(const std::string& path, std::vector<double>& depth,
                std::vector<uint8_t>& valid, int& H, int& W) {
  cv::Mat img = cv::imread(path, cv::IMREAD_UNCHANGED);
  if (img.empty()) fail(ErrorKind::MissingFrame, "cannot read depth: " + path);
  if (img.type() != CV_16UC1)
    fail(ErrorKind::BadData, "depth must be 16-bit single channel: " + path);
  H = img.rows;
  W = img.cols;
  depth.resize(static_cast<size_t>(H) * W);
  valid.resize(depth.size());
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      uint16_t mm = img.at<uint16_t>(y, x);
      size_t i = static_cast<size_t>(y) * W + x;
      depth[i] = mm / 1000.0;
      valid[i] = mm > 0 ? 1 : 0;
    }
}

void save_depth(const std::vector<double>& depth_m, int H, int W,
                const std::string& path) {
  cv::Mat img(H, W, CV_16UC1);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      double mm = depth_m[static_cast<size_t>(y) * W + x] * 1000.0;
      img.at<uint16_t>(y, x) =
          static_cast<uint16_t>(std::lround(std::clamp(mm, 0.0, 65535.0)));
    }
  if (!cv::imwrite(path, img))
    fail(ErrorKind::BadData, "cannot write depth: " + path);
}

Frame downsample_area(const Frame& frame, int factor) {
  int H = frame.height(), W = frame.width();
  int H2 = H / factor, W2 = W / factor;
  cv::Mat src(H, W, CV_64FC3);
  size_t plane = static_cast<size_t>(H) * W;
  const auto& d = frame.pixels.data();
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      size_t i = static_cast<size_t>(y) * W + x;
      src.at<cv::Vec3d>(y, x) =
          cv::Vec3d(d[i], d[plane + i], d[2 * plane + i]);
    }
  cv::Mat dst;
  cv::resize(src, dst, cv::Size(W2, H2), 0, 0, cv::INTER_AREA);
  std::vector<double> out(static_cast<size_t>(3) * H2 * W2);
  size_t plane2 = static_cast<size_t>(H2) * W2;
  for (int y = 0; y < H2; ++y)
    for (int x = 0; x < W2; ++x) {
      cv::Vec3d v = dst.at<cv::Vec3d>(y, x);
      size_t i = static_cast<size_t>(y) * W2 + x;
      out[i] = v[0];
      out[plane2 + i] = v[1];
      out[2 * plane2 + i] = v[2];
    }
  Frame f;
  f.pixels = Tensor::from_data({3, H2, W2}, std::move(out));
  f.frame_id = frame.frame_id;
  return f;
}

}  // namespace ar
