#include "dataset.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "geometry.hpp"
#include "imageio.hpp"

namespace fs = std::filesystem;

namespace ar {

std::map<int, std::array<double, 16>> load_poses(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorKind::BadData, "cannot read poses: " + path);
  std::map<int, std::array<double, 16>> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    int id;
    std::array<double, 16> p{};
    if (!(ls >> id)) continue;
    for (auto& v : p)
      if (!(ls >> v)) fail(ErrorKind::BadData, "bad pose line in " + path);
    out[id] = p;
  }
  return out;
}

void load_intrinsics(const std::string& path, CameraModel& cam) {
  std::ifstream is(path);
  if (!is) fail(ErrorKind::BadData, "cannot read intrinsics: " + path);
  if (!(is >> cam.fx >> cam.fy >> cam.cx >> cam.cy))
    fail(ErrorKind::BadData, "bad intrinsics file: " + path);
  if (cam.fx <= 0 || cam.fy <= 0)
    fail(ErrorKind::BadCamera, "non-positive focal length in " + path);
}

VideoSequence load_sequence(const std::string& root, const std::string& seq_id,
                            int center_frame, int delta) {
  if (delta < 0) fail(ErrorKind::BadArgument, "load_sequence: delta >= 0");
  fs::path base = fs::path(root) / seq_id;
  if (!fs::exists(base))
    fail(ErrorKind::BadData, "sequence directory not found: " + base.string());

  VideoSequence seq;
  seq.delta = delta;
  seq.target_index = delta;

  bool have_depth = fs::exists(base / "depth");
  bool have_poses = fs::exists(base / "poses.txt");
  bool have_intr = fs::exists(base / "intrinsics.txt");
  bool have_cams = have_depth && have_poses && have_intr;
  std::map<int, std::array<double, 16>> poses;
  if (have_cams) poses = load_poses((base / "poses.txt").string());

  int H = -1, W = -1;
  for (int id = center_frame - delta; id <= center_frame + delta; ++id) {
    std::string name = std::to_string(id) + ".png";
    fs::path img = base / "image" / name;
    if (!fs::exists(img))
      fail(ErrorKind::MissingFrame, "missing frame file: " + img.string());
    Frame f = load_frame(img.string(), id);
    fs::path mpath = base / "mask" / name;
    MaskMap m = fs::exists(mpath) ? load_mask(mpath.string())
                                  : MaskMap::ones(f.height(), f.width());
    if (H < 0) { H = f.height(); W = f.width(); }
    if (f.height() != H || f.width() != W || m.H != H || m.W != W)
      fail(ErrorKind::ShapeMismatch, "mismatched resolution at frame " + name);
    seq.frames.push_back(std::move(f));
    seq.masks.push_back(std::move(m));

    if (have_cams) {
      CameraModel cam;
      load_intrinsics((base / "intrinsics.txt").string(), cam);
      auto it = poses.find(id);
      if (it == poses.end())
        fail(ErrorKind::BadData, "missing pose for frame " + std::to_string(id));
      cam.pose = it->second;
      fs::path dpath = base / "depth" / name;
      if (!fs::exists(dpath))
        fail(ErrorKind::MissingFrame, "missing depth file: " + dpath.string());
      load_depth(dpath.string(), cam.depth, cam.depth_valid, cam.H, cam.W);
      if (cam.H != H || cam.W != W)
        fail(ErrorKind::ShapeMismatch, "depth resolution mismatch at " + name);
      seq.cameras.push_back(std::move(cam));
    }
  }

  if (have_cams) attach_flows_from_depth(seq);
  return seq;
}

void attach_flows_from_depth(VideoSequence& seq) {
  if (seq.cameras.size() != seq.frames.size())
    fail(ErrorKind::BadCamera, "attach_flows_from_depth: cameras missing");
  seq.flows.clear();
  const CameraModel& target = seq.cameras[seq.target_index];
  for (int i = 0; i < seq.frame_count(); ++i) {
    if (i == seq.target_index)
      seq.flows.push_back(FlowField::zeros(seq.height(), seq.width()));
    else
      seq.flows.push_back(flow_from_depth(target, seq.cameras[i].pose));
  }
}

namespace {
Tensor crop_tensor(const Tensor& t, int ox, int oy, int w, int h) {
  int C = t.shape()[0], H = t.shape()[1], W = t.shape()[2];
  std::vector<double> out(static_cast<size_t>(C) * h * w);
  const auto& d = t.data();
  for (int c = 0; c < C; ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        out[(static_cast<size_t>(c) * h + y) * w + x] =
            d[(static_cast<size_t>(c) * H + (y + oy)) * W + (x + ox)];
  return Tensor::from_data({C, h, w}, std::move(out));
}
}  // namespace

VideoSequence crop_sequence(const VideoSequence& seq, int ox, int oy, int w,
                            int h) {
  if (ox < 0 || oy < 0 || ox + w > seq.width() || oy + h > seq.height())
    fail(ErrorKind::ShapeMismatch, "crop window outside image");
  VideoSequence out;
  out.target_index = seq.target_index;
  out.delta = seq.delta;
  for (const auto& f : seq.frames) {
    Frame nf;
    nf.frame_id = f.frame_id;
    nf.pixels = crop_tensor(f.pixels, ox, oy, w, h);
    out.frames.push_back(std::move(nf));
  }
  for (const auto& m : seq.masks) {
    MaskMap nm;
    nm.H = h;
    nm.W = w;
    nm.values.resize(static_cast<size_t>(h) * w);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        nm.values[static_cast<size_t>(y) * w + x] = m.at(y + oy, x + ox);
    out.masks.push_back(std::move(nm));
  }
  for (const auto& fl : seq.flows) {
    FlowField nf = FlowField::zeros(h, w);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        size_t src = static_cast<size_t>(y + oy) * fl.W + (x + ox);
        size_t dst = static_cast<size_t>(y) * w + x;
        nf.dx[dst] = fl.dx[src];
        nf.dy[dst] = fl.dy[src];
        nf.valid[dst] = fl.valid[src];
      }
    out.flows.push_back(std::move(nf));
  }
  for (const auto& cam : seq.cameras) {
    CameraModel nc = cam;
    nc.cx = cam.cx - ox;
    nc.cy = cam.cy - oy;
    nc.H = h;
    nc.W = w;
    nc.depth.resize(static_cast<size_t>(h) * w);
    nc.depth_valid.resize(nc.depth.size());
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        size_t src = static_cast<size_t>(y + oy) * cam.W + (x + ox);
        size_t dst = static_cast<size_t>(y) * w + x;
        nc.depth[dst] = cam.depth[src];
        nc.depth_valid[dst] = cam.depth_valid.empty() ? 1 : cam.depth_valid[src];
      }
    out.cameras.push_back(std::move(nc));
  }
  return out;
}

VideoSequence preprocess_train(const VideoSequence& seq, Rng& rng,
                               const CropSizes& sizes) {
  int W = seq.width(), H = seq.height();
  int bw = std::min(sizes.bottom_w, W), bh = std::min(sizes.bottom_h, H);
  // bottom crop: keep the lowest bh rows, horizontally centered
  VideoSequence bottom =
      crop_sequence(seq, (W - bw) / 2, H - bh, bw, bh);
  int cw = sizes.train_w, ch = sizes.train_h;
  if (bottom.width() < cw || bottom.height() < ch)
    fail(ErrorKind::ShapeMismatch, "preprocess_train: input smaller than crop");

  // bounding box of the hole union across frames
  int bx0 = bottom.width(), bx1 = -1, by0 = bottom.height(), by1 = -1;
  for (const auto& m : bottom.masks)
    for (int y = 0; y < m.H; ++y)
      for (int x = 0; x < m.W; ++x)
        if (m.at(y, x) == 0) {
          bx0 = std::min(bx0, x);
          bx1 = std::max(bx1, x);
          by0 = std::min(by0, y);
          by1 = std::max(by1, y);
        }
  int max_ox = bottom.width() - cw, max_oy = bottom.height() - ch;
  auto pick = [&](int lo, int hi, int cap) {
    lo = std::clamp(lo, 0, cap);
    hi = std::clamp(hi, 0, cap);
    return rng.uniform_int(std::min(lo, hi), std::max(lo, hi));
  };
  for (int attempt = 0; attempt < 16; ++attempt) {
    int ox, oy;
    if (bx1 < 0) {  // no holes anywhere: unconstrained crop
      ox = rng.uniform_int(0, max_ox);
      oy = rng.uniform_int(0, max_oy);
    } else {
      ox = pick(bx0 - cw + 1, bx1, max_ox);
      oy = pick(by0 - ch + 1, by1, max_oy);
    }
    VideoSequence out = crop_sequence(bottom, ox, oy, cw, ch);
    bool has_hole = bx1 < 0;
    for (const auto& m : out.masks) has_hole = has_hole || m.hole_count() > 0;
    if (has_hole) return out;
  }
  // fall back to a crop centered on the hole bbox
  int ox = std::clamp((bx0 + bx1) / 2 - cw / 2, 0, max_ox);
  int oy = std::clamp((by0 + by1) / 2 - ch / 2, 0, max_oy);
  return crop_sequence(bottom, ox, oy, cw, ch);
}

VideoSequence preprocess_eval(const VideoSequence& seq, const CropSizes& sizes) {
  if (seq.width() < sizes.eval_w || seq.height() < sizes.eval_h)
    fail(ErrorKind::ShapeMismatch, "preprocess_eval: input smaller than crop");
  int ox = (seq.width() - sizes.eval_w) / 2;
  int oy = (seq.height() - sizes.eval_h) / 2;
  return crop_sequence(seq, ox, oy, sizes.eval_w, sizes.eval_h);
}

}  // namespace ar
