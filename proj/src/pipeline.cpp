#include "pipeline.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>

#include "imageio.hpp"
#include "maskgen.hpp"

namespace fs = std::filesystem;

namespace ar {

namespace {

std::vector<int> list_frame_ids(const fs::path& image_dir) {
  if (!fs::exists(image_dir))
    fail(ErrorKind::BadData, "image directory not found: " + image_dir.string());
  std::vector<int> ids;
  for (const auto& e : fs::directory_iterator(image_dir)) {
    if (e.path().extension() != ".png") continue;
    try {
      ids.push_back(std::stoi(e.path().stem().string()));
    } catch (const std::exception&) {
      fail(ErrorKind::BadData, "non-numeric frame name: " + e.path().string());
    }
  }
  if (ids.empty())
    fail(ErrorKind::NoData, "no frames in " + image_dir.string());
  std::sort(ids.begin(), ids.end());
  return ids;
}

int resolve_center(const fs::path& base, int center_frame) {
  if (center_frame >= 0) return center_frame;
  auto ids = list_frame_ids(base / "image");
  return ids[ids.size() / 2];
}

fs::path flow_file(const fs::path& cache_root, const std::string& seq_id,
                   int target_id, int ref_id) {
  return cache_root / seq_id / "flow" /
         (std::to_string(target_id) + "_" + std::to_string(ref_id) + ".bin");
}

// Cache lookup for one window; every miss yields a zero flow.
void attach_flows_from_cache(VideoSequence& seq, const std::string& cache_root,
                             const std::string& seq_id) {
  seq.flows.clear();
  int m = seq.frames[seq.target_index].frame_id;
  for (int i = 0; i < seq.frame_count(); ++i) {
    int ref = seq.frames[i].frame_id;
    fs::path p = flow_file(cache_root, seq_id, m, ref);
    if (i != seq.target_index && ref != m && fs::exists(p))
      seq.flows.push_back(load_flow(p.string()));
    else
      seq.flows.push_back(FlowField::zeros(seq.height(), seq.width()));
  }
}

Checkpoint strip_prefix(const Checkpoint& ck, const std::string& prefix,
                        const nlohmann::json& meta) {
  Checkpoint out;
  out.metadata = meta;
  for (const auto& [n, t] : ck.tensors)
    if (n.rfind(prefix, 0) == 0)
      out.tensors.emplace(n.substr(prefix.size()), t);
  return out;
}

}  // namespace

std::string flow_cache_root(const std::string& explicit_out,
                            const std::string& data_root) {
  if (!explicit_out.empty()) return explicit_out;
  if (const char* env = std::getenv("AUTOREMOVER_CACHE"); env && *env)
    return env;
  return data_root;
}

int write_flow_cache(const std::string& data_root, const std::string& seq_id,
                     int center_frame, int delta,
                     const std::string& cache_root) {
  fs::path base = fs::path(data_root) / seq_id;
  int center = resolve_center(base, center_frame);
  VideoSequence seq = load_sequence(data_root, seq_id, center, delta);
  if (seq.cameras.empty())
    fail(ErrorKind::BadCamera,
         "flow requires depth, poses.txt and intrinsics.txt in " +
             base.string());
  fs::create_directories(fs::path(cache_root) / seq_id / "flow");
  int written = 0;
  for (int i = 0; i < seq.frame_count(); ++i) {
    if (i == seq.target_index) continue;
    save_flow(seq.flows[i],
              flow_file(cache_root, seq_id, center, seq.frames[i].frame_id)
                  .string());
    ++written;
  }
  return written;
}

std::vector<int> write_generated_masks(const std::string& data_root,
                                       const std::string& seq_id,
                                       int center_frame, int delta,
                                       double jitter_px, uint64_t seed,
                                       const std::string& out_dir) {
  fs::path base = fs::path(data_root) / seq_id;
  int center = resolve_center(base, center_frame);
  VideoSequence seq = load_sequence(data_root, seq_id, center, delta);
  if (seq.flows.empty())
    attach_flows_from_cache(seq, flow_cache_root("", data_root), seq_id);
  Rng rng(seed);
  std::vector<MaskMap> gen = generate_temporal_masks(
      seq.masks[seq.target_index], seq.flows, rng, jitter_px);
  fs::path out = fs::path(out_dir) / seq_id / "mask_gen";
  fs::create_directories(out);
  std::vector<int> ids;
  for (int i = 0; i < seq.frame_count(); ++i) {
    int id = seq.frames[i].frame_id;
    save_mask(gen[i], (out / (std::to_string(id) + ".png")).string());
    ids.push_back(id);
  }
  return ids;
}

Generator load_generator(const std::string& path) {
  Checkpoint ck = Checkpoint::load(path);
  std::string kind = ck.metadata.value("kind", "");
  if (kind == "inpaint_generator") return Generator::from_checkpoint(ck);
  if (kind == "inpaint_train")
    return Generator::from_checkpoint(
        strip_prefix(ck, "g.", ck.metadata["generator"]));
  fail(ErrorKind::BadParams, "not an inpainting checkpoint: " + path);
}

std::vector<int> run_inference(const InferOptions& opts) {
  Generator gen = load_generator(opts.inpaint_checkpoint);
  std::optional<ShadowNet> shadow;
  if (opts.use_shadow) {
    if (opts.shadow_checkpoint.empty())
      fail(ErrorKind::BadParams, "infer: shadow checkpoint required");
    shadow = ShadowNet::from_checkpoint(Checkpoint::load(opts.shadow_checkpoint));
  }
  return run_inference(opts, gen, shadow ? &*shadow : nullptr);
}

std::vector<int> run_inference(const InferOptions& opts, const Generator& gen,
                               const ShadowNet* shadow) {
  int delta = (gen.config().frames - 1) / 2;
  fs::path base = fs::path(opts.data_root) / opts.seq_id;
  std::vector<int> ids = list_frame_ids(base / "image");

  bool have_cams = fs::exists(base / "depth") &&
                   fs::exists(base / "poses.txt") &&
                   fs::exists(base / "intrinsics.txt");
  std::map<int, std::array<double, 16>> poses;
  if (have_cams) poses = load_poses((base / "poses.txt").string());

  // Load every frame once; windows reference these by index.
  int n = static_cast<int>(ids.size());
  std::vector<Frame> frames;
  std::vector<MaskMap> holes;
  std::vector<CameraModel> cams;
  for (int id : ids) {
    std::string name = std::to_string(id) + ".png";
    Frame f = load_frame((base / "image" / name).string(), id);
    fs::path mp = base / "mask" / name;
    MaskMap object = fs::exists(mp) ? load_mask(mp.string())
                                    : MaskMap::ones(f.height(), f.width());
    MaskMap hole = object;
    if (shadow) {
      Tensor prob = shadow->forward(f.pixels, object);
      hole = merge_shadow_mask(object, prob.data(), opts.shadow_threshold);
    }
    if (opts.dilate_radius > 0) hole = dilate_mask(hole, opts.dilate_radius);
    if (have_cams) {
      CameraModel cam;
      load_intrinsics((base / "intrinsics.txt").string(), cam);
      auto it = poses.find(id);
      if (it == poses.end())
        fail(ErrorKind::BadData, "missing pose for frame " + std::to_string(id));
      cam.pose = it->second;
      load_depth((base / "depth" / name).string(), cam.depth, cam.depth_valid,
                 cam.H, cam.W);
      cams.push_back(std::move(cam));
    }
    frames.push_back(std::move(f));
    holes.push_back(std::move(hole));
  }

  std::string cache = flow_cache_root(opts.flow_cache, opts.data_root);
  fs::create_directories(fs::path(opts.out_dir) / "holes");

  std::vector<int> done;
  for (int t = 0; t < n; ++t) {
    VideoSequence win;
    win.delta = delta;
    win.target_index = delta;
    for (int o = -delta; o <= delta; ++o) {
      int idx = std::clamp(t + o, 0, n - 1);
      win.frames.push_back(frames[idx]);
      win.masks.push_back(holes[idx]);
      if (have_cams) win.cameras.push_back(cams[idx]);
    }
    if (have_cams)
      attach_flows_from_depth(win);
    else
      attach_flows_from_cache(win, cache, opts.seq_id);

    std::vector<Frame> iin = apply_masks(win.frames, win.masks);
    std::vector<Frame> coarse = gen.coarse_forward(iin, win.masks);
    Frame refined =
        gen.refine_forward(coarse, win.masks, win.flows, win.target_index);
    Frame out = composite_output(refined, iin[win.target_index],
                                 win.masks[win.target_index]);
    std::string name = std::to_string(ids[t]) + ".png";
    save_frame(out, (fs::path(opts.out_dir) / name).string());
    save_mask(holes[t], (fs::path(opts.out_dir) / "holes" / name).string());
    done.push_back(ids[t]);
  }
  return done;
}

EvalReport run_evaluation(const EvaluateOptions& opts, std::string* table_out) {
  std::vector<int> ids = list_frame_ids(opts.pred_dir);
  std::vector<Frame> pred, gt;
  std::vector<MaskMap> holes;
  for (int id : ids) {
    std::string name = std::to_string(id) + ".png";
    pred.push_back(load_frame((fs::path(opts.pred_dir) / name).string(), id));
    fs::path gp = fs::path(opts.gt_dir) / name;
    fs::path hp = fs::path(opts.holes_dir) / name;
    if (!fs::exists(gp))
      fail(ErrorKind::BadData, "missing ground truth: " + gp.string());
    if (!fs::exists(hp))
      fail(ErrorKind::BadData, "missing hole mask: " + hp.string());
    gt.push_back(load_frame(gp.string(), id));
    holes.push_back(load_mask(hp.string()));
  }

  std::vector<FlowField> flows;
  if (!opts.flows_dir.empty()) {
    for (size_t t = 0; t + 1 < ids.size(); ++t) {
      fs::path p = fs::path(opts.flows_dir) /
                   (std::to_string(ids[t + 1]) + "_" + std::to_string(ids[t]) +
                    ".bin");
      if (!fs::exists(p))
        fail(ErrorKind::BadData, "missing flow for TWE: " + p.string());
      flows.push_back(load_flow(p.string()));
    }
  }

  EvalReport rep = evaluate_frames(pred, gt, holes,
                                   opts.flows_dir.empty() ? nullptr : &flows);
  std::string table;
  if (!opts.report_path.empty()) table = write_report(rep, opts.report_path);

  if (!opts.emit_dir.empty()) {
    fs::create_directories(opts.emit_dir);
    for (size_t i = 0; i < pred.size(); ++i) {
      std::string id = std::to_string(ids[i]);
      save_frame(pred[i],
                 (fs::path(opts.emit_dir) / ("frame_" + id + ".png")).string());
      const auto& pv = pred[i].pixels.data();
      const auto& gv = gt[i].pixels.data();
      std::vector<double> diff(pv.size());
      for (size_t j = 0; j < pv.size(); ++j)
        diff[j] = std::min(255.0, std::abs(pv[j] - gv[j]) * 127.5) / 127.5 - 1.0;
      Frame d;
      d.frame_id = ids[i];
      d.pixels = Tensor::from_data(pred[i].pixels.shape(), std::move(diff));
      save_frame(d,
                 (fs::path(opts.emit_dir) / ("diff_" + id + ".png")).string());
    }
  }
  if (table_out) *table_out = table;
  return rep;
}

std::vector<InpaintSample> load_inpaint_dataset(const std::string& data_root,
                                                const TrainConfig& cfg) {
  std::vector<std::string> seqs;
  for (const auto& e : fs::directory_iterator(data_root))
    if (e.is_directory()) seqs.push_back(e.path().filename().string());
  std::sort(seqs.begin(), seqs.end());

  std::vector<InpaintSample> out;
  for (const auto& s : seqs) {
    fs::path base = fs::path(data_root) / s;
    int center = resolve_center(base, -1);
    InpaintSample sample;
    sample.seq = load_sequence(data_root, s, center, cfg.seq_len / 2);
    if (sample.seq.flows.empty())
      attach_flows_from_cache(sample.seq, flow_cache_root("", data_root), s);
    fs::path vp = base / "validity.png";
    if (fs::exists(vp)) sample.loss_validity = load_mask(vp.string());
    out.push_back(std::move(sample));
  }
  return out;
}

std::vector<ShadowSample> load_shadow_dataset(const std::string& data_root) {
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(data_root))
    if (e.is_directory()) names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());

  std::vector<ShadowSample> out;
  for (const auto& nm : names) {
    fs::path base = fs::path(data_root) / nm;
    for (const char* f : {"image.png", "object_mask.png", "shadow_labels.png"})
      if (!fs::exists(base / f))
        fail(ErrorKind::BadData, "shadow sample missing " + (base / f).string());
    ShadowSample s;
    s.rgb = load_frame((base / "image.png").string());
    s.object_mask = load_mask((base / "object_mask.png").string());
    s.shadow_labels = load_mask((base / "shadow_labels.png").string());
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace ar
