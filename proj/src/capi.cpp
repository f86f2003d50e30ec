#include "autoremover.h"

#include <memory>
#include <optional>
#include <string>

#include "pipeline.hpp"

namespace {

thread_local std::string g_last_error;

std::string opt(const char* s) { return s ? s : ""; }

// Everything the core reports as a caller/data problem maps to AR_E_USAGE;
// only ErrorKind::Internal (and unexpected exceptions) map to AR_E_INTERNAL.
template <typename Fn>
ar_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return AR_OK;
  } catch (const ar::Error& e) {
    g_last_error = std::string(ar::error_kind_name(e.kind())) + ": " + e.what();
    return e.kind() == ar::ErrorKind::Internal ? AR_E_INTERNAL : AR_E_USAGE;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return AR_E_INTERNAL;
  }
}

ar::TrainConfig make_config(const char* config_path, int max_iters_override) {
  ar::TrainConfig cfg = config_path && *config_path
                            ? ar::TrainConfig::from_file(config_path)
                            : ar::TrainConfig{};
  if (max_iters_override >= 0) cfg.max_iters = max_iters_override;
  cfg.validate();
  return cfg;
}

void require(const char* p, const char* what) {
  if (!p || !*p) ar::fail(ar::ErrorKind::BadArgument, std::string(what) + " required");
}

}  // namespace

struct ar_pipeline {
  ar::Generator generator;
  std::optional<ar::ShadowNet> shadow;
  double shadow_threshold;
  int dilate_radius;
};

extern "C" {

const char* ar_last_error(void) { return g_last_error.c_str(); }

ar_status ar_compute_flow(const char* data_root, const char* seq_id,
                          int center_frame, int delta, const char* out_root,
                          int* files_written) {
  return guarded([&] {
    require(data_root, "data_root");
    require(seq_id, "seq_id");
    int n = ar::write_flow_cache(
        data_root, seq_id, center_frame, delta,
        ar::flow_cache_root(opt(out_root), data_root));
    if (files_written) *files_written = n;
  });
}

ar_status ar_generate_masks(const char* data_root, const char* seq_id,
                            int center_frame, int delta, double jitter_px,
                            unsigned long long seed, const char* out_dir) {
  return guarded([&] {
    require(data_root, "data_root");
    require(seq_id, "seq_id");
    require(out_dir, "out_dir");
    ar::write_generated_masks(data_root, seq_id, center_frame, delta,
                              jitter_px, seed, out_dir);
  });
}

ar_status ar_train_shadow(const char* config_path, const char* data_root,
                          const char* out_dir, const char* resume_ckpt,
                          int max_iters_override) {
  return guarded([&] {
    require(data_root, "data_root");
    require(out_dir, "out_dir");
    ar::TrainConfig cfg = make_config(config_path, max_iters_override);
    ar::train_shadow(cfg, ar::load_shadow_dataset(data_root), out_dir,
                     opt(resume_ckpt));
  });
}

ar_status ar_train_inpaint(const char* config_path, const char* data_root,
                           const char* out_dir, const char* resume_ckpt,
                           int max_iters_override) {
  return guarded([&] {
    require(data_root, "data_root");
    require(out_dir, "out_dir");
    ar::TrainConfig cfg = make_config(config_path, max_iters_override);
    ar::train_inpainting(cfg, ar::load_inpaint_dataset(data_root, cfg),
                         out_dir, opt(resume_ckpt));
  });
}

ar_status ar_pipeline_create(const char* inpaint_ckpt, const char* shadow_ckpt,
                             double shadow_threshold, int dilate_radius,
                             ar_pipeline** out) {
  return guarded([&] {
    require(inpaint_ckpt, "inpaint checkpoint");
    if (!out) ar::fail(ar::ErrorKind::BadArgument, "out handle required");
    if (dilate_radius < 0)
      ar::fail(ar::ErrorKind::BadArgument, "dilate_radius must be >= 0");
    auto p = std::make_unique<ar_pipeline>(ar_pipeline{
        ar::load_generator(inpaint_ckpt), std::nullopt, shadow_threshold,
        dilate_radius});
    if (shadow_ckpt && *shadow_ckpt)
      p->shadow = ar::ShadowNet::from_checkpoint(
          ar::Checkpoint::load(shadow_ckpt));
    *out = p.release();
  });
}

void ar_pipeline_destroy(ar_pipeline* p) { delete p; }

ar_status ar_pipeline_infer(ar_pipeline* p, const char* data_root,
                            const char* seq_id, const char* out_dir,
                            const char* flow_cache, int* frames_done) {
  return guarded([&] {
    if (!p) ar::fail(ar::ErrorKind::BadArgument, "null pipeline handle");
    require(data_root, "data_root");
    require(seq_id, "seq_id");
    require(out_dir, "out_dir");
    ar::InferOptions o;
    o.data_root = data_root;
    o.seq_id = seq_id;
    o.out_dir = out_dir;
    o.use_shadow = p->shadow.has_value();
    o.shadow_threshold = p->shadow_threshold;
    o.dilate_radius = p->dilate_radius;
    o.flow_cache = opt(flow_cache);
    auto ids = ar::run_inference(o, p->generator,
                                 p->shadow ? &*p->shadow : nullptr);
    if (frames_done) *frames_done = static_cast<int>(ids.size());
  });
}

ar_status ar_evaluate(const char* pred_dir, const char* gt_dir,
                      const char* holes_dir, const char* flows_dir,
                      const char* report_path, const char* emit_dir,
                      double* mae, double* rmse, double* psnr, double* ssim,
                      double* twe) {
  return guarded([&] {
    require(pred_dir, "pred_dir");
    require(gt_dir, "gt_dir");
    require(holes_dir, "holes_dir");
    ar::EvaluateOptions o;
    o.pred_dir = pred_dir;
    o.gt_dir = gt_dir;
    o.holes_dir = holes_dir;
    o.flows_dir = opt(flows_dir);
    o.report_path = opt(report_path);
    o.emit_dir = opt(emit_dir);
    ar::EvalReport rep = ar::run_evaluation(o, nullptr);
    if (mae) *mae = rep.mae;
    if (rmse) *rmse = rep.rmse;
    if (psnr) *psnr = rep.psnr;
    if (ssim) *ssim = rep.ssim;
    if (twe) *twe = rep.has_twe ? rep.twe : -1.0;
  });
}

}  // extern "C"
