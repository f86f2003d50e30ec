// Command-line front end for the AutoRemover pipeline. Talks to the core
// exclusively through the C API in autoremover.h.
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "autoremover.h"

namespace {

const char* cstr(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

int report(ar_status st) {
  if (st != AR_OK) std::fprintf(stderr, "error: %s\n", ar_last_error());
  return st;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AutoRemover: shadow-aware video object removal"};
  app.require_subcommand(1);

  std::string data, seq, out, config, resume, flow_cache;
  std::string ckpt_shadow, ckpt_inpaint;
  std::string pred, gt, holes, flows, report_path, emit_dir;
  int frame = -1, delta = 2, max_iters = -1, dilate = 0;
  double jitter = 3.0, shadow_threshold = 0.5;
  unsigned long long seed = 1;
  bool no_shadow = false;

  auto* c_flow = app.add_subcommand("flow", "compute reprojection flows");
  c_flow->add_option("--data", data, "dataset root")->required();
  c_flow->add_option("--seq", seq, "sequence id")->required();
  c_flow->add_option("--out", out, "flow cache root (default: AUTOREMOVER_CACHE, then --data)");
  c_flow->add_option("--frame", frame, "target frame id (-1 = middle)");
  c_flow->add_option("--delta", delta, "temporal window half-width");

  auto* c_masks = app.add_subcommand("gen-masks", "propagate hole masks across frames");
  c_masks->add_option("--data", data, "dataset root")->required();
  c_masks->add_option("--seq", seq, "sequence id")->required();
  c_masks->add_option("--out", out, "output root")->required();
  c_masks->add_option("--frame", frame, "target frame id (-1 = middle)");
  c_masks->add_option("--delta", delta, "temporal window half-width");
  c_masks->add_option("--jitter", jitter, "per-frame translation jitter (px)");
  c_masks->add_option("--seed", seed, "random seed");

  for (const char* name : {"train-shadow", "train-inpaint"}) {
    auto* c = app.add_subcommand(name, std::string("train the ") +
                                           (name[6] == 's' ? "shadow branch"
                                                           : "inpainting GAN"));
    c->add_option("--data", data, "fixture root")->required();
    c->add_option("--out", out, "checkpoint/log directory")->required();
    c->add_option("--config", config, "flat key = value config file");
    c->add_option("--resume", resume, "checkpoint to resume from");
    c->add_option("--max-iters", max_iters, "override config max_iters");
  }

  auto* c_infer = app.add_subcommand("infer", "inpaint a sequence");
  c_infer->add_option("--checkpoint-inpaint", ckpt_inpaint)->required();
  c_infer->add_option("--checkpoint-shadow", ckpt_shadow);
  c_infer->add_option("--data", data, "dataset root")->required();
  c_infer->add_option("--seq", seq, "sequence id")->required();
  c_infer->add_option("--out", out, "output directory")->required();
  c_infer->add_flag("--no-shadow", no_shadow, "disable the shadow branch");
  c_infer->add_option("--shadow-threshold", shadow_threshold);
  c_infer->add_option("--dilate", dilate, "hole dilation radius (px)");
  c_infer->add_option("--flow-cache", flow_cache, "flow cache root");

  auto* c_eval = app.add_subcommand("evaluate", "hole-region metrics");
  c_eval->add_option("--pred", pred, "inpainted frames")->required();
  c_eval->add_option("--gt", gt, "ground-truth frames")->required();
  c_eval->add_option("--holes", holes, "hole masks")->required();
  c_eval->add_option("--flows", flows, "consecutive-pair flows (enables TWE)");
  c_eval->add_option("--report", report_path, "report file path");
  c_eval->add_option("--emit-frames", emit_dir, "write frame + difference images");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : AR_E_USAGE;
  }

  if (c_flow->parsed()) {
    int n = 0;
    ar_status st = ar_compute_flow(data.c_str(), seq.c_str(), frame, delta,
                                   cstr(out), &n);
    if (st == AR_OK) std::printf("wrote %d flow files\n", n);
    return report(st);
  }
  if (c_masks->parsed())
    return report(ar_generate_masks(data.c_str(), seq.c_str(), frame, delta,
                                    jitter, seed, out.c_str()));
  if (app.get_subcommand("train-shadow")->parsed())
    return report(ar_train_shadow(cstr(config), data.c_str(), out.c_str(),
                                  cstr(resume), max_iters));
  if (app.get_subcommand("train-inpaint")->parsed())
    return report(ar_train_inpaint(cstr(config), data.c_str(), out.c_str(),
                                   cstr(resume), max_iters));
  if (c_infer->parsed()) {
    if (!no_shadow && ckpt_shadow.empty()) {
      std::fprintf(stderr, "error: --checkpoint-shadow required (or pass --no-shadow)\n");
      return AR_E_USAGE;
    }
    ar_pipeline* p = nullptr;
    ar_status st = ar_pipeline_create(ckpt_inpaint.c_str(),
                                      no_shadow ? nullptr : ckpt_shadow.c_str(),
                                      shadow_threshold, dilate, &p);
    if (st != AR_OK) return report(st);
    int n = 0;
    st = ar_pipeline_infer(p, data.c_str(), seq.c_str(), out.c_str(),
                           cstr(flow_cache), &n);
    ar_pipeline_destroy(p);
    if (st == AR_OK) std::printf("inpainted %d frames\n", n);
    return report(st);
  }
  if (c_eval->parsed()) {
    double mae = 0, rmse = 0, psnr = 0, ssim = 0, twe = -1;
    ar_status st = ar_evaluate(pred.c_str(), gt.c_str(), holes.c_str(),
                               cstr(flows), cstr(report_path), cstr(emit_dir),
                               &mae, &rmse, &psnr, &ssim, &twe);
    if (st == AR_OK) {
      std::printf("MAE   %.6f\nRMSE  %.6f\nPSNR  %.6f\nSSIM  %.6f\n", mae,
                  rmse, psnr, ssim);
      if (twe >= 0) std::printf("TWE   %.6f\n", twe);
    }
    return report(st);
  }
  return AR_E_USAGE;
}
