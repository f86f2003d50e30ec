/* C API of the AutoRemover shadow-aware video inpainting core.
 *
 * All functions return an ar_status: AR_OK on success, AR_E_USAGE for
 * usage or data errors (bad arguments, missing/malformed files), and
 * AR_E_INTERNAL for internal failures. On error, ar_last_error() returns a
 * message for the calling thread. String arguments marked "nullable" accept
 * NULL to mean "absent"; output pointers may be NULL when the caller does
 * not need the value.
 */
#ifndef AUTOREMOVER_H
#define AUTOREMOVER_H

#ifdef __cplusplus
extern "C" {
#endif

typedef int ar_status;
#define AR_OK 0
#define AR_E_INTERNAL 1
#define AR_E_USAGE 2

/* Message for the most recent failing call on this thread ("" if none). */
const char* ar_last_error(void);

/* Reprojection flows for one window of 2*delta+1 frames centered on
 * center_frame (-1 = middle frame of the sequence). Writes the cache files
 * <out_root>/<seq_id>/flow/<target>_<ref>.bin. */
ar_status ar_compute_flow(const char* data_root, const char* seq_id,
                          int center_frame, int delta, const char* out_root,
                          int* files_written);

/* Temporal mask propagation: warps the center frame's hole mask to every
 * frame of the window, jittered by a per-frame uniform draw from
 * [-jitter_px, +jitter_px]^2. Writes <out_dir>/<seq_id>/mask_gen/<id>.png. */
ar_status ar_generate_masks(const char* data_root, const char* seq_id,
                            int center_frame, int delta, double jitter_px,
                            unsigned long long seed, const char* out_dir);

/* Training. config_path nullable (defaults); resume_ckpt nullable (fresh
 * start); max_iters_override < 0 keeps the config value. Checkpoints and a
 * line-delimited loss log are written under out_dir. */
ar_status ar_train_shadow(const char* config_path, const char* data_root,
                          const char* out_dir, const char* resume_ckpt,
                          int max_iters_override);
ar_status ar_train_inpaint(const char* config_path, const char* data_root,
                           const char* out_dir, const char* resume_ckpt,
                           int max_iters_override);

/* Inference pipeline handle: loads both networks once, reusable across
 * sequences. shadow_ckpt nullable = shadow branch disabled. */
typedef struct ar_pipeline ar_pipeline;

ar_status ar_pipeline_create(const char* inpaint_ckpt, const char* shadow_ckpt,
                             double shadow_threshold, int dilate_radius,
                             ar_pipeline** out);
void ar_pipeline_destroy(ar_pipeline* p);

/* Sliding-window inference over every frame of the sequence; composited
 * frames to <out_dir>/<id>.png, inpainted holes to <out_dir>/holes/<id>.png.
 * flow_cache nullable (AUTOREMOVER_CACHE env var, then data_root). */
ar_status ar_pipeline_infer(ar_pipeline* p, const char* data_root,
                            const char* seq_id, const char* out_dir,
                            const char* flow_cache, int* frames_done);

/* Hole-region evaluation of pred vs gt (8-bit scale). flows_dir nullable =
 * skip the temporal warping error (twe reported as -1); report_path nullable;
 * emit_dir nullable (frame + difference images). */
ar_status ar_evaluate(const char* pred_dir, const char* gt_dir,
                      const char* holes_dir, const char* flows_dir,
                      const char* report_path, const char* emit_dir,
                      double* mae, double* rmse, double* psnr, double* ssim,
                      double* twe);

#ifdef __cplusplus
}
#endif

#endif /* AUTOREMOVER_H */
