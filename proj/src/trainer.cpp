#include "trainer.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace fs = std::filesystem;

namespace ar {

void TrainConfig::validate() const {
  if (learning_rate < 0 || batch_size <= 0 || max_iters < 0 || seq_len <= 0 ||
      checkpoint_every <= 0)
    fail(ErrorKind::BadData, "TrainConfig: non-positive field");
  if (seq_len % 2 == 0) fail(ErrorKind::BadData, "TrainConfig: seq_len must be odd");
}

namespace {
const std::map<std::string, std::function<void(TrainConfig&, const std::string&)>>&
config_setters() {
  auto dbl = [](double TrainConfig::* f) {
    return [f](TrainConfig& c, const std::string& v) { c.*f = std::stod(v); };
  };
  auto itg = [](int TrainConfig::* f) {
    return [f](TrainConfig& c, const std::string& v) { c.*f = std::stoi(v); };
  };
  auto bol = [](bool TrainConfig::* f) {
    return [f](TrainConfig& c, const std::string& v) {
      c.*f = (v == "1" || v == "true");
    };
  };
  static const std::map<std::string,
                        std::function<void(TrainConfig&, const std::string&)>>
      m = {
          {"learning_rate", dbl(&TrainConfig::learning_rate)},
          {"batch_size", itg(&TrainConfig::batch_size)},
          {"max_iters", itg(&TrainConfig::max_iters)},
          {"seq_len", itg(&TrainConfig::seq_len)},
          {"seed", [](TrainConfig& c, const std::string& v) { c.seed = std::stoull(v); }},
          {"checkpoint_every", itg(&TrainConfig::checkpoint_every)},
          {"crop_bottom_w", [](TrainConfig& c, const std::string& v) { c.crops.bottom_w = std::stoi(v); }},
          {"crop_bottom_h", [](TrainConfig& c, const std::string& v) { c.crops.bottom_h = std::stoi(v); }},
          {"crop_train_w", [](TrainConfig& c, const std::string& v) { c.crops.train_w = std::stoi(v); }},
          {"crop_train_h", [](TrainConfig& c, const std::string& v) { c.crops.train_h = std::stoi(v); }},
          {"crop_eval_w", [](TrainConfig& c, const std::string& v) { c.crops.eval_w = std::stoi(v); }},
          {"crop_eval_h", [](TrainConfig& c, const std::string& v) { c.crops.eval_h = std::stoi(v); }},
          {"coarse_channels", itg(&TrainConfig::coarse_channels)},
          {"feat_channels", itg(&TrainConfig::feat_channels)},
          {"disc_channels", itg(&TrainConfig::disc_channels)},
          {"disc_layers", itg(&TrainConfig::disc_layers)},
          {"shadow_depth", itg(&TrainConfig::shadow_depth)},
          {"shadow_base_channels", itg(&TrainConfig::shadow_base_channels)},
          {"alpha", dbl(&TrainConfig::alpha)},
          {"adv_weight", dbl(&TrainConfig::adv_weight)},
          {"ca_scale", dbl(&TrainConfig::ca_scale)},
          {"adam_beta1", dbl(&TrainConfig::adam_beta1)},
          {"adam_beta2", dbl(&TrainConfig::adam_beta2)},
          {"shadow_threshold", dbl(&TrainConfig::shadow_threshold)},
          {"jitter_px", dbl(&TrainConfig::jitter_px)},
          {"use_warping", bol(&TrainConfig::use_warping)},
          {"use_contextual_attention", bol(&TrainConfig::use_contextual_attention)},
      };
  return m;
}
}  // namespace

TrainConfig TrainConfig::from_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorKind::BadData, "cannot read config: " + path);
  TrainConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::istringstream ls(line);
    std::string key, eq, value;
    if (!(ls >> key)) continue;
    if (!(ls >> eq >> value) || eq != "=")
      fail(ErrorKind::BadData, "malformed config line " + std::to_string(lineno) +
                                   " in " + path);
    auto it = config_setters().find(key);
    if (it == config_setters().end())
      fail(ErrorKind::BadData, "unknown config key '" + key + "' in " + path);
    try {
      it->second(cfg, value);
    } catch (const std::exception&) {
      fail(ErrorKind::BadData, "bad value for '" + key + "' in " + path);
    }
  }
  cfg.validate();
  return cfg;
}

void TrainConfig::save(const std::string& path) const {
  std::ofstream os(path);
  if (!os) fail(ErrorKind::BadData, "cannot write config: " + path);
  os << "learning_rate = " << learning_rate << "\n"
     << "batch_size = " << batch_size << "\n"
     << "max_iters = " << max_iters << "\n"
     << "seq_len = " << seq_len << "\n"
     << "seed = " << seed << "\n"
     << "checkpoint_every = " << checkpoint_every << "\n"
     << "crop_bottom_w = " << crops.bottom_w << "\n"
     << "crop_bottom_h = " << crops.bottom_h << "\n"
     << "crop_train_w = " << crops.train_w << "\n"
     << "crop_train_h = " << crops.train_h << "\n"
     << "crop_eval_w = " << crops.eval_w << "\n"
     << "crop_eval_h = " << crops.eval_h << "\n"
     << "coarse_channels = " << coarse_channels << "\n"
     << "feat_channels = " << feat_channels << "\n"
     << "disc_channels = " << disc_channels << "\n"
     << "disc_layers = " << disc_layers << "\n"
     << "shadow_depth = " << shadow_depth << "\n"
     << "shadow_base_channels = " << shadow_base_channels << "\n"
     << "alpha = " << alpha << "\n"
     << "adv_weight = " << adv_weight << "\n"
     << "ca_scale = " << ca_scale << "\n"
     << "adam_beta1 = " << adam_beta1 << "\n"
     << "adam_beta2 = " << adam_beta2 << "\n"
     << "shadow_threshold = " << shadow_threshold << "\n"
     << "jitter_px = " << jitter_px << "\n"
     << "use_warping = " << (use_warping ? 1 : 0) << "\n"
     << "use_contextual_attention = " << (use_contextual_attention ? 1 : 0) << "\n";
}

std::vector<Frame> apply_masks(const std::vector<Frame>& gt,
                               const std::vector<MaskMap>& masks) {
  std::vector<Frame> out;
  out.reserve(gt.size());
  for (size_t i = 0; i < gt.size(); ++i) {
    size_t plane = masks[i].values.size();
    int C = gt[i].pixels.shape()[0];
    std::vector<double> m(C * plane);
    for (int c = 0; c < C; ++c)
      for (size_t p = 0; p < plane; ++p)
        m[c * plane + p] = masks[i].values[p] ? 1.0 : 0.0;
    Frame f;
    f.frame_id = gt[i].frame_id;
    f.pixels = mul_const(gt[i].pixels, m);
    out.push_back(std::move(f));
  }
  return out;
}

void append_log(const std::vector<TrainRecord>& log, const std::string& path) {
  std::ofstream os(path, std::ios::app);
  if (!os) fail(ErrorKind::BadData, "cannot append log: " + path);
  for (const auto& r : log) {
    nlohmann::json j;
    j["iter"] = r.iter;
    j["L_g"] = r.l_g;
    j["L_G"] = r.l_G;
    j["L_D"] = r.l_D;
    j["wall_ms"] = r.wall_ms;
    os << j.dump() << "\n";
  }
}

namespace {
void require_finite(double v, int64_t iter, const char* component) {
  if (!std::isfinite(v)) {
    std::ostringstream msg;
    msg << "non-finite " << component << " at iteration " << iter;
    fail(ErrorKind::Internal, msg.str());
  }
}

Checkpoint combined_checkpoint(const Generator& g, const Discriminator& d,
                               const Adam& g_opt, const Adam& d_opt,
                               int64_t iter) {
  Checkpoint gk = g.to_checkpoint();
  Checkpoint dk = d.to_checkpoint();
  Checkpoint ck;
  ck.metadata["kind"] = "inpaint_train";
  ck.metadata["version"] = 1;
  ck.metadata["iter"] = iter;
  ck.metadata["generator"] = gk.metadata;
  ck.metadata["discriminator"] = dk.metadata;
  for (auto& [n, t] : gk.tensors) ck.tensors.emplace("g." + n, t);
  for (auto& [n, t] : dk.tensors) ck.tensors.emplace("d." + n, t);
  ck.opt_iteration = g_opt.iteration();
  for (auto& [n, m] : const_cast<Adam&>(g_opt).state())
    ck.opt_state.emplace("g." + n, m);
  for (auto& [n, m] : const_cast<Adam&>(d_opt).state())
    ck.opt_state.emplace("d." + n, m);
  return ck;
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

InpaintTrainState train_inpainting(const TrainConfig& config,
                                   const std::vector<InpaintSample>& data,
                                   const std::string& out_dir,
                                   const std::string& resume_checkpoint) {
  config.validate();
  if (data.empty()) fail(ErrorKind::NoData, "train_inpainting: empty dataset");
  fs::create_directories(out_dir);

  Rng rng(config.seed);
  InpaintNetConfig ncfg;
  ncfg.frames = config.seq_len;
  ncfg.coarse_channels = config.coarse_channels;
  ncfg.feat_channels = config.feat_channels;
  ncfg.disc_channels = config.disc_channels;
  ncfg.disc_layers = config.disc_layers;
  ncfg.ca_scale = config.ca_scale;
  ncfg.use_warping = config.use_warping;
  ncfg.use_contextual_attention = config.use_contextual_attention;

  Generator gen(ncfg, rng);
  Discriminator disc(config.disc_channels, config.disc_layers, rng);

  AdamConfig acfg{config.learning_rate, config.adam_beta1, config.adam_beta2, 1e-8};
  Adam g_opt(gen.params(), acfg), d_opt(disc.params(), acfg);
  int64_t start_iter = 0;

  if (!resume_checkpoint.empty()) {
    Checkpoint ck = Checkpoint::load(resume_checkpoint);
    if (ck.metadata.value("kind", "") != "inpaint_train")
      fail(ErrorKind::BadParams, "not an inpaint training checkpoint");
    strip_prefix(ck, "g.", ck.metadata["generator"]).restore_params(gen.params());
    Checkpoint dck = strip_prefix(ck, "d.", ck.metadata["discriminator"]);
    dck.restore_params(disc.params());
    disc.restore_sn_state(dck);
    start_iter = ck.metadata.value("iter", 0);
    if (ck.opt_iteration >= 0) {
      g_opt.set_iteration(ck.opt_iteration);
      d_opt.set_iteration(ck.opt_iteration);
      for (const auto& [n, m] : ck.opt_state) {
        if (n.rfind("g.", 0) == 0) g_opt.state()[n.substr(2)] = m;
        if (n.rfind("d.", 0) == 0) d_opt.state()[n.substr(2)] = m;
      }
    }
  }

  InpaintTrainState state{std::move(gen), std::move(disc), {}};
  auto save_ckpt = [&](int64_t iter) {
    Checkpoint ck = combined_checkpoint(state.generator, state.discriminator,
                                        g_opt, d_opt, iter);
    std::ostringstream name;
    name << "checkpoint_" << iter << ".ckpt";
    ck.save((fs::path(out_dir) / name.str()).string());
    ck.save((fs::path(out_dir) / "latest.ckpt").string());
  };
  if (start_iter == 0) save_ckpt(0);

  auto t0 = std::chrono::steady_clock::now();
  for (int64_t iter = start_iter + 1; iter <= config.max_iters; ++iter) {
    std::vector<Tensor> d_losses, g_adv_losses, recon_losses;
    for (int b = 0; b < config.batch_size; ++b) {
      const InpaintSample& sample =
          data[data.size() == 1 ? 0 : static_cast<size_t>(rng.uniform_int(
                                          0, static_cast<int>(data.size()) - 1))];
      const VideoSequence& seq = sample.seq;
      int m = seq.target_index;
      std::vector<Frame> iin = apply_masks(seq.frames, seq.masks);
      std::vector<Frame> coarse = state.generator.coarse_forward(iin, seq.masks);
      Frame refined =
          state.generator.refine_forward(coarse, seq.masks, seq.flows, m);
      Frame composited = composite_output(refined, iin[m], seq.masks[m]);

      // discriminator terms: fake side detached
      Tensor fake_detached = Tensor::from_data(composited.pixels.shape(),
                                               composited.pixels.data());
      Tensor d_real = state.discriminator.forward(seq.frames[m].pixels, seq.masks[m]);
      Tensor d_fake_d = state.discriminator.forward(fake_detached, seq.masks[m]);
      d_losses.push_back(d_hinge_loss(d_real, d_fake_d));

      // generator terms
      Tensor d_fake_g = state.discriminator.forward(composited.pixels, seq.masks[m]);
      MaskMap validity = sample.loss_validity.values.empty()
                             ? MaskMap::ones(seq.height(), seq.width())
                             : sample.loss_validity;
      std::vector<Tensor> coarse_px, gt_px;
      for (const auto& f : coarse) coarse_px.push_back(f.pixels);
      for (const auto& f : seq.frames) gt_px.push_back(f.pixels);
      recon_losses.push_back(reconstruction_loss(
          coarse_px, composited.pixels, gt_px, m, validity, config.alpha));
      g_adv_losses.push_back(g_hinge_loss(d_fake_g));
    }

    auto mean_of = [&](std::vector<Tensor>& xs) {
      Tensor acc = xs[0];
      for (size_t i = 1; i < xs.size(); ++i) acc = add(acc, xs[i]);
      return mul_scalar(acc, 1.0 / xs.size());
    };
    Tensor l_d = mean_of(d_losses);
    Tensor l_rec = mean_of(recon_losses);
    Tensor l_adv = mean_of(g_adv_losses);
    Tensor l_gen = add(l_rec, mul_scalar(l_adv, config.adv_weight));

    require_finite(l_d.item(), iter, "L_D");
    require_finite(l_rec.item(), iter, "L_g");
    require_finite(l_adv.item(), iter, "L_G");

    d_opt.zero_grad();
    g_opt.zero_grad();
    l_d.backward();
    d_opt.step();

    d_opt.zero_grad();  // discard fake-path grads that land on D
    g_opt.zero_grad();
    l_gen.backward();
    g_opt.step();

    for (const auto& p : state.generator.params())
      for (double v : p.tensor.data())
        if (!std::isfinite(v))
          require_finite(v, iter, ("parameter " + p.name).c_str());

    TrainRecord rec;
    rec.iter = iter;
    rec.l_g = l_rec.item();
    rec.l_G = l_adv.item();
    rec.l_D = l_d.item();
    rec.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    state.log.push_back(rec);

    if (iter % config.checkpoint_every == 0 || iter == config.max_iters)
      save_ckpt(iter);
  }

  append_log(state.log, (fs::path(out_dir) / "train_log.jsonl").string());
  return state;
}

ShadowTrainState train_shadow(const TrainConfig& config,
                              const std::vector<ShadowSample>& data,
                              const std::string& out_dir,
                              const std::string& resume_checkpoint) {
  config.validate();
  if (data.empty()) fail(ErrorKind::NoData, "train_shadow: empty dataset");
  fs::create_directories(out_dir);

  Rng rng(config.seed);
  ShadowNet net = resume_checkpoint.empty()
                      ? ShadowNet(config.shadow_depth,
                                  config.shadow_base_channels, rng)
                      : ShadowNet::from_checkpoint(
                            Checkpoint::load(resume_checkpoint));
  AdamConfig acfg{config.learning_rate, config.adam_beta1, config.adam_beta2, 1e-8};
  Adam opt(net.params(), acfg);
  int64_t start_iter = 0;
  if (!resume_checkpoint.empty()) {
    Checkpoint ck = Checkpoint::load(resume_checkpoint);
    start_iter = ck.metadata.value("iter", 0);
    ck.restore_optimizer(opt);
  }

  ShadowTrainState state{std::move(net), {}};
  auto save_ckpt = [&](int64_t iter) {
    Checkpoint ck = state.net.to_checkpoint();
    ck.metadata["iter"] = iter;
    ck.store_optimizer(opt);
    std::ostringstream name;
    name << "shadow_" << iter << ".ckpt";
    ck.save((fs::path(out_dir) / name.str()).string());
    ck.save((fs::path(out_dir) / "shadow_latest.ckpt").string());
  };
  if (start_iter == 0) save_ckpt(0);

  auto mean_iou = [&]() {
    double s = 0;
    for (const auto& d : data)
      s += shadow_iou(state.net.forward(d.rgb.pixels, d.object_mask),
                      d.shadow_labels);
    return s / data.size();
  };

  auto t0 = std::chrono::steady_clock::now();
  for (int64_t iter = start_iter + 1; iter <= config.max_iters; ++iter) {
    std::vector<Tensor> losses;
    for (int b = 0; b < config.batch_size; ++b) {
      const ShadowSample& d =
          data[data.size() == 1 ? 0 : static_cast<size_t>(rng.uniform_int(
                                          0, static_cast<int>(data.size()) - 1))];
      Tensor pred = state.net.forward(d.rgb.pixels, d.object_mask);
      losses.push_back(shadow_loss(pred, d.shadow_labels));
    }
    Tensor acc = losses[0];
    for (size_t i = 1; i < losses.size(); ++i) acc = add(acc, losses[i]);
    Tensor loss = mul_scalar(acc, 1.0 / losses.size());
    require_finite(loss.item(), iter, "shadow loss");

    opt.zero_grad();
    loss.backward();
    opt.step();

    TrainRecord rec;
    rec.iter = iter;
    rec.l_g = loss.item();
    rec.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    if (iter % config.checkpoint_every == 0 || iter == config.max_iters) {
      rec.l_G = mean_iou();
      save_ckpt(iter);
    }
    state.log.push_back(rec);
  }

  append_log(state.log, (fs::path(out_dir) / "shadow_log.jsonl").string());
  return state;
}

}  // namespace ar
