#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "trainer.hpp"
#include "helpers.hpp"

using namespace ar;
namespace fs = std::filesystem;

namespace {

TrainConfig tiny_config() {
  TrainConfig cfg;
  cfg.seq_len = 3;
  cfg.batch_size = 1;
  cfg.max_iters = 5;
  cfg.checkpoint_every = 2;
  cfg.coarse_channels = 4;
  cfg.feat_channels = 4;
  cfg.disc_channels = 4;
  cfg.disc_layers = 2;
  cfg.shadow_depth = 2;
  cfg.shadow_base_channels = 4;
  cfg.learning_rate = 1e-3;
  return cfg;
}

InpaintSample tiny_sample(uint64_t seed) {
  th::Texture tex = th::Texture::random(seed);
  int H = 16, W = 16;
  InpaintSample s;
  s.seq.target_index = 1;
  s.seq.delta = 1;
  for (int i = 0; i < 3; ++i) {
    s.seq.frames.push_back(tex.frame(H, W, 1.0 * i, 0, i));
    s.seq.masks.push_back(th::rect_hole(H, W, 5, 5, 5, 5));
    s.seq.flows.push_back(FlowField::zeros(H, W));
  }
  return s;
}

std::vector<ShadowSample> shadow_fixtures(int n) {
  std::vector<ShadowSample> out;
  for (int i = 0; i < n; ++i) {
    th::Texture tex = th::Texture::random(1000 + i);
    int H = 16, W = 16;
    ShadowSample s;
    s.rgb = tex.frame(H, W);
    s.object_mask = th::rect_hole(H, W, 2 + i % 4, 2, 4, 4);
    s.shadow_labels = th::rect_hole(H, W, 2 + i % 4, 6, 4, 3);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

TEST_CASE("config file round trip and validation") {
  th::TempDir tmp("cfg");
  TrainConfig cfg = tiny_config();
  cfg.alpha = 0.75;
  cfg.use_warping = false;
  std::string path = (tmp.path / "train.cfg").string();
  cfg.save(path);
  TrainConfig back = TrainConfig::from_file(path);
  CHECK(back.seq_len == 3);
  CHECK(back.alpha == 0.75);
  CHECK(back.use_warping == false);
  CHECK(back.learning_rate == 1e-3);

  std::ofstream bad((tmp.path / "bad.cfg").string());
  bad << "learning_rate garbage\n";
  bad.close();
  CHECK_THROWS_AS(TrainConfig::from_file((tmp.path / "bad.cfg").string()), Error);

  std::ofstream unk((tmp.path / "unk.cfg").string());
  unk << "no_such_key = 1\n";
  unk.close();
  CHECK_THROWS_AS(TrainConfig::from_file((tmp.path / "unk.cfg").string()), Error);

  TrainConfig even = tiny_config();
  even.seq_len = 4;
  CHECK_THROWS_AS(even.validate(), Error);
}

TEST_CASE("max_iters 0 emits the initial checkpoint only") {
  th::TempDir tmp("t0");
  TrainConfig cfg = tiny_config();
  cfg.max_iters = 0;
  InpaintTrainState st = train_inpainting(cfg, {tiny_sample(1)}, tmp.str());
  CHECK(st.log.empty());
  CHECK(fs::exists(tmp.path / "checkpoint_0.ckpt"));
  int ckpts = 0;
  for (const auto& e : fs::directory_iterator(tmp.path))
    if (e.path().extension() == ".ckpt") ++ckpts;
  CHECK(ckpts == 2);  // checkpoint_0 + latest

  CHECK_THROWS_AS(train_inpainting(cfg, {}, tmp.str()), Error);
}

TEST_CASE("lr 0 leaves parameters bit-identical over 10 iterations") {
  th::TempDir tmp("lr0");
  TrainConfig cfg = tiny_config();
  cfg.learning_rate = 0.0;
  cfg.max_iters = 10;
  cfg.checkpoint_every = 100;
  InpaintTrainState st = train_inpainting(cfg, {tiny_sample(2)}, tmp.str());

  Rng rng(cfg.seed);
  InpaintNetConfig ncfg;
  ncfg.frames = cfg.seq_len;
  ncfg.coarse_channels = cfg.coarse_channels;
  ncfg.feat_channels = cfg.feat_channels;
  ncfg.disc_channels = cfg.disc_channels;
  ncfg.disc_layers = cfg.disc_layers;
  Generator fresh(ncfg, rng);  // same seed -> same initialization
  ParamList a = st.generator.params(), b = fresh.params();
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i)
    CHECK(a[i].tensor.data() == b[i].tensor.data());
}

TEST_CASE("fixed seed reproduces the loss trajectory") {
  th::TempDir t1("det1"), t2("det2");
  TrainConfig cfg = tiny_config();
  std::vector<InpaintSample> data{tiny_sample(3), tiny_sample(4)};
  InpaintTrainState s1 = train_inpainting(cfg, data, t1.str());
  InpaintTrainState s2 = train_inpainting(cfg, data, t2.str());
  REQUIRE(s1.log.size() == s2.log.size());
  for (size_t i = 0; i < s1.log.size(); ++i) {
    CHECK(s1.log[i].l_g == s2.log[i].l_g);
    CHECK(s1.log[i].l_G == s2.log[i].l_G);
    CHECK(s1.log[i].l_D == s2.log[i].l_D);
    CHECK(std::isfinite(s1.log[i].l_g));
  }
  CHECK(fs::exists(t1.path / "train_log.jsonl"));
  CHECK(fs::exists(t1.path / "checkpoint_2.ckpt"));
  CHECK(fs::exists(t1.path / "checkpoint_4.ckpt"));
  CHECK(fs::exists(t1.path / "checkpoint_5.ckpt"));
}

TEST_CASE("resume from a checkpoint continues with identical losses") {
  th::TempDir tfull("resume_full"), thalf("resume_half"), tcont("resume_cont");
  TrainConfig cfg = tiny_config();
  cfg.max_iters = 6;
  cfg.checkpoint_every = 3;
  std::vector<InpaintSample> data{tiny_sample(5)};

  InpaintTrainState full = train_inpainting(cfg, data, tfull.str());

  TrainConfig half = cfg;
  half.max_iters = 3;
  train_inpainting(half, data, thalf.str());
  InpaintTrainState cont = train_inpainting(
      cfg, data, tcont.str(), (thalf.path / "checkpoint_3.ckpt").string());

  REQUIRE(cont.log.size() == 3);  // iterations 4..6
  for (int i = 0; i < 3; ++i) {
    CHECK(cont.log[i].iter == full.log[i + 3].iter);
    CHECK(cont.log[i].l_g == doctest::Approx(full.log[i + 3].l_g).epsilon(1e-12));
    CHECK(cont.log[i].l_D == doctest::Approx(full.log[i + 3].l_D).epsilon(1e-12));
  }
}

TEST_CASE("train_shadow: determinism and empty-data error") {
  th::TempDir t1("sh1"), t2("sh2");
  TrainConfig cfg = tiny_config();
  cfg.max_iters = 10;
  cfg.checkpoint_every = 5;
  auto data = shadow_fixtures(4);
  ShadowTrainState a = train_shadow(cfg, data, t1.str());
  ShadowTrainState b = train_shadow(cfg, data, t2.str());
  REQUIRE(a.log.size() == 10);
  for (size_t i = 0; i < a.log.size(); ++i) {
    CHECK(a.log[i].l_g == b.log[i].l_g);
    CHECK(std::isfinite(a.log[i].l_g));
  }
  CHECK(fs::exists(t1.path / "shadow_latest.ckpt"));
  CHECK(fs::exists(t1.path / "shadow_log.jsonl"));

  CHECK_THROWS_AS(train_shadow(cfg, {}, t1.str()), Error);
}
