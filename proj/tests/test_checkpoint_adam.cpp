#include <doctest.h>

#include "core/adam.hpp"
#include "core/checkpoint.hpp"
#include "helpers.hpp"

using namespace ar;

TEST_CASE("checkpoint round trip: metadata, tensors, optimizer state") {
  Rng rng(801);
  Tensor w = th::rand_tensor(rng, {3, 4}, -1, 1, true);
  Tensor b = th::rand_tensor(rng, {4}, -1, 1, true);
  ParamList params{{"layer.w", w}, {"layer.b", b}};

  Adam opt(params, {1e-2, 0.5, 0.999, 1e-8});
  for (int i = 0; i < 3; ++i) {
    opt.zero_grad();
    sum(mul(w, w)).backward();
    sum(mul(b, b)).backward();
    opt.step();
  }

  Checkpoint ck = Checkpoint::from_params(params, {{"kind", "test"}, {"n", 7}});
  ck.store_optimizer(opt);
  th::TempDir tmp("ckpt");
  std::string path = (tmp.path / "a.ckpt").string();
  ck.save(path);

  Checkpoint back = Checkpoint::load(path);
  CHECK(back.metadata["kind"] == "test");
  CHECK(back.metadata["n"] == 7);
  CHECK(back.opt_iteration == 3);
  CHECK(back.tensors.at("layer.w").data() == w.data());

  Tensor w2 = Tensor::zeros({3, 4}, true);
  Tensor b2 = Tensor::zeros({4}, true);
  ParamList params2{{"layer.w", w2}, {"layer.b", b2}};
  back.restore_params(params2);
  CHECK(w2.data() == w.data());
  CHECK(b2.data() == b.data());

  Adam opt2(params2, {1e-2, 0.5, 0.999, 1e-8});
  back.restore_optimizer(opt2);
  CHECK(opt2.iteration() == 3);
  CHECK(opt2.state().at("layer.w").m == opt.state().at("layer.w").m);

  // shape/name mismatches are rejected
  ParamList wrong{{"layer.w", Tensor::zeros({4, 3}, true)},
                  {"layer.b", Tensor::zeros({4}, true)}};
  CHECK_THROWS_AS(back.restore_params(wrong), Error);
  ParamList missing{{"other", Tensor::zeros({2}, true)}};
  CHECK_THROWS_AS(back.restore_params(missing), Error);

  CHECK_THROWS_AS(Checkpoint::load((tmp.path / "nope.ckpt").string()), Error);
}

TEST_CASE("adam minimizes a quadratic and is a no-op at lr 0") {
  Tensor x = Tensor::from_data({2}, {4.0, -3.0}, true);
  Adam opt({{"x", x}}, {0.1, 0.9, 0.999, 1e-8});
  for (int i = 0; i < 200; ++i) {
    opt.zero_grad();
    sum(mul(x, x)).backward();
    opt.step();
  }
  CHECK(std::abs(x.data()[0]) < 1e-2);
  CHECK(std::abs(x.data()[1]) < 1e-2);

  Tensor y = Tensor::from_data({2}, {1.5, 2.5}, true);
  Adam frozen({{"y", y}}, {0.0, 0.9, 0.999, 1e-8});
  for (int i = 0; i < 10; ++i) {
    frozen.zero_grad();
    sum(mul(y, y)).backward();
    frozen.step();
  }
  CHECK(y.data() == std::vector<double>{1.5, 2.5});
}
