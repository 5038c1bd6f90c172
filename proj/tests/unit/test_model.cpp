// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "diffusion/tadiff.hpp"
#include "model/localizer.hpp"
#include "model/pyramid.hpp"
#include "support/gradcheck.hpp"

using namespace tadiff;
using namespace tadiff::testing;

namespace {

PyramidConfig small_pyramid(std::size_t levels = 3) {
  PyramidConfig p;
  p.input_dim = 5;
  p.channels = 8;
  p.levels = levels;
  p.window = 3;
  p.heads = 2;
  p.head_layers = 2;
  return p;
}

/// Overwrites every parameter with U(-0.5, 0.5) so no path is switched off
/// by a zero initialization.
void randomize(ParameterStore& store, std::uint64_t seed) {
  Rng rng(seed);
  for (auto& [name, t] : store.entries()) {
    auto copy = t;
    for (auto& v : copy.mutable_data()) v = rng.uniform(-0.5, 0.5);
  }
}

Tensor head_loss(const HeadOutputs& h) {
  Tensor total = Tensor::scalar(0.0);
  for (std::size_t l = 0; l < h.logits.size(); ++l) {
    total = total + project(h.logits[l], 100 + l) + project(h.offsets[l], 200 + l);
  }
  return total;
}

} // namespace

TEST_SUITE("pyramid_encoder") {

TEST_CASE("geometry examples") {
  const auto g = pyramid_geometry(256, 6);
  std::vector<std::size_t> n, s;
  for (const auto& lv : g) {
    n.push_back(lv.length);
    s.push_back(lv.stride);
  }
  CHECK(n == std::vector<std::size_t>{256, 128, 64, 32, 16, 8});
  CHECK(s == std::vector<std::size_t>{1, 2, 4, 8, 16, 32});
  const auto g3 = pyramid_geometry(100, 3);
  CHECK(g3[0].length == 100);
  CHECK(g3[1].length == 50);
  CHECK(g3[2].length == 25);
}

TEST_CASE("sequence too short for the level count") {
  CHECK_THROWS_AS(pyramid_geometry(31, 6), ConfigError);
  CHECK_NOTHROW(pyramid_geometry(32, 6));
}

TEST_CASE("geometry: lengths are ceil(T / stride) and doubling T doubles N_1") {
  for (std::size_t t = 32; t < 600; t += 7) {
    const auto g = pyramid_geometry(t, 6);
    const auto g2 = pyramid_geometry(2 * t, 6);
    for (std::size_t l = 0; l < 6; ++l) {
      CHECK(g[l].length == (t + g[l].stride - 1) / g[l].stride);
      if (l > 0) CHECK(g[l].stride == 2 * g[l - 1].stride);
      // Level l of the doubled sequence has as many locations as level l-1 of the original.
      if (l > 0) CHECK(g2[l].length == g[l - 1].length);
    }
    CHECK(g2[0].length == 2 * g[0].length);
  }
}

TEST_CASE("encoder and heads follow the shape law") {
  ParameterStore store;
  Rng rng(1);
  const auto cfg = small_pyramid(4);
  PyramidEncoder enc(cfg, store, rng);
  DetectionHeads heads(cfg, store, rng);
  for (std::size_t t : {8, 9, 37, 64}) {
    const auto x = random_tensor({t, 5}, rng, false);
    const auto pyr = enc(x);
    const auto g = pyramid_geometry(t, 4);
    const auto out = heads(pyr.levels);
    REQUIRE(pyr.levels.size() == 4);
    for (std::size_t l = 0; l < 4; ++l) {
      CHECK(pyr.levels[l].shape() == Shape{g[l].length, 8});
      CHECK(pyr.strides[l] == g[l].stride);
      CHECK(out.logits[l].shape() == Shape{g[l].length, 1});
      CHECK(out.offsets[l].shape() == Shape{g[l].length, 2});
    }
  }
}

TEST_CASE("offsets are non-negative for random inputs") {
  ParameterStore store;
  Rng rng(2);
  const auto cfg = small_pyramid();
  PyramidEncoder enc(cfg, store, rng);
  DetectionHeads heads(cfg, store, rng);
  for (int trial = 0; trial < 30; ++trial) {
    randomize(store, 1000 + trial);
    const auto out = heads(enc(random_tensor({24, 5}, rng, false, -10, 10)).levels);
    for (const auto& o : out.offsets)
      for (double v : o.data()) CHECK(v >= 0.0);
  }
}

TEST_CASE("zeroed final head layers give constant outputs") {
  ParameterStore store;
  Rng rng(3);
  const auto cfg = small_pyramid();
  PyramidEncoder enc(cfg, store, rng);
  DetectionHeads heads(cfg, store, rng);
  for (auto& [name, t] : store.entries()) {
    if (name == "heads.cls.1.w" || name == "heads.reg.1.w") {
      auto copy = t;
      for (auto& v : copy.mutable_data()) v = 0.0;
    }
  }
  const auto out = heads(enc(random_tensor({16, 5}, rng, false)).levels);
  const double logit = out.logits[0].data()[0];
  const double off = out.offsets[0].data()[0];
  for (std::size_t l = 0; l < out.logits.size(); ++l) {
    for (double v : out.logits[l].data()) CHECK(v == logit);
    for (double v : out.offsets[l].data()) CHECK(v == off);
  }
  // Prior-probability bias on the confidence logit.
  CHECK(1.0 / (1.0 + std::exp(-logit)) == doctest::Approx(0.01));
}

TEST_CASE("unshared heads register one stack per level") {
  auto cfg = small_pyramid();
  cfg.share_heads = false;
  ParameterStore store;
  Rng rng(4);
  DetectionHeads heads(cfg, store, rng);
  CHECK(store.contains("heads.level2.cls.0.w"));
  CHECK_FALSE(store.contains("heads.cls.0.w"));
}

TEST_CASE("gradient through two levels and the heads") {
  ParameterStore store;
  Rng rng(5);
  const auto cfg = small_pyramid(2);
  PyramidEncoder enc(cfg, store, rng);
  DetectionHeads heads(cfg, store, rng);
  randomize(store, 55);
  auto x = random_tensor({12, 5}, rng);
  auto params = store.tensors();
  params.push_back(x);
  const auto loss = [&] { return head_loss(heads(enc(x).levels)); };
  for (double v : enc(x).levels[1].data()) CHECK(std::isfinite(v));
  Rng pick(6);
  const auto r = check_gradients(params, loss, random_coordinates(params, 80, pick));
  CHECK(r.max_rel_error < 1e-4);
  // Input gradient: head-to-input path.
  std::vector<Coordinate> inputs;
  for (std::size_t i = 0; i < x.numel(); ++i) inputs.push_back({params.size() - 1, i});
  CHECK(check_gradients(params, loss, inputs).max_rel_error < 1e-4);
}

TEST_CASE("invalid pyramid configs") {
  auto cfg = small_pyramid();
  cfg.window = 4;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = small_pyramid();
  cfg.heads = 3;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

} // TEST_SUITE

TEST_SUITE("tadiff") {

TEST_CASE("schedule examples") {
  const auto s = build_schedule(3, 0.1, 0.3, 0.0);
  const std::vector<double> want{1.0, 0.9, 0.72, 0.504};
  REQUIRE(s.alpha_bar.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(s.alpha_bar[i] - want[i]) <= 1e-12);
  const auto one = build_schedule(1, 0.5, 0.5, 0.0);
  CHECK(one.alpha_bar == std::vector<double>{1.0, 0.5});
}

TEST_CASE("schedule is strictly decreasing for random valid configs") {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const auto steps = static_cast<std::size_t>(rng.uniform_int(1, 50));
    const double b0 = rng.uniform(1e-5, 0.5);
    const double b1 = rng.uniform(b0, 0.999);
    const auto s = build_schedule(steps, b0, b1, rng.uniform());
    CHECK(s.alpha_bar[0] == 1.0);
    for (std::size_t i = 1; i <= steps; ++i) {
      CHECK(s.alpha_bar[i] < s.alpha_bar[i - 1]);
      CHECK(s.alpha_bar[i] > 0.0);
    }
  }
}

TEST_CASE("schedule parameter errors") {
  CHECK_THROWS_AS(build_schedule(0, 0.1, 0.2, 0), ConfigError);
  CHECK_THROWS_AS(build_schedule(3, 0.0, 0.2, 0), ConfigError);
  CHECK_THROWS_AS(build_schedule(3, 0.3, 0.2, 0), ConfigError);
  CHECK_THROWS_AS(build_schedule(3, 0.1, 1.0, 0), ConfigError);
  CHECK_THROWS_AS(build_schedule(3, 0.1, 0.2, 1.5), ConfigError);
}

TEST_CASE("forward_diffuse examples") {
  const auto sched = build_schedule(3, 0.1, 0.3, 0.0);
  Rng rng(8);
  const auto f = random_tensor({4, 3}, rng, false);
  const auto eps = random_tensor({4, 3}, rng, false);
  const auto x0 = forward_diffuse(f, 0, eps, sched);
  for (std::size_t i = 0; i < f.numel(); ++i) CHECK(x0.data()[i] == f.data()[i]);
  const auto x2 = forward_diffuse(f, 2, Tensor::zeros({4, 3}), sched);
  for (std::size_t i = 0; i < f.numel(); ++i) CHECK(x2.data()[i] == doctest::Approx(std::sqrt(0.72) * f.data()[i]));
  CHECK_THROWS_AS(forward_diffuse(f, 4, eps, sched), ContractError);
}

TEST_CASE("forward_diffuse variance at f = 0") {
  const auto sched = build_schedule(3, 0.1, 0.3, 0.0);
  Rng rng(9);
  const std::size_t n = 100000;
  const auto x = forward_diffuse(Tensor::zeros({n, 1}), 3, standard_normal({n, 1}, rng), sched);
  double m = 0, m2 = 0;
  for (double v : x.data()) {
    m += v;
    m2 += v * v;
  }
  m /= n;
  const double var = m2 / n - m * m;
  CHECK(std::abs(var / (1.0 - 0.504) - 1.0) < 0.05);
}

TEST_CASE("oracle noise recovers the clean feature") {
  const auto sched = build_schedule(5, 1e-4, 2e-2, 0.0);
  Rng rng(10);
  const auto f = random_tensor({6, 4}, rng, false);
  const auto eps = standard_normal({6, 4}, rng);
  for (std::size_t s = 1; s <= 5; ++s) {
    const auto xs = forward_diffuse(f, s, eps, sched);
    const auto pred = recover_clean(xs, s, eps, sched);
    CHECK(pred.x0_hat.shape() == f.shape());
    for (std::size_t i = 0; i < f.numel(); ++i) CHECK(std::abs(pred.x0_hat.data()[i] - f.data()[i]) <= 1e-10);
  }
}

TEST_CASE("deterministic DDIM step is the consistency identity") {
  const auto sched = build_schedule(4, 0.05, 0.3, 0.0);
  Rng rng(11);
  const auto f = random_tensor({5, 3}, rng, false);
  const auto eps = standard_normal({5, 3}, rng);
  for (std::size_t s = 1; s <= 4; ++s) {
    const auto xs = forward_diffuse(f, s, eps, sched);
    const auto prev = ddim_step(xs, s, eps, f, Tensor{}, sched, 0.0);
    const auto want = forward_diffuse(f, s - 1, eps, sched);
    for (std::size_t i = 0; i < f.numel(); ++i) CHECK(std::abs(prev.data()[i] - want.data()[i]) <= 1e-12);
  }
  // s = 1 lands on x0_hat.
  const auto x1 = forward_diffuse(f, 1, eps, sched);
  const auto x0 = ddim_step(x1, 1, eps, f, Tensor{}, sched, 0.0);
  for (std::size_t i = 0; i < f.numel(); ++i) CHECK(std::abs(x0.data()[i] - f.data()[i]) <= 1e-12);
}

TEST_CASE("stochastic DDIM step variance equals sigma squared") {
  const auto sched = build_schedule(3, 0.1, 0.3, 1.0);
  const std::size_t n = 100000;
  const auto xs = Tensor::zeros({n, 1});
  const auto zero = Tensor::zeros({n, 1});
  Rng rng(12);
  const std::size_t s = 2;
  const auto out = ddim_step(xs, s, zero, zero, standard_normal({n, 1}, rng), sched, 1.0);
  double m = 0, m2 = 0;
  for (double v : out.data()) {
    m += v;
    m2 += v * v;
  }
  m /= n;
  const double var = m2 / n - m * m;
  const double sigma = sched.sigma(s, 1.0);
  const double ab = 0.72, ab_prev = 0.9;
  CHECK(sigma == doctest::Approx(std::sqrt((1 - ab_prev) / (1 - ab)) * std::sqrt(1 - ab / ab_prev)));
  CHECK(std::abs(var / (sigma * sigma) - 1.0) < 0.05);
  CHECK(sigma * sigma <= 1.0 - ab_prev);
}

TEST_CASE("oracle refine inverts the diffusion for any S") {
  for (std::size_t steps : {1, 2, 3, 5, 8}) {
    const auto sched = build_schedule(steps, 1e-4, 2e-2, 0.0);
    Rng data(13);
    const auto f = random_tensor({7, 4}, data, false);
    // Replays the stream refine() draws from, so the predictor knows the true noise.
    Rng replay(99);
    const auto eps = standard_normal(f.shape(), replay);
    const NoisePredictor oracle = [&](const Tensor&, std::size_t) { return eps; };
    Rng rng(99);
    const auto out = refine(oracle, f, sched, {}, rng);
    CAPTURE(steps);
    for (std::size_t i = 0; i < f.numel(); ++i) CHECK(std::abs(out.data()[i] - f.data()[i]) <= 1e-8);
  }
}

TEST_CASE("refine toggles") {
  const auto sched = build_schedule(3, 1e-4, 2e-2, 0.0);
  Rng data(14);
  const auto f = random_tensor({6, 4}, data, false);
  const NoisePredictor zero = [](const Tensor& x, std::size_t) { return Tensor::zeros(x.shape()); };
  Rng a(1), b(1);
  const auto both_off = refine(zero, f, sched, {.inject_noise = false, .denoise = false}, a);
  for (std::size_t i = 0; i < f.numel(); ++i) CHECK(both_off.data()[i] == f.data()[i]);

  const auto noise_only = refine(zero, f, sched, {.inject_noise = true, .denoise = false}, a);
  const auto direct = forward_diffuse(f, 3, standard_normal(f.shape(), b), sched);
  for (std::size_t i = 0; i < f.numel(); ++i) CHECK(noise_only.data()[i] == direct.data()[i]);

  // Denoise-only from clean f with a zero predictor: x_{s-1} = sqrt(ab_{s-1}/ab_s) x_s, so
  // the chain rescales f by 1/sqrt(ab_S).
  const auto den = refine(zero, f, sched, {.inject_noise = false, .denoise = true}, a);
  for (std::size_t i = 0; i < f.numel(); ++i)
    CHECK(den.data()[i] == doctest::Approx(f.data()[i] / std::sqrt(sched.alpha_bar[3])).epsilon(1e-12));
}

TEST_CASE("denoiser shapes and finiteness over many seeds") {
  DiffusionConfig dc;
  dc.embed_dim = 6;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    ParameterStore store;
    Rng rng(seed);
    Denoiser net(4, dc, store, rng);
    randomize(store, seed + 500);
    const auto sched = build_schedule(3, dc.beta_start, dc.beta_end, 0.0);
    const auto f = random_tensor({9, 4}, rng, false, -3, 3);
    const NoisePredictor pred = [&](const Tensor& x, std::size_t s) { return net.predict_eps(x, s); };
    Rng noise(seed);
    const auto out = refine(pred, f, sched, {}, noise);
    CHECK(out.shape() == f.shape());
    bool finite = true;
    for (double v : out.data()) finite = finite && std::isfinite(v);
    CHECK(finite);
    const auto [gamma, beta] = net.film(2);
    CHECK(gamma.numel() == 4);
    CHECK(beta.numel() == 4);
  }
}

TEST_CASE("denoiser step range is enforced") {
  DiffusionConfig dc;
  ParameterStore store;
  Rng rng(1);
  Denoiser net(4, dc, store, rng);
  CHECK_THROWS_AS(net.predict_eps(Tensor::zeros({8, 4}), 0), ContractError);
  CHECK_THROWS_AS(net.predict_eps(Tensor::zeros({8, 4}), 4), ContractError);
}

TEST_CASE("gradient through the FiLM path and the full reverse chain") {
  DiffusionConfig dc;
  dc.embed_dim = 5;
  ParameterStore store;
  Rng rng(15);
  Denoiser net(4, dc, store, rng);
  randomize(store, 77);
  const auto sched = build_schedule(3, dc.beta_start, dc.beta_end, 0.0);
  auto f = random_tensor({8, 4}, rng);
  auto params = store.tensors();
  params.push_back(f);
  const NoisePredictor pred = [&](const Tensor& x, std::size_t s) { return net.predict_eps(x, s); };
  const auto chain = [&] {
    Rng noise(3);
    return project(refine(pred, f, sched, {}, noise), 21);
  };
  const auto film_only = [&] { return project(net.predict_noise(f, 2, sched).x0_hat, 22); };
  Rng pick(16);
  CHECK(check_gradients(params, film_only, random_coordinates(params, 60, pick)).max_rel_error < 1e-4);
  CHECK(check_gradients(params, chain, random_coordinates(params, 60, pick)).max_rel_error < 1e-4);
  // Step embedding rows for every s receive gradient through the chain.
  for (auto& p : params) p.zero_grad();
  chain().backward();
  const auto embed = store.get("tadiff.step_embed");
  for (std::size_t s = 0; s < 3; ++s) {
    double mag = 0;
    for (std::size_t e = 0; e < 5; ++e) mag += std::abs(embed.grad()[s * 5 + e]);
    CHECK(mag > 0.0);
  }
}

} // TEST_SUITE

TEST_SUITE("localizer") {

TEST_CASE("S = 0 is the identity refiner") {
  ModelConfig mc;
  mc.pyramid = small_pyramid();
  mc.diffusion.steps = 0;
  Localizer model(mc, 1);
  Rng rng(17);
  const auto x = random_tensor({16, 5}, rng, false);
  const auto out = model.forward(x, Phase::Train, 3);
  for (std::size_t l = 0; l < out.refined.size(); ++l)
    for (std::size_t i = 0; i < out.refined[l].numel(); ++i)
      CHECK(out.refined[l].data()[i] == out.pyramid.levels[l].data()[i]);
  CHECK_FALSE(model.params().contains("tadiff.step_embed"));
}

TEST_CASE("eval forward is reproducible for a fixed noise seed") {
  ModelConfig mc;
  mc.pyramid = small_pyramid();
  Localizer model(mc, 2);
  Rng rng(18);
  const auto x = random_tensor({16, 5}, rng, false);
  NoGradGuard guard;
  const auto a = model.forward(x, Phase::Eval, 7);
  const auto b = model.forward(x, Phase::Eval, 7);
  const auto c = model.forward(x, Phase::Eval, 8);
  bool same = true, differ = false;
  for (std::size_t l = 0; l < a.refined.size(); ++l)
    for (std::size_t i = 0; i < a.refined[l].numel(); ++i) {
      same = same && a.refined[l].data()[i] == b.refined[l].data()[i];
      differ = differ || a.refined[l].data()[i] != c.refined[l].data()[i];
    }
  CHECK(same);
  CHECK(differ);
}

TEST_CASE("ablation toggles keep encoder and head initialization") {
  ModelConfig on;
  on.pyramid = small_pyramid();
  ModelConfig off = on;
  off.diffusion.steps = 0;
  Localizer a(on, 5), b(off, 5);
  for (const auto& [name, t] : b.params().entries()) {
    const auto other = a.params().get(name);
    CHECK(std::equal(t.data().begin(), t.data().end(), other.data().begin()));
  }
}

} // TEST_SUITE
