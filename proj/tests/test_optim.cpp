#include <doctest.h>

#include <cmath>

#include "dart/errors.hpp"
#include "dart/optim.hpp"
#include "dart/rng.hpp"

using namespace dart;

TEST_CASE("adamw leaves a zero-gradient parameter unchanged") {
  ParamRegistry registry;
  auto p = make_tensor({3});
  p->data = {1.0f, -2.0f, 0.5f};
  registry.add("p", p);

  AdamWConfig config;
  config.lr = 0.1f;
  config.weight_decay = 0.0f;
  AdamW opt(registry, config);
  opt.step();
  CHECK(p->data == std::vector<float>{1.0f, -2.0f, 0.5f});
}

TEST_CASE("first adamw step moves a unit-gradient scalar by about lr") {
  ParamRegistry registry;
  auto p = make_tensor({1});
  p->data = {1.0f};
  registry.add("p", p);
  p->grad = {1.0f};

  AdamWConfig config;
  config.lr = 0.1f;
  config.weight_decay = 0.0f;
  AdamW opt(registry, config);
  opt.step();
  // Closed form: bias-corrected m-hat = g, v-hat = g^2, so the update is
  // lr * g / (|g| + eps) = lr.
  CHECK(p->data[0] == doctest::Approx(0.9f).epsilon(1e-6));
}

TEST_CASE("frozen parameter ignores its gradient") {
  ParamRegistry registry;
  auto p = make_tensor({2});
  p->data = {1.0f, 2.0f};
  registry.add("p", p);
  registry.entries()[0].trainable = false;
  p->grad = {5.0f, 5.0f};

  AdamWConfig config;
  config.lr = 0.1f;
  AdamW opt(registry, config);
  opt.step();
  CHECK(p->data == std::vector<float>{1.0f, 2.0f});
}

TEST_CASE("row-masked entry updates only the listed rows") {
  ParamRegistry registry;
  auto p = make_tensor({4, 2});
  for (size_t i = 0; i < p->data.size(); ++i) p->data[i] = float(i);
  const std::vector<float> before = p->data;
  registry.add("p", p);
  registry.entries()[0].trainable_rows = {1, 3};
  for (float& g : p->grad) g = 1.0f;

  AdamWConfig config;
  config.lr = 0.01f;
  config.weight_decay = 0.1f;  // decay must not leak into frozen rows
  AdamW opt(registry, config);
  opt.step();

  for (int c = 0; c < 2; ++c) {
    CHECK(p->at(0, c) == before[size_t(c)]);
    CHECK(p->at(2, c) == before[size_t(4 + c)]);
    CHECK(p->at(1, c) != before[size_t(2 + c)]);
    CHECK(p->at(3, c) != before[size_t(6 + c)]);
  }
}

TEST_CASE("gradient clipping caps the global norm") {
  ParamRegistry registry;
  auto a = make_tensor({3});
  auto b = make_tensor({2});
  registry.add("a", a);
  registry.add("b", b);
  a->grad = {30.0f, 40.0f, 0.0f};
  b->grad = {0.0f, 0.0f};

  const float pre = clip_global_grad_norm(registry, 1.0f);
  CHECK(pre == doctest::Approx(50.0f));
  double post_sq = 0;
  for (float g : a->grad) post_sq += double(g) * g;
  for (float g : b->grad) post_sq += double(g) * g;
  CHECK(std::sqrt(post_sq) <= 1.0 + 1e-6);
}

TEST_CASE("decay-exempt entries skip weight decay") {
  ParamRegistry registry;
  auto w = make_tensor({1});
  auto b = make_tensor({1});
  w->data = {1.0f};
  b->data = {1.0f};
  registry.add("w", w);
  registry.add("b", b, /*decay_exempt=*/true);

  AdamWConfig config;
  config.lr = 0.5f;
  config.weight_decay = 0.1f;
  AdamW opt(registry, config);
  opt.step();
  CHECK(w->data[0] == doctest::Approx(1.0f - 0.5f * 0.1f * 1.0f));
  CHECK(b->data[0] == doctest::Approx(1.0f));
}

TEST_CASE("warmup-decay schedule shape") {
  ParamRegistry registry;
  auto p = make_tensor({1});
  registry.add("p", p);
  AdamWConfig config;
  config.total_steps = 100;
  config.warmup_frac = 0.1f;
  AdamW opt(registry, config);

  CHECK(opt.schedule_factor(1) == doctest::Approx(0.1f));
  CHECK(opt.schedule_factor(10) == doctest::Approx(1.0f));
  CHECK(opt.schedule_factor(55) == doctest::Approx(0.5f));
  CHECK(opt.schedule_factor(100) == doctest::Approx(0.0f));
}

TEST_CASE("missing gradient on a trainable parameter is a contract error") {
  ParamRegistry registry;
  auto p = make_tensor({2});
  registry.add("p", p);
  p->grad.clear();

  AdamWConfig config;
  AdamW opt(registry, config);
  CHECK_THROWS_AS(opt.step(), ContractError);
}

TEST_CASE("registry rejects duplicate names and double registration") {
  ParamRegistry registry;
  auto p = make_tensor({1});
  registry.add("p", p);
  CHECK_THROWS_AS(registry.add("p", make_tensor({1})), ValidationError);
  CHECK_THROWS_AS(registry.add("q", p), ValidationError);
}

TEST_CASE("checksum ignores excluded rows only") {
  ParamRegistry registry;
  auto p = make_tensor({3, 2});
  registry.add("p", p);
  const uint64_t base = registry.checksum_excluding_rows("p", {1});
  p->at(1, 0) = 42.0f;  // excluded row: checksum unchanged
  CHECK(registry.checksum_excluding_rows("p", {1}) == base);
  p->at(2, 0) = 42.0f;  // included row: checksum moves
  CHECK(registry.checksum_excluding_rows("p", {1}) != base);
}
