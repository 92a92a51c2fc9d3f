/*
 * Copyright 2026 The SLADV Bench Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sladv/attack.hpp"
#include "sladv/errors.hpp"
#include "sladv/gradcheck.hpp"

namespace sladv::attack {
namespace {

using nn::LayerSpec;
using nn::Network;
using nn::Tensor;
using testing::random_tensor;

TEST(AttackLoss, Identities) {
  const std::vector<double> a{1.0, 0.0}, b{0.0, 1.0}, neg{-1.0, 0.0};
  EXPECT_EQ(attack_loss(a, a).loss, 1.0);
  EXPECT_EQ(attack_loss(a, b).loss, 0.0);
  EXPECT_EQ(attack_loss(a, neg).loss, -1.0);
}

TEST(AttackLoss, StaysInRangeAndOneAtZeroDelta) {
  Rng rng(2);
  for (int i = 0; i < 200; ++i) {
    const Tensor o = random_tensor({7}, rng, -1e3, 1e3);
    EXPECT_DOUBLE_EQ(attack_loss(o.data(), o.data()).loss, 1.0);
    const Tensor p = random_tensor({7}, rng, -1e-8, 1e-8);
    const double l = attack_loss(o.data(), p.data()).loss;
    EXPECT_GE(l, -1.0);
    EXPECT_LE(l, 1.0);
  }
}

TEST(AttackLoss, ZeroCleanActivationIsDegenerate) {
  const std::vector<double> z{0.0, 0.0}, b{1.0, 2.0};
  EXPECT_THROW(attack_loss(z, b), DegenerateInputError);
}

TEST(AttackLoss, ZeroPerturbedActivationStaysFinite) {
  const std::vector<double> a{1.0, 2.0}, z{0.0, 0.0};
  for (auto mode : {CosineGradient::exact, CosineGradient::fixed_norm}) {
    const auto r = attack_loss(a, z, mode);
    EXPECT_EQ(r.loss, 0.0);
    EXPECT_TRUE(r.grad.all_finite());
  }
}

TEST(AttackLoss, ExactGradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const Tensor o = random_tensor({5}, rng);
    const Tensor p = random_tensor({5}, rng);
    const auto r = attack_loss(o.data(), p.data(), CosineGradient::exact);
    const Tensor num = nn::numeric_gradient([&](const Tensor& q) { return attack_loss(o.data(), q.data()).loss; }, p);
    EXPECT_LT(nn::relative_error(r.grad, num), 1e-6);
  }
}

TEST(AttackLoss, FixedNormGradientHoldsPerturbedNormConstant) {
  Rng rng(4);
  const Tensor o = random_tensor({5}, rng);
  const Tensor p = random_tensor({5}, rng);
  const double np = nn::l2_norm(p.data());
  const double no = nn::l2_norm(o.data());
  const auto r = attack_loss(o.data(), p.data(), CosineGradient::fixed_norm);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(r.grad[i], o[i] / (no * np), 1e-15);
}

AttackConfig config(double eps) {
  AttackConfig c;
  c.epsilon = eps;
  return c;
}

TEST(ClipToBudget, ClampsToEpsilon) {
  const Tensor x({3}, {0.5, 0.5, 0.5});
  const Tensor d = clip_to_budget(Tensor({3}, {0.5, -0.2, 0.31}), x, config(0.3));
  EXPECT_DOUBLE_EQ(d[0], 0.3);
  EXPECT_DOUBLE_EQ(d[1], -0.2);
  EXPECT_DOUBLE_EQ(d[2], 0.3);
}

TEST(ClipToBudget, InsideBudgetUnchanged) {
  const Tensor x({3}, {0.5, 0.4, 0.6});
  const Tensor d({3}, {0.1, -0.2, 0.0});
  EXPECT_EQ(clip_to_budget(d, x, config(0.3)), d);
}

TEST(ClipToBudget, BoundaryPixel) {
  const Tensor d = clip_to_budget(Tensor({2}, {0.2, -0.2}), Tensor({2}, {1.0, 0.0}), config(0.3));
  EXPECT_EQ(d[0], 0.0);
  EXPECT_EQ(d[1], 0.0);
}

TEST(ClipToBudget, Idempotent) {
  Rng rng(8);
  for (int i = 0; i < 100; ++i) {
    const Tensor x = random_tensor({10}, rng, 0.0, 1.0);
    const Tensor d = random_tensor({10}, rng, -1.0, 1.0);
    const Tensor once = clip_to_budget(d, x, config(0.3));
    EXPECT_EQ(clip_to_budget(once, x, config(0.3)), once);
  }
}

TEST(AttackConfig, Validation) {
  AttackConfig c;
  EXPECT_NO_THROW(c.validate());
  c.epsilon = 1.5;
  try {
    c.validate();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "attack.epsilon");
  }
  c = AttackConfig{};
  c.beta = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = AttackConfig{};
  c.iterations = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = AttackConfig{};
  c.lo = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(AttackConfig, Defaults) {
  const AttackConfig c;
  EXPECT_EQ(c.epsilon, 0.3);
  EXPECT_EQ(c.beta, 0.3);
  EXPECT_EQ(c.iterations, 1u);
}

TEST(AttackConfig, NameRoundTrip) {
  for (auto r : {StepRule::gradient, StepRule::sign}) EXPECT_EQ(step_rule_from_name(step_rule_name(r)), r);
  for (auto g : {CosineGradient::exact, CosineGradient::fixed_norm}) {
    EXPECT_EQ(cosine_gradient_from_name(cosine_gradient_name(g)), g);
  }
  EXPECT_THROW(step_rule_from_name("pgd"), ConfigError);
}

Network small_proxy(Rng& rng) {
  Network net({1, 5, 5}, {LayerSpec::conv2d(1, 3, 3, 1, 1), LayerSpec::relu(), LayerSpec::flatten(),
                          LayerSpec::dense(75, 6)});
  nn::initialize(net, rng);
  return net;
}

TEST(Craft, ZeroEpsilonLeavesInput) {
  Rng rng(1);
  const Network net = small_proxy(rng);
  const nn::Pipeline proxy{&net};
  const Tensor x = random_tensor({4, 1, 5, 5}, rng, 0.0, 1.0);
  const auto b = craft(proxy, x, config(0.0));
  EXPECT_EQ(b.adversarial, x);
  for (double c : b.cosine) EXPECT_DOUBLE_EQ(c, 1.0);
}

TEST(Craft, LinearScalarStepDirection) {
  // F(x) = w x with w > 0: -d cos / d delta has the sign of -x under the
  // fixed-norm derivative, so delta moves against x.
  LayerSpec d = LayerSpec::dense(1, 1);
  d.params = {Tensor({1, 1}, {2.0}), Tensor({1}, {0.0})};
  const Network net({1}, {d});
  const nn::Pipeline proxy{&net};
  for (auto step : {StepRule::sign, StepRule::gradient}) {
    AttackConfig c;
    c.step = step;
    c.gradient = CosineGradient::fixed_norm;
    c.lo = -1.0;
    const auto b = craft(proxy, Tensor({2, 1}, {0.5, -0.5}), c);
    EXPECT_LT(b.delta[0], 0.0);
    EXPECT_GT(b.delta[1], 0.0);
    EXPECT_DOUBLE_EQ(std::abs(b.delta[0]), 0.3);
  }
}

TEST(Craft, ExactGradientVanishesAtZeroDelta) {
  Rng rng(3);
  const Network net = small_proxy(rng);
  const nn::Pipeline proxy{&net};
  const Tensor x = random_tensor({3, 1, 5, 5}, rng, 0.0, 1.0);
  const Tensor g = cosine_input_gradient(proxy, x, proxy.infer(x), CosineGradient::exact);
  EXPECT_LT(nn::max_abs(g.data()), 1e-12);
}

double summed_cosine(const nn::Pipeline& proxy, const Tensor& z, const Tensor& clean_o2) {
  const Tensor o = proxy.infer(z);
  double s = 0.0;
  for (std::size_t n = 0; n < z.batch(); ++n) s += attack_loss(clean_o2.sample(n), o.sample(n)).loss;
  return s;
}

TEST(Craft, InputGradientMatchesFiniteDifferencesThroughProxy) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed + 40);
    Network a({1, 5, 5}, {LayerSpec::conv2d(1, 3, 3, 1, 1), LayerSpec::residual_block(3, 3)});
    Network b({3, 5, 5}, {LayerSpec::relu(), LayerSpec::flatten(), LayerSpec::dense(75, 6)});
    nn::initialize(a, rng);
    nn::initialize(b, rng);
    const nn::Pipeline proxy{&a, &b};
    const Network whole = Network::concat({&a, &b});
    const Tensor x = random_tensor({2, 1, 5, 5}, rng, 0.0, 1.0);
    const Tensor z = testing::kink_free_input(whole, 2, rng);
    const Tensor clean = proxy.infer(x);
    const Tensor g = cosine_input_gradient(proxy, z, clean, CosineGradient::exact);
    const Tensor num = nn::numeric_gradient([&](const Tensor& p) { return summed_cosine(proxy, p, clean); }, z);
    EXPECT_LT(nn::relative_error(g, num), 1e-4) << "seed " << seed;
  }
}

TEST(Craft, InvariantsHoldForRandomConfigs) {
  Rng rng(21);
  const Network net = small_proxy(rng);
  const nn::Pipeline proxy{&net};
  for (int trial = 0; trial < 50; ++trial) {
    AttackConfig c;
    c.epsilon = rng.uniform(0.0, 0.5);
    c.beta = rng.uniform(0.01, 1.0);
    c.iterations = 1 + rng.index(5);
    c.step = rng.uniform() < 0.5 ? StepRule::sign : StepRule::gradient;
    const Tensor x = random_tensor({3, 1, 5, 5}, rng, 0.0, 1.0);
    const auto b = craft(proxy, x, c);
    EXPECT_LE(nn::max_abs(b.delta.data()), c.epsilon);
    for (double v : b.adversarial.data()) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    for (double cs : b.cosine) {
      EXPECT_GE(cs, -1.0);
      EXPECT_LE(cs, 1.0);
    }
  }
}

TEST(Craft, MoreIterationsLowerProxyCosine) {
  Rng rng(17);
  const Network net = small_proxy(rng);
  const nn::Pipeline proxy{&net};
  const Tensor x = random_tensor({8, 1, 5, 5}, rng, 0.0, 1.0);
  AttackConfig c;
  c.beta = 0.01;
  double previous = 2.0;
  for (std::size_t k = 1; k <= 10; ++k) {
    c.iterations = k;
    const auto b = craft(proxy, x, c);
    double mean = 0.0;
    for (double cs : b.cosine) mean += cs / static_cast<double>(b.cosine.size());
    EXPECT_TRUE(mean < previous || mean == -1.0) << "K=" << k;
    previous = mean;
  }
}

TEST(Craft, SkipsZeroActivationSamples) {
  LayerSpec d = LayerSpec::dense(2, 2);
  d.params = {Tensor({2, 2}, {1, 0, 0, 1}), Tensor({2}, {0, 0})};
  const Network net({2}, {d, LayerSpec::relu()});
  const nn::Pipeline proxy{&net};
  AttackConfig c;
  c.lo = -1.0;
  const auto b = craft(proxy, Tensor({2, 2}, {-0.5, -0.5, 0.5, 0.2}), c);
  EXPECT_EQ(b.skipped_count(), 1u);
  EXPECT_EQ(b.delta[0], 0.0);
  EXPECT_EQ(b.delta[1], 0.0);
}

TEST(Baselines, RespectBudget) {
  Rng rng(5);
  const Tensor x = random_tensor({4, 1, 5, 5}, rng, 0.0, 1.0);
  const AttackConfig c;
  for (const Tensor& adv : {random_noise(x, c, rng), random_sign_noise(x, c, rng)}) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      EXPECT_LE(std::abs(adv[i] - x[i]), c.epsilon + 1e-15);
      EXPECT_GE(adv[i], 0.0);
      EXPECT_LE(adv[i], 1.0);
    }
  }
}

TEST(Evaluate, DropArithmetic) { EXPECT_NEAR(accuracy_drop_points(0.80, 0.55), 25.0, 1e-12); }

TEST(Evaluate, ZeroEpsilonGivesZeroDrop) {
  Rng rng(6);
  Network a({1, 5, 5}, {LayerSpec::conv2d(1, 2, 3, 1, 1)});
  Network b({2, 5, 5}, {LayerSpec::relu(), LayerSpec::flatten()});
  Network c({50}, {LayerSpec::dense(50, 3)});
  nn::initialize(a, rng);
  nn::initialize(c, rng);
  data::Dataset test;
  test.images = random_tensor({30, 1, 5, 5}, rng, 0.0, 1.0);
  test.class_count = 3;
  for (int i = 0; i < 30; ++i) test.labels.push_back(rng.index(3));
  const auto r = evaluate_attack(nn::Pipeline{&a, &b, &c}, test, nn::Pipeline{&a, &b}, config(0.0), 1, 7);
  EXPECT_EQ(r.accuracy_drop, 0.0);
  EXPECT_EQ(r.random_noise_drop, 0.0);
  EXPECT_EQ(r.samples, 30u);
  EXPECT_NEAR(r.accuracy_drop, 100.0 * (r.clean_accuracy - r.adversarial_accuracy), 1e-9);
}

}  // namespace
}  // namespace sladv::attack
