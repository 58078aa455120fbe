// Copyright 2026 The POTEC Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "potec/environment.hpp"
#include "potec/error.hpp"
#include "potec/oracle.hpp"
#include "potec/policy.hpp"
#include "potec/regressor.hpp"
#include "potec/reward_models.hpp"

using namespace potec;

namespace {

RegressorPtr Table(std::vector<double> v) {
  const std::size_t n = v.size();
  return std::make_shared<FunctionRegressor>(
      n, [v = std::move(v)](std::span<const double>, std::size_t a) { return v[a]; });
}

ContextSet OnePoint() {
  ContextSet xs;
  xs.dim = 1;
  xs.values = {0.0};
  xs.weights = {1.0};
  return xs;
}

const ClusterMap kTwoByTwo({0, 0, 1, 1}, 2);

}  // namespace

TEST_CASE("softmax policy probabilities use the temperature") {
  Mlp net({1, 3});
  auto p = net.mutable_params();
  p[0] = 1.0;
  p[1] = 2.0;
  p[2] = 0.0;
  const SoftmaxPolicy policy(net, OutcomeSpace::kActions, 2.0);
  const std::vector<double> x{1.0};
  const auto probs = policy.Probs(x);
  const auto expect = Softmax(std::vector<double>{0.5, 1.0, 0.0});
  for (std::size_t k = 0; k < 3; ++k) CHECK(probs[k] == doctest::Approx(expect[k]).epsilon(1e-15));
}

TEST_CASE("score of a linear softmax on hand values") {
  Mlp net({1, 2});
  const SoftmaxPolicy policy(net, OutcomeSpace::kActions, 1.0);
  const std::vector<double> x{2.0};
  // uniform: d log pi(0) / d logit_0 = 0.5, / d logit_1 = -0.5
  const auto s = policy.Score(x, 0);
  CHECK(s[0] == doctest::Approx(1.0));   // 0.5 * x
  CHECK(s[1] == doctest::Approx(-1.0));  // -0.5 * x
  CHECK(s[2] == doctest::Approx(0.5));   // bias 0
  CHECK(s[3] == doctest::Approx(-0.5));
}

TEST_CASE("weighted score equals the weighted sum of scores") {
  const SoftmaxPolicy policy =
      SoftmaxPolicy::Initialized(3, {4}, 5, OutcomeSpace::kClusters, 2);
  const std::vector<double> x{0.3, -1.0, 0.2};
  const std::vector<double> coeffs{0.5, -1.0, 2.0, 0.0, 3.0};
  Mlp::Trace trace;
  std::vector<double> probs(5);
  policy.Probs(x, trace, probs);
  std::vector<double> grad(policy.n_params(), 0.0);
  policy.AccumulateWeightedScore(trace, probs, coeffs, grad, 2.0);
  std::vector<double> expect(policy.n_params(), 0.0);
  for (std::size_t k = 0; k < 5; ++k) {
    const auto s = policy.Score(x, k);
    for (std::size_t j = 0; j < s.size(); ++j) expect[j] += 2.0 * coeffs[k] * s[j];
  }
  for (std::size_t j = 0; j < grad.size(); ++j) CHECK(grad[j] == doctest::Approx(expect[j]).epsilon(1e-12));
}

TEST_CASE("second stage picks the within-cluster argmax of fixture models") {
  const ContextSet xs = OnePoint();
  for (const auto& f : {std::vector<double>{3, 0, 1, 0}, std::vector<double>{50, 47, -30, -31},
                        std::vector<double>{4, 1, 3, 2}}) {
    const SecondStagePolicy second(Table(f), kTwoByTwo);
    CHECK(second.Choice(xs[0], 0) == 0);
    CHECK(second.Choice(xs[0], 1) == 2);
  }
}

TEST_CASE("second stage ties go to the lowest index") {
  const SecondStagePolicy second(Table({1, 1, 0, 0}), kTwoByTwo);
  const auto c = second.Choices(OnePoint()[0]);
  CHECK(c == std::vector<std::size_t>{0, 2});
  const auto cond = second.Conditionals(OnePoint()[0]);
  CHECK(cond == std::vector<double>{1, 0, 1, 0});
}

TEST_CASE("cluster values depend on the second stage") {
  const ContextSet xs = OnePoint();
  auto env = std::make_shared<TabularEnvironment>(xs, kTwoByTwo, std::vector<double>{4, 2, 5, 0},
                                                  std::vector<double>(4, 0.25),
                                                  std::vector<double>(4, 1.0));
  const SecondStagePolicy optimal(ExactModel(env), kTwoByTwo);
  const UniformSecondStage uniform(kTwoByTwo);
  CHECK(ClusterValue(*env, optimal, xs[0], 0) == 4.0);
  CHECK(ClusterValue(*env, optimal, xs[0], 1) == 5.0);
  CHECK(ClusterValue(*env, uniform, xs[0], 0) == 3.0);
  CHECK(ClusterValue(*env, uniform, xs[0], 1) == 2.5);
  // singleton cluster
  const ClusterMap single({0, 1, 1, 1}, 2);
  CHECK(ClusterValue(*env, UniformSecondStage(single), xs[0], 0) == 4.0);
}

TEST_CASE("overall policy composes the two stages") {
  Mlp net({1, 2});
  net.mutable_params()[2] = std::log(3.0);  // bias of cluster 0
  const SoftmaxPolicy first(net, OutcomeSpace::kClusters);
  auto second = std::make_shared<SecondStagePolicy>(Table({0, 1, 5, 2}), kTwoByTwo);
  const OverallPolicy overall(first, second);
  const auto p = overall.Probs(OnePoint()[0]);
  CHECK(p[0] == 0.0);
  CHECK(p[1] == doctest::Approx(0.75));
  CHECK(p[2] == doctest::Approx(0.25));
  CHECK(p[3] == 0.0);

  Rng rng = MakeRng({3});
  int count1 = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const auto [c, a] = overall.SampleAction(OnePoint()[0], rng);
    CHECK(kTwoByTwo.cluster_of(a) == c);
    count1 += a == 1;
  }
  CHECK(std::abs(count1 / double(n) - 0.75) <= 4 * std::sqrt(0.75 * 0.25 / n));
}

TEST_CASE("overall policy needs a cluster-space first stage") {
  const SoftmaxPolicy actions = SoftmaxPolicy::Initialized(1, {}, 2, OutcomeSpace::kActions, 1);
  auto second = std::make_shared<UniformSecondStage>(kTwoByTwo);
  CHECK_THROWS_AS(OverallPolicy(actions, second), Error);
  const SoftmaxPolicy clusters = SoftmaxPolicy::Initialized(1, {}, 2, OutcomeSpace::kClusters, 1);
  CHECK_THROWS_AS(clusters.AsActionPolicy(), Error);
}

TEST_CASE("regression policy is a softmax of the model") {
  const ActionPolicy policy = RegressionPolicy(Table({0.0, 1.0}), 0.5);
  std::vector<double> p(2);
  policy(OnePoint()[0], p);
  const double e = std::exp(2.0);
  CHECK(p[1] == doctest::Approx(e / (1 + e)));
}

TEST_CASE("policy serialization round trip") {
  const SoftmaxPolicy policy = SoftmaxPolicy::Initialized(3, {5}, 4, OutcomeSpace::kClusters, 7);
  std::stringstream s;
  WritePolicy(policy, s);
  CHECK(ReadPolicy(s) == policy);
}

TEST_CASE("noisy oracle models") {
  EnvConfig c;
  c.n_actions = 40;
  c.n_clusters = 4;
  c.context_dim = 3;
  auto env = BuildSyntheticEnv(c, 1);
  const ContextSet xs = SampleContexts(*env, 10, 2);
  auto exact = MakeNoisyRegressionModel(env, 0.0, 0.0, 3);
  auto cluster_noise = MakeNoisyRegressionModel(env, 0.5, 0.0, 3);
  auto action_noise = MakeNoisyRegressionModel(env, 0.0, 0.5, 3);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t a = 0; a < 40; ++a) CHECK(exact->Predict(xs[i], a) == env->ExpectedReward(xs[i], a));
  }
  CHECK(LocalCorrectnessResidual(*cluster_noise, *env, xs, env->cluster_map()) <= 1e-12);
  CHECK(LocalCorrectnessResidual(*action_noise, *env, xs, env->cluster_map()) > 0.1);
  // frozen: the offset does not depend on the context
  const double d0 = cluster_noise->Predict(xs[0], 0) - env->ExpectedReward(xs[0], 0);
  const double d1 = cluster_noise->Predict(xs[1], 0) - env->ExpectedReward(xs[1], 0);
  CHECK(d0 == doctest::Approx(d1).epsilon(1e-12));
}

TEST_CASE("tabulated regressor matches its source") {
  EnvConfig c;
  c.n_actions = 12;
  c.n_clusters = 3;
  c.context_dim = 2;
  auto env = BuildSyntheticEnv(c, 1);
  auto model = MakeNoisyRegressionModel(env, 0.3, 0.3, 1);
  const ContextSet xs = SampleContexts(*env, 5, 2);
  const TabulatedRegressor tab(model, xs);
  const ContextSet other = SampleContexts(*env, 3, 9);
  for (const ContextSet* set : {&xs, &other}) {
    for (std::size_t i = 0; i < set->size(); ++i) {
      CHECK(tab.PredictAll((*set)[i]) == model->PredictAll((*set)[i]));
    }
  }
}

TEST_CASE("regressor serialization round trip") {
  RegressionConfig cfg;
  cfg.epochs = 1;
  EnvConfig c;
  c.n_actions = 12;
  c.n_clusters = 3;
  c.context_dim = 2;
  auto env = BuildSyntheticEnv(c, 1);
  const LoggedDataset data = SampleLoggedData(*env, 100, 1, 2);
  const RegressorPtr q = FitConventional(data, cfg);
  std::stringstream s;
  WriteRegressor(*q, s);
  const RegressorPtr back = ReadRegressor(s);
  for (std::size_t i = 0; i < data.size(); i += 10) {
    CHECK(back->PredictAll(data.context(i)) == q->PredictAll(data.context(i)));
  }
}
