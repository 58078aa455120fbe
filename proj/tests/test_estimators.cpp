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

#include <algorithm>
#include <cmath>
#include <vector>

#include "potec/dataset.hpp"
#include "potec/environment.hpp"
#include "potec/error.hpp"
#include "potec/estimators.hpp"
#include "potec/policy.hpp"
#include "potec/regressor.hpp"

using namespace potec;

namespace {

RegressorPtr Table(std::vector<double> v) {
  const std::size_t n = v.size();
  return std::make_shared<FunctionRegressor>(
      n, [v = std::move(v)](std::span<const double>, std::size_t a) { return v[a]; });
}

RegressorPtr Zero(std::size_t n) { return Table(std::vector<double>(n, 0.0)); }

double MaxAbsDiff(const GradientVector& a, const GradientVector& b) {
  REQUIRE(a.size() == b.size());
  double d = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) d = std::max(d, std::abs(a[j] - b[j]));
  return d;
}

const ClusterMap kTwoByTwo({0, 0, 1, 1}, 2);

ContextSet OnePoint(double x) {
  ContextSet xs;
  xs.dim = 1;
  xs.values = {x};
  xs.weights = {1.0};
  return xs;
}

struct Instance {
  std::shared_ptr<SyntheticEnvironment> env;
  LoggedDataset data;
  SoftmaxPolicy policy;
  RegressorPtr q_hat;
};

Instance MakeInstance(std::uint64_t seed, std::size_t n_actions = 12, std::size_t n_clusters = 3) {
  EnvConfig c;
  c.n_actions = n_actions;
  c.n_clusters = n_clusters;
  c.context_dim = 3;
  auto env = BuildSyntheticEnv(c, seed);
  LoggedDataset data = SampleLoggedData(*env, 60, seed + 1, 2);
  SoftmaxPolicy policy =
      SoftmaxPolicy::Initialized(3, {5}, n_actions, OutcomeSpace::kActions, seed + 2);
  return {env, std::move(data), std::move(policy), MakeNoisyRegressionModel(env, 0.7, 0.4, seed + 3)};
}

}  // namespace

TEST_CASE("estimator names round trip") {
  for (EstimatorKind k : {EstimatorKind::kIps, EstimatorKind::kDr, EstimatorKind::kSips,
                          EstimatorKind::kPotec, EstimatorKind::kPotecOneStage}) {
    CHECK(ParseEstimator(EstimatorName(k)) == k);
  }
  CHECK_FALSE(ParseEstimator("mips").has_value());
  CHECK(EstimatorSpace(EstimatorKind::kPotec) == OutcomeSpace::kClusters);
  CHECK(EstimatorSpace(EstimatorKind::kPotecOneStage) == OutcomeSpace::kActions);
}

TEST_CASE("ips on a single hand record") {
  LoggedDataset data(1, ClusterMap::Singletons(2));
  data.Add(std::vector<double>{2.0}, 0, 3.0, 0.25);
  const SoftmaxPolicy policy(Mlp({1, 2}), OutcomeSpace::kActions);
  // w = 0.5 / 0.25 = 2, s(x, 0) = (1, -1, 0.5, -0.5)
  const GradientVector g = IpsGradient(data, policy);
  const GradientVector expect{6.0, -6.0, 3.0, -3.0};
  CHECK(MaxAbsDiff(g, expect) <= 1e-15);
}

TEST_CASE("two-stage estimator on a single hand record") {
  LoggedDataset data(1, kTwoByTwo);
  data.Add(std::vector<double>{1.0}, 1, 3.0, 0.25);
  const SoftmaxPolicy first(Mlp({1, 2}), OutcomeSpace::kClusters);
  const RegressorPtr f = Table({4, 2, 5, 0});
  const SecondStagePolicy second(f, kTwoByTwo);
  const std::vector<double> props{0.5};
  // w(x,c) = 1; (3 - 2) s0 + 0.5 * 4 s0 + 0.5 * 5 s1 = 0.5 s0
  const GradientVector g = PotecGradient(data, first, second, *f, kTwoByTwo, props);
  const GradientVector expect{0.25, -0.25, 0.25, -0.25};
  CHECK(MaxAbsDiff(g, expect) <= 1e-15);
}

TEST_CASE("reductions to ips and dr hold elementwise") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Instance t = MakeInstance(seed);
    const GradientVector ips = IpsGradient(t.data, t.policy);
    CHECK(MaxAbsDiff(DrGradient(t.data, t.policy, *Zero(12)), ips) <= 1e-12);
    CHECK(MaxAbsDiff(SipsGradient(t.data, t.policy, ActionSelector::TopFraction(t.q_hat, 1.0)),
                     ips) <= 1e-12);

    const GradientVector dr = DrGradient(t.data, t.policy, *t.q_hat);
    const ClusterMap singletons = ClusterMap::Singletons(12);
    const std::vector<double> props = ClusterPropensities(*t.env, t.data, singletons);
    for (std::size_t i = 0; i < t.data.size(); ++i) CHECK(props[i] == t.data.propensity(i));
    const SoftmaxPolicy first(t.policy.net(), OutcomeSpace::kClusters);
    const SecondStagePolicy second(t.q_hat, singletons);
    CHECK(MaxAbsDiff(PotecGradient(t.data, first, second, *t.q_hat, singletons, props), dr) <= 1e-12);
    CHECK(MaxAbsDiff(PotecOneStageGradient(t.data, t.policy, *t.q_hat, singletons, props), dr) <=
          1e-12);
  }
}

TEST_CASE("record subsets average over the selection") {
  const Instance t = MakeInstance(3);
  const std::vector<std::size_t> records{4, 9, 17};
  const GradientVector g = IpsGradient(t.data, t.policy, records);
  GradientVector expect(g.size(), 0.0);
  for (std::size_t i : records) {
    const std::vector<std::size_t> one{i};
    const GradientVector gi = IpsGradient(t.data, t.policy, one);
    for (std::size_t j = 0; j < g.size(); ++j) expect[j] += gi[j] / 3.0;
  }
  CHECK(MaxAbsDiff(g, expect) <= 1e-12);
}

TEST_CASE("zero propensity raises a division error") {
  LoggedDataset data(1, kTwoByTwo);
  data.Add(std::vector<double>{1.0}, 0, 1.0, 0.5);
  data.Add(std::vector<double>{1.0}, 1, 1.0, 0.0);
  const SoftmaxPolicy policy(Mlp({1, 4}), OutcomeSpace::kActions);
  try {
    IpsGradient(data, policy);
    FAIL("expected a division error");
  } catch (const DivisionError& e) {
    CHECK(e.record() == 1);
    CHECK(e.code() == ErrorCode::kDivision);
  }
  CHECK_THROWS_AS(DrGradient(data, policy, *Zero(4)), DivisionError);

  const SoftmaxPolicy first(Mlp({1, 2}), OutcomeSpace::kClusters);
  const SecondStagePolicy second(Zero(4), kTwoByTwo);
  const std::vector<double> props{0.5, 0.0};
  CHECK_THROWS_AS(PotecGradient(data, first, second, *Zero(4), kTwoByTwo, props), DivisionError);
}

TEST_CASE("single cluster gives a zero two-stage gradient") {
  const Instance t = MakeInstance(4);
  const ClusterMap one = ClusterMap::OneCluster(12);
  const SoftmaxPolicy first = SoftmaxPolicy::Initialized(3, {4}, 1, OutcomeSpace::kClusters, 2);
  const SecondStagePolicy second(t.q_hat, one);
  const std::vector<double> props(t.data.size(), 1.0);
  const GradientVector g = PotecGradient(t.data, first, second, *t.q_hat, one, props);
  CHECK(*std::max_element(g.begin(), g.end(), [](double a, double b) {
          return std::abs(a) < std::abs(b);
        }) == 0.0);
}

TEST_CASE("estimators reject a mismatched policy") {
  const Instance t = MakeInstance(5);
  const SoftmaxPolicy clusters = SoftmaxPolicy::Initialized(3, {}, 12, OutcomeSpace::kClusters, 1);
  CHECK_THROWS_AS(IpsGradient(t.data, clusters), Error);
  const SoftmaxPolicy narrow = SoftmaxPolicy::Initialized(3, {}, 5, OutcomeSpace::kActions, 1);
  CHECK_THROWS_AS(IpsGradient(t.data, narrow), Error);
  const SoftmaxPolicy wide = SoftmaxPolicy::Initialized(4, {}, 12, OutcomeSpace::kActions, 1);
  CHECK_THROWS_AS(IpsGradient(t.data, wide), Error);
}

TEST_CASE("action selector keeps the top fraction") {
  const RegressorPtr ranker = Table({0.1, 0.9, 0.5, 0.9, -1.0});
  const ActionSelector half = ActionSelector::TopFraction(ranker, 0.5);
  CHECK(half.size() == 3);
  const std::vector<double> x{0.0};
  CHECK(half.Mask(x) == std::vector<char>{0, 1, 1, 1, 0});
  const ActionSelector top = ActionSelector::TopFraction(ranker, 0.2);
  CHECK(top.Mask(x) == std::vector<char>{0, 1, 0, 0, 0});  // tie to the lowest index
  const ActionSelector thr = ActionSelector::Threshold(ranker, 0.4);
  CHECK(thr.Mask(x) == std::vector<char>{0, 1, 1, 1, 0});
  CHECK_THROWS_AS(ActionSelector::TopFraction(ranker, 0.0), Error);
  CHECK_THROWS_AS(ActionSelector::TopFraction(nullptr, 0.5), Error);
}

TEST_CASE("sips ignores records outside the selection") {
  LoggedDataset data(1, ClusterMap::Singletons(4));
  data.Add(std::vector<double>{1.0}, 3, 5.0, 0.25);
  const SoftmaxPolicy policy(Mlp({1, 4}), OutcomeSpace::kActions);
  const ActionSelector selector = ActionSelector::TopFraction(Table({3, 2, 1, 0}), 0.5);
  const GradientVector g = SipsGradient(data, policy, selector);
  CHECK(std::all_of(g.begin(), g.end(), [](double v) { return v == 0.0; }));
}

TEST_CASE("true first-stage gradient follows the cluster values") {
  const ContextSet xs = OnePoint(1.0);
  auto env = std::make_shared<TabularEnvironment>(xs, kTwoByTwo, std::vector<double>{4, 2, 5, 0},
                                                  std::vector<double>(4, 0.25),
                                                  std::vector<double>(4, 1.0));
  const SoftmaxPolicy first(Mlp({1, 2}), OutcomeSpace::kClusters);
  // parameters: w0, w1, b0, b1
  const SecondStagePolicy optimal(ExactModel(env), kTwoByTwo);
  const GradientVector g_opt = TrueFirstStageGradient(*env, first, optimal, xs);
  CHECK(g_opt[3] == doctest::Approx(0.25));  // toward cluster 1 (value 5 > 4)
  const UniformSecondStage uniform(kTwoByTwo);
  const GradientVector g_uni = TrueFirstStageGradient(*env, first, uniform, xs);
  CHECK(g_uni[3] == doctest::Approx(-0.125));  // toward cluster 0 (value 3 > 2.5)
}

TEST_CASE("true action gradient of a linear softmax") {
  const ContextSet xs = OnePoint(1.0);
  auto env = std::make_shared<TabularEnvironment>(xs, ClusterMap::Singletons(2),
                                                  std::vector<double>{1.0, 3.0},
                                                  std::vector<double>{0.5, 0.5},
                                                  std::vector<double>(2, 1.0));
  const SoftmaxPolicy policy(Mlp({1, 2}), OutcomeSpace::kActions);
  // 0.5 * 1 * s0 + 0.5 * 3 * s1 = -s0 with s0 = (0.5, -0.5, 0.5, -0.5)
  const GradientVector g = TrueActionGradient(*env, policy, xs);
  CHECK(MaxAbsDiff(g, {-0.5, 0.5, -0.5, 0.5}) <= 1e-15);
}
