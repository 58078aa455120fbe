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

#include "potec/dataset.hpp"
#include "potec/environment.hpp"
#include "potec/error.hpp"

using namespace potec;

namespace {

EnvConfig Small(ContextMode mode = ContextMode::kContinuous) {
  EnvConfig c;
  c.n_actions = 30;
  c.n_clusters = 5;
  c.context_dim = 4;
  c.action_feature_dim = 3;
  c.context_mode = mode;
  c.n_contexts = 6;
  return c;
}

// Independent evaluation of the reward function from the raw parameters.
double ReferenceReward(const SyntheticEnvironment& env, std::span<const double> x, std::size_t a) {
  const auto& p = env.params();
  const std::size_t d = env.context_dim();
  const std::size_t c = env.cluster_map().cluster_of(a);
  double inner = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) inner += x[i] * p.base_quadratic[c * d * d + i * d + j] * x[j];
    inner += p.base_linear[c * d + i] * x[i];
  }
  double s02 = 0, s27 = 0, s12 = 0, s49 = 0;
  for (std::size_t i = 0; i < d; ++i) {
    if (i <= 2) s02 += x[i];
    if (i >= 2 && i <= 7) s27 += x[i];
    if (i >= 1 && i <= 2) s12 += x[i];
    if (i >= 4 && i <= 9) s49 += x[i];
  }
  const double* u = p.threshold_bonus.data() + c * 4;
  double g = 3.0 * std::tanh(inner) + (s02 < 1.5) * u[0] + (s27 < -0.5) * u[1] +
             (s12 > 3.0) * u[2] + (s49 < 1.0) * u[3] + env.config().reward_shift;
  double h = p.residual_action[a];
  for (std::size_t i = 0; i < d; ++i) {
    h += p.residual_context[a * d + i] * x[i] + p.cluster_context[c * d + i] * x[i];
  }
  return g + h;
}

}  // namespace

TEST_CASE("expected reward matches the reference decomposition") {
  auto env = BuildSyntheticEnv(Small(), 3);
  const ContextSet xs = SampleContexts(*env, 20, 1);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto q = env->ExpectedRewards(xs[i]);
    for (std::size_t a = 0; a < env->n_actions(); ++a) {
      CHECK(q[a] == doctest::Approx(ReferenceReward(*env, xs[i], a)).epsilon(1e-12));
      CHECK(env->ExpectedReward(xs[i], a) == doctest::Approx(q[a]).epsilon(1e-12));
    }
  }
}

TEST_CASE("within-cluster differences come only from the residual effect") {
  auto env = BuildSyntheticEnv(Small(), 4);
  const ContextSet xs = SampleContexts(*env, 5, 2);
  const auto members = env->cluster_map().members(0);
  REQUIRE(members.size() >= 2);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const std::size_t a = members[0], b = members[1];
    const double dq = env->ExpectedReward(xs[i], a) - env->ExpectedReward(xs[i], b);
    const double dh = env->ResidualEffect(xs[i], a) - env->ResidualEffect(xs[i], b);
    CHECK(dq == doctest::Approx(dh).epsilon(1e-12));
  }
}

TEST_CASE("logging policy is the softmax of beta q plus the clipped perturbation") {
  EnvConfig c = Small();
  c.beta = -0.5;
  auto env = BuildSyntheticEnv(c, 5);
  const ContextSet xs = SampleContexts(*env, 3, 9);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    std::vector<double> s(env->n_actions());
    for (std::size_t a = 0; a < s.size(); ++a) {
      s[a] = c.beta * env->ExpectedReward(xs[i], a) + env->LoggingPerturbation(xs[i], a);
      CHECK(std::abs(env->LoggingPerturbation(xs[i], a)) <= 2.0);
    }
    const auto expect = Softmax(s);
    const auto got = env->LoggingProbs(xs[i]);
    for (std::size_t a = 0; a < s.size(); ++a) CHECK(got[a] == doctest::Approx(expect[a]).epsilon(1e-12));
  }
}

TEST_CASE("environments are reproducible from the seed") {
  CHECK(*BuildSyntheticEnv(Small(), 8) == *BuildSyntheticEnv(Small(), 8));
  CHECK_FALSE(*BuildSyntheticEnv(Small(), 8) == *BuildSyntheticEnv(Small(), 9));
}

TEST_CASE("clusters are balanced and nonempty") {
  auto env = BuildSyntheticEnv(Small(), 1);
  for (std::size_t c = 0; c < 5; ++c) CHECK(env->cluster_map().members(c).size() == 6);
}

TEST_CASE("invalid configurations are rejected") {
  EnvConfig c = Small();
  c.n_clusters = 31;
  CHECK_THROWS_AS(BuildSyntheticEnv(c, 0), Error);
  c = Small(ContextMode::kDiscrete);
  c.context_weights = {0.5, 0.5};
  CHECK_THROWS_AS(BuildSyntheticEnv(c, 0), Error);
}

TEST_CASE("discrete contexts follow their weights") {
  EnvConfig c = Small(ContextMode::kDiscrete);
  c.n_contexts = 3;
  c.context_weights = {0.2, 0.3, 0.5};
  auto env = BuildSyntheticEnv(c, 2);
  const ContextSet& law = env->contexts();
  CHECK(law.size() == 3);
  const ContextSet draws = SampleContexts(*env, 30000, 4);
  std::vector<double> freq(3, 0.0);
  for (std::size_t i = 0; i < draws.size(); ++i) {
    for (std::size_t k = 0; k < 3; ++k) {
      if (HashBits(draws[i]) == HashBits(law[k])) freq[k] += 1.0 / draws.size();
    }
  }
  for (std::size_t k = 0; k < 3; ++k) {
    const double w = c.context_weights[k];
    CHECK(std::abs(freq[k] - w) <= 4 * std::sqrt(w * (1 - w) / 30000));
  }
  CHECK_THROWS_AS(BuildSyntheticEnv(Small(), 2)->contexts(), Error);
}

TEST_CASE("bernoulli rewards are clipped probabilities") {
  EnvConfig c = Small();
  c.reward_noise = RewardNoise::kBernoulli;
  auto env = BuildSyntheticEnv(c, 6);
  const ContextSet xs = SampleContexts(*env, 10, 3);
  Rng rng = MakeRng({1});
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t a = 0; a < env->n_actions(); ++a) {
      const double q = env->ExpectedReward(xs[i], a);
      CHECK(q >= kBernoulliClip);
      CHECK(q <= 1 - kBernoulliClip);
      CHECK(env->RewardVariance(xs[i], a) == doctest::Approx(q * (1 - q)));
      const double r = env->SampleReward(xs[i], a, rng);
      CHECK((r == 0.0 || r == 1.0));
    }
  }
}

TEST_CASE("support restriction keeps every cluster supported") {
  auto env = BuildSyntheticEnv(Small(), 7);
  auto restricted = RestrictSupport(*env, 20, 3);
  std::size_t removed = 0;
  for (char s : restricted->supported()) removed += s == 0;
  CHECK(removed == 20);
  for (std::size_t c = 0; c < 5; ++c) {
    bool any = false;
    for (std::size_t a : env->cluster_map().members(c)) any = any || restricted->supported()[a];
    CHECK(any);
  }
  const ContextSet xs = SampleContexts(*restricted, 4, 1);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto p = restricted->LoggingProbs(xs[i]);
    CHECK(IsSimplex(p));
    for (std::size_t a = 0; a < p.size(); ++a) {
      if (!restricted->supported()[a]) CHECK(p[a] == 0.0);
    }
  }
  CHECK_THROWS_AS(RestrictSupport(*env, 26, 3), Error);  // at most 25 while keeping 5 clusters
  const std::vector<std::size_t> whole = {env->cluster_map().members(0).begin(),
                                          env->cluster_map().members(0).end()};
  CHECK_THROWS_AS(WithUnsupportedActions(*env, whole), Error);
}

TEST_CASE("policy values on a hand instance") {
  ContextSet xs;
  xs.dim = 1;
  xs.values = {0.0};
  xs.weights = {1.0};
  const TabularEnvironment env(xs, ClusterMap({0, 0, 1, 1}, 2), {4, 2, 5, 0},
                               {0.25, 0.25, 0.25, 0.25}, {1, 1, 1, 1});
  const ActionPolicy pick2 = [](std::span<const double>, std::span<double> p) {
    std::fill(p.begin(), p.end(), 0.0);
    p[2] = 1.0;
  };
  CHECK(PolicyValue(env, pick2, xs) == 5.0);
  CHECK(LoggingPolicyValue(env, xs) == 2.75);
}

TEST_CASE("logged data carries the logging propensities") {
  auto env = BuildSyntheticEnv(Small(), 2);
  const LoggedDataset data = SampleLoggedData(*env, 60, 5, 3);
  CHECK(data.size() == 60);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto p = env->LoggingProbs(data.context(i));
    CHECK(data.propensity(i) == p[data.action(i)]);
    CHECK(data.cluster(i) == env->cluster_map().cluster_of(data.action(i)));
    if (i % 3 != 0) CHECK(HashBits(data.context(i)) == HashBits(data.context(i - 1)));
  }
  const LoggedDataset again = SampleLoggedData(*env, 60, 5, 3);
  CHECK(std::equal(data.rewards().begin(), data.rewards().end(), again.rewards().begin()));
}

TEST_CASE("dataset csv round trip is exact") {
  auto env = BuildSyntheticEnv(Small(), 2);
  const LoggedDataset data = SampleLoggedData(*env, 25, 1);
  std::stringstream s;
  WriteDatasetCsv(data, s);
  const LoggedDataset back = ReadDatasetCsv(s, env->cluster_map());
  REQUIRE(back.size() == data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    CHECK(back.action(i) == data.action(i));
    CHECK(back.reward(i) == data.reward(i));
    CHECK(back.propensity(i) == data.propensity(i));
    CHECK(HashBits(back.context(i)) == HashBits(data.context(i)));
  }
}

TEST_CASE("cluster propensities sum logging mass over the cluster") {
  auto env = BuildSyntheticEnv(Small(), 2);
  const LoggedDataset data = SampleLoggedData(*env, 10, 1);
  const ClusterMap& cm = env->cluster_map();
  const auto cp = ClusterPropensities(*env, data, cm);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto m = ClusterMarginal(env->LoggingProbs(data.context(i)), cm);
    CHECK(cp[i] == doctest::Approx(m[data.cluster(i)]).epsilon(1e-14));
  }
}
