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
#include "potec/reward_models.hpp"

using namespace potec;

namespace {

RegressorPtr Table(std::vector<double> v) {
  const std::size_t n = v.size();
  return std::make_shared<FunctionRegressor>(
      n, [v = std::move(v)](std::span<const double>, std::size_t a) { return v[a]; });
}

double Mse(const LoggedDataset& data, const RewardRegressor& model) {
  double s = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double e = data.reward(i) - model.Predict(data.context(i), data.action(i));
    s += e * e;
  }
  return s / data.size();
}

std::shared_ptr<SyntheticEnvironment> Env(double sigma) {
  EnvConfig c;
  c.n_actions = 12;
  c.n_clusters = 3;
  c.context_dim = 3;
  c.reward_sigma = sigma;
  return BuildSyntheticEnv(c, 11);
}

}  // namespace

TEST_CASE("pairs come from identical contexts within a cluster") {
  const ClusterMap cm({0, 0, 1, 1}, 2);
  LoggedDataset data(1, cm);
  const std::vector<double> x0{0.5}, x1{-0.5};
  data.Add(x0, 1, 10.0, 0.2);
  data.Add(x0, 0, 20.0, 0.2);
  data.Add(x0, 2, 30.0, 0.2);  // other cluster
  data.Add(x0, 1, 40.0, 0.2);
  data.Add(x1, 0, 50.0, 0.2);  // other context
  data.Add(x0, 0, 60.0, 0.2);
  const PairDataset pairs = BuildPairDataset(data, cm);
  // records (0,1), (1,3), (3,5), (0,5) are cross-action pairs in cluster 0;
  // (0,3) and (1,5) repeat one action
  REQUIRE(pairs.size() == 4);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    CHECK(pairs.a(i) == 0);
    CHECK(pairs.b(i) == 1);
    CHECK(pairs.context(i)[0] == 0.5);
  }
  CHECK(pairs.r_a(0) == 20.0);
  CHECK(pairs.r_b(0) == 10.0);

  std::stringstream s;
  WritePairCsv(pairs, s);
  std::string header;
  std::getline(s, header);
  CHECK(header == "ctx_0,a,b,r_a,r_b");
}

TEST_CASE("pair records reject repeated actions") {
  PairDataset pairs(1);
  const std::vector<double> x{0.0};
  CHECK_THROWS_AS(pairs.Add(x, 2, 2, 0.0, 0.0), Error);
}

TEST_CASE("pairwise fit needs pairs") {
  try {
    FitPairwise(PairDataset(3), 12, RegressionConfig{});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kConfig);
  }
}

TEST_CASE("pairwise regression learns within-cluster differences") {
  auto env = Env(0.0);
  const LoggedDataset data = SampleLoggedData(*env, 6000, 3, 6);
  const PairDataset pairs = BuildPairDataset(data, env->cluster_map());
  REQUIRE(pairs.size() > 1000);
  RegressionConfig cfg;
  cfg.epochs = 60;
  cfg.seed = 1;
  const RegressorPtr h = FitPairwise(pairs, env->n_actions(), cfg);
  const ContextSet probe = SampleContexts(*env, 50, 4);
  const double fitted = LocalCorrectnessResidual(*h, *env, probe, env->cluster_map());
  const double zero = LocalCorrectnessResidual(*Table(std::vector<double>(12, 0.0)), *env, probe,
                                               env->cluster_map());
  CHECK(fitted < 0.5 * zero);
}

TEST_CASE("baseline and conventional fits reduce squared error") {
  auto env = Env(0.5);
  const LoggedDataset data = SampleLoggedData(*env, 3000, 5, 2);
  RegressionConfig cfg;
  cfg.epochs = 20;
  cfg.seed = 2;
  double mean = 0.0;
  for (double r : data.rewards()) mean += r / data.size();
  const double constant = Mse(data, *Table(std::vector<double>(12, mean)));
  const RegressorPtr q = FitConventional(data, cfg);
  CHECK(Mse(data, *q) < 0.8 * constant);

  const RegressorPtr zero_h = Table(std::vector<double>(12, 0.0));
  const RegressorPtr g = FitBaseline(data, *zero_h, env->cluster_map(), cfg);
  CHECK(Mse(data, *g) < constant);
  // g depends on the action only through its cluster
  const auto row = g->PredictAll(data.context(0));
  for (std::size_t c = 0; c < 3; ++c) {
    const auto m = env->cluster_map().members(c);
    for (std::size_t a : m) CHECK(row[a] == row[m[0]]);
  }
}

TEST_CASE("fits are reproducible from the seed") {
  auto env = Env(0.5);
  const LoggedDataset data = SampleLoggedData(*env, 500, 5, 2);
  RegressionConfig cfg;
  cfg.epochs = 3;
  cfg.seed = 4;
  const auto a = FitConventional(data, cfg)->PredictAll(data.context(0));
  const auto b = FitConventional(data, cfg)->PredictAll(data.context(0));
  CHECK(a == b);
}

TEST_CASE("cluster expectation of a model under the second stage") {
  const ClusterMap cm({0, 0, 1, 1}, 2);
  const RegressorPtr f = Table({3, 0, 1, 0});
  const SecondStagePolicy argmax(f, cm);
  const UniformSecondStage uniform(cm);
  const std::vector<double> x{0.0};
  CHECK(FClusterExpectation(*f, argmax, x, 0) == 3.0);
  CHECK(FClusterExpectation(*f, argmax, x, 1) == 1.0);
  CHECK(FClusterExpectation(*f, uniform, x, 0) == 1.5);
}

TEST_CASE("local correctness residual on fixtures") {
  ContextSet xs;
  xs.dim = 1;
  xs.values = {0.0};
  xs.weights = {1.0};
  const ClusterMap cm({0, 0, 1, 1}, 2);
  const TabularEnvironment env(xs, cm, {4, 1, 3, 2}, std::vector<double>(4, 0.25),
                               std::vector<double>(4, 1.0));
  for (const auto& f : {std::vector<double>{3, 0, 1, 0}, std::vector<double>{50, 47, -30, -31},
                        std::vector<double>{4, 1, 3, 2}}) {
    CHECK(LocalCorrectnessResidual(*Table(f), env, xs, cm) == 0.0);
  }
  CHECK(LocalCorrectnessResidual(*Table({4, 1, 3, 3}), env, xs, cm) == 1.0);
}
