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
#include <random>
#include <sstream>
#include <vector>

#include "potec/environment.hpp"
#include "potec/error.hpp"
#include "potec/estimators.hpp"
#include "potec/oracle.hpp"
#include "potec/policy.hpp"
#include "potec/regressor.hpp"
#include "potec/reward_models.hpp"
#include "potec/verify.hpp"

using namespace potec;

namespace {

double MaxAbs(const GradientVector& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double MaxAbsDiff(const GradientVector& a, const GradientVector& b) {
  REQUIRE(a.size() == b.size());
  double d = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) d = std::max(d, std::abs(a[j] - b[j]));
  return d;
}

double RelGap(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

// Two contexts, four actions in two clusters, random tables.
std::shared_ptr<TabularEnvironment> Tiny(std::uint64_t seed, double variance_scale = 1.0) {
  Rng rng = MakeRng({seed, 0x74696e79});
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ContextSet xs;
  xs.dim = 1;
  xs.values = {-1.0, 1.0};
  xs.weights = {0.4, 0.6};
  std::vector<double> q(8), logging(8), var(8);
  for (std::size_t k = 0; k < 8; ++k) {
    q[k] = 4.0 * u(rng) - 2.0;
    logging[k] = 0.2 + u(rng);
    var[k] = variance_scale * (0.5 + u(rng));
  }
  for (std::size_t i = 0; i < 2; ++i) {
    double s = 0.0;
    for (std::size_t a = 0; a < 4; ++a) s += logging[i * 4 + a];
    for (std::size_t a = 0; a < 4; ++a) logging[i * 4 + a] /= s;
  }
  return std::make_shared<TabularEnvironment>(xs, ClusterMap({0, 0, 1, 1}, 2), q, logging, var);
}

struct Setup {
  EnvironmentPtr env;
  RegressorPtr f;
  SoftmaxPolicy first;
  SecondStagePtr second;
};

Setup TwoStage(EnvironmentPtr env, double sigma_a, std::uint64_t seed, double sigma_c = 1.0) {
  Setup s{env, MakeNoisyRegressionModel(env, sigma_c, sigma_a, seed), {}, {}};
  s.first = SoftmaxPolicy::Initialized(env->context_dim(), {}, env->cluster_map().n_clusters(),
                                       OutcomeSpace::kClusters, seed + 1);
  s.second = std::make_shared<SecondStagePolicy>(s.f, env->cluster_map());
  return s;
}

std::shared_ptr<SyntheticEnvironment> RandomDiscrete(std::uint64_t seed) {
  Rng rng = MakeRng({seed, 0x64697363});
  EnvConfig c;
  c.n_actions = 4 + rng() % 12;
  c.n_clusters = 2 + rng() % 3;
  c.context_dim = 1 + rng() % 3;
  c.action_feature_dim = 2;
  c.context_mode = ContextMode::kDiscrete;
  c.n_contexts = 2 + rng() % 3;
  c.beta = -1.0 + 2.0 * (rng() % 3) / 2.0;
  return BuildSyntheticEnv(c, rng());
}

}  // namespace

TEST_CASE("enumeration of ips matches the true action gradient") {
  auto env = OracleEnvironment(1);
  const SoftmaxPolicy policy =
      SoftmaxPolicy::Initialized(env->context_dim(), {3}, env->n_actions(), OutcomeSpace::kActions, 2);
  const Moments m = EnumerateSingleRecord(
      *env, [&](const LoggedDataset& d) { return IpsGradient(d, policy); });
  const GradientVector truth = TrueActionGradient(*env, policy, env->contexts());
  CHECK(MaxAbsDiff(m.mean, truth) <= 1e-10);
  CHECK(m.variance_trace > 0.0);
}

TEST_CASE("closed-form bias vanishes under local correctness") {
  for (std::uint64_t t = 0; t < 50; ++t) {
    auto env = RandomDiscrete(t);
    const Setup s = TwoStage(env, 0.0, 100 + t);
    REQUIRE(LocalCorrectnessResidual(*s.f, *env, env->contexts(), env->cluster_map()) <= 1e-12);
    const GradientVector bias = PotecBiasClosedForm(*env, OverallPolicy(s.first, s.second), *s.f);
    CHECK(MaxAbs(bias) <= 1e-12);
  }
}

TEST_CASE("closed-form bias equals the enumerated bias") {
  for (std::uint64_t t = 0; t < 10; ++t) {
    auto env = RandomDiscrete(1000 + t);
    const Setup s = TwoStage(env, 0.7, 200 + t);
    const ClusterMap& cm = env->cluster_map();
    const GradientVector closed = PotecBiasClosedForm(*env, OverallPolicy(s.first, s.second), *s.f);
    const Moments m = EnumerateSingleRecord(*env, PotecEstimatorFn(*env, s.first, s.second, s.f, cm));
    const GradientVector truth = TrueFirstStageGradient(*env, s.first, *s.second, env->contexts());
    GradientVector exact(truth.size());
    for (std::size_t j = 0; j < truth.size(); ++j) exact[j] = m.mean[j] - truth[j];
    CHECK(MaxAbsDiff(closed, exact) <= 1e-10);
  }
}

TEST_CASE("bias is zero when the target equals the logging policy") {
  ContextSet xs;
  xs.dim = 1;
  xs.values = {0.0};
  xs.weights = {1.0};
  const ClusterMap cm({0, 0, 1, 1}, 2);
  auto env = std::make_shared<TabularEnvironment>(xs, cm, std::vector<double>{1, 2, 3, 4},
                                                  std::vector<double>(4, 0.25),
                                                  std::vector<double>(4, 1.0));
  const SoftmaxPolicy first(Mlp({1, 2}), OutcomeSpace::kClusters);
  const OverallPolicy overall(first, std::make_shared<UniformSecondStage>(cm));
  const RegressorPtr wrong = std::make_shared<FunctionRegressor>(
      4, [](std::span<const double>, std::size_t a) { return a == 1 ? 9.0 : 0.0; });
  CHECK(MaxAbs(PotecBiasClosedForm(*env, overall, *wrong)) == 0.0);
}

TEST_CASE("closed-form variances equal the enumerated variances") {
  for (std::uint64_t t = 0; t < 10; ++t) {
    auto env = RandomDiscrete(2000 + t);
    const Setup s = TwoStage(env, 0.0, 300 + t);
    const ClusterMap& cm = env->cluster_map();
    const VarianceTerms potec = PotecVarianceClosedForm(*env, OverallPolicy(s.first, s.second), *s.f);
    CHECK(potec.hypothesis_holds);
    const Moments m = EnumerateSingleRecord(*env, PotecEstimatorFn(*env, s.first, s.second, s.f, cm));
    CHECK(RelGap(potec.total(), m.variance_trace) <= 1e-10);

    const SoftmaxPolicy policy = SoftmaxPolicy::Initialized(env->context_dim(), {}, env->n_actions(),
                                                            OutcomeSpace::kActions, 400 + t);
    const RegressorPtr q_hat = MakeNoisyRegressionModel(env, 0.5, 0.5, 500 + t);
    const VarianceTerms dr = DrVarianceClosedForm(*env, policy, *q_hat);
    const Moments md = EnumerateSingleRecord(
        *env, [&](const LoggedDataset& d) { return DrGradient(d, policy, *q_hat); });
    CHECK(RelGap(dr.total(), md.variance_trace) <= 1e-10);
  }
}

TEST_CASE("dr variance with a zero model is the ips variance") {
  auto env = OracleEnvironment(3);
  const SoftmaxPolicy policy =
      SoftmaxPolicy::Initialized(env->context_dim(), {}, env->n_actions(), OutcomeSpace::kActions, 4);
  const RegressorPtr zero = std::make_shared<FunctionRegressor>(
      env->n_actions(), [](std::span<const double>, std::size_t) { return 0.0; });
  const VarianceTerms closed = DrVarianceClosedForm(*env, policy, *zero);
  const Moments m = EnumerateSingleRecord(
      *env, [&](const LoggedDataset& d) { return IpsGradient(d, policy); });
  CHECK(RelGap(closed.total(), m.variance_trace) <= 1e-10);
}

TEST_CASE("exact dr model removes the residual term") {
  auto env = OracleEnvironment(5);
  const SoftmaxPolicy policy =
      SoftmaxPolicy::Initialized(env->context_dim(), {}, env->n_actions(), OutcomeSpace::kActions, 6);
  const VarianceTerms t = DrVarianceClosedForm(*env, policy, *ExactModel(env));
  CHECK(std::abs(t.residual) <= 1e-12);
  CHECK(t.noise > 0.0);
}

TEST_CASE("reward variance scales only the noise term") {
  for (double k : {2.0, 5.0}) {
    auto base = Tiny(9, 1.0);
    auto scaled = Tiny(9, k);
    const Setup s = TwoStage(base, 0.0, 11);
    const OverallPolicy overall(s.first, s.second);
    const VarianceTerms a = PotecVarianceClosedForm(*base, overall, *s.f);
    const VarianceTerms b = PotecVarianceClosedForm(*scaled, overall, *s.f);
    CHECK(b.noise == doctest::Approx(k * a.noise).epsilon(1e-12));
    CHECK(b.residual == doctest::Approx(a.residual).epsilon(1e-12));
    CHECK(b.context == doctest::Approx(a.context).epsilon(1e-12));

    const SoftmaxPolicy policy(Mlp::Initialized({1, 4}, 12), OutcomeSpace::kActions);
    const RegressorPtr q_hat = MakeNoisyRegressionModel(base, 0.3, 0.3, 13);
    const VarianceTerms c = DrVarianceClosedForm(*base, policy, *q_hat);
    const VarianceTerms d = DrVarianceClosedForm(*scaled, policy, *q_hat);
    CHECK(d.noise == doctest::Approx(k * c.noise).epsilon(1e-12));
    CHECK(d.residual == doctest::Approx(c.residual).epsilon(1e-12));
    CHECK(d.context == doctest::Approx(c.context).epsilon(1e-12));
  }
}

TEST_CASE("deterministic rewards and an exact model leave the context term") {
  ContextSet xs;
  xs.dim = 1;
  xs.values = {-1.0, 1.0};
  xs.weights = {0.5, 0.5};
  const ClusterMap cm({0, 0, 1, 1}, 2);
  auto env = std::make_shared<TabularEnvironment>(
      xs, cm, std::vector<double>{1, 2, 3, 4, 2, 0, 1, 5}, std::vector<double>(8, 0.25),
      std::vector<double>(8, 0.0));
  const Setup s = TwoStage(env, 0.0, 21, 0.0);
  const VarianceTerms t = PotecVarianceClosedForm(*env, OverallPolicy(s.first, s.second), *s.f);
  CHECK(t.noise == 0.0);
  CHECK(std::abs(t.residual) <= 1e-12);
  // direct V_x E_pi[q s]
  std::vector<GradientVector> per_x;
  for (std::size_t i = 0; i < 2; ++i) {
    ContextSet one;
    one.dim = 1;
    one.values = {xs.values[i]};
    one.weights = {1.0};
    per_x.push_back(TrueFirstStageGradient(*env, s.first, *s.second, one));
  }
  double direct = 0.0;
  for (std::size_t j = 0; j < per_x[0].size(); ++j) {
    const double mean = 0.5 * (per_x[0][j] + per_x[1][j]);
    direct += 0.5 * std::pow(per_x[0][j] - mean, 2) + 0.5 * std::pow(per_x[1][j] - mean, 2);
  }
  CHECK(t.context == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("single cluster gives zero variance") {
  ContextSet xs;
  xs.dim = 1;
  xs.values = {0.0};
  xs.weights = {1.0};
  const ClusterMap one = ClusterMap::OneCluster(3);
  auto env = std::make_shared<TabularEnvironment>(xs, one, std::vector<double>{1, 2, 3},
                                                  std::vector<double>(3, 1.0 / 3),
                                                  std::vector<double>(3, 1.0));
  const SoftmaxPolicy first(Mlp({1, 1}), OutcomeSpace::kClusters);
  const OverallPolicy overall(first, std::make_shared<UniformSecondStage>(one));
  const RegressorPtr f = ExactModel(env);
  CHECK(PotecVarianceClosedForm(*env, overall, *f).total() == 0.0);
}

TEST_CASE("oracles need a discrete context law") {
  EnvConfig c;
  c.n_actions = 6;
  c.n_clusters = 2;
  c.context_dim = 2;
  auto env = BuildSyntheticEnv(c, 1);
  const Setup s = TwoStage(env, 0.0, 2);
  try {
    PotecBiasClosedForm(*env, OverallPolicy(s.first, s.second), *s.f);
    FAIL("expected an unsupported-mode error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kUnsupported);
  }
  CHECK_THROWS_AS(EnumerateSingleRecord(*env, [](const LoggedDataset&) { return GradientVector{}; }),
                  Error);
}

TEST_CASE("monte carlo of a constant estimator has zero variance") {
  auto env = OracleEnvironment(2);
  const GradientVector constant{1.0, -2.0, 0.5};
  const BiasVarianceReport r = MonteCarloMoments(
      *env, [&](const LoggedDataset&) { return constant; }, 5, 100, 3, constant);
  CHECK(r.mc_variance_trace == 0.0);
  CHECK(MaxAbs(r.mc_bias) == 0.0);
  CHECK(r.n_replications == 100);
}

TEST_CASE("monte carlo ips is unbiased within three standard errors") {
  auto env = OracleEnvironment(4);
  const SoftmaxPolicy policy =
      SoftmaxPolicy::Initialized(env->context_dim(), {}, env->n_actions(), OutcomeSpace::kActions, 5);
  const GradientVector truth = TrueActionGradient(*env, policy, env->contexts());
  const BiasVarianceReport r = MonteCarloMoments(
      *env, [&](const LoggedDataset& d) { return IpsGradient(d, policy); }, 20, 20000, 6, truth);
  const std::vector<double> zero(truth.size(), 0.0);
  CHECK(MaxStandardizedDeviation(r, zero) <= 3.0);
  CHECK(std::all_of(r.mc_std_errors.begin(), r.mc_std_errors.end(), [](double s) { return s > 0; }));
}

TEST_CASE("monte carlo is deterministic in the seed") {
  auto env = OracleEnvironment(4);
  const SoftmaxPolicy policy =
      SoftmaxPolicy::Initialized(env->context_dim(), {}, env->n_actions(), OutcomeSpace::kActions, 5);
  const GradientFn fn = [&](const LoggedDataset& d) { return IpsGradient(d, policy); };
  const BiasVarianceReport a = MonteCarloMoments(*env, fn, 10, 500, 8);
  const BiasVarianceReport b = MonteCarloMoments(*env, fn, 10, 500, 8);
  CHECK(a.mc_mean == b.mc_mean);
  CHECK(a.mc_variance_trace == b.mc_variance_trace);
  std::stringstream sa, sb;
  WriteReportCsv(a, sa);
  WriteReportCsv(b, sb);
  CHECK(sa.str() == sb.str());
  std::stringstream summary;
  WriteReportSummary(a, summary);
  CHECK_FALSE(summary.str().empty());
}
