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

#ifndef POTEC_ORACLE_HPP
#define POTEC_ORACLE_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "potec/dataset.hpp"
#include "potec/environment.hpp"
#include "potec/estimators.hpp"
#include "potec/mlp.hpp"
#include "potec/policy.hpp"
#include "potec/regressor.hpp"

namespace potec {

// Exact bias and variance of the estimators on discrete-context environments,
// plus a Monte-Carlo harness. Every closed form assumes a single record (n = 1)
// and returns n tr(Cov) for variances.

// Gradient estimate computed from a dataset.
using GradientFn = std::function<GradientVector(const LoggedDataset&)>;

struct Moments {
  GradientVector mean;
  double second_moment_trace = 0.0;  // E |g|^2
  double variance_trace = 0.0;       // E |g|^2 - |E g|^2
};

// Single-record expectation over the joint law of (x, a, r). The estimator is
// affine in r, so evaluating it at r = 0 and r = 1 for each (x, a) yields
// the exact mean and second moment for any reward law with the environment's
// mean and variance.
Moments EnumerateSingleRecord(const Environment& env, const GradientFn& estimator);

// Bias of the two-stage estimator:
//   E_{x, c ~ pi_0(c|x)} sum_{a<b in c} pi_0(a|x,c) pi_0(b|x,c)
//       (Delta_q - Delta_f)(x,a,b) (w(x,b) - w(x,a)) s(x,c)
// with w(x,a) = pi(a|x) / pi_0(a|x) for the overall policy.
GradientVector PotecBiasClosedForm(const Environment& env, const OverallPolicy& overall,
                                   const RewardRegressor& f);

struct VarianceTerms {
  double noise = 0.0;       // E[(w s)^2 sigma^2]
  double residual = 0.0;    // E_x V_{pi_0}(w (q - f) s)
  double context = 0.0;     // V_x E_pi[q s]
  double total() const { return noise + residual + context; }
  // False when the formula's hypothesis (local correctness) fails; the value
  // is then not guaranteed to match the estimator's variance.
  bool hypothesis_holds = true;
};

// Three-term variance of the two-stage estimator.
VarianceTerms PotecVarianceClosedForm(const Environment& env, const OverallPolicy& overall,
                                      const RewardRegressor& f);

// Three-term variance of the doubly robust estimator; q_hat = 0 gives IPS.
VarianceTerms DrVarianceClosedForm(const Environment& env, const SoftmaxPolicy& policy,
                                   const RewardRegressor& q_hat);

struct BiasVarianceReport {
  GradientVector closed_form_bias;
  double closed_form_variance_trace = 0.0;
  GradientVector mc_mean;
  GradientVector mc_bias;  // mc_mean - truth
  double mc_variance_trace = 0.0;  // n tr(Cov) of the size-n estimate
  std::vector<double> mc_std_errors;  // of mc_mean, per component
  std::size_t n_replications = 0;
  std::size_t n_per_replication = 0;
};

// Independent replications of dataset sampling and estimation. truth may be
// empty, in which case mc_bias is left empty.
BiasVarianceReport MonteCarloMoments(const Environment& env, const GradientFn& estimator,
                                     std::size_t n_per_replication, std::size_t n_replications,
                                     std::uint64_t seed, std::span<const double> truth = {});

// Largest |mc_bias_j - expected_j| / se_j over components (0/0 counts as 0).
double MaxStandardizedDeviation(const BiasVarianceReport& report,
                                std::span<const double> expected_bias);

void WriteReportCsv(const BiasVarianceReport& report, std::ostream& out);
void WriteReportSummary(const BiasVarianceReport& report, std::ostream& out);

// q^{pi_2}(x, c) = E_{pi_2(a|x,c)}[q(x, a)].
double ClusterValue(const Environment& env, const SecondStageRule& second,
                    std::span<const double> x, std::size_t c);

// Helper for tests: POTEC estimator closure that recomputes cluster
// propensities from env under cm.
GradientFn PotecEstimatorFn(const Environment& env, const SoftmaxPolicy& first,
                            SecondStagePtr second, RegressorPtr f, const ClusterMap& cm);

}  // namespace potec

#endif  // POTEC_ORACLE_HPP
