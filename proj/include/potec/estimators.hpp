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

#ifndef POTEC_ESTIMATORS_HPP
#define POTEC_ESTIMATORS_HPP

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "potec/cluster_map.hpp"
#include "potec/dataset.hpp"
#include "potec/environment.hpp"
#include "potec/mlp.hpp"
#include "potec/policy.hpp"
#include "potec/regressor.hpp"

namespace potec {

// Policy-gradient estimators. Each returns the plain average over the
// selected records (all records when `records` is empty); sums run in record
// order so results are bit-stable.

enum class EstimatorKind { kIps, kDr, kSips, kPotec, kPotecOneStage };

const char* EstimatorName(EstimatorKind kind);
std::optional<EstimatorKind> ParseEstimator(const std::string& name);
// Outcome space of the policy an estimator differentiates.
OutcomeSpace EstimatorSpace(EstimatorKind kind);

// Phi(x): the top ceil(fraction |A|) actions by a ranking model (ties to the
// lowest index), or the actions whose ranking value exceeds a threshold.
class ActionSelector {
 public:
  static ActionSelector TopFraction(RegressorPtr ranker, double fraction);
  static ActionSelector Threshold(RegressorPtr ranker, double threshold);

  // mask[a] != 0 iff a is in Phi(x).
  std::vector<char> Mask(std::span<const double> x) const;
  bool Contains(std::span<const double> x, std::size_t a) const;
  // |Phi(x)| in top-fraction mode.
  std::size_t size() const { return k_; }
  double fraction() const { return fraction_; }

 private:
  ActionSelector() = default;

  RegressorPtr ranker_;
  double fraction_ = 1.0;
  std::size_t k_ = 0;
  bool threshold_mode_ = false;
  double threshold_ = 0.0;
};

// (1/n) sum w(x,a) r s(x,a), w = pi(a|x) / pi_0(a|x).
GradientVector IpsGradient(const LoggedDataset& data, const SoftmaxPolicy& policy,
                           std::span<const std::size_t> records = {});

// (1/n) sum [w (r - q_hat(x,a)) s(x,a) + sum_a' pi(a'|x) q_hat(x,a') s(x,a')].
GradientVector DrGradient(const LoggedDataset& data, const SoftmaxPolicy& policy,
                          const RewardRegressor& q_hat, std::span<const std::size_t> records = {});

// IPS with pi renormalized over Phi(x); records outside Phi(x) contribute 0.
GradientVector SipsGradient(const LoggedDataset& data, const SoftmaxPolicy& policy,
                            const ActionSelector& selector,
                            std::span<const std::size_t> records = {});

// (1/n) sum [w(x,c_a) (r - f(x,a)) s(x,c_a) + sum_c pi_1(c|x) f^{pi_2}(x,c) s(x,c)]
// with w(x,c) = pi_1(c|x) / pi_0(c|x). cluster_propensities[i] = pi_0(c_{a_i}|x_i)
// under cm, aligned with the dataset records.
GradientVector PotecGradient(const LoggedDataset& data, const SoftmaxPolicy& first,
                             const SecondStageRule& second, const RewardRegressor& f,
                             const ClusterMap& cm, std::span<const double> cluster_propensities,
                             std::span<const std::size_t> records = {});

// One-stage variant over an action policy:
// (1/n) sum [w(x,c_a) (r - f(x,a)) s(x,a) + sum_a' pi(a'|x) f(x,a') s(x,a')]
// with w(x,c) = pi(c|x) / pi_0(c|x) from the cluster marginal of pi.
GradientVector PotecOneStageGradient(const LoggedDataset& data, const SoftmaxPolicy& policy,
                                     const RewardRegressor& f, const ClusterMap& cm,
                                     std::span<const double> cluster_propensities,
                                     std::span<const std::size_t> records = {});

// sum_x w_x sum_c pi_1(c|x) q^{pi_2}(x,c) s(x,c), exact in q.
GradientVector TrueFirstStageGradient(const Environment& env, const SoftmaxPolicy& first,
                                      const SecondStageRule& second, const ContextSet& contexts);

// sum_x w_x sum_a pi(a|x) q(x,a) s(x,a), exact in q.
GradientVector TrueActionGradient(const Environment& env, const SoftmaxPolicy& policy,
                                  const ContextSet& contexts);

}  // namespace potec

#endif  // POTEC_ESTIMATORS_HPP
