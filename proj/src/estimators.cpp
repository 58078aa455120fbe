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

#include "potec/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "potec/error.hpp"

namespace potec {

const char* EstimatorName(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::kIps: return "ips";
    case EstimatorKind::kDr: return "dr";
    case EstimatorKind::kSips: return "sips";
    case EstimatorKind::kPotec: return "potec";
    case EstimatorKind::kPotecOneStage: return "potec1";
  }
  return "unknown";
}

std::optional<EstimatorKind> ParseEstimator(const std::string& name) {
  for (EstimatorKind k : {EstimatorKind::kIps, EstimatorKind::kDr, EstimatorKind::kSips,
                          EstimatorKind::kPotec, EstimatorKind::kPotecOneStage}) {
    if (name == EstimatorName(k)) return k;
  }
  return std::nullopt;
}

OutcomeSpace EstimatorSpace(EstimatorKind kind) {
  return kind == EstimatorKind::kPotec ? OutcomeSpace::kClusters : OutcomeSpace::kActions;
}

// ---------------------------------------------------------------------------

ActionSelector ActionSelector::TopFraction(RegressorPtr ranker, double fraction) {
  Require(ranker != nullptr, ErrorCode::kConfig, "action selector needs a ranking model");
  Require(fraction > 0.0 && fraction <= 1.0, ErrorCode::kConfig,
          "action selector fraction must be in (0, 1]");
  ActionSelector s;
  s.fraction_ = fraction;
  const auto n = static_cast<double>(ranker->n_actions());
  s.k_ = std::min(ranker->n_actions(), static_cast<std::size_t>(std::ceil(fraction * n - 1e-9)));
  s.k_ = std::max<std::size_t>(s.k_, 1);
  s.ranker_ = std::move(ranker);
  return s;
}

ActionSelector ActionSelector::Threshold(RegressorPtr ranker, double threshold) {
  Require(ranker != nullptr, ErrorCode::kConfig, "action selector needs a ranking model");
  ActionSelector s;
  s.ranker_ = std::move(ranker);
  s.threshold_mode_ = true;
  s.threshold_ = threshold;
  s.k_ = s.ranker_->n_actions();
  return s;
}

std::vector<char> ActionSelector::Mask(std::span<const double> x) const {
  const std::size_t n = ranker_->n_actions();
  if (!threshold_mode_ && k_ == n) return std::vector<char>(n, 1);
  const std::vector<double> v = ranker_->PredictAll(x);
  std::vector<char> mask(n, 0);
  if (threshold_mode_) {
    for (std::size_t a = 0; a < n; ++a) mask[a] = v[a] > threshold_;
    return mask;
  }
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k_ - 1), idx.end(),
                   [&](std::size_t a, std::size_t b) { return v[a] > v[b] || (v[a] == v[b] && a < b); });
  for (std::size_t i = 0; i < k_; ++i) mask[idx[i]] = 1;
  return mask;
}

bool ActionSelector::Contains(std::span<const double> x, std::size_t a) const {
  return Mask(x)[a] != 0;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<std::size_t> AllRecords(const LoggedDataset& data, std::span<const std::size_t> records) {
  if (!records.empty()) return {records.begin(), records.end()};
  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return all;
}

double Weight(double target, double logging, std::size_t record, const char* what) {
  if (logging == 0.0) {
    throw DivisionError(record, std::string("zero ") + what + " propensity at record " +
                                    std::to_string(record));
  }
  return target / logging;
}

void CheckPolicy(const LoggedDataset& data, const SoftmaxPolicy& policy, OutcomeSpace space,
                 std::size_t n_outcomes) {
  Require(policy.space() == space && policy.n_outcomes() == n_outcomes, ErrorCode::kContract,
          "policy outcome space does not match the estimator");
  Require(policy.context_dim() == data.context_dim(), ErrorCode::kContract,
          "policy input does not match the context dimension");
}

// Shared per-record loop for action policies. coeffs_of(i, x, probs, coeffs)
// fills the per-action coefficients of the record's score combination.
template <typename Fill>
GradientVector ActionLoop(const LoggedDataset& data, const SoftmaxPolicy& policy,
                          std::span<const std::size_t> records, Fill&& fill) {
  const std::size_t n_actions = data.cluster_map().n_actions();
  CheckPolicy(data, policy, OutcomeSpace::kActions, n_actions);
  const std::vector<std::size_t> idx = AllRecords(data, records);
  GradientVector grad(policy.n_params(), 0.0);
  if (idx.empty()) return grad;
  const double scale = 1.0 / static_cast<double>(idx.size());
  Mlp::Trace trace;
  std::vector<double> probs(n_actions), coeffs(n_actions);
  for (std::size_t i : idx) {
    const auto x = data.context(i);
    policy.Probs(x, trace, probs);
    std::fill(coeffs.begin(), coeffs.end(), 0.0);
    if (fill(i, x, probs, coeffs)) policy.AccumulateWeightedScore(trace, probs, coeffs, grad, scale);
  }
  return grad;
}

}  // namespace

GradientVector IpsGradient(const LoggedDataset& data, const SoftmaxPolicy& policy,
                           std::span<const std::size_t> records) {
  return ActionLoop(data, policy, records,
                    [&](std::size_t i, std::span<const double>, std::span<const double> probs,
                        std::span<double> coeffs) {
                      const std::size_t a = data.action(i);
                      coeffs[a] = Weight(probs[a], data.propensity(i), i, "action") * data.reward(i);
                      return true;
                    });
}

GradientVector DrGradient(const LoggedDataset& data, const SoftmaxPolicy& policy,
                          const RewardRegressor& q_hat, std::span<const std::size_t> records) {
  std::vector<double> q(q_hat.n_actions());
  return ActionLoop(data, policy, records,
                    [&](std::size_t i, std::span<const double> x, std::span<const double> probs,
                        std::span<double> coeffs) {
                      q_hat.PredictAll(x, q);
                      for (std::size_t b = 0; b < q.size(); ++b) coeffs[b] = probs[b] * q[b];
                      const std::size_t a = data.action(i);
                      coeffs[a] += Weight(probs[a], data.propensity(i), i, "action") *
                                   (data.reward(i) - q[a]);
                      return true;
                    });
}

GradientVector SipsGradient(const LoggedDataset& data, const SoftmaxPolicy& policy,
                            const ActionSelector& selector, std::span<const std::size_t> records) {
  return ActionLoop(data, policy, records,
                    [&](std::size_t i, std::span<const double> x, std::span<const double> probs,
                        std::span<double> coeffs) {
                      const std::size_t a = data.action(i);
                      const std::vector<char> mask = selector.Mask(x);
                      if (!mask[a]) return false;
                      double mass = 0.0;
                      std::size_t kept = 0;
                      for (std::size_t b = 0; b < probs.size(); ++b) {
                        if (mask[b]) {
                          mass += probs[b];
                          ++kept;
                        }
                      }
                      // Phi(x) = A leaves pi unchanged.
                      if (kept == probs.size()) mass = 1.0;
                      coeffs[a] = Weight(probs[a] / mass, data.propensity(i), i, "action") *
                                  data.reward(i);
                      return true;
                    });
}

GradientVector PotecGradient(const LoggedDataset& data, const SoftmaxPolicy& first,
                             const SecondStageRule& second, const RewardRegressor& f,
                             const ClusterMap& cm, std::span<const double> cluster_propensities,
                             std::span<const std::size_t> records) {
  CheckPolicy(data, first, OutcomeSpace::kClusters, cm.n_clusters());
  Require(cluster_propensities.size() == data.size(), ErrorCode::kContract,
          "cluster propensities must align with the dataset");
  Require(second.cluster_map() == cm, ErrorCode::kContract,
          "second stage must use the estimator's cluster map");
  const std::vector<std::size_t> idx = AllRecords(data, records);
  GradientVector grad(first.n_params(), 0.0);
  if (idx.empty()) return grad;
  const double scale = 1.0 / static_cast<double>(idx.size());
  Mlp::Trace trace;
  std::vector<double> probs(cm.n_clusters()), coeffs(cm.n_clusters());
  std::vector<double> fv(cm.n_actions()), cond(cm.n_actions());
  for (std::size_t i : idx) {
    const auto x = data.context(i);
    first.Probs(x, trace, probs);
    f.PredictAll(x, fv);
    second.Conditionals(x, cond);
    std::fill(coeffs.begin(), coeffs.end(), 0.0);
    for (std::size_t a = 0; a < cm.n_actions(); ++a) {
      if (cond[a] != 0.0) coeffs[cm.cluster_of(a)] += cond[a] * fv[a];
    }
    for (std::size_t c = 0; c < coeffs.size(); ++c) coeffs[c] *= probs[c];
    const std::size_t a = data.action(i);
    const std::size_t c = cm.cluster_of(a);
    coeffs[c] += Weight(probs[c], cluster_propensities[i], i, "cluster") * (data.reward(i) - fv[a]);
    first.AccumulateWeightedScore(trace, probs, coeffs, grad, scale);
  }
  return grad;
}

GradientVector PotecOneStageGradient(const LoggedDataset& data, const SoftmaxPolicy& policy,
                                     const RewardRegressor& f, const ClusterMap& cm,
                                     std::span<const double> cluster_propensities,
                                     std::span<const std::size_t> records) {
  Require(cluster_propensities.size() == data.size(), ErrorCode::kContract,
          "cluster propensities must align with the dataset");
  std::vector<double> fv(f.n_actions());
  return ActionLoop(data, policy, records,
                    [&](std::size_t i, std::span<const double> x, std::span<const double> probs,
                        std::span<double> coeffs) {
                      f.PredictAll(x, fv);
                      for (std::size_t b = 0; b < fv.size(); ++b) coeffs[b] = probs[b] * fv[b];
                      const std::size_t a = data.action(i);
                      const std::size_t c = cm.cluster_of(a);
                      double target = 0.0;
                      for (std::size_t b : cm.members(c)) target += probs[b];
                      coeffs[a] += Weight(target, cluster_propensities[i], i, "cluster") *
                                   (data.reward(i) - fv[a]);
                      return true;
                    });
}

GradientVector TrueFirstStageGradient(const Environment& env, const SoftmaxPolicy& first,
                                      const SecondStageRule& second, const ContextSet& contexts) {
  const ClusterMap& cm = second.cluster_map();
  Require(first.space() == OutcomeSpace::kClusters && first.n_outcomes() == cm.n_clusters(),
          ErrorCode::kContract, "first stage must be a policy over the second stage's clusters");
  GradientVector grad(first.n_params(), 0.0);
  Mlp::Trace trace;
  std::vector<double> probs(cm.n_clusters()), q(cm.n_actions());
  for (std::size_t i = 0; i < contexts.size(); ++i) {
    const auto x = contexts[i];
    first.Probs(x, trace, probs);
    env.ExpectedRewards(x, q);
    std::vector<double> coeffs = second.ExpectOverClusters(x, q);
    for (std::size_t c = 0; c < coeffs.size(); ++c) coeffs[c] *= probs[c];
    first.AccumulateWeightedScore(trace, probs, coeffs, grad, contexts.weights[i]);
  }
  return grad;
}

GradientVector TrueActionGradient(const Environment& env, const SoftmaxPolicy& policy,
                                  const ContextSet& contexts) {
  Require(policy.space() == OutcomeSpace::kActions && policy.n_outcomes() == env.n_actions(),
          ErrorCode::kContract, "action policy must cover the environment's actions");
  GradientVector grad(policy.n_params(), 0.0);
  Mlp::Trace trace;
  std::vector<double> probs(env.n_actions()), q(env.n_actions());
  for (std::size_t i = 0; i < contexts.size(); ++i) {
    const auto x = contexts[i];
    policy.Probs(x, trace, probs);
    env.ExpectedRewards(x, q);
    for (std::size_t a = 0; a < q.size(); ++a) q[a] *= probs[a];
    policy.AccumulateWeightedScore(trace, probs, q, grad, contexts.weights[i]);
  }
  return grad;
}

}  // namespace potec
