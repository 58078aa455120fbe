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

#ifndef POTEC_REGRESSOR_HPP
#define POTEC_REGRESSOR_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

#include "potec/cluster_map.hpp"
#include "potec/environment.hpp"
#include "potec/mlp.hpp"

namespace potec {

enum class RegressorKind {
  kConventional,  // q-hat(x, a), fit on absolute rewards
  kPairwise,      // h-hat(x, a), fit on within-cluster reward differences
  kBaseline,      // g-hat(x, c_a), fit on residuals of h-hat
  kCombined,      // f-hat = g-hat + h-hat
  kOracleNoise,   // true q plus frozen per-cluster and per-action offsets
  kFunction,      // arbitrary callable (fixtures, injected models)
};

const char* RegressorKindName(RegressorKind kind);

// A frozen reward model over (context, action).
class RewardRegressor {
 public:
  virtual ~RewardRegressor() = default;

  virtual RegressorKind kind() const = 0;
  virtual std::size_t n_actions() const = 0;
  virtual double Predict(std::span<const double> x, std::size_t a) const = 0;
  virtual void PredictAll(std::span<const double> x, std::span<double> out) const;
  std::vector<double> PredictAll(std::span<const double> x) const;
};

using RegressorPtr = std::shared_ptr<const RewardRegressor>;

// MLP over the input x (+) onehot(a); used for q-hat and h-hat.
class ActionMlpRegressor final : public RewardRegressor {
 public:
  ActionMlpRegressor(RegressorKind kind, Mlp net, std::size_t context_dim, std::size_t n_actions);

  RegressorKind kind() const override { return kind_; }
  std::size_t n_actions() const override { return n_actions_; }
  double Predict(std::span<const double> x, std::size_t a) const override;
  using RewardRegressor::PredictAll;
  void PredictAll(std::span<const double> x, std::span<double> out) const override;

  const Mlp& net() const { return net_; }
  std::size_t context_dim() const { return dim_; }

 private:
  RegressorKind kind_;
  Mlp net_;
  std::size_t dim_;
  std::size_t n_actions_;
};

// MLP over x (+) onehot(c); Predict(x, a) evaluates the cluster of a.
class BaselineRegressor final : public RewardRegressor {
 public:
  BaselineRegressor(Mlp net, std::size_t context_dim, ClusterMap cm);

  RegressorKind kind() const override { return RegressorKind::kBaseline; }
  std::size_t n_actions() const override { return cm_.n_actions(); }
  double Predict(std::span<const double> x, std::size_t a) const override;
  using RewardRegressor::PredictAll;
  void PredictAll(std::span<const double> x, std::span<double> out) const override;
  double PredictCluster(std::span<const double> x, std::size_t c) const;

  const Mlp& net() const { return net_; }
  const ClusterMap& cluster_map() const { return cm_; }

 private:
  Mlp net_;
  std::size_t dim_;
  ClusterMap cm_;
};

// f-hat(x, a) = g-hat(x, c_a) + h-hat(x, a).
class CombinedRegressor final : public RewardRegressor {
 public:
  CombinedRegressor(RegressorPtr baseline, RegressorPtr pairwise);

  RegressorKind kind() const override { return RegressorKind::kCombined; }
  std::size_t n_actions() const override { return pairwise_->n_actions(); }
  double Predict(std::span<const double> x, std::size_t a) const override;
  using RewardRegressor::PredictAll;
  void PredictAll(std::span<const double> x, std::span<double> out) const override;

  const RegressorPtr& baseline() const { return baseline_; }
  const RegressorPtr& pairwise() const { return pairwise_; }

 private:
  RegressorPtr baseline_;
  RegressorPtr pairwise_;
};

// q(x, a) + eps_{c_a} + eps_a with offsets drawn once at construction.
class NoisyOracleRegressor final : public RewardRegressor {
 public:
  NoisyOracleRegressor(EnvironmentPtr env, double sigma_cluster, double sigma_action,
                       std::uint64_t seed);

  RegressorKind kind() const override { return RegressorKind::kOracleNoise; }
  std::size_t n_actions() const override { return env_->n_actions(); }
  double Predict(std::span<const double> x, std::size_t a) const override;
  using RewardRegressor::PredictAll;
  void PredictAll(std::span<const double> x, std::span<double> out) const override;

  std::span<const double> cluster_offsets() const { return cluster_offsets_; }
  std::span<const double> action_offsets() const { return action_offsets_; }

 private:
  EnvironmentPtr env_;
  std::vector<double> cluster_offsets_;
  std::vector<double> action_offsets_;
};

class FunctionRegressor final : public RewardRegressor {
 public:
  using Fn = std::function<double(std::span<const double>, std::size_t)>;
  FunctionRegressor(std::size_t n_actions, Fn fn) : n_actions_(n_actions), fn_(std::move(fn)) {}

  RegressorKind kind() const override { return RegressorKind::kFunction; }
  std::size_t n_actions() const override { return n_actions_; }
  double Predict(std::span<const double> x, std::size_t a) const override { return fn_(x, a); }

 private:
  std::size_t n_actions_;
  Fn fn_;
};

// Memoizes PredictAll rows for a fixed set of contexts (matched bitwise);
// other contexts go to the wrapped model.
class TabulatedRegressor final : public RewardRegressor {
 public:
  TabulatedRegressor(RegressorPtr inner, const ContextSet& contexts);
  // Tabulates the distinct contexts of a flat row-major context matrix.
  TabulatedRegressor(RegressorPtr inner, std::span<const double> contexts, std::size_t dim);

  RegressorKind kind() const override { return inner_->kind(); }
  std::size_t n_actions() const override { return inner_->n_actions(); }
  double Predict(std::span<const double> x, std::size_t a) const override;
  using RewardRegressor::PredictAll;
  void PredictAll(std::span<const double> x, std::span<double> out) const override;

  const RegressorPtr& inner() const { return inner_; }

 private:
  void Add(std::span<const double> x);
  const double* Find(std::span<const double> x) const;

  RegressorPtr inner_;
  std::unordered_map<std::uint64_t, std::size_t> rows_;
  std::vector<double> table_;
};

// Returns the true expected reward of env as a regressor.
RegressorPtr ExactModel(EnvironmentPtr env);

// q + sigma_c eps_c + sigma_a eps_a, eps ~ N(0, 1) drawn once.
RegressorPtr MakeNoisyRegressionModel(EnvironmentPtr env, double sigma_cluster,
                                      double sigma_action, std::uint64_t seed);

// Text serialization for MLP-backed regressors: kind line, cluster map for
// baselines, then one or two mlp blobs.
void WriteRegressor(const RewardRegressor& model, std::ostream& out);
RegressorPtr ReadRegressor(std::istream& in);

}  // namespace potec

#endif  // POTEC_REGRESSOR_HPP
