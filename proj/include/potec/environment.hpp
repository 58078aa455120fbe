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

#ifndef POTEC_ENVIRONMENT_HPP
#define POTEC_ENVIRONMENT_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

#include "potec/cluster_map.hpp"
#include "potec/numeric.hpp"

namespace potec {

// A finite set of contexts with probability weights. Sampled evaluation sets
// carry uniform weights; discrete environments carry their context law.
struct ContextSet {
  std::size_t dim = 0;
  std::vector<double> values;   // row-major, size() * dim
  std::vector<double> weights;  // sums to one

  std::size_t size() const { return weights.size(); }
  std::span<const double> operator[](std::size_t i) const { return {values.data() + i * dim, dim}; }
};

enum class RewardNoise { kGaussian, kBernoulli };
enum class ContextMode { kContinuous, kDiscrete };

// Reward clipping range for Bernoulli rewards.
inline constexpr double kBernoulliClip = 0.01;

// Common interface of every bandit environment: ground-truth expected rewards,
// the logging policy, the reward noise law and the context law.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::size_t n_actions() const = 0;
  virtual std::size_t context_dim() const = 0;
  // The true action clustering of the environment.
  virtual const ClusterMap& cluster_map() const = 0;

  virtual double ExpectedReward(std::span<const double> x, std::size_t a) const = 0;
  virtual void ExpectedRewards(std::span<const double> x, std::span<double> out) const;
  std::vector<double> ExpectedRewards(std::span<const double> x) const;

  virtual double RewardVariance(std::span<const double> x, std::size_t a) const = 0;
  virtual double SampleReward(std::span<const double> x, std::size_t a, Rng& rng) const = 0;

  // Logging distribution over actions, after the support mask is applied.
  void LoggingProbs(std::span<const double> x, std::span<double> out) const;
  std::vector<double> LoggingProbs(std::span<const double> x) const;

  virtual bool is_discrete() const = 0;
  // The finite context law. Throws kUnsupported for continuous environments.
  virtual const ContextSet& contexts() const;
  virtual void SampleContext(Rng& rng, std::span<double> out) const = 0;

  std::span<const char> supported() const { return supported_; }
  bool has_full_support() const;

  virtual std::unique_ptr<Environment> Clone() const = 0;

 protected:
  Environment() = default;
  Environment(const Environment&) = default;
  Environment& operator=(const Environment&) = default;

  // Logging probabilities before the support mask.
  virtual void RawLoggingProbs(std::span<const double> x, std::span<double> out) const = 0;
  void InitSupport(std::size_t n_actions) { supported_.assign(n_actions, 1); }

 private:
  friend std::unique_ptr<Environment> WithUnsupportedActions(const Environment&,
                                                             std::span<const std::size_t>);
  std::vector<char> supported_;
};

using EnvironmentPtr = std::shared_ptr<const Environment>;

struct EnvConfig {
  std::size_t n_actions = 2000;
  std::size_t n_clusters = 30;
  std::size_t context_dim = 10;
  std::size_t action_feature_dim = 5;
  double beta = 0.0;  // logging optimality
  RewardNoise reward_noise = RewardNoise::kGaussian;
  double reward_sigma = 1.0;
  // Constant added to every expected reward. Keeps V(pi_0) positive so that
  // normalized values are defined.
  double reward_shift = 0.0;
  ContextMode context_mode = ContextMode::kContinuous;
  std::size_t n_contexts = 5;           // discrete mode only
  std::vector<double> context_weights;  // discrete mode only; empty means uniform

  bool operator==(const EnvConfig&) const = default;
};

// Synthetic environment with q(x,a) = g(x, c_a) + h_{c_a}(x, a).
//   g(x, c) = 3 tanh(x'A_c x + b_c'x) + sum_k u_{c,k} 1{threshold_k(x)}
//   h_c(x, a) = x'M_c e_a + theta_{x,c}'x + theta_{a,c}'e_a
// and the logging policy softmax_a(beta q(x,a) + mu(x,a)) with
// mu(x,a) = clamp(x'W e_a, -2, 2).
class SyntheticEnvironment final : public Environment {
 public:
  static constexpr std::size_t kThresholds = 4;

  SyntheticEnvironment(const EnvConfig& config, std::uint64_t seed);

  std::size_t n_actions() const override { return config_.n_actions; }
  std::size_t context_dim() const override { return config_.context_dim; }
  const ClusterMap& cluster_map() const override { return cluster_map_; }
  const EnvConfig& config() const { return config_; }

  double ExpectedReward(std::span<const double> x, std::size_t a) const override;
  using Environment::ExpectedRewards;
  void ExpectedRewards(std::span<const double> x, std::span<double> out) const override;
  double RewardVariance(std::span<const double> x, std::size_t a) const override;
  double SampleReward(std::span<const double> x, std::size_t a, Rng& rng) const override;

  bool is_discrete() const override { return config_.context_mode == ContextMode::kDiscrete; }
  const ContextSet& contexts() const override;
  void SampleContext(Rng& rng, std::span<double> out) const override;

  std::unique_ptr<Environment> Clone() const override;

  // Unclipped components of the reward decomposition.
  double ClusterEffect(std::span<const double> x, std::size_t c) const;
  double ResidualEffect(std::span<const double> x, std::size_t a) const;
  double LoggingPerturbation(std::span<const double> x, std::size_t a) const;

  // Raw parameters, exposed for independent re-evaluation in tests.
  struct Params {
    std::vector<double> action_features;  // n_actions x action_feature_dim
    std::vector<double> base_quadratic;   // n_clusters x dim x dim (A_c)
    std::vector<double> base_linear;      // n_clusters x dim (b_c)
    std::vector<double> threshold_bonus;  // n_clusters x 4 (u_{c,k})
    std::vector<double> residual_context; // n_actions x dim: column a of M_{c_a}
    std::vector<double> residual_action;  // n_actions: entry a of theta_{a,c_a}
    std::vector<double> cluster_context;  // n_clusters x dim (theta_{x,c})
    std::vector<double> logging_weights;  // n_actions x dim: column a of W

    bool operator==(const Params&) const = default;
  };
  const Params& params() const { return params_; }
  Params& mutable_params() { return params_; }

  bool operator==(const SyntheticEnvironment& other) const;

 protected:
  void RawLoggingProbs(std::span<const double> x, std::span<double> out) const override;

 private:
  double Clip(double q) const;

  EnvConfig config_;
  ClusterMap cluster_map_;
  Params params_;
  ContextSet contexts_;
};

// Environment over a finite context set with explicit tables. Used for small
// fixtures and exact-enumeration checks.
class TabularEnvironment final : public Environment {
 public:
  // rewards / logging / variances are n_contexts x n_actions, row-major.
  TabularEnvironment(ContextSet contexts, ClusterMap cluster_map, std::vector<double> rewards,
                     std::vector<double> logging, std::vector<double> variances);

  std::size_t n_actions() const override { return cluster_map_.n_actions(); }
  std::size_t context_dim() const override { return contexts_.dim; }
  const ClusterMap& cluster_map() const override { return cluster_map_; }

  double ExpectedReward(std::span<const double> x, std::size_t a) const override;
  double RewardVariance(std::span<const double> x, std::size_t a) const override;
  // Gaussian noise with the tabulated variance.
  double SampleReward(std::span<const double> x, std::size_t a, Rng& rng) const override;

  bool is_discrete() const override { return true; }
  const ContextSet& contexts() const override { return contexts_; }
  void SampleContext(Rng& rng, std::span<double> out) const override;

  std::unique_ptr<Environment> Clone() const override;

  std::size_t IndexOf(std::span<const double> x) const;

 protected:
  void RawLoggingProbs(std::span<const double> x, std::span<double> out) const override;

 private:
  ContextSet contexts_;
  ClusterMap cluster_map_;
  std::vector<double> rewards_;
  std::vector<double> logging_;
  std::vector<double> variances_;
  std::unordered_map<std::uint64_t, std::size_t> index_;
};

std::shared_ptr<SyntheticEnvironment> BuildSyntheticEnv(const EnvConfig& config, std::uint64_t seed);

// Removes n_unsupported randomly chosen actions from the logging support while
// every cluster keeps at least one supported action.
std::unique_ptr<Environment> RestrictSupport(const Environment& env, std::size_t n_unsupported,
                                             std::uint64_t seed);
// Removes exactly the given actions; fails if a cluster would lose its support.
std::unique_ptr<Environment> WithUnsupportedActions(const Environment& env,
                                                    std::span<const std::size_t> actions);

// Draws n contexts from the environment's context law, uniform weights.
ContextSet SampleContexts(const Environment& env, std::size_t n, std::uint64_t seed);

// Distribution over actions for a context.
using ActionPolicy = std::function<void(std::span<const double> x, std::span<double> probs)>;

// Exact value: sum_x w_x sum_a pi(a|x) q(x,a). Fails on non-simplex output.
double PolicyValue(const Environment& env, const ActionPolicy& policy, const ContextSet& contexts);
// Value of the logging policy over the same contexts.
double LoggingPolicyValue(const Environment& env, const ContextSet& contexts);

}  // namespace potec

#endif  // POTEC_ENVIRONMENT_HPP
