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

#ifndef POTEC_POLICY_HPP
#define POTEC_POLICY_HPP

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "potec/cluster_map.hpp"
#include "potec/environment.hpp"
#include "potec/mlp.hpp"
#include "potec/numeric.hpp"
#include "potec/regressor.hpp"

namespace potec {

enum class OutcomeSpace { kActions, kClusters };

const char* OutcomeSpaceName(OutcomeSpace space);

// pi(k|x) = softmax_k(net(x)_k / temperature) over actions or clusters.
class SoftmaxPolicy {
 public:
  SoftmaxPolicy() = default;
  SoftmaxPolicy(Mlp net, OutcomeSpace space, double temperature = 1.0);

  // Network context_dim -> hidden... -> n_outcomes with seeded initialization.
  static SoftmaxPolicy Initialized(std::size_t context_dim, const std::vector<std::size_t>& hidden,
                                   std::size_t n_outcomes, OutcomeSpace space, std::uint64_t seed);

  OutcomeSpace space() const { return space_; }
  double temperature() const { return temperature_; }
  std::size_t n_outcomes() const { return net_.output_size(); }
  std::size_t context_dim() const { return net_.input_size(); }
  std::size_t n_params() const { return net_.n_params(); }

  const Mlp& net() const { return net_; }
  Mlp& mutable_net() { return net_; }

  std::vector<double> Probs(std::span<const double> x) const;
  void Probs(std::span<const double> x, std::span<double> out) const;
  // Keeps the forward trace for a later AccumulateWeightedScore.
  void Probs(std::span<const double> x, Mlp::Trace& trace, std::span<double> out) const;

  // s(x, k) = grad log pi(k|x).
  GradientVector Score(std::span<const double> x, std::size_t k) const;

  // grad += scale * sum_k coeffs[k] * s(x, k), one backward pass.
  void AccumulateWeightedScore(const Mlp::Trace& trace, std::span<const double> probs,
                               std::span<const double> coeffs, std::span<double> grad,
                               double scale = 1.0) const;

  // Action distribution; requires the action outcome space.
  ActionPolicy AsActionPolicy() const;

  bool operator==(const SoftmaxPolicy&) const = default;

 private:
  Mlp net_;
  OutcomeSpace space_ = OutcomeSpace::kActions;
  double temperature_ = 1.0;
};

void WritePolicy(const SoftmaxPolicy& policy, std::ostream& out);
SoftmaxPolicy ReadPolicy(std::istream& in);

// Within-cluster distribution pi_2(a|x,c).
class SecondStageRule {
 public:
  virtual ~SecondStageRule() = default;

  virtual const ClusterMap& cluster_map() const = 0;
  // out[a] = pi_2(a | x, c_a) for every action a.
  virtual void Conditionals(std::span<const double> x, std::span<double> out) const = 0;

  std::vector<double> Conditionals(std::span<const double> x) const;
  // E_{pi_2(a|x,c)}[values[a]] for every cluster c.
  std::vector<double> ExpectOverClusters(std::span<const double> x,
                                         std::span<const double> values) const;
};

using SecondStagePtr = std::shared_ptr<const SecondStageRule>;

// Deterministic argmax of h-hat within each cluster, ties to the lowest index.
class SecondStagePolicy final : public SecondStageRule {
 public:
  SecondStagePolicy(RegressorPtr h_model, ClusterMap cm);

  const ClusterMap& cluster_map() const override { return cm_; }
  using SecondStageRule::Conditionals;
  void Conditionals(std::span<const double> x, std::span<double> out) const override;

  std::size_t Choice(std::span<const double> x, std::size_t c) const;
  // Chosen action per cluster.
  std::vector<std::size_t> Choices(std::span<const double> x) const;

  const RegressorPtr& h_model() const { return h_; }

 private:
  RegressorPtr h_;
  ClusterMap cm_;
};

// Uniform within each cluster. Test evaluator for cluster-value dependence.
class UniformSecondStage final : public SecondStageRule {
 public:
  explicit UniformSecondStage(ClusterMap cm) : cm_(std::move(cm)) {}

  const ClusterMap& cluster_map() const override { return cm_; }
  using SecondStageRule::Conditionals;
  void Conditionals(std::span<const double> x, std::span<double> out) const override;

 private:
  ClusterMap cm_;
};

// pi(a|x) = sum_c pi_1(c|x) pi_2(a|x,c).
class OverallPolicy {
 public:
  OverallPolicy(SoftmaxPolicy first, SecondStagePtr second);

  const SoftmaxPolicy& first() const { return first_; }
  SoftmaxPolicy& mutable_first() { return first_; }
  const SecondStagePtr& second() const { return second_; }
  std::size_t n_actions() const { return second_->cluster_map().n_actions(); }

  std::vector<double> Probs(std::span<const double> x) const;
  void Probs(std::span<const double> x, std::span<double> out) const;
  // (cluster, action) drawn from the two stages in order.
  std::pair<std::size_t, std::size_t> SampleAction(std::span<const double> x, Rng& rng) const;

  ActionPolicy AsActionPolicy() const;

 private:
  SoftmaxPolicy first_;
  SecondStagePtr second_;
};

// softmax_a(q_hat(x,a) / temperature).
ActionPolicy RegressionPolicy(RegressorPtr q_hat, double temperature);

}  // namespace potec

#endif  // POTEC_POLICY_HPP
