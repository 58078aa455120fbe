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

#include "potec/environment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "potec/error.hpp"

namespace potec {
namespace {

// Coordinate ranges (0-based, inclusive) and comparison of the threshold
// bonuses. Ranges are clipped to the context dimension.
struct Threshold {
  std::size_t first;
  std::size_t last;
  double cut;
  bool below;
};
constexpr Threshold kThresholdRules[SyntheticEnvironment::kThresholds] = {
    {0, 2, 1.5, true},
    {2, 7, -0.5, true},
    {1, 2, 3.0, false},
    {4, 9, 1.0, true},
};

bool ThresholdActive(const Threshold& t, std::span<const double> x) {
  double s = 0.0;
  for (std::size_t d = t.first; d <= t.last && d < x.size(); ++d) s += x[d];
  return t.below ? s < t.cut : s > t.cut;
}

void FillUniform(std::vector<double>& v, std::size_t n, double lo, double hi, Rng& rng) {
  std::uniform_real_distribution<double> u(lo, hi);
  v.resize(n);
  for (double& e : v) e = u(rng);
}

void FillNormal(std::vector<double>& v, std::size_t n, Rng& rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  v.resize(n);
  for (double& e : v) e = z(rng);
}

}  // namespace

// ---------------------------------------------------------------------------
// Environment

void Environment::ExpectedRewards(std::span<const double> x, std::span<double> out) const {
  for (std::size_t a = 0; a < out.size(); ++a) out[a] = ExpectedReward(x, a);
}

std::vector<double> Environment::ExpectedRewards(std::span<const double> x) const {
  std::vector<double> out(n_actions());
  ExpectedRewards(x, out);
  return out;
}

void Environment::LoggingProbs(std::span<const double> x, std::span<double> out) const {
  Require(out.size() == n_actions(), ErrorCode::kContract, "logging output has wrong size");
  RawLoggingProbs(x, out);
  if (has_full_support()) return;
  double total = 0.0;
  for (std::size_t a = 0; a < out.size(); ++a) {
    if (!supported_[a]) out[a] = 0.0;
    total += out[a];
  }
  for (double& p : out) p /= total;
}

std::vector<double> Environment::LoggingProbs(std::span<const double> x) const {
  std::vector<double> out(n_actions());
  LoggingProbs(x, out);
  return out;
}

const ContextSet& Environment::contexts() const {
  Fail(ErrorCode::kUnsupported, "environment has a continuous context law");
}

bool Environment::has_full_support() const {
  return std::all_of(supported_.begin(), supported_.end(), [](char s) { return s != 0; });
}

// ---------------------------------------------------------------------------
// SyntheticEnvironment

SyntheticEnvironment::SyntheticEnvironment(const EnvConfig& config, std::uint64_t seed)
    : config_(config) {
  Require(config.n_actions >= 1 && config.n_clusters >= 1, ErrorCode::kConfig,
          "environment needs at least one action and one cluster");
  Require(config.n_actions >= config.n_clusters, ErrorCode::kConfig,
          "environment needs n_actions >= n_clusters");
  Require(config.context_dim >= 1, ErrorCode::kConfig, "context_dim must be at least 1");
  Require(config.action_feature_dim >= 1, ErrorCode::kConfig,
          "action_feature_dim must be at least 1");
  Require(config.reward_sigma >= 0.0, ErrorCode::kConfig, "reward_sigma must be nonnegative");
  if (config.context_mode == ContextMode::kDiscrete) {
    Require(config.n_contexts >= 1, ErrorCode::kConfig, "discrete mode needs n_contexts >= 1");
    if (!config.context_weights.empty()) {
      Require(config.context_weights.size() == config.n_contexts, ErrorCode::kConfig,
              "context_weights must have n_contexts entries");
      Require(IsSimplex(config.context_weights, 1e-9), ErrorCode::kConfig,
              "context_weights must form a probability simplex");
    }
  }

  const std::size_t na = config.n_actions;
  const std::size_t nc = config.n_clusters;
  const std::size_t dim = config.context_dim;
  Rng rng = MakeRng({seed, 0x656e76ULL});

  // Clusters: balanced bins of the action features projected on a random direction.
  FillNormal(params_.action_features, na * config.action_feature_dim, rng);
  std::vector<double> direction;
  FillNormal(direction, config.action_feature_dim, rng);
  std::vector<double> projection(na);
  for (std::size_t a = 0; a < na; ++a) {
    projection[a] = Dot({params_.action_features.data() + a * config.action_feature_dim,
                         config.action_feature_dim},
                        direction);
  }
  std::vector<std::size_t> order(na);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t l, std::size_t r) { return projection[l] < projection[r]; });
  std::vector<std::size_t> assignment(na);
  for (std::size_t rank = 0; rank < na; ++rank) assignment[order[rank]] = rank * nc / na;
  cluster_map_ = ClusterMap(std::move(assignment), nc);

  FillUniform(params_.base_quadratic, nc * dim * dim, -1.0, 1.0, rng);
  FillUniform(params_.base_linear, nc * dim, -1.0, 1.0, rng);
  FillUniform(params_.threshold_bonus, nc * kThresholds, -3.0, 3.0, rng);
  FillUniform(params_.cluster_context, nc * dim, -1.0, 1.0, rng);
  FillUniform(params_.residual_context, na * dim, -1.0, 1.0, rng);
  FillUniform(params_.residual_action, na, -1.0, 1.0, rng);
  FillUniform(params_.logging_weights, na * dim, -1.0, 1.0, rng);

  if (is_discrete()) {
    contexts_.dim = dim;
    FillNormal(contexts_.values, config.n_contexts * dim, rng);
    contexts_.weights = config.context_weights.empty()
                            ? std::vector<double>(config.n_contexts, 1.0 / config.n_contexts)
                            : config.context_weights;
  }
  InitSupport(na);
}

double SyntheticEnvironment::ClusterEffect(std::span<const double> x, std::size_t c) const {
  const std::size_t dim = config_.context_dim;
  const double* quad = params_.base_quadratic.data() + c * dim * dim;
  double inner = 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < dim; ++j) row += quad[i * dim + j] * x[j];
    inner += x[i] * row;
  }
  inner += Dot({params_.base_linear.data() + c * dim, dim}, x);
  double g = 3.0 * std::tanh(inner);
  for (std::size_t k = 0; k < kThresholds; ++k) {
    if (ThresholdActive(kThresholdRules[k], x)) g += params_.threshold_bonus[c * kThresholds + k];
  }
  return g + config_.reward_shift;
}

double SyntheticEnvironment::ResidualEffect(std::span<const double> x, std::size_t a) const {
  const std::size_t dim = config_.context_dim;
  const std::size_t c = cluster_map_.cluster_of(a);
  return Dot({params_.residual_context.data() + a * dim, dim}, x) +
         Dot({params_.cluster_context.data() + c * dim, dim}, x) + params_.residual_action[a];
}

double SyntheticEnvironment::LoggingPerturbation(std::span<const double> x, std::size_t a) const {
  const std::size_t dim = config_.context_dim;
  return std::clamp(Dot({params_.logging_weights.data() + a * dim, dim}, x), -2.0, 2.0);
}

double SyntheticEnvironment::Clip(double q) const {
  if (config_.reward_noise != RewardNoise::kBernoulli) return q;
  return std::clamp(q, kBernoulliClip, 1.0 - kBernoulliClip);
}

double SyntheticEnvironment::ExpectedReward(std::span<const double> x, std::size_t a) const {
  Require(a < config_.n_actions, ErrorCode::kContract, "action index out of range");
  Require(x.size() == config_.context_dim, ErrorCode::kContract, "context has wrong dimension");
  return Clip(ClusterEffect(x, cluster_map_.cluster_of(a)) + ResidualEffect(x, a));
}

void SyntheticEnvironment::ExpectedRewards(std::span<const double> x, std::span<double> out) const {
  Require(x.size() == config_.context_dim, ErrorCode::kContract, "context has wrong dimension");
  Require(out.size() == config_.n_actions, ErrorCode::kContract, "output has wrong size");
  const std::size_t dim = config_.context_dim;
  std::vector<double> per_cluster(config_.n_clusters);
  for (std::size_t c = 0; c < config_.n_clusters; ++c) {
    per_cluster[c] =
        ClusterEffect(x, c) + Dot({params_.cluster_context.data() + c * dim, dim}, x);
  }
  for (std::size_t a = 0; a < config_.n_actions; ++a) {
    out[a] = Clip(per_cluster[cluster_map_.cluster_of(a)] +
                  Dot({params_.residual_context.data() + a * dim, dim}, x) +
                  params_.residual_action[a]);
  }
}

double SyntheticEnvironment::RewardVariance(std::span<const double> x, std::size_t a) const {
  if (config_.reward_noise == RewardNoise::kGaussian) {
    return config_.reward_sigma * config_.reward_sigma;
  }
  const double q = ExpectedReward(x, a);
  return q * (1.0 - q);
}

double SyntheticEnvironment::SampleReward(std::span<const double> x, std::size_t a,
                                          Rng& rng) const {
  const double q = ExpectedReward(x, a);
  if (config_.reward_noise == RewardNoise::kBernoulli) {
    return std::bernoulli_distribution(q)(rng) ? 1.0 : 0.0;
  }
  return q + config_.reward_sigma * std::normal_distribution<double>(0.0, 1.0)(rng);
}

void SyntheticEnvironment::RawLoggingProbs(std::span<const double> x,
                                           std::span<double> out) const {
  ExpectedRewards(x, out);
  for (std::size_t a = 0; a < out.size(); ++a) {
    out[a] = config_.beta * out[a] + LoggingPerturbation(x, a);
  }
  SoftmaxInPlace(out);
}

const ContextSet& SyntheticEnvironment::contexts() const {
  if (!is_discrete()) Environment::contexts();
  return contexts_;
}

void SyntheticEnvironment::SampleContext(Rng& rng, std::span<double> out) const {
  if (is_discrete()) {
    const std::size_t i = SampleIndex(contexts_.weights, rng);
    std::copy_n(contexts_[i].begin(), contexts_.dim, out.begin());
    return;
  }
  std::normal_distribution<double> z(0.0, 1.0);
  for (double& v : out) v = z(rng);
}

std::unique_ptr<Environment> SyntheticEnvironment::Clone() const {
  return std::make_unique<SyntheticEnvironment>(*this);
}

bool SyntheticEnvironment::operator==(const SyntheticEnvironment& other) const {
  return config_ == other.config_ && cluster_map_ == other.cluster_map_ &&
         params_ == other.params_ && contexts_.values == other.contexts_.values &&
         contexts_.weights == other.contexts_.weights &&
         std::equal(supported().begin(), supported().end(), other.supported().begin(),
                    other.supported().end());
}

std::shared_ptr<SyntheticEnvironment> BuildSyntheticEnv(const EnvConfig& config,
                                                        std::uint64_t seed) {
  return std::make_shared<SyntheticEnvironment>(config, seed);
}

// ---------------------------------------------------------------------------
// TabularEnvironment

TabularEnvironment::TabularEnvironment(ContextSet contexts, ClusterMap cluster_map,
                                       std::vector<double> rewards, std::vector<double> logging,
                                       std::vector<double> variances)
    : contexts_(std::move(contexts)),
      cluster_map_(std::move(cluster_map)),
      rewards_(std::move(rewards)),
      logging_(std::move(logging)),
      variances_(std::move(variances)) {
  const std::size_t cells = contexts_.size() * cluster_map_.n_actions();
  Require(contexts_.values.size() == contexts_.size() * contexts_.dim, ErrorCode::kConfig,
          "context table has wrong size");
  Require(IsSimplex(contexts_.weights, 1e-9), ErrorCode::kConfig,
          "context weights must form a probability simplex");
  Require(rewards_.size() == cells && logging_.size() == cells && variances_.size() == cells,
          ErrorCode::kConfig, "tabular environment tables have wrong size");
  for (std::size_t i = 0; i < contexts_.size(); ++i) {
    Require(IsSimplex({logging_.data() + i * n_actions(), n_actions()}, 1e-9), ErrorCode::kConfig,
            "tabular logging rows must be simplices");
    const bool inserted = index_.emplace(HashBits(contexts_[i]), i).second;
    Require(inserted, ErrorCode::kConfig, "tabular contexts must be distinct");
  }
  InitSupport(n_actions());
}

std::size_t TabularEnvironment::IndexOf(std::span<const double> x) const {
  auto it = index_.find(HashBits(x));
  Require(it != index_.end(), ErrorCode::kContract, "context is not part of the tabular law");
  return it->second;
}

double TabularEnvironment::ExpectedReward(std::span<const double> x, std::size_t a) const {
  Require(a < n_actions(), ErrorCode::kContract, "action index out of range");
  return rewards_[IndexOf(x) * n_actions() + a];
}

double TabularEnvironment::RewardVariance(std::span<const double> x, std::size_t a) const {
  return variances_[IndexOf(x) * n_actions() + a];
}

double TabularEnvironment::SampleReward(std::span<const double> x, std::size_t a, Rng& rng) const {
  const std::size_t cell = IndexOf(x) * n_actions() + a;
  return rewards_[cell] +
         std::sqrt(variances_[cell]) * std::normal_distribution<double>(0.0, 1.0)(rng);
}

void TabularEnvironment::SampleContext(Rng& rng, std::span<double> out) const {
  const std::size_t i = SampleIndex(contexts_.weights, rng);
  std::copy_n(contexts_[i].begin(), contexts_.dim, out.begin());
}

void TabularEnvironment::RawLoggingProbs(std::span<const double> x, std::span<double> out) const {
  const std::size_t i = IndexOf(x);
  std::copy_n(logging_.begin() + i * n_actions(), n_actions(), out.begin());
}

std::unique_ptr<Environment> TabularEnvironment::Clone() const {
  return std::make_unique<TabularEnvironment>(*this);
}

// ---------------------------------------------------------------------------
// Support restriction, evaluation

std::unique_ptr<Environment> WithUnsupportedActions(const Environment& env,
                                                    std::span<const std::size_t> actions) {
  const ClusterMap& cm = env.cluster_map();
  std::vector<char> supported(env.supported().begin(), env.supported().end());
  for (std::size_t a : actions) {
    Require(a < env.n_actions(), ErrorCode::kConfig, "unsupported action index out of range");
    supported[a] = 0;
  }
  for (std::size_t c = 0; c < cm.n_clusters(); ++c) {
    bool any = false;
    for (std::size_t a : cm.members(c)) any = any || supported[a];
    if (!any) {
      Fail(ErrorCode::kConfig,
           "removing these actions leaves cluster " + std::to_string(c) +
               " without logging support (full cluster support would be violated)");
    }
  }
  auto out = env.Clone();
  out->supported_ = std::move(supported);
  return out;
}

std::unique_ptr<Environment> RestrictSupport(const Environment& env, std::size_t n_unsupported,
                                             std::uint64_t seed) {
  const ClusterMap& cm = env.cluster_map();
  Require(n_unsupported < env.n_actions(), ErrorCode::kConfig,
          "n_unsupported must be smaller than n_actions");
  std::vector<std::size_t> remaining(cm.n_clusters(), 0);
  std::vector<std::size_t> candidates;
  for (std::size_t a = 0; a < env.n_actions(); ++a) {
    if (env.supported()[a]) {
      ++remaining[cm.cluster_of(a)];
      candidates.push_back(a);
    }
  }
  Rng rng = MakeRng({seed, 0x73757070ULL});
  std::shuffle(candidates.begin(), candidates.end(), rng);
  std::vector<std::size_t> removed;
  for (std::size_t a : candidates) {
    if (removed.size() == n_unsupported) break;
    std::size_t& left = remaining[cm.cluster_of(a)];
    if (left <= 1) continue;
    --left;
    removed.push_back(a);
  }
  if (removed.size() < n_unsupported) {
    Fail(ErrorCode::kConfig,
         "cannot remove " + std::to_string(n_unsupported) +
             " actions while keeping every cluster supported (full cluster support)");
  }
  return WithUnsupportedActions(env, removed);
}

ContextSet SampleContexts(const Environment& env, std::size_t n, std::uint64_t seed) {
  ContextSet out;
  out.dim = env.context_dim();
  out.values.resize(n * out.dim);
  out.weights.assign(n, n == 0 ? 0.0 : 1.0 / static_cast<double>(n));
  Rng rng = MakeRng({seed, 0x74657374ULL});
  for (std::size_t i = 0; i < n; ++i) {
    env.SampleContext(rng, {out.values.data() + i * out.dim, out.dim});
  }
  return out;
}

double PolicyValue(const Environment& env, const ActionPolicy& policy,
                   const ContextSet& contexts) {
  std::vector<double> probs(env.n_actions());
  std::vector<double> q(env.n_actions());
  double value = 0.0;
  for (std::size_t i = 0; i < contexts.size(); ++i) {
    policy(contexts[i], probs);
    Require(IsSimplex(probs, 1e-9), ErrorCode::kContract, "policy output is not a simplex");
    env.ExpectedRewards(contexts[i], q);
    value += contexts.weights[i] * Dot(probs, q);
  }
  return value;
}

double LoggingPolicyValue(const Environment& env, const ContextSet& contexts) {
  return PolicyValue(
      env, [&](std::span<const double> x, std::span<double> p) { env.LoggingProbs(x, p); },
      contexts);
}

}  // namespace potec
