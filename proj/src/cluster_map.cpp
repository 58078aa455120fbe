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

#include "potec/cluster_map.hpp"

#include <numeric>
#include <string>

#include "potec/error.hpp"
#include "potec/numeric.hpp"

namespace potec {

ClusterMap::ClusterMap(std::vector<std::size_t> assignment, std::size_t n_clusters)
    : assignment_(std::move(assignment)), n_clusters_(n_clusters) {
  Require(n_clusters_ >= 1, ErrorCode::kConfig, "cluster map needs at least one cluster");
  Require(assignment_.size() >= n_clusters_, ErrorCode::kConfig,
          "cluster map needs at least as many actions as clusters");
  std::vector<std::size_t> counts(n_clusters_, 0);
  for (std::size_t a = 0; a < assignment_.size(); ++a) {
    if (assignment_[a] >= n_clusters_) {
      Fail(ErrorCode::kConfig, "cluster index out of range for action " + std::to_string(a));
    }
    ++counts[assignment_[a]];
  }
  offsets_.assign(n_clusters_ + 1, 0);
  for (std::size_t c = 0; c < n_clusters_; ++c) {
    if (counts[c] == 0) Fail(ErrorCode::kConfig, "cluster " + std::to_string(c) + " is empty");
    offsets_[c + 1] = offsets_[c] + counts[c];
  }
  members_.resize(assignment_.size());
  std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
  for (std::size_t a = 0; a < assignment_.size(); ++a) members_[cursor[assignment_[a]]++] = a;
}

ClusterMap ClusterMap::Singletons(std::size_t n_actions) {
  std::vector<std::size_t> assignment(n_actions);
  std::iota(assignment.begin(), assignment.end(), 0);
  return ClusterMap(std::move(assignment), n_actions);
}

ClusterMap ClusterMap::OneCluster(std::size_t n_actions) {
  return ClusterMap(std::vector<std::size_t>(n_actions, 0), 1);
}

ClusterMap PerturbClusters(const ClusterMap& cm, double noise_ratio, std::uint64_t seed) {
  Require(noise_ratio >= 0.0 && noise_ratio <= 1.0, ErrorCode::kConfig,
          "cluster noise ratio must lie in [0, 1]");
  const std::size_t k = cm.n_clusters();
  if (noise_ratio == 0.0 || k == 1) return cm;
  Rng rng = MakeRng({seed, 0x636c7573ULL});
  std::bernoulli_distribution flip(noise_ratio);
  std::uniform_int_distribution<std::size_t> other(0, k - 2);
  constexpr int kMaxAttempts = 10000;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    std::vector<std::size_t> next(cm.assignment().begin(), cm.assignment().end());
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t a = 0; a < next.size(); ++a) {
      if (flip(rng)) {
        const std::size_t pick = other(rng);
        next[a] = pick >= next[a] ? pick + 1 : pick;
      }
      ++counts[next[a]];
    }
    bool all_nonempty = true;
    for (std::size_t c : counts) all_nonempty = all_nonempty && c > 0;
    if (all_nonempty) return ClusterMap(std::move(next), k);
  }
  Fail(ErrorCode::kConfig, "cluster perturbation could not keep every cluster nonempty");
}

std::vector<double> ClusterMarginal(std::span<const double> action_probs, const ClusterMap& cm) {
  Require(action_probs.size() == cm.n_actions(), ErrorCode::kContract,
          "action distribution size does not match the cluster map");
  std::vector<double> out(cm.n_clusters(), 0.0);
  for (std::size_t a = 0; a < action_probs.size(); ++a) out[cm.cluster_of(a)] += action_probs[a];
  return out;
}

}  // namespace potec
