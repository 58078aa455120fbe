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

#ifndef POTEC_CLUSTER_MAP_HPP
#define POTEC_CLUSTER_MAP_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace potec {

// Deterministic, context-independent assignment of actions to clusters.
// Every cluster in [0, n_clusters) owns at least one action.
class ClusterMap {
 public:
  ClusterMap() = default;
  ClusterMap(std::vector<std::size_t> assignment, std::size_t n_clusters);

  // Every action in its own cluster (the C = A regime).
  static ClusterMap Singletons(std::size_t n_actions);
  // A single cluster holding every action.
  static ClusterMap OneCluster(std::size_t n_actions);

  std::size_t n_actions() const { return assignment_.size(); }
  std::size_t n_clusters() const { return n_clusters_; }
  std::size_t cluster_of(std::size_t action) const { return assignment_[action]; }
  std::span<const std::size_t> assignment() const { return assignment_; }

  // Actions of cluster c in increasing index order.
  std::span<const std::size_t> members(std::size_t c) const {
    return {members_.data() + offsets_[c], offsets_[c + 1] - offsets_[c]};
  }

  bool operator==(const ClusterMap& other) const {
    return n_clusters_ == other.n_clusters_ && assignment_ == other.assignment_;
  }

 private:
  std::vector<std::size_t> assignment_;
  std::size_t n_clusters_ = 0;
  std::vector<std::size_t> offsets_;
  std::vector<std::size_t> members_;
};

// Reassigns each action, independently with probability noise_ratio, to a
// uniformly random different cluster. Draws that would leave a cluster empty
// are rejected and redrawn as a whole.
ClusterMap PerturbClusters(const ClusterMap& cm, double noise_ratio, std::uint64_t seed);

// Sums action masses per cluster.
std::vector<double> ClusterMarginal(std::span<const double> action_probs, const ClusterMap& cm);

}  // namespace potec

#endif  // POTEC_CLUSTER_MAP_HPP
