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

#ifndef POTEC_DATASET_HPP
#define POTEC_DATASET_HPP

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "potec/cluster_map.hpp"
#include "potec/environment.hpp"

namespace potec {

// Logged bandit feedback: n records of (x, a, c_a, r, pi_0(a|x)).
class LoggedDataset {
 public:
  LoggedDataset() = default;
  LoggedDataset(std::size_t context_dim, ClusterMap cluster_map);

  void Add(std::span<const double> x, std::size_t action, double reward, double propensity);

  std::size_t size() const { return actions_.size(); }
  bool empty() const { return actions_.empty(); }
  std::size_t context_dim() const { return dim_; }
  const ClusterMap& cluster_map() const { return cluster_map_; }

  std::span<const double> context(std::size_t i) const { return {contexts_.data() + i * dim_, dim_}; }
  std::size_t action(std::size_t i) const { return actions_[i]; }
  std::size_t cluster(std::size_t i) const { return clusters_[i]; }
  double reward(std::size_t i) const { return rewards_[i]; }
  double propensity(std::size_t i) const { return propensities_[i]; }

  // Row-major contexts of every record.
  std::span<const double> contexts() const { return contexts_; }
  std::span<const double> rewards() const { return rewards_; }
  std::span<const double> propensities() const { return propensities_; }

  // Same records with replaced rewards (used by exhaustive enumeration).
  void set_reward(std::size_t i, double r) { rewards_[i] = r; }

  // Records [begin, end) in a new dataset.
  LoggedDataset Slice(std::size_t begin, std::size_t end) const;

 private:
  std::size_t dim_ = 0;
  ClusterMap cluster_map_;
  std::vector<double> contexts_;
  std::vector<std::size_t> actions_;
  std::vector<std::size_t> clusters_;
  std::vector<double> rewards_;
  std::vector<double> propensities_;
};

// Samples n records. Each context is reused for repeats_per_context
// consecutive records so that same-context pairs exist.
LoggedDataset SampleLoggedData(const Environment& env, std::size_t n, std::uint64_t seed,
                               std::size_t repeats_per_context = 1);

// CSV with header ctx_0..ctx_{d-1},action,cluster,reward,propensity.
void WriteDatasetCsv(const LoggedDataset& data, std::ostream& out);
void SaveDatasetCsv(const LoggedDataset& data, const std::string& path);
// The cluster column must agree with cm for every record.
LoggedDataset ReadDatasetCsv(std::istream& in, const ClusterMap& cm);
LoggedDataset LoadDatasetCsv(const std::string& path, const ClusterMap& cm);

// pi_0(c_{a_i} | x_i) under the given clustering, recomputed from the environment.
std::vector<double> ClusterPropensities(const Environment& env, const LoggedDataset& data,
                                        const ClusterMap& cm);

}  // namespace potec

#endif  // POTEC_DATASET_HPP
