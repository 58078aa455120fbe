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

#ifndef POTEC_REWARD_MODELS_HPP
#define POTEC_REWARD_MODELS_HPP

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "potec/cluster_map.hpp"
#include "potec/dataset.hpp"
#include "potec/environment.hpp"
#include "potec/mlp.hpp"
#include "potec/policy.hpp"
#include "potec/regressor.hpp"

namespace potec {

// Same-context, same-cluster record pairs (x, a, b, r_a, r_b) with a < b.
class PairDataset {
 public:
  explicit PairDataset(std::size_t context_dim = 0) : dim_(context_dim) {}

  void Add(std::span<const double> x, std::size_t a, std::size_t b, double r_a, double r_b);

  std::size_t size() const { return a_.size(); }
  bool empty() const { return a_.empty(); }
  std::size_t context_dim() const { return dim_; }
  std::span<const double> context(std::size_t i) const { return {contexts_.data() + i * dim_, dim_}; }
  std::size_t a(std::size_t i) const { return a_[i]; }
  std::size_t b(std::size_t i) const { return b_[i]; }
  double r_a(std::size_t i) const { return r_a_[i]; }
  double r_b(std::size_t i) const { return r_b_[i]; }

 private:
  std::size_t dim_;
  std::vector<double> contexts_;
  std::vector<std::size_t> a_;
  std::vector<std::size_t> b_;
  std::vector<double> r_a_;
  std::vector<double> r_b_;
};

// Every pair of records with bitwise-identical contexts and the same cluster
// under cm. Pairs that repeat one action carry no difference signal and are
// skipped.
PairDataset BuildPairDataset(const LoggedDataset& data, const ClusterMap& cm);

// CSV with header ctx_0..ctx_{d-1},a,b,r_a,r_b.
void WritePairCsv(const PairDataset& pairs, std::ostream& out);

struct RegressionConfig {
  std::vector<std::size_t> hidden{32, 32};
  std::size_t epochs = 30;
  std::size_t batch_size = 128;
  AdamHyper adam{1e-3, 0.9, 0.999, 1e-8, 1e-4};
  std::uint64_t seed = 0;
};

// Minimizes sum ((r_a - r_b) - (h(x,a) - h(x,b)))^2. Throws kConfig when the
// pair set is empty, signalling the conventional fallback.
RegressorPtr FitPairwise(const PairDataset& pairs, std::size_t n_actions,
                         const RegressionConfig& config);

// Minimizes sum (r - h(x,a) - g(x,c_a))^2 over g with h frozen.
RegressorPtr FitBaseline(const LoggedDataset& data, const RewardRegressor& h, const ClusterMap& cm,
                         const RegressionConfig& config);

// Minimizes sum (r - q(x,a))^2.
RegressorPtr FitConventional(const LoggedDataset& data, const RegressionConfig& config);

// f^{pi_2}(x, c) = E_{pi_2(a|x,c)}[f(x, a)].
double FClusterExpectation(const RewardRegressor& f, const SecondStageRule& second,
                           std::span<const double> x, std::size_t c);

// max over contexts and same-cluster pairs of |Delta_q(x,a,b) - Delta_f(x,a,b)|.
double LocalCorrectnessResidual(const RewardRegressor& f, const Environment& env,
                                const ContextSet& contexts, const ClusterMap& cm);

}  // namespace potec

#endif  // POTEC_REWARD_MODELS_HPP
