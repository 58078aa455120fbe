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

#include "potec/reward_models.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <numeric>
#include <ostream>
#include <string>
#include <unordered_map>

#include "potec/error.hpp"

namespace potec {

void PairDataset::Add(std::span<const double> x, std::size_t a, std::size_t b, double r_a,
                      double r_b) {
  Require(x.size() == dim_, ErrorCode::kContract, "pair context has wrong dimension");
  Require(a != b, ErrorCode::kContract, "pair actions must differ");
  if (a > b) {
    std::swap(a, b);
    std::swap(r_a, r_b);
  }
  contexts_.insert(contexts_.end(), x.begin(), x.end());
  a_.push_back(a);
  b_.push_back(b);
  r_a_.push_back(r_a);
  r_b_.push_back(r_b);
}

PairDataset BuildPairDataset(const LoggedDataset& data, const ClusterMap& cm) {
  PairDataset pairs(data.context_dim());
  // Records grouped by exact context, in order of first appearance.
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> buckets;
  std::vector<std::uint64_t> order;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::uint64_t h = HashBits(data.context(i));
    auto [it, inserted] = buckets.try_emplace(h);
    if (inserted) order.push_back(h);
    it->second.push_back(i);
  }
  for (std::uint64_t h : order) {
    const std::vector<std::size_t>& group = buckets[h];
    for (std::size_t u = 0; u < group.size(); ++u) {
      const std::size_t i = group[u];
      for (std::size_t v = u + 1; v < group.size(); ++v) {
        const std::size_t j = group[v];
        const auto xi = data.context(i);
        const auto xj = data.context(j);
        if (!std::equal(xi.begin(), xi.end(), xj.begin())) continue;
        const std::size_t a = data.action(i);
        const std::size_t b = data.action(j);
        if (a == b || cm.cluster_of(a) != cm.cluster_of(b)) continue;
        pairs.Add(xi, a, b, data.reward(i), data.reward(j));
      }
    }
  }
  return pairs;
}

void WritePairCsv(const PairDataset& pairs, std::ostream& out) {
  std::string line;
  for (std::size_t d = 0; d < pairs.context_dim(); ++d) line += "ctx_" + std::to_string(d) + ",";
  line += "a,b,r_a,r_b\n";
  out << line;
  char buf[32];
  auto append = [&](double v) {
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    line.append(buf, end);
  };
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    line.clear();
    for (double v : pairs.context(i)) {
      append(v);
      line += ',';
    }
    line += std::to_string(pairs.a(i)) + ',' + std::to_string(pairs.b(i)) + ',';
    append(pairs.r_a(i));
    line += ',';
    append(pairs.r_b(i));
    line += '\n';
    out << line;
  }
}

namespace {

// Shared minibatch loop. batch_grad(indices, grad) accumulates the mean-loss
// gradient of one minibatch.
void MinibatchDescent(Mlp& net, std::size_t n, const RegressionConfig& config,
                      const std::function<void(std::span<const std::size_t>, std::span<double>)>&
                          batch_grad) {
  Require(config.batch_size >= 1, ErrorCode::kConfig, "regression batch size must be positive");
  Rng rng = MakeRng({config.seed, 0x66697400ULL});
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  AdamState state;
  std::vector<double> grad(net.n_params());
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t end = std::min(n, start + config.batch_size);
      std::fill(grad.begin(), grad.end(), 0.0);
      batch_grad({perm.data() + start, end - start}, grad);
      AdamStep(net.mutable_params(), grad, state, config.adam);
    }
  }
}

std::vector<std::size_t> LayerSizes(std::size_t input, const std::vector<std::size_t>& hidden) {
  std::vector<std::size_t> sizes{input};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(1);
  return sizes;
}

void SetOutputBias(Mlp& net, double value) { net.mutable_params().back() = value; }

// Writes x (+) onehot(k) into buf, whose onehot block starts at dim.
void FillInput(std::span<double> buf, std::span<const double> x, std::size_t k, std::size_t dim) {
  std::fill(buf.begin() + dim, buf.end(), 0.0);
  std::copy(x.begin(), x.end(), buf.begin());
  buf[dim + k] = 1.0;
}

}  // namespace

RegressorPtr FitPairwise(const PairDataset& pairs, std::size_t n_actions,
                         const RegressionConfig& config) {
  if (pairs.empty()) {
    Fail(ErrorCode::kConfig, "pair dataset is empty; use the conventional regression fallback");
  }
  const std::size_t dim = pairs.context_dim();
  Mlp net = Mlp::Initialized(LayerSizes(dim + n_actions, config.hidden), config.seed);
  std::vector<double> in_a(dim + n_actions), in_b(dim + n_actions);
  Mlp::Trace ta, tb;
  MinibatchDescent(net, pairs.size(), config,
                   [&](std::span<const std::size_t> batch, std::span<double> grad) {
                     const double scale = 2.0 / static_cast<double>(batch.size());
                     for (std::size_t i : batch) {
                       FillInput(in_a, pairs.context(i), pairs.a(i), dim);
                       FillInput(in_b, pairs.context(i), pairs.b(i), dim);
                       net.Forward(in_a, ta);
                       net.Forward(in_b, tb);
                       const double err = (ta.activations.back()[0] - tb.activations.back()[0]) -
                                          (pairs.r_a(i) - pairs.r_b(i));
                       const double up = scale * err;
                       net.Backward(ta, std::span<const double>(&up, 1), grad);
                       const double down = -up;
                       net.Backward(tb, std::span<const double>(&down, 1), grad);
                     }
                   });
  return std::make_shared<ActionMlpRegressor>(RegressorKind::kPairwise, std::move(net), dim,
                                              n_actions);
}

RegressorPtr FitBaseline(const LoggedDataset& data, const RewardRegressor& h, const ClusterMap& cm,
                         const RegressionConfig& config) {
  Require(!data.empty(), ErrorCode::kConfig, "baseline regression needs data");
  const std::size_t dim = data.context_dim();
  const std::size_t k = cm.n_clusters();
  std::vector<double> target(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    target[i] = data.reward(i) - h.Predict(data.context(i), data.action(i));
  }
  Mlp net = Mlp::Initialized(LayerSizes(dim + k, config.hidden), config.seed);
  SetOutputBias(net, std::accumulate(target.begin(), target.end(), 0.0) /
                         static_cast<double>(target.size()));
  std::vector<double> input(dim + k);
  Mlp::Trace trace;
  MinibatchDescent(net, data.size(), config,
                   [&](std::span<const std::size_t> batch, std::span<double> grad) {
                     const double scale = 2.0 / static_cast<double>(batch.size());
                     for (std::size_t i : batch) {
                       FillInput(input, data.context(i), cm.cluster_of(data.action(i)), dim);
                       net.Forward(input, trace);
                       const double up = scale * (trace.activations.back()[0] - target[i]);
                       net.Backward(trace, std::span<const double>(&up, 1), grad);
                     }
                   });
  return std::make_shared<BaselineRegressor>(std::move(net), dim, cm);
}

RegressorPtr FitConventional(const LoggedDataset& data, const RegressionConfig& config) {
  Require(!data.empty(), ErrorCode::kConfig, "conventional regression needs data");
  const std::size_t dim = data.context_dim();
  const std::size_t n_actions = data.cluster_map().n_actions();
  Mlp net = Mlp::Initialized(LayerSizes(dim + n_actions, config.hidden), config.seed);
  SetOutputBias(net, std::accumulate(data.rewards().begin(), data.rewards().end(), 0.0) /
                         static_cast<double>(data.size()));
  std::vector<double> input(dim + n_actions);
  Mlp::Trace trace;
  MinibatchDescent(net, data.size(), config,
                   [&](std::span<const std::size_t> batch, std::span<double> grad) {
                     const double scale = 2.0 / static_cast<double>(batch.size());
                     for (std::size_t i : batch) {
                       FillInput(input, data.context(i), data.action(i), dim);
                       net.Forward(input, trace);
                       const double up = scale * (trace.activations.back()[0] - data.reward(i));
                       net.Backward(trace, std::span<const double>(&up, 1), grad);
                     }
                   });
  return std::make_shared<ActionMlpRegressor>(RegressorKind::kConventional, std::move(net), dim,
                                              n_actions);
}

double FClusterExpectation(const RewardRegressor& f, const SecondStageRule& second,
                           std::span<const double> x, std::size_t c) {
  const ClusterMap& cm = second.cluster_map();
  Require(c < cm.n_clusters(), ErrorCode::kContract, "cluster index out of range");
  const std::vector<double> cond = second.Conditionals(x);
  double value = 0.0;
  for (std::size_t a : cm.members(c)) {
    if (cond[a] != 0.0) value += cond[a] * f.Predict(x, a);
  }
  return value;
}

double LocalCorrectnessResidual(const RewardRegressor& f, const Environment& env,
                                const ContextSet& contexts, const ClusterMap& cm) {
  Require(f.n_actions() == cm.n_actions() && env.n_actions() == cm.n_actions(),
          ErrorCode::kContract, "model, environment and cluster map disagree on actions");
  std::vector<double> q(cm.n_actions()), fv(cm.n_actions());
  double worst = 0.0;
  for (std::size_t i = 0; i < contexts.size(); ++i) {
    env.ExpectedRewards(contexts[i], q);
    f.PredictAll(contexts[i], fv);
    // max_{a,b} |d_a - d_b| with d = q - f is the range of d in the cluster.
    for (std::size_t c = 0; c < cm.n_clusters(); ++c) {
      double lo = INFINITY, hi = -INFINITY;
      for (std::size_t a : cm.members(c)) {
        const double d = q[a] - fv[a];
        lo = std::min(lo, d);
        hi = std::max(hi, d);
      }
      worst = std::max(worst, hi - lo);
    }
  }
  return worst;
}

}  // namespace potec
