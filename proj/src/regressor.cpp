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

#include "potec/regressor.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "potec/error.hpp"

namespace potec {

const char* RegressorKindName(RegressorKind kind) {
  switch (kind) {
    case RegressorKind::kConventional: return "conventional";
    case RegressorKind::kPairwise: return "pairwise";
    case RegressorKind::kBaseline: return "baseline";
    case RegressorKind::kCombined: return "combined";
    case RegressorKind::kOracleNoise: return "oracle_noise";
    case RegressorKind::kFunction: return "function";
  }
  return "unknown";
}

void RewardRegressor::PredictAll(std::span<const double> x, std::span<double> out) const {
  for (std::size_t a = 0; a < out.size(); ++a) out[a] = Predict(x, a);
}

std::vector<double> RewardRegressor::PredictAll(std::span<const double> x) const {
  std::vector<double> out(n_actions());
  PredictAll(x, out);
  return out;
}

// ---------------------------------------------------------------------------

ActionMlpRegressor::ActionMlpRegressor(RegressorKind kind, Mlp net, std::size_t context_dim,
                                       std::size_t n_actions)
    : kind_(kind), net_(std::move(net)), dim_(context_dim), n_actions_(n_actions) {
  Require(net_.input_size() == dim_ + n_actions_ && net_.output_size() == 1, ErrorCode::kConfig,
          "action regressor network must map x (+) onehot(a) to a scalar");
}

double ActionMlpRegressor::Predict(std::span<const double> x, std::size_t a) const {
  Require(a < n_actions_, ErrorCode::kContract, "action index out of range");
  std::vector<double> input(dim_ + n_actions_, 0.0);
  std::copy(x.begin(), x.end(), input.begin());
  input[dim_ + a] = 1.0;
  return net_.Forward(input)[0];
}

void ActionMlpRegressor::PredictAll(std::span<const double> x, std::span<double> out) const {
  std::vector<double> input(dim_ + n_actions_, 0.0);
  std::copy(x.begin(), x.end(), input.begin());
  Mlp::Trace trace;
  for (std::size_t a = 0; a < n_actions_; ++a) {
    input[dim_ + a] = 1.0;
    net_.Forward(input, trace);
    out[a] = trace.activations.back()[0];
    input[dim_ + a] = 0.0;
  }
}

// ---------------------------------------------------------------------------

BaselineRegressor::BaselineRegressor(Mlp net, std::size_t context_dim, ClusterMap cm)
    : net_(std::move(net)), dim_(context_dim), cm_(std::move(cm)) {
  Require(net_.input_size() == dim_ + cm_.n_clusters() && net_.output_size() == 1,
          ErrorCode::kConfig, "baseline network must map x (+) onehot(c) to a scalar");
}

double BaselineRegressor::PredictCluster(std::span<const double> x, std::size_t c) const {
  std::vector<double> input(dim_ + cm_.n_clusters(), 0.0);
  std::copy(x.begin(), x.end(), input.begin());
  input[dim_ + c] = 1.0;
  return net_.Forward(input)[0];
}

double BaselineRegressor::Predict(std::span<const double> x, std::size_t a) const {
  return PredictCluster(x, cm_.cluster_of(a));
}

void BaselineRegressor::PredictAll(std::span<const double> x, std::span<double> out) const {
  for (std::size_t c = 0; c < cm_.n_clusters(); ++c) {
    const double v = PredictCluster(x, c);
    for (std::size_t a : cm_.members(c)) out[a] = v;
  }
}

// ---------------------------------------------------------------------------

CombinedRegressor::CombinedRegressor(RegressorPtr baseline, RegressorPtr pairwise)
    : baseline_(std::move(baseline)), pairwise_(std::move(pairwise)) {
  Require(baseline_ && pairwise_ && baseline_->n_actions() == pairwise_->n_actions(),
          ErrorCode::kConfig, "combined model parts must cover the same actions");
}

double CombinedRegressor::Predict(std::span<const double> x, std::size_t a) const {
  return baseline_->Predict(x, a) + pairwise_->Predict(x, a);
}

void CombinedRegressor::PredictAll(std::span<const double> x, std::span<double> out) const {
  std::vector<double> h(out.size());
  baseline_->PredictAll(x, out);
  pairwise_->PredictAll(x, h);
  for (std::size_t a = 0; a < out.size(); ++a) out[a] += h[a];
}

// ---------------------------------------------------------------------------

NoisyOracleRegressor::NoisyOracleRegressor(EnvironmentPtr env, double sigma_cluster,
                                           double sigma_action, std::uint64_t seed)
    : env_(std::move(env)) {
  Require(sigma_cluster >= 0.0 && sigma_action >= 0.0, ErrorCode::kConfig,
          "noise standard deviations must be nonnegative");
  Rng rng = MakeRng({seed, 0x6e6f6973ULL});
  std::normal_distribution<double> z(0.0, 1.0);
  cluster_offsets_.resize(env_->cluster_map().n_clusters());
  for (double& e : cluster_offsets_) e = sigma_cluster * z(rng);
  action_offsets_.resize(env_->n_actions());
  for (double& e : action_offsets_) e = sigma_action * z(rng);
}

double NoisyOracleRegressor::Predict(std::span<const double> x, std::size_t a) const {
  return env_->ExpectedReward(x, a) + cluster_offsets_[env_->cluster_map().cluster_of(a)] +
         action_offsets_[a];
}

void NoisyOracleRegressor::PredictAll(std::span<const double> x, std::span<double> out) const {
  env_->ExpectedRewards(x, out);
  const ClusterMap& cm = env_->cluster_map();
  for (std::size_t a = 0; a < out.size(); ++a) {
    out[a] += cluster_offsets_[cm.cluster_of(a)] + action_offsets_[a];
  }
}

// ---------------------------------------------------------------------------

TabulatedRegressor::TabulatedRegressor(RegressorPtr inner, const ContextSet& contexts)
    : inner_(std::move(inner)) {
  for (std::size_t i = 0; i < contexts.size(); ++i) Add(contexts[i]);
}

TabulatedRegressor::TabulatedRegressor(RegressorPtr inner, std::span<const double> contexts,
                                       std::size_t dim)
    : inner_(std::move(inner)) {
  for (std::size_t i = 0; dim > 0 && i + dim <= contexts.size(); i += dim) {
    Add(contexts.subspan(i, dim));
  }
}

void TabulatedRegressor::Add(std::span<const double> x) {
  const std::uint64_t h = HashBits(x);
  if (rows_.count(h)) return;
  const std::size_t row = table_.size() / inner_->n_actions();
  table_.resize(table_.size() + inner_->n_actions());
  inner_->PredictAll(x, {table_.data() + row * inner_->n_actions(), inner_->n_actions()});
  rows_.emplace(h, row);
}

const double* TabulatedRegressor::Find(std::span<const double> x) const {
  auto it = rows_.find(HashBits(x));
  return it == rows_.end() ? nullptr : table_.data() + it->second * inner_->n_actions();
}

double TabulatedRegressor::Predict(std::span<const double> x, std::size_t a) const {
  if (const double* row = Find(x)) return row[a];
  return inner_->Predict(x, a);
}

void TabulatedRegressor::PredictAll(std::span<const double> x, std::span<double> out) const {
  if (const double* row = Find(x)) {
    std::copy_n(row, inner_->n_actions(), out.begin());
    return;
  }
  inner_->PredictAll(x, out);
}

// ---------------------------------------------------------------------------

RegressorPtr ExactModel(EnvironmentPtr env) {
  const std::size_t n = env->n_actions();
  return std::make_shared<FunctionRegressor>(
      n, [env](std::span<const double> x, std::size_t a) { return env->ExpectedReward(x, a); });
}

RegressorPtr MakeNoisyRegressionModel(EnvironmentPtr env, double sigma_cluster,
                                      double sigma_action, std::uint64_t seed) {
  return std::make_shared<NoisyOracleRegressor>(std::move(env), sigma_cluster, sigma_action, seed);
}

// ---------------------------------------------------------------------------

void WriteRegressor(const RewardRegressor& model, std::ostream& out) {
  if (const auto* m = dynamic_cast<const ActionMlpRegressor*>(&model)) {
    out << "regressor," << RegressorKindName(m->kind()) << '\n'
        << "context_dim," << m->context_dim() << '\n'
        << "n_actions," << m->n_actions() << '\n';
    WriteMlp(m->net(), out);
    return;
  }
  if (const auto* b = dynamic_cast<const BaselineRegressor*>(&model)) {
    out << "regressor,baseline\n"
        << "context_dim," << b->net().input_size() - b->cluster_map().n_clusters() << '\n'
        << "n_clusters," << b->cluster_map().n_clusters() << '\n'
        << "assignment";
    for (std::size_t c : b->cluster_map().assignment()) out << ',' << c;
    out << '\n';
    WriteMlp(b->net(), out);
    return;
  }
  if (const auto* f = dynamic_cast<const CombinedRegressor*>(&model)) {
    out << "regressor,combined\n";
    WriteRegressor(*f->baseline(), out);
    WriteRegressor(*f->pairwise(), out);
    return;
  }
  Fail(ErrorCode::kUnsupported,
       std::string("cannot serialize a ") + RegressorKindName(model.kind()) + " regressor");
}

namespace {

std::size_t ReadCount(std::istream& in, const std::string& key) {
  std::string line;
  if (!std::getline(in, line) || line.rfind(key + ",", 0) != 0) {
    Fail(ErrorCode::kIo, "expected '" + key + "' in regressor blob");
  }
  return static_cast<std::size_t>(std::stoull(line.substr(key.size() + 1)));
}

}  // namespace

RegressorPtr ReadRegressor(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("regressor,", 0) != 0) {
    Fail(ErrorCode::kIo, "regressor blob must start with 'regressor,<kind>'");
  }
  const std::string kind = line.substr(10);
  if (kind == "conventional" || kind == "pairwise") {
    const std::size_t dim = ReadCount(in, "context_dim");
    const std::size_t n_actions = ReadCount(in, "n_actions");
    Mlp net = ReadMlp(in);
    return std::make_shared<ActionMlpRegressor>(
        kind == "pairwise" ? RegressorKind::kPairwise : RegressorKind::kConventional,
        std::move(net), dim, n_actions);
  }
  if (kind == "baseline") {
    const std::size_t dim = ReadCount(in, "context_dim");
    const std::size_t n_clusters = ReadCount(in, "n_clusters");
    if (!std::getline(in, line) || line.rfind("assignment", 0) != 0) {
      Fail(ErrorCode::kIo, "expected cluster assignment in regressor blob");
    }
    std::vector<std::size_t> assignment;
    std::istringstream fields(line.substr(10));
    char comma;
    std::size_t c;
    while (fields >> comma >> c) assignment.push_back(c);
    Mlp net = ReadMlp(in);
    return std::make_shared<BaselineRegressor>(std::move(net), dim,
                                               ClusterMap(std::move(assignment), n_clusters));
  }
  if (kind == "combined") {
    RegressorPtr baseline = ReadRegressor(in);
    RegressorPtr pairwise = ReadRegressor(in);
    return std::make_shared<CombinedRegressor>(std::move(baseline), std::move(pairwise));
  }
  Fail(ErrorCode::kIo, "unknown regressor kind '" + kind + "'");
}

}  // namespace potec
