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

#include "potec/policy.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "potec/error.hpp"

namespace potec {

const char* OutcomeSpaceName(OutcomeSpace space) {
  return space == OutcomeSpace::kActions ? "actions" : "clusters";
}

SoftmaxPolicy::SoftmaxPolicy(Mlp net, OutcomeSpace space, double temperature)
    : net_(std::move(net)), space_(space), temperature_(temperature) {
  Require(temperature_ > 0.0, ErrorCode::kConfig, "policy temperature must be positive");
}

SoftmaxPolicy SoftmaxPolicy::Initialized(std::size_t context_dim,
                                         const std::vector<std::size_t>& hidden,
                                         std::size_t n_outcomes, OutcomeSpace space,
                                         std::uint64_t seed) {
  std::vector<std::size_t> sizes{context_dim};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(n_outcomes);
  return SoftmaxPolicy(Mlp::Initialized(std::move(sizes), seed), space);
}

std::vector<double> SoftmaxPolicy::Probs(std::span<const double> x) const {
  std::vector<double> out(n_outcomes());
  Probs(x, out);
  return out;
}

void SoftmaxPolicy::Probs(std::span<const double> x, std::span<double> out) const {
  Mlp::Trace trace;
  Probs(x, trace, out);
}

void SoftmaxPolicy::Probs(std::span<const double> x, Mlp::Trace& trace,
                          std::span<double> out) const {
  Require(out.size() == n_outcomes(), ErrorCode::kContract, "probability buffer has wrong size");
  net_.Forward(x, trace);
  const std::vector<double>& logits = trace.activations.back();
  std::copy(logits.begin(), logits.end(), out.begin());
  SoftmaxInPlace(out, temperature_);
}

GradientVector SoftmaxPolicy::Score(std::span<const double> x, std::size_t k) const {
  Require(k < n_outcomes(), ErrorCode::kContract, "outcome index out of range");
  Mlp::Trace trace;
  std::vector<double> probs(n_outcomes());
  Probs(x, trace, probs);
  std::vector<double> coeffs(n_outcomes(), 0.0);
  coeffs[k] = 1.0;
  GradientVector grad(n_params(), 0.0);
  AccumulateWeightedScore(trace, probs, coeffs, grad);
  return grad;
}

void SoftmaxPolicy::AccumulateWeightedScore(const Mlp::Trace& trace, std::span<const double> probs,
                                            std::span<const double> coeffs,
                                            std::span<double> grad, double scale) const {
  // sum_k c_k (e_k - pi) / tau, the logit gradient of sum_k c_k log pi_k.
  double total = 0.0;
  for (double c : coeffs) total += c;
  std::vector<double> upstream(coeffs.size());
  for (std::size_t k = 0; k < coeffs.size(); ++k) {
    upstream[k] = (coeffs[k] - total * probs[k]) / temperature_;
  }
  net_.Backward(trace, upstream, grad, scale);
}

ActionPolicy SoftmaxPolicy::AsActionPolicy() const {
  Require(space_ == OutcomeSpace::kActions, ErrorCode::kContract,
          "cluster policies need a second stage to act");
  auto self = std::make_shared<const SoftmaxPolicy>(*this);
  return [self](std::span<const double> x, std::span<double> probs) { self->Probs(x, probs); };
}

void WritePolicy(const SoftmaxPolicy& policy, std::ostream& out) {
  std::ostringstream t;
  t.precision(17);
  t << policy.temperature();
  out << "policy," << OutcomeSpaceName(policy.space()) << '\n'
      << "temperature," << t.str() << '\n';
  WriteMlp(policy.net(), out);
}

SoftmaxPolicy ReadPolicy(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("policy,", 0) != 0) {
    Fail(ErrorCode::kIo, "policy blob must start with 'policy,<space>'");
  }
  const std::string space = line.substr(7);
  if (space != "actions" && space != "clusters") Fail(ErrorCode::kIo, "unknown outcome space");
  if (!std::getline(in, line) || line.rfind("temperature,", 0) != 0) {
    Fail(ErrorCode::kIo, "expected a temperature line in policy blob");
  }
  const double temperature = std::stod(line.substr(12));
  Mlp net = ReadMlp(in);
  return SoftmaxPolicy(std::move(net),
                       space == "actions" ? OutcomeSpace::kActions : OutcomeSpace::kClusters,
                       temperature);
}

// ---------------------------------------------------------------------------

std::vector<double> SecondStageRule::Conditionals(std::span<const double> x) const {
  std::vector<double> out(cluster_map().n_actions());
  Conditionals(x, out);
  return out;
}

std::vector<double> SecondStageRule::ExpectOverClusters(std::span<const double> x,
                                                        std::span<const double> values) const {
  const ClusterMap& cm = cluster_map();
  const std::vector<double> cond = Conditionals(x);
  std::vector<double> out(cm.n_clusters(), 0.0);
  for (std::size_t a = 0; a < cm.n_actions(); ++a) {
    if (cond[a] != 0.0) out[cm.cluster_of(a)] += cond[a] * values[a];
  }
  return out;
}

SecondStagePolicy::SecondStagePolicy(RegressorPtr h_model, ClusterMap cm)
    : h_(std::move(h_model)), cm_(std::move(cm)) {
  Require(h_ != nullptr && h_->n_actions() == cm_.n_actions(), ErrorCode::kConfig,
          "second stage model must cover every action of the cluster map");
}

std::vector<std::size_t> SecondStagePolicy::Choices(std::span<const double> x) const {
  const std::vector<double> h = h_->PredictAll(x);
  std::vector<std::size_t> out(cm_.n_clusters());
  for (std::size_t c = 0; c < cm_.n_clusters(); ++c) {
    auto members = cm_.members(c);
    Require(!members.empty(), ErrorCode::kContract, "empty cluster in second stage");
    std::size_t best = members[0];
    // members are increasing, so strict > keeps the lowest index on ties
    for (std::size_t a : members) {
      if (h[a] > h[best]) best = a;
    }
    out[c] = best;
  }
  return out;
}

std::size_t SecondStagePolicy::Choice(std::span<const double> x, std::size_t c) const {
  Require(c < cm_.n_clusters(), ErrorCode::kContract, "cluster index out of range");
  return Choices(x)[c];
}

void SecondStagePolicy::Conditionals(std::span<const double> x, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t a : Choices(x)) out[a] = 1.0;
}

void UniformSecondStage::Conditionals(std::span<const double>, std::span<double> out) const {
  for (std::size_t a = 0; a < cm_.n_actions(); ++a) {
    out[a] = 1.0 / static_cast<double>(cm_.members(cm_.cluster_of(a)).size());
  }
}

// ---------------------------------------------------------------------------

OverallPolicy::OverallPolicy(SoftmaxPolicy first, SecondStagePtr second)
    : first_(std::move(first)), second_(std::move(second)) {
  Require(second_ != nullptr, ErrorCode::kConfig, "overall policy needs a second stage");
  Require(first_.space() == OutcomeSpace::kClusters &&
              first_.n_outcomes() == second_->cluster_map().n_clusters(),
          ErrorCode::kConfig, "first stage must be a policy over the second stage's clusters");
}

std::vector<double> OverallPolicy::Probs(std::span<const double> x) const {
  std::vector<double> out(n_actions());
  Probs(x, out);
  return out;
}

void OverallPolicy::Probs(std::span<const double> x, std::span<double> out) const {
  const ClusterMap& cm = second_->cluster_map();
  const std::vector<double> first = first_.Probs(x);
  second_->Conditionals(x, out);
  for (std::size_t a = 0; a < out.size(); ++a) out[a] *= first[cm.cluster_of(a)];
}

std::pair<std::size_t, std::size_t> OverallPolicy::SampleAction(std::span<const double> x,
                                                                Rng& rng) const {
  const std::size_t c = SampleIndex(first_.Probs(x), rng);
  const std::vector<double> cond = second_->Conditionals(x);
  const auto members = second_->cluster_map().members(c);
  std::vector<double> within(members.size());
  for (std::size_t i = 0; i < members.size(); ++i) within[i] = cond[members[i]];
  return {c, members[SampleIndex(within, rng)]};
}

ActionPolicy OverallPolicy::AsActionPolicy() const {
  auto self = std::make_shared<const OverallPolicy>(*this);
  return [self](std::span<const double> x, std::span<double> probs) { self->Probs(x, probs); };
}

ActionPolicy RegressionPolicy(RegressorPtr q_hat, double temperature) {
  Require(temperature > 0.0, ErrorCode::kConfig, "temperature must be positive");
  return [q_hat = std::move(q_hat), temperature](std::span<const double> x,
                                                  std::span<double> probs) {
    q_hat->PredictAll(x, probs);
    SoftmaxInPlace(probs, temperature);
  };
}

}  // namespace potec
