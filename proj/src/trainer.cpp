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

#include "potec/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "potec/error.hpp"

namespace potec {

void WriteCurveCsv(const LearningCurve& curve, std::ostream& out) {
  out << "epoch,value,grad_norm\n";
  out.precision(17);
  for (const CurvePoint& p : curve.points) {
    out << p.epoch << ',' << p.value << ',' << p.grad_norm << '\n';
  }
}

// ---------------------------------------------------------------------------

ValueTable::ValueTable(const Environment& env, ContextSet contexts)
    : contexts_(std::move(contexts)), n_actions_(env.n_actions()) {
  q_.resize(contexts_.size() * n_actions_);
  std::vector<double> pi0(n_actions_);
  for (std::size_t i = 0; i < contexts_.size(); ++i) {
    std::span<double> row(q_.data() + i * n_actions_, n_actions_);
    env.ExpectedRewards(contexts_[i], row);
    env.LoggingProbs(contexts_[i], pi0);
    logging_value_ += contexts_.weights[i] * Dot(pi0, row);
  }
}

double ValueTable::Value(const ActionPolicy& policy) const {
  std::vector<double> probs(n_actions_);
  double value = 0.0;
  for (std::size_t i = 0; i < contexts_.size(); ++i) {
    policy(contexts_[i], probs);
    if (!IsSimplex(probs)) Fail(ErrorCode::kContract, "policy output is not a simplex");
    value += contexts_.weights[i] * Dot(probs, rewards(i));
  }
  return value;
}

double ValueTable::Value(const SoftmaxPolicy& action_policy) const {
  Require(action_policy.space() == OutcomeSpace::kActions &&
              action_policy.n_outcomes() == n_actions_,
          ErrorCode::kContract, "value table needs an action policy");
  std::vector<double> probs(n_actions_);
  double value = 0.0;
  for (std::size_t i = 0; i < contexts_.size(); ++i) {
    action_policy.Probs(contexts_[i], probs);
    value += contexts_.weights[i] * Dot(probs, rewards(i));
  }
  return value;
}

std::vector<double> ValueTable::ClusterValues(const SecondStageRule& second) const {
  const ClusterMap& cm = second.cluster_map();
  std::vector<double> out(contexts_.size() * cm.n_clusters(), 0.0);
  std::vector<double> cond(n_actions_);
  for (std::size_t i = 0; i < contexts_.size(); ++i) {
    second.Conditionals(contexts_[i], cond);
    const auto q = rewards(i);
    double* row = out.data() + i * cm.n_clusters();
    for (std::size_t a = 0; a < n_actions_; ++a) {
      if (cond[a] != 0.0) row[cm.cluster_of(a)] += cond[a] * q[a];
    }
  }
  return out;
}

double ValueTable::FirstStageValue(const SoftmaxPolicy& first,
                                   std::span<const double> cluster_values) const {
  const std::size_t k = first.n_outcomes();
  Require(cluster_values.size() == contexts_.size() * k, ErrorCode::kContract,
          "cluster value table does not match the first stage");
  std::vector<double> probs(k);
  double value = 0.0;
  for (std::size_t i = 0; i < contexts_.size(); ++i) {
    first.Probs(contexts_[i], probs);
    value += contexts_.weights[i] * Dot(probs, cluster_values.subspan(i * k, k));
  }
  return value;
}

// ---------------------------------------------------------------------------

namespace {

GradientVector EstimateGradient(const SoftmaxPolicy& policy, const LoggedDataset& data,
                                EstimatorKind kind, const EstimatorInputs& in,
                                std::span<const std::size_t> batch) {
  switch (kind) {
    case EstimatorKind::kIps:
      return IpsGradient(data, policy, batch);
    case EstimatorKind::kDr:
      return DrGradient(data, policy, *in.q_hat, batch);
    case EstimatorKind::kSips:
      return SipsGradient(data, policy, *in.selector, batch);
    case EstimatorKind::kPotec:
      return PotecGradient(data, policy, *in.second, *in.f_hat, in.cluster_map,
                           in.cluster_propensities, batch);
    case EstimatorKind::kPotecOneStage:
      return PotecOneStageGradient(data, policy, *in.f_hat, in.cluster_map,
                                   in.cluster_propensities, batch);
  }
  Fail(ErrorCode::kConfig, "unknown estimator");
}

void CheckInputs(EstimatorKind kind, const EstimatorInputs& in) {
  switch (kind) {
    case EstimatorKind::kIps:
      return;
    case EstimatorKind::kDr:
      Require(in.q_hat != nullptr, ErrorCode::kConfig, "dr needs a reward model");
      return;
    case EstimatorKind::kSips:
      Require(in.selector.has_value(), ErrorCode::kConfig, "sips needs an action selector");
      return;
    case EstimatorKind::kPotec:
      Require(in.second != nullptr, ErrorCode::kConfig, "potec needs a second stage");
      [[fallthrough]];
    case EstimatorKind::kPotecOneStage:
      Require(in.f_hat != nullptr, ErrorCode::kConfig, "potec needs a regression model");
      Require(in.cluster_map.n_clusters() > 0, ErrorCode::kConfig, "potec needs a cluster map");
      return;
  }
}

std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t tag) { return MakeRng({seed, tag})(); }

}  // namespace

TrainResult TrainPolicy(SoftmaxPolicy policy, const LoggedDataset& data, const TrainConfig& config,
                        const EstimatorInputs& inputs, const PolicyEvaluator& evaluate) {
  if (EstimatorSpace(config.estimator) != policy.space()) {
    Fail(ErrorCode::kConfig, std::string("estimator '") + EstimatorName(config.estimator) +
                                 "' cannot train a policy over " +
                                 OutcomeSpaceName(policy.space()));
  }
  Require(config.batch_size >= 1, ErrorCode::kConfig, "batch size must be positive");
  Require(config.learning_rate >= 0.0 && config.weight_decay >= 0.0, ErrorCode::kConfig,
          "learning rate and weight decay must be nonnegative");
  Require(!data.empty(), ErrorCode::kConfig, "training data is empty");
  CheckInputs(config.estimator, inputs);

  const double nan = std::numeric_limits<double>::quiet_NaN();
  TrainResult result{std::move(policy), {}};
  SoftmaxPolicy& p = result.policy;
  result.curve.points.push_back({0, evaluate ? evaluate(p) : nan, 0.0});

  Rng rng = MakeRng({config.seed, 0x7368756666ULL});
  std::vector<std::size_t> perm(data.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  AdamState state;
  const AdamHyper hyper{config.learning_rate, 0.9, 0.999, 1e-8, config.weight_decay};
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(perm.begin(), perm.end(), rng);
    double norm_sum = 0.0;
    std::size_t n_batches = 0;
    for (std::size_t start = 0; start < perm.size(); start += config.batch_size) {
      const std::size_t end = std::min(perm.size(), start + config.batch_size);
      GradientVector g = EstimateGradient(p, data, config.estimator, inputs,
                                          {perm.data() + start, end - start});
      norm_sum += Norm2(g);
      ++n_batches;
      for (double& v : g) v = -v;  // ascent
      AdamStep(p.mutable_net().mutable_params(), g, state, hyper);
    }
    result.curve.points.push_back(
        {epoch, evaluate ? evaluate(p) : nan, norm_sum / static_cast<double>(n_batches)});
  }
  return result;
}

// ---------------------------------------------------------------------------

TwoStepModel FitTwoStepModel(const LoggedDataset& data, const ClusterMap& cm,
                             const RegressionConfig& config, double fallback_factor) {
  Require(!data.empty(), ErrorCode::kConfig, "regression needs data");
  TwoStepModel model;
  const PairDataset pairs = BuildPairDataset(data, cm);
  model.n_pairs = pairs.size();
  const std::size_t last_layer = (config.hidden.empty() ? data.context_dim() + cm.n_actions()
                                                        : config.hidden.back()) + 1;
  if (static_cast<double>(pairs.size()) < fallback_factor * static_cast<double>(last_layer)) {
    model.used_fallback = true;
    model.f = FitConventional(data, config);
    model.h = model.f;
    return model;
  }
  model.h = FitPairwise(pairs, cm.n_actions(), config);
  RegressionConfig baseline_config = config;
  baseline_config.seed = DeriveSeed(config.seed, 0x62617365ULL);
  RegressorPtr g = FitBaseline(data, *model.h, cm, baseline_config);
  model.f = std::make_shared<CombinedRegressor>(g, model.h);
  return model;
}

PotecResult RunPotec(const LoggedDataset& data, const ClusterMap& cm, const Environment& env,
                     const PotecConfig& config, const ValueTable* evaluation,
                     const ContextSet* probe) {
  Require(!data.empty(), ErrorCode::kConfig, "POTEC needs a nonempty dataset");
  Require(cm.n_actions() == env.n_actions(), ErrorCode::kConfig,
          "cluster map does not match the environment");
  PotecDiagnostics diag;
  RegressorPtr f, h;
  if (config.injected_f) {
    f = config.injected_f;
    h = config.injected_h ? config.injected_h : config.injected_f;
    diag.injected_model = true;
  } else {
    const TwoStepModel model = FitTwoStepModel(data, cm, config.regression, config.fallback_factor);
    f = model.f;
    h = model.h;
    diag.n_pairs = model.n_pairs;
    diag.used_fallback = model.used_fallback;
    if (model.used_fallback) {
      diag.warning = "insufficient pairwise data (" + std::to_string(model.n_pairs) +
                     " pairs); using the conventional regression model";
    }
  }
  diag.local_correctness_residual =
      probe ? LocalCorrectnessResidual(*f, env, *probe, cm) : std::numeric_limits<double>::quiet_NaN();

  // Frozen models, memoized on the training contexts.
  auto f_tab = std::make_shared<TabulatedRegressor>(f, data.contexts(), data.context_dim());
  RegressorPtr h_tab =
      h == f ? RegressorPtr(f_tab)
             : std::make_shared<TabulatedRegressor>(h, data.contexts(), data.context_dim());
  auto second = std::make_shared<SecondStagePolicy>(h_tab, cm);

  EstimatorInputs inputs;
  inputs.f_hat = f_tab;
  inputs.second = second;
  inputs.cluster_map = cm;
  inputs.cluster_propensities = ClusterPropensities(env, data, cm);

  TrainConfig train = config.train;
  train.estimator = EstimatorKind::kPotec;
  SoftmaxPolicy first =
      SoftmaxPolicy::Initialized(data.context_dim(), config.policy_hidden, cm.n_clusters(),
                                 OutcomeSpace::kClusters, DeriveSeed(train.seed, 0x66697273ULL));
  PolicyEvaluator evaluate;
  std::vector<double> cluster_values;
  if (evaluation) {
    cluster_values = evaluation->ClusterValues(*second);
    evaluate = [&](const SoftmaxPolicy& p) {
      return evaluation->FirstStageValue(p, cluster_values);
    };
  }
  TrainResult trained = TrainPolicy(std::move(first), data, train, inputs, evaluate);
  auto final_second = std::make_shared<SecondStagePolicy>(h, cm);
  return {OverallPolicy(std::move(trained.policy), final_second), std::move(trained.curve), diag};
}

// ---------------------------------------------------------------------------

const char* BaselineMethodName(BaselineMethod method) {
  switch (method) {
    case BaselineMethod::kRegBased: return "reg_based";
    case BaselineMethod::kIps: return "ips";
    case BaselineMethod::kDr: return "dr";
    case BaselineMethod::kSips: return "sips";
    case BaselineMethod::kPotecOneStage: return "potec1";
  }
  return "unknown";
}

std::optional<BaselineMethod> ParseBaselineMethod(const std::string& name) {
  for (BaselineMethod m : {BaselineMethod::kRegBased, BaselineMethod::kIps, BaselineMethod::kDr,
                           BaselineMethod::kSips, BaselineMethod::kPotecOneStage}) {
    if (name == BaselineMethodName(m)) return m;
  }
  return std::nullopt;
}

BaselineResult RunBaseline(BaselineMethod method, const LoggedDataset& data,
                           const Environment& env, const BaselineConfig& config,
                           const ValueTable* evaluation) {
  Require(!data.empty(), ErrorCode::kConfig, "baselines need a nonempty dataset");
  BaselineResult result;
  auto conventional = [&]() -> RegressorPtr {
    return config.injected_q ? config.injected_q : FitConventional(data, config.regression);
  };

  if (method == BaselineMethod::kRegBased) {
    RegressorPtr q = conventional();
    if (evaluation) {
      q = std::make_shared<TabulatedRegressor>(q, evaluation->contexts());
    }
    result.temperature = config.temperature;
    if (evaluation && !config.temperature_grid.empty()) {
      double best = -std::numeric_limits<double>::infinity();
      for (double tau : config.temperature_grid) {
        const double v = evaluation->Value(RegressionPolicy(q, tau));
        if (v > best) {
          best = v;
          result.temperature = tau;
        }
      }
    }
    result.policy = RegressionPolicy(q, result.temperature);
    if (evaluation) {
      result.curve.points.push_back({0, evaluation->Value(result.policy), 0.0});
    }
    return result;
  }

  EstimatorInputs inputs;
  TrainConfig train = config.train;
  switch (method) {
    case BaselineMethod::kIps:
      train.estimator = EstimatorKind::kIps;
      break;
    case BaselineMethod::kDr:
      train.estimator = EstimatorKind::kDr;
      inputs.q_hat =
          std::make_shared<TabulatedRegressor>(conventional(), data.contexts(), data.context_dim());
      break;
    case BaselineMethod::kSips:
      train.estimator = EstimatorKind::kSips;
      inputs.selector = ActionSelector::TopFraction(
          std::make_shared<TabulatedRegressor>(conventional(), data.contexts(), data.context_dim()),
          config.action_fraction);
      break;
    case BaselineMethod::kPotecOneStage: {
      train.estimator = EstimatorKind::kPotecOneStage;
      inputs.cluster_map = config.cluster_map.n_clusters() > 0 ? config.cluster_map : env.cluster_map();
      RegressorPtr f = config.injected_q
                           ? config.injected_q
                           : FitTwoStepModel(data, inputs.cluster_map, config.regression,
                                             config.fallback_factor).f;
      inputs.f_hat = std::make_shared<TabulatedRegressor>(f, data.contexts(), data.context_dim());
      inputs.cluster_propensities = ClusterPropensities(env, data, inputs.cluster_map);
      break;
    }
    case BaselineMethod::kRegBased:
      break;
  }
  SoftmaxPolicy policy =
      SoftmaxPolicy::Initialized(data.context_dim(), config.policy_hidden, env.n_actions(),
                                 OutcomeSpace::kActions, DeriveSeed(train.seed, 0x66697273ULL));
  PolicyEvaluator evaluate;
  if (evaluation) evaluate = [&](const SoftmaxPolicy& p) { return evaluation->Value(p); };
  TrainResult trained = TrainPolicy(std::move(policy), data, train, inputs, evaluate);
  result.policy = trained.policy.AsActionPolicy();
  result.curve = std::move(trained.curve);
  result.trained = std::move(trained.policy);
  return result;
}

}  // namespace potec
