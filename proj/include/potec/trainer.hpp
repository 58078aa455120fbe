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

#ifndef POTEC_TRAINER_HPP
#define POTEC_TRAINER_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "potec/cluster_map.hpp"
#include "potec/dataset.hpp"
#include "potec/environment.hpp"
#include "potec/estimators.hpp"
#include "potec/policy.hpp"
#include "potec/regressor.hpp"
#include "potec/reward_models.hpp"

namespace potec {

struct TrainConfig {
  EstimatorKind estimator = EstimatorKind::kPotec;
  double learning_rate = 5e-4;
  double weight_decay = 1e-4;
  std::size_t batch_size = 128;
  std::size_t epochs = 100;
  std::uint64_t seed = 0;
};

struct CurvePoint {
  std::size_t epoch = 0;
  double value = 0.0;      // exact test value; NaN without an evaluator
  double grad_norm = 0.0;  // mean minibatch gradient norm; 0 at epoch 0
};

struct LearningCurve {
  std::vector<CurvePoint> points;
};

// CSV with header epoch,value,grad_norm.
void WriteCurveCsv(const LearningCurve& curve, std::ostream& out);

// Expected rewards on a fixed test context set, for exact policy values.
class ValueTable {
 public:
  ValueTable(const Environment& env, ContextSet contexts);

  const ContextSet& contexts() const { return contexts_; }
  std::size_t n_actions() const { return n_actions_; }
  std::span<const double> rewards(std::size_t i) const {
    return {q_.data() + i * n_actions_, n_actions_};
  }

  double Value(const ActionPolicy& policy) const;
  double Value(const SoftmaxPolicy& action_policy) const;
  double LoggingValue() const { return logging_value_; }

  // q^{pi_2}(x_i, c) for every test context, row-major.
  std::vector<double> ClusterValues(const SecondStageRule& second) const;
  // Value of a first stage given ClusterValues of its second stage.
  double FirstStageValue(const SoftmaxPolicy& first, std::span<const double> cluster_values) const;

 private:
  ContextSet contexts_;
  std::size_t n_actions_;
  std::vector<double> q_;
  double logging_value_ = 0.0;
};

// What each estimator needs beyond the data and the policy.
struct EstimatorInputs {
  RegressorPtr q_hat;                        // dr
  RegressorPtr f_hat;                        // potec, potec1
  SecondStagePtr second;                     // potec
  std::optional<ActionSelector> selector;    // sips
  ClusterMap cluster_map;                    // potec, potec1
  std::vector<double> cluster_propensities;  // potec, potec1; aligned with the data
};

// Exact test value of the policy under training.
using PolicyEvaluator = std::function<double(const SoftmaxPolicy&)>;

struct TrainResult {
  SoftmaxPolicy policy;
  LearningCurve curve;
};

// Minibatch Adam ascent on the estimated gradient. Minibatches come from a
// per-epoch seeded permutation. Throws kConfig when the estimator does not
// match the policy's outcome space.
TrainResult TrainPolicy(SoftmaxPolicy policy, const LoggedDataset& data, const TrainConfig& config,
                        const EstimatorInputs& inputs, const PolicyEvaluator& evaluate = {});

// f-hat = g-hat + h-hat from the two-step regression, or the conventional
// fallback when pairs are scarce.
struct TwoStepModel {
  RegressorPtr f;  // combined model
  RegressorPtr h;  // drives the second stage
  std::size_t n_pairs = 0;
  bool used_fallback = false;
};

// Pairwise fit, then the baseline fit on its residuals. Falls back to the
// conventional model for both f and h when the pair count is below
// fallback_factor times the size of h's output layer.
TwoStepModel FitTwoStepModel(const LoggedDataset& data, const ClusterMap& cm,
                             const RegressionConfig& config, double fallback_factor = 10.0);

struct PotecConfig {
  RegressionConfig regression;
  TrainConfig train;
  std::vector<std::size_t> policy_hidden{32, 32, 32};
  double fallback_factor = 10.0;
  // When set, regression is skipped and these models are used as given.
  RegressorPtr injected_f;
  RegressorPtr injected_h;  // defaults to injected_f
};

struct PotecDiagnostics {
  std::size_t n_pairs = 0;
  bool used_fallback = false;
  bool injected_model = false;
  double local_correctness_residual = 0.0;  // NaN without a probe set
  std::string warning;
};

struct PotecResult {
  OverallPolicy policy;
  LearningCurve curve;
  PotecDiagnostics diagnostics;
};

// Pairwise regression, baseline regression, then first-stage policy learning
// with the two-stage gradient; the regression models stay frozen during the
// last step. env supplies pi_0(c|x) under cm and the residual diagnostic.
PotecResult RunPotec(const LoggedDataset& data, const ClusterMap& cm, const Environment& env,
                     const PotecConfig& config, const ValueTable* evaluation = nullptr,
                     const ContextSet* probe = nullptr);

enum class BaselineMethod { kRegBased, kIps, kDr, kSips, kPotecOneStage };

const char* BaselineMethodName(BaselineMethod method);
std::optional<BaselineMethod> ParseBaselineMethod(const std::string& name);

struct BaselineConfig {
  RegressionConfig regression;
  TrainConfig train;  // estimator is set from the method
  std::vector<std::size_t> policy_hidden{32, 32, 32};
  // Reg-based softmax temperature; with an evaluator, the best value in the
  // grid on the test contexts is used instead (oracle tuning).
  double temperature = 1.0;
  std::vector<double> temperature_grid;
  double action_fraction = 1.0;  // sips
  double fallback_factor = 10.0;  // potec1 two-step regression
  ClusterMap cluster_map;         // potec1; empty means the environment's
  RegressorPtr injected_q;        // skips the conventional fit when set
};

struct BaselineResult {
  ActionPolicy policy;
  std::optional<SoftmaxPolicy> trained;
  LearningCurve curve;
  double temperature = 0.0;  // Reg-based only
};

BaselineResult RunBaseline(BaselineMethod method, const LoggedDataset& data,
                           const Environment& env, const BaselineConfig& config,
                           const ValueTable* evaluation = nullptr);

}  // namespace potec

#endif  // POTEC_TRAINER_HPP
