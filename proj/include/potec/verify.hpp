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

#ifndef POTEC_VERIFY_HPP
#define POTEC_VERIFY_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "potec/environment.hpp"

namespace potec {

// Self-checks of the estimators against exact oracles and Monte Carlo.

struct CheckResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct VerifyOptions {
  std::size_t mc_replications = 100000;  // bias and variance checks
  std::size_t mc_records = 50;           // records per replication
  std::size_t ordering_replications = 1000;
  std::size_t ordering_records = 1000;
  std::size_t bootstrap_resamples = 1000;
  std::uint64_t seed = 7;
};

// Fewer replications; for interactive use.
VerifyOptions QuickVerifyOptions();

// Discrete instance with 5 contexts, 20 actions and 4 clusters.
std::shared_ptr<SyntheticEnvironment> OracleEnvironment(std::uint64_t seed);

// DR with q_hat = 0, sIPS with every action kept, and both two-stage forms
// with singleton clusters reduce to IPS / DR elementwise within 1e-12.
CheckResult CheckReductionIdentities(std::uint64_t seed, std::size_t n_instances = 20);

struct GradcheckReport {
  std::size_t n_cases = 0;
  std::size_t n_failed = 0;
  double max_rel_error = 0.0;
};

// Network parameter gradients and softmax scores against central finite
// differences (step 1e-6); a case fails above relative error 1e-5.
GradcheckReport RunGradcheck(std::size_t n_cases, std::uint64_t seed);
CheckResult CheckGradients(std::uint64_t seed, std::size_t n_cases = 100);

// Locally correct model: exact expectation equals the true first-stage
// gradient within 1e-10; the Monte-Carlo mean is within 3 SE.
CheckResult CheckUnbiasedness(const VerifyOptions& options);
// Locally incorrect model: closed-form bias equals the exact bias within
// 1e-10; the Monte-Carlo bias is within 3 SE of it.
CheckResult CheckBiasOracle(const VerifyOptions& options);
// Closed-form variance equals the exact single-record variance within 1e-10
// and the Monte-Carlo variance within 5% for POTEC, DR and IPS.
CheckResult CheckVarianceOracles(const VerifyOptions& options);
// Small fixture tables: locally correct models and cluster values.
CheckResult CheckFixtures();
// Monte-Carlo variance POTEC < DR < IPS for one shared target policy on a
// 500-action environment, each gap at least twice its bootstrap SE.
CheckResult CheckVarianceOrdering(const VerifyOptions& options);
// With 20% of actions unsupported, IPS is biased beyond 3 SE in some
// component while POTEC with a locally correct model is not.
CheckResult CheckSupportDeficiency(const VerifyOptions& options);

using CheckCallback = std::function<void(const CheckResult&)>;

// Runs every check above in order.
std::vector<CheckResult> RunOracleSuite(const VerifyOptions& options,
                                        const CheckCallback& on_result = {});

}  // namespace potec

#endif  // POTEC_VERIFY_HPP
