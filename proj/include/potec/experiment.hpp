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

#ifndef POTEC_EXPERIMENT_HPP
#define POTEC_EXPERIMENT_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "potec/environment.hpp"
#include "potec/reward_models.hpp"
#include "potec/trainer.hpp"

namespace potec {

// Parameters that a sweep may vary.
inline constexpr const char* kSweepParameters[] = {"n",      "n_actions",     "n_clusters",
                                                   "beta",   "cluster_noise", "n_unsupported",
                                                   "sigma_c", "sigma_a"};

// Method names accepted in a sweep.
inline constexpr const char* kSweepMethods[] = {"potec", "potec1", "reg_based", "ips", "dr", "sips"};

struct TuningGrid {
  std::vector<double> learning_rate{1e-3, 5e-4, 1e-4};
  std::vector<double> weight_decay{1e-2, 1e-4, 1e-6};
  std::vector<std::size_t> batch_size{64, 128, 256};
  std::vector<double> action_fraction{0.1, 0.5, 1.0};
  std::vector<double> temperature{1e-3, 1e-2, 1e-1, 1.0};
};

// Environment defaults for sweeps: a reward shift of 3 keeps V(pi_0) positive.
inline EnvConfig DefaultSweepEnv() {
  EnvConfig env;
  env.reward_shift = 3.0;
  return env;
}

struct ExperimentConfig {
  EnvConfig env = DefaultSweepEnv();

  // data
  std::size_t n = 4000;
  std::size_t repeats_per_context = 2;
  std::size_t n_test_contexts = 10000;
  std::size_t n_probe_contexts = 100;
  double cluster_noise = 0.0;
  std::size_t n_unsupported = 0;

  // regression models
  bool noisy_oracle = false;  // use q + eps_c + eps_a instead of fitted models
  double sigma_c = 0.0;
  double sigma_a = 0.0;
  RegressionConfig regression;
  double fallback_factor = 10.0;

  // policy learning; POTEC and potec1 use these values as given
  std::vector<std::size_t> policy_hidden{100, 100, 100};
  std::size_t epochs = 100;
  double learning_rate = 5e-4;
  double weight_decay = 1e-4;
  std::size_t batch_size = 128;
  // baselines pick the best grid point by test value
  TuningGrid tuning;

  std::vector<std::string> methods{"potec", "reg_based", "ips", "dr"};

  // sweep
  std::string parameter = "n";
  std::vector<double> values{500, 1000, 2000, 4000, 8000};
  std::size_t n_seeds = 100;
  std::uint64_t master_seed = 0;
  std::size_t jobs = 1;
  bool write_curves = false;
};

// JSON text (comments allowed). Missing keys keep their defaults; unknown
// keys and invalid values raise kConfig.
ExperimentConfig ParseExperimentConfig(const std::string& text);
ExperimentConfig LoadExperimentConfig(const std::string& path);
// Fully commented template with every default.
std::string ConfigTemplate();

// Copy of config with the swept parameter set to value.
ExperimentConfig ApplySweepValue(const ExperimentConfig& config, double value);

struct ResultRow {
  std::string method;
  std::string parameter;
  double value = 0.0;
  std::size_t seed = 0;
  double normalized_value = 0.0;  // raw / logging
  double raw_value = 0.0;
  double logging_value = 0.0;     // V(pi_0) on the same test contexts
  std::string tuning;             // "fixed" or "oracle"
  std::string status = "ok";      // "ok" or "error"
  std::string detail;             // diagnostics or the error message
};

void WriteResultsCsv(const std::vector<ResultRow>& rows, std::ostream& out);
std::vector<ResultRow> ReadResultsCsv(std::istream& in);

using ProgressFn = std::function<void(const std::string& line)>;

// Runs every (value, seed) cell on a pool of config.jobs workers. Rows are
// ordered by value, seed and method regardless of scheduling. When out_dir is
// nonempty, results.csv (and curves/ when enabled) are written there.
std::vector<ResultRow> RunSweep(const ExperimentConfig& config, const std::string& out_dir = "",
                                const ProgressFn& progress = {});

// Rows for one (value, seed) cell.
std::vector<ResultRow> RunCell(const ExperimentConfig& config, std::size_t value_index,
                               std::size_t seed_index, const std::string& curve_dir = "");

struct SummaryRow {
  std::string method;
  std::string parameter;
  double value = 0.0;
  std::size_t n_seeds = 0;
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

// Mean normalized value and percentile bootstrap interval per (method, value),
// over rows with status ok.
std::vector<SummaryRow> Summarize(const std::vector<ResultRow>& rows, double confidence = 0.95,
                                  std::size_t n_resamples = 10000, std::uint64_t seed = 0);
void WriteSummaryCsv(const std::vector<SummaryRow>& rows, std::ostream& out);

// Percentile bootstrap interval of the mean.
std::pair<double, double> BootstrapMeanInterval(const std::vector<double>& values,
                                                double confidence, std::size_t n_resamples,
                                                std::uint64_t seed);

}  // namespace potec

#endif  // POTEC_EXPERIMENT_HPP
