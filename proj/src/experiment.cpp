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

#include "potec/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "potec/error.hpp"
#include "potec/numeric.hpp"

namespace potec {
namespace {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Config parsing

class Section {
 public:
  Section(const json& node, std::string name) : node_(node), name_(std::move(name)) {
    if (!node_.is_object()) Fail(ErrorCode::kConfig, "'" + name_ + "' must be an object");
  }

  template <typename T>
  void Get(const char* key, T& out) {
    seen_.insert(key);
    auto it = node_.find(key);
    if (it == node_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      Fail(ErrorCode::kConfig, "invalid value for " + name_ + "." + key);
    }
  }

  const json* Child(const char* key) {
    seen_.insert(key);
    auto it = node_.find(key);
    return it == node_.end() ? nullptr : &*it;
  }

  void CheckUnknown() const {
    for (auto it = node_.begin(); it != node_.end(); ++it) {
      if (!seen_.count(it.key())) Fail(ErrorCode::kConfig, "unknown key " + name_ + "." + it.key());
    }
  }

 private:
  const json& node_;
  std::string name_;
  std::set<std::string> seen_;
};

void ParseEnv(const json& node, EnvConfig& env) {
  Section s(node, "env");
  s.Get("n_actions", env.n_actions);
  s.Get("n_clusters", env.n_clusters);
  s.Get("context_dim", env.context_dim);
  s.Get("action_feature_dim", env.action_feature_dim);
  s.Get("beta", env.beta);
  std::string noise = env.reward_noise == RewardNoise::kGaussian ? "gaussian" : "bernoulli";
  s.Get("reward_noise", noise);
  if (noise == "gaussian") {
    env.reward_noise = RewardNoise::kGaussian;
  } else if (noise == "bernoulli") {
    env.reward_noise = RewardNoise::kBernoulli;
  } else {
    Fail(ErrorCode::kConfig, "env.reward_noise must be gaussian or bernoulli");
  }
  s.Get("reward_sigma", env.reward_sigma);
  s.Get("reward_shift", env.reward_shift);
  std::string mode = env.context_mode == ContextMode::kContinuous ? "continuous" : "discrete";
  s.Get("context_mode", mode);
  if (mode == "continuous") {
    env.context_mode = ContextMode::kContinuous;
  } else if (mode == "discrete") {
    env.context_mode = ContextMode::kDiscrete;
  } else {
    Fail(ErrorCode::kConfig, "env.context_mode must be continuous or discrete");
  }
  s.Get("n_contexts", env.n_contexts);
  s.Get("context_weights", env.context_weights);
  s.CheckUnknown();
}

bool IsIn(const std::string& name, std::span<const char* const> names) {
  return std::any_of(names.begin(), names.end(), [&](const char* n) { return name == n; });
}

bool IsCount(double v) { return v >= 0 && v == std::floor(v) && v < 1e15; }

void Validate(const ExperimentConfig& c) {
  auto need = [](bool ok, const std::string& message) {
    if (!ok) Fail(ErrorCode::kConfig, message);
  };
  need(c.env.n_actions >= 2, "env.n_actions must be at least 2");
  need(c.env.n_clusters >= 1 && c.env.n_clusters <= c.env.n_actions,
       "env.n_clusters must be in [1, n_actions]");
  need(c.env.context_dim >= 1, "env.context_dim must be positive");
  need(c.n >= 1, "data.n must be positive");
  need(c.repeats_per_context >= 1, "data.repeats_per_context must be positive");
  need(c.n_test_contexts >= 1, "data.n_test_contexts must be positive");
  need(c.cluster_noise >= 0 && c.cluster_noise <= 1, "data.cluster_noise must be in [0, 1]");
  need(c.n_unsupported < c.env.n_actions, "data.n_unsupported must be below n_actions");
  need(c.sigma_c >= 0 && c.sigma_a >= 0, "regression noise levels must be nonnegative");
  need(c.epochs >= 1 && c.batch_size >= 1, "train.epochs and train.batch_size must be positive");
  need(c.learning_rate > 0, "train.learning_rate must be positive");
  need(!c.methods.empty(), "methods must not be empty");
  std::set<std::string> unique;
  for (const std::string& m : c.methods) {
    need(IsIn(m, kSweepMethods), "unknown method '" + m + "'");
    need(unique.insert(m).second, "method '" + m + "' listed twice");
  }
  need(IsIn(c.parameter, kSweepParameters), "unknown sweep parameter '" + c.parameter + "'");
  need(!c.values.empty(), "sweep.values must not be empty");
  std::set<double> distinct(c.values.begin(), c.values.end());
  need(distinct.size() == c.values.size(), "sweep.values must be distinct");
  need(c.n_seeds >= 1, "sweep.n_seeds must be positive");
  need(c.jobs >= 1, "sweep.jobs must be positive");
  if (c.parameter == "sigma_c" || c.parameter == "sigma_a") {
    need(c.noisy_oracle, "sweeping " + c.parameter + " needs regression.source = noisy_oracle");
  }
  auto nonempty = [&](bool ok, const char* what) {
    need(ok, std::string("tuning.") + what + " must not be empty");
  };
  nonempty(!c.tuning.learning_rate.empty(), "learning_rate");
  nonempty(!c.tuning.weight_decay.empty(), "weight_decay");
  nonempty(!c.tuning.batch_size.empty(), "batch_size");
  nonempty(!c.tuning.action_fraction.empty(), "action_fraction");
  nonempty(!c.tuning.temperature.empty(), "temperature");
}

// ---------------------------------------------------------------------------
// Number formatting

std::string Num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

double ParseNum(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    Fail(ErrorCode::kIo, "invalid number '" + s + "'");
  }
  return v;
}

std::string Quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch == '\n' ? ' ' : ch;
  }
  return out + "\"";
}

std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        fields.back() += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.emplace_back();
    } else if (ch != '\r') {
      fields.back() += ch;
    }
  }
  return fields;
}

std::uint64_t Fnv(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t ValueKey(double v) { return std::bit_cast<std::uint64_t>(v == 0.0 ? 0.0 : v); }

std::uint64_t Key(std::initializer_list<std::uint64_t> parts) { return MakeRng(parts)(); }

constexpr std::uint64_t kEnvTag = 0x656e76;
constexpr std::uint64_t kTestTag = 0x74657374;
constexpr std::uint64_t kProbeTag = 0x70726f62;
constexpr std::uint64_t kDataTag = 0x64617461;
constexpr std::uint64_t kSupportTag = 0x73757070;
constexpr std::uint64_t kClusterTag = 0x636c7573;
constexpr std::uint64_t kRegressionTag = 0x72656772;
constexpr std::uint64_t kNoiseTag = 0x6e6f6973;

// ---------------------------------------------------------------------------
// One cell

struct CellContext {
  const ExperimentConfig& config;  // with the swept value applied
  std::uint64_t master;
  std::size_t seed;
  std::uint64_t value_key;
  EnvironmentPtr env;
  LoggedDataset data;
  std::optional<ValueTable> test;
  ContextSet probe;
  RegressorPtr noisy;       // noisy oracle for every method
  RegressorPtr q_hat;       // conventional fit, shared by the baselines
  std::optional<TwoStepModel> two_step;
  ClusterMap potec_clusters;

  std::uint64_t MethodSeed(const std::string& method) const {
    return Key({master, seed, value_key, Fnv(method)});
  }

  RegressionConfig Regression(std::uint64_t tag) const {
    RegressionConfig r = config.regression;
    r.seed = Key({master, seed, value_key, kRegressionTag, tag});
    return r;
  }

  RegressorPtr ConventionalModel() {
    if (noisy) return noisy;
    if (!q_hat) q_hat = FitConventional(data, Regression(1));
    return q_hat;
  }

  const TwoStepModel& TwoStep() {
    if (!two_step) {
      two_step = FitTwoStepModel(data, potec_clusters, Regression(2), config.fallback_factor);
    }
    return *two_step;
  }
};

struct MethodOutcome {
  double value = 0.0;
  std::string tuning;
  std::string detail;
  LearningCurve curve;
};

TrainConfig FixedTrain(const ExperimentConfig& c, std::uint64_t seed) {
  TrainConfig t;
  t.learning_rate = c.learning_rate;
  t.weight_decay = c.weight_decay;
  t.batch_size = c.batch_size;
  t.epochs = c.epochs;
  t.seed = seed;
  return t;
}

MethodOutcome RunPotecMethod(CellContext& cell) {
  const ExperimentConfig& c = cell.config;
  PotecConfig pc;
  pc.regression = cell.Regression(2);
  pc.train = FixedTrain(c, cell.MethodSeed("potec"));
  pc.policy_hidden = c.policy_hidden;
  pc.fallback_factor = c.fallback_factor;
  if (cell.noisy) {
    pc.injected_f = cell.noisy;
  } else {
    const TwoStepModel& model = cell.TwoStep();
    pc.injected_f = model.f;
    pc.injected_h = model.h;
  }
  PotecResult r = RunPotec(cell.data, cell.potec_clusters, *cell.env, pc, &*cell.test,
                           cell.probe.size() ? &cell.probe : nullptr);
  MethodOutcome out;
  out.value = r.curve.points.back().value;
  out.tuning = "fixed";
  std::ostringstream detail;
  if (cell.noisy) {
    detail << "model=noisy_oracle";
  } else {
    detail << "pairs=" << cell.two_step->n_pairs << " fallback=" << cell.two_step->used_fallback;
  }
  detail << " lc_residual=" << Num(r.diagnostics.local_correctness_residual);
  out.detail = detail.str();
  out.curve = std::move(r.curve);
  return out;
}

MethodOutcome RunTuned(CellContext& cell, BaselineMethod method) {
  const ExperimentConfig& c = cell.config;
  BaselineConfig bc;
  bc.regression = cell.Regression(1);
  bc.policy_hidden = c.policy_hidden;
  bc.fallback_factor = c.fallback_factor;
  bc.cluster_map = cell.potec_clusters;
  const std::string name = BaselineMethodName(method);
  const std::uint64_t seed = cell.MethodSeed(name);
  MethodOutcome out;

  if (method == BaselineMethod::kRegBased) {
    bc.injected_q = cell.ConventionalModel();
    bc.temperature_grid = c.tuning.temperature;
    BaselineResult r = RunBaseline(method, cell.data, *cell.env, bc, &*cell.test);
    out.value = r.curve.points.back().value;
    out.tuning = "oracle";
    out.detail = "temperature=" + Num(r.temperature);
    out.curve = std::move(r.curve);
    return out;
  }
  if (method == BaselineMethod::kPotecOneStage) {
    bc.injected_q = cell.noisy ? cell.noisy : cell.TwoStep().f;
    bc.train = FixedTrain(c, seed);
    BaselineResult r = RunBaseline(method, cell.data, *cell.env, bc, &*cell.test);
    out.value = r.curve.points.back().value;
    out.tuning = "fixed";
    out.curve = std::move(r.curve);
    return out;
  }

  if (method != BaselineMethod::kIps) bc.injected_q = cell.ConventionalModel();
  const std::vector<double> fractions =
      method == BaselineMethod::kSips ? c.tuning.action_fraction : std::vector<double>{1.0};
  out.value = -std::numeric_limits<double>::infinity();
  out.tuning = "oracle";
  for (double lr : c.tuning.learning_rate) {
    for (double wd : c.tuning.weight_decay) {
      for (std::size_t batch : c.tuning.batch_size) {
        for (double fraction : fractions) {
          bc.train = FixedTrain(c, seed);
          bc.train.learning_rate = lr;
          bc.train.weight_decay = wd;
          bc.train.batch_size = batch;
          bc.action_fraction = fraction;
          BaselineResult r = RunBaseline(method, cell.data, *cell.env, bc, &*cell.test);
          const double v = r.curve.points.back().value;
          if (v > out.value) {
            out.value = v;
            std::ostringstream detail;
            detail << "lr=" << Num(lr) << " wd=" << Num(wd) << " batch=" << batch;
            if (method == BaselineMethod::kSips) detail << " fraction=" << Num(fraction);
            out.detail = detail.str();
            out.curve = std::move(r.curve);
          }
        }
      }
    }
  }
  return out;
}

MethodOutcome RunMethod(CellContext& cell, const std::string& method) {
  if (method == "potec") return RunPotecMethod(cell);
  return RunTuned(cell, *ParseBaselineMethod(method));
}

}  // namespace

// ---------------------------------------------------------------------------

ExperimentConfig ParseExperimentConfig(const std::string& text) {
  json root;
  try {
    root = json::parse(text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    Fail(ErrorCode::kConfig, std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig c;
  Section top(root, "config");
  if (const json* env = top.Child("env")) ParseEnv(*env, c.env);
  if (const json* node = top.Child("data")) {
    Section s(*node, "data");
    s.Get("n", c.n);
    s.Get("repeats_per_context", c.repeats_per_context);
    s.Get("n_test_contexts", c.n_test_contexts);
    s.Get("n_probe_contexts", c.n_probe_contexts);
    s.Get("cluster_noise", c.cluster_noise);
    s.Get("n_unsupported", c.n_unsupported);
    s.CheckUnknown();
  }
  if (const json* node = top.Child("regression")) {
    Section s(*node, "regression");
    std::string source = c.noisy_oracle ? "noisy_oracle" : "fitted";
    s.Get("source", source);
    if (source == "fitted") {
      c.noisy_oracle = false;
    } else if (source == "noisy_oracle") {
      c.noisy_oracle = true;
    } else {
      Fail(ErrorCode::kConfig, "regression.source must be fitted or noisy_oracle");
    }
    s.Get("sigma_c", c.sigma_c);
    s.Get("sigma_a", c.sigma_a);
    s.Get("hidden", c.regression.hidden);
    s.Get("epochs", c.regression.epochs);
    s.Get("batch_size", c.regression.batch_size);
    s.Get("learning_rate", c.regression.adam.lr);
    s.Get("weight_decay", c.regression.adam.weight_decay);
    s.Get("fallback_factor", c.fallback_factor);
    s.CheckUnknown();
  }
  if (const json* node = top.Child("train")) {
    Section s(*node, "train");
    s.Get("hidden", c.policy_hidden);
    s.Get("epochs", c.epochs);
    s.Get("learning_rate", c.learning_rate);
    s.Get("weight_decay", c.weight_decay);
    s.Get("batch_size", c.batch_size);
    s.CheckUnknown();
  }
  if (const json* node = top.Child("tuning")) {
    Section s(*node, "tuning");
    s.Get("learning_rate", c.tuning.learning_rate);
    s.Get("weight_decay", c.tuning.weight_decay);
    s.Get("batch_size", c.tuning.batch_size);
    s.Get("action_fraction", c.tuning.action_fraction);
    s.Get("temperature", c.tuning.temperature);
    s.CheckUnknown();
  }
  top.Get("methods", c.methods);
  if (const json* node = top.Child("sweep")) {
    Section s(*node, "sweep");
    s.Get("parameter", c.parameter);
    s.Get("values", c.values);
    s.Get("n_seeds", c.n_seeds);
    s.Get("master_seed", c.master_seed);
    s.Get("jobs", c.jobs);
    s.Get("write_curves", c.write_curves);
    s.CheckUnknown();
  }
  top.CheckUnknown();
  Validate(c);
  for (double v : c.values) ApplySweepValue(c, v);
  return c;
}

ExperimentConfig LoadExperimentConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kIo, "cannot open config file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ParseExperimentConfig(buffer.str());
}

std::string ConfigTemplate() {
  return R"(// Experiment configuration. Comments are allowed; missing keys keep the
// defaults shown here.
{
  // Synthetic environment.
  "env": {
    "n_actions": 2000,
    "n_clusters": 30,
    "context_dim": 10,
    "action_feature_dim": 5,
    "beta": 0.0,                   // logging optimality; negative is worse than uniform
    "reward_noise": "gaussian",    // gaussian or bernoulli
    "reward_sigma": 1.0,           // gaussian noise scale
    "reward_shift": 3.0,           // added to every expected reward; keeps V(pi_0) > 0
    "context_mode": "continuous",  // continuous or discrete
    "n_contexts": 5,               // discrete mode only
    "context_weights": []          // discrete mode only; empty means uniform
  },

  // Logged data and evaluation contexts.
  "data": {
    "n": 4000,                     // logged records
    "repeats_per_context": 2,      // records drawn per sampled context
    "n_test_contexts": 10000,      // contexts for exact policy values
    "n_probe_contexts": 100,       // contexts for the local-correctness diagnostic
    "cluster_noise": 0.0,          // fraction of actions moved to a wrong cluster (POTEC only)
    "n_unsupported": 0             // actions given zero logging probability
  },

  // Reward models.
  "regression": {
    "source": "fitted",            // fitted or noisy_oracle
    "sigma_c": 0.0,                // noisy_oracle: cluster-level noise
    "sigma_a": 0.0,                // noisy_oracle: action-level noise
    "hidden": [32, 32],
    "epochs": 30,
    "batch_size": 128,
    "learning_rate": 0.001,
    "weight_decay": 0.0001,
    "fallback_factor": 10          // pairs below this times the output size use the conventional model
  },

  // Policy learning. POTEC and potec1 use these values as given.
  "train": {
    "hidden": [100, 100, 100],
    "epochs": 100,
    "learning_rate": 0.0005,
    "weight_decay": 0.0001,
    "batch_size": 128
  },

  // Baseline grids. The best grid point by test value is reported (oracle
  // tuning, labeled in results.csv).
  "tuning": {
    "learning_rate": [0.001, 0.0005, 0.0001],
    "weight_decay": [0.01, 0.0001, 0.000001],
    "batch_size": [64, 128, 256],
    "action_fraction": [0.1, 0.5, 1.0],  // sips only
    "temperature": [0.001, 0.01, 0.1, 1.0]  // reg_based only
  },

  // potec, potec1, reg_based, ips, dr, sips
  "methods": ["potec", "reg_based", "ips", "dr"],

  "sweep": {
    // n, n_actions, n_clusters, beta, cluster_noise, n_unsupported, sigma_c, sigma_a
    "parameter": "n",
    "values": [500, 1000, 2000, 4000, 8000],
    "n_seeds": 100,
    "master_seed": 0,
    "jobs": 1,
    "write_curves": false          // per-cell learning curves under curves/
  }
}
)";
}

ExperimentConfig ApplySweepValue(const ExperimentConfig& config, double value) {
  ExperimentConfig c = config;
  const std::string& p = config.parameter;
  auto count = [&](std::size_t& field) {
    if (!IsCount(value)) Fail(ErrorCode::kConfig, "sweep value for " + p + " must be a count");
    field = static_cast<std::size_t>(value);
  };
  if (p == "n") {
    count(c.n);
  } else if (p == "n_actions") {
    count(c.env.n_actions);
  } else if (p == "n_clusters") {
    count(c.env.n_clusters);
  } else if (p == "beta") {
    c.env.beta = value;
  } else if (p == "cluster_noise") {
    c.cluster_noise = value;
  } else if (p == "n_unsupported") {
    count(c.n_unsupported);
  } else if (p == "sigma_c") {
    c.sigma_c = value;
  } else if (p == "sigma_a") {
    c.sigma_a = value;
  } else {
    Fail(ErrorCode::kConfig, "unknown sweep parameter '" + p + "'");
  }
  Validate(c);
  return c;
}

// ---------------------------------------------------------------------------

std::vector<ResultRow> RunCell(const ExperimentConfig& config, std::size_t value_index,
                               std::size_t seed_index, const std::string& curve_dir) {
  Require(value_index < config.values.size() && seed_index < config.n_seeds, ErrorCode::kContract,
          "cell index out of range");
  const double value = config.values[value_index];
  std::vector<ResultRow> rows;
  for (const std::string& m : config.methods) {
    ResultRow row;
    row.method = m;
    row.parameter = config.parameter;
    row.value = value;
    row.seed = seed_index;
    row.tuning = (m == "potec" || m == "potec1") ? "fixed" : "oracle";
    rows.push_back(row);
  }
  auto fail_all = [&](const std::string& message) {
    for (ResultRow& r : rows) {
      r.status = "error";
      r.detail = message;
      r.normalized_value = r.raw_value = std::numeric_limits<double>::quiet_NaN();
    }
    return rows;
  };

  ExperimentConfig c;
  std::optional<CellContext> cell;
  try {
    c = ApplySweepValue(config, value);
    const std::uint64_t master = config.master_seed;
    const std::uint64_t vk = ValueKey(value);
    cell.emplace(CellContext{c, master, seed_index, vk, nullptr, {}, std::nullopt, {}, nullptr,
                             nullptr, std::nullopt, {}});
    EnvironmentPtr env = BuildSyntheticEnv(c.env, Key({master, seed_index, kEnvTag}));
    if (c.n_unsupported > 0) {
      env = RestrictSupport(*env, c.n_unsupported, Key({master, seed_index, vk, kSupportTag}));
    }
    cell->env = env;
    cell->data = SampleLoggedData(*env, c.n, Key({master, seed_index, vk, kDataTag}),
                                  c.repeats_per_context);
    cell->test.emplace(*env, SampleContexts(*env, c.n_test_contexts,
                                            Key({master, seed_index, kTestTag})));
    if (c.n_probe_contexts > 0) {
      cell->probe = SampleContexts(*env, c.n_probe_contexts, Key({master, seed_index, kProbeTag}));
    }
    cell->potec_clusters =
        c.cluster_noise > 0
            ? PerturbClusters(env->cluster_map(), c.cluster_noise,
                              Key({master, seed_index, vk, kClusterTag}))
            : env->cluster_map();
    if (c.noisy_oracle) {
      cell->noisy = MakeNoisyRegressionModel(env, c.sigma_c, c.sigma_a,
                                             Key({master, seed_index, vk, kNoiseTag}));
    }
  } catch (const std::exception& e) {
    return fail_all(e.what());
  }

  const double v0 = cell->test->LoggingValue();
  for (ResultRow& row : rows) {
    row.logging_value = v0;
    try {
      if (!(v0 > 0)) {
        Fail(ErrorCode::kConfig, "V(pi_0) = " + Num(v0) +
                                     " is not positive; increase env.reward_shift");
      }
      MethodOutcome out = RunMethod(*cell, row.method);
      row.raw_value = out.value;
      row.normalized_value = out.value / v0;
      row.tuning = out.tuning;
      row.detail = out.detail;
      if (!curve_dir.empty()) {
        std::ofstream f(curve_dir + "/" + row.method + "_v" + std::to_string(value_index) + "_s" +
                        std::to_string(seed_index) + ".csv");
        if (!f) Fail(ErrorCode::kIo, "cannot write learning curve under " + curve_dir);
        WriteCurveCsv(out.curve, f);
      }
    } catch (const std::exception& e) {
      row.status = "error";
      row.detail = e.what();
      row.raw_value = row.normalized_value = std::numeric_limits<double>::quiet_NaN();
    }
  }
  return rows;
}

std::vector<ResultRow> RunSweep(const ExperimentConfig& config, const std::string& out_dir,
                                const ProgressFn& progress) {
  Validate(config);
  std::string curve_dir;
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    if (config.write_curves) {
      curve_dir = out_dir + "/curves";
      std::filesystem::create_directories(curve_dir);
    }
  }
  const std::size_t n_values = config.values.size();
  const std::size_t n_cells = n_values * config.n_seeds;
  std::vector<std::vector<ResultRow>> cells(n_cells);
  std::atomic<std::size_t> next{0};
  std::mutex mutex;
  std::size_t done = 0;
  auto worker = [&]() {
    for (std::size_t k = next++; k < n_cells; k = next++) {
      const std::size_t vi = k / config.n_seeds;
      const std::size_t si = k % config.n_seeds;
      cells[k] = RunCell(config, vi, si, curve_dir);
      if (progress) {
        std::lock_guard<std::mutex> lock(mutex);
        ++done;
        std::ostringstream line;
        line << "[" << done << "/" << n_cells << "] " << config.parameter << "="
             << Num(config.values[vi]) << " seed=" << si;
        for (const ResultRow& r : cells[k]) {
          line << " " << r.method << "="
               << (r.status == "ok" ? Num(r.normalized_value) : std::string("error"));
        }
        progress(line.str());
      }
    }
  };
  const std::size_t n_threads = std::min(config.jobs, n_cells);
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  std::vector<ResultRow> rows;
  for (auto& cell : cells) {
    for (ResultRow& r : cell) rows.push_back(std::move(r));
  }
  if (!out_dir.empty()) {
    std::ofstream f(out_dir + "/results.csv");
    if (!f) Fail(ErrorCode::kIo, "cannot write " + out_dir + "/results.csv");
    WriteResultsCsv(rows, f);
  }
  return rows;
}

// ---------------------------------------------------------------------------

void WriteResultsCsv(const std::vector<ResultRow>& rows, std::ostream& out) {
  out << "method,parameter,value,seed,normalized_value,raw_value,logging_value,tuning,status,"
         "detail\n";
  for (const ResultRow& r : rows) {
    out << r.method << ',' << r.parameter << ',' << Num(r.value) << ',' << r.seed << ','
        << Num(r.normalized_value) << ',' << Num(r.raw_value) << ',' << Num(r.logging_value) << ','
        << r.tuning << ',' << r.status << ',' << Quote(r.detail) << '\n';
  }
}

std::vector<ResultRow> ReadResultsCsv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || SplitCsvLine(line).size() != 10 ||
      SplitCsvLine(line)[0] != "method") {
    Fail(ErrorCode::kIo, "results file has an unexpected header");
  }
  std::vector<ResultRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> f = SplitCsvLine(line);
    if (f.size() != 10) {
      Fail(ErrorCode::kIo, "results line " + std::to_string(line_no) + " has " +
                               std::to_string(f.size()) + " fields");
    }
    ResultRow r;
    r.method = f[0];
    r.parameter = f[1];
    r.value = ParseNum(f[2]);
    r.seed = static_cast<std::size_t>(ParseNum(f[3]));
    r.normalized_value = ParseNum(f[4]);
    r.raw_value = ParseNum(f[5]);
    r.logging_value = ParseNum(f[6]);
    r.tuning = f[7];
    r.status = f[8];
    r.detail = f[9];
    rows.push_back(std::move(r));
  }
  return rows;
}

std::pair<double, double> BootstrapMeanInterval(const std::vector<double>& values,
                                                double confidence, std::size_t n_resamples,
                                                std::uint64_t seed) {
  Require(!values.empty(), ErrorCode::kContract, "bootstrap needs at least one value");
  Require(confidence > 0 && confidence < 1, ErrorCode::kConfig, "confidence must be in (0, 1)");
  Require(n_resamples >= 1, ErrorCode::kConfig, "bootstrap needs at least one resample");
  Rng rng = MakeRng({seed, 0x626f6f74});
  std::uniform_int_distribution<std::size_t> pick(0, values.size() - 1);
  std::vector<double> means(n_resamples);
  for (double& m : means) {
    double sum = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) sum += values[pick(rng)];
    m = sum / static_cast<double>(values.size());
  }
  std::sort(means.begin(), means.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(means.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, means.size() - 1);
    return means[lo] + (pos - static_cast<double>(lo)) * (means[hi] - means[lo]);
  };
  const double alpha = 1.0 - confidence;
  return {quantile(alpha / 2), quantile(1 - alpha / 2)};
}

std::vector<SummaryRow> Summarize(const std::vector<ResultRow>& rows, double confidence,
                                  std::size_t n_resamples, std::uint64_t seed) {
  std::map<std::tuple<std::string, std::string, double>, std::vector<double>> groups;
  std::vector<std::tuple<std::string, std::string, double>> order;
  for (const ResultRow& r : rows) {
    if (r.status != "ok" || !std::isfinite(r.normalized_value)) continue;
    auto key = std::make_tuple(r.parameter, r.method, r.value);
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.push_back(r.normalized_value);
  }
  std::sort(order.begin(), order.end());
  std::vector<SummaryRow> out;
  for (const auto& key : order) {
    const std::vector<double>& v = groups[key];
    SummaryRow s;
    s.parameter = std::get<0>(key);
    s.method = std::get<1>(key);
    s.value = std::get<2>(key);
    s.n_seeds = v.size();
    s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    std::tie(s.ci_low, s.ci_high) = BootstrapMeanInterval(
        v, confidence, n_resamples, Key({seed, Fnv(s.method), ValueKey(s.value)}));
    out.push_back(s);
  }
  return out;
}

void WriteSummaryCsv(const std::vector<SummaryRow>& rows, std::ostream& out) {
  out << "method,parameter,value,n_seeds,mean,ci_low,ci_high\n";
  for (const SummaryRow& r : rows) {
    out << r.method << ',' << r.parameter << ',' << Num(r.value) << ',' << r.n_seeds << ','
        << Num(r.mean) << ',' << Num(r.ci_low) << ',' << Num(r.ci_high) << '\n';
  }
}

}  // namespace potec
