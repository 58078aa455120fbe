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

#include "potec/potec.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <new>
#include <sstream>
#include <string>

#include "potec/dataset.hpp"
#include "potec/environment.hpp"
#include "potec/error.hpp"
#include "potec/experiment.hpp"
#include "potec/verify.hpp"

struct potec_config {
  potec::ExperimentConfig config;
};

struct potec_env {
  std::shared_ptr<potec::SyntheticEnvironment> env;
};

namespace {

thread_local std::string g_last_error;

potec_status ToStatus(potec::ErrorCode code) {
  switch (code) {
    case potec::ErrorCode::kConfig:
      return POTEC_ERR_CONFIG;
    case potec::ErrorCode::kContract:
      return POTEC_ERR_CONTRACT;
    case potec::ErrorCode::kNumeric:
      return POTEC_ERR_NUMERIC;
    case potec::ErrorCode::kDivision:
      return POTEC_ERR_DIVISION;
    case potec::ErrorCode::kUnsupported:
      return POTEC_ERR_UNSUPPORTED;
    case potec::ErrorCode::kIo:
      return POTEC_ERR_IO;
  }
  return POTEC_ERR_INTERNAL;
}

template <typename Fn>
potec_status Guard(Fn&& body) {
  g_last_error.clear();
  try {
    body();
    return POTEC_OK;
  } catch (const potec::Error& e) {
    g_last_error = e.what();
    return ToStatus(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown error";
  }
  return POTEC_ERR_INTERNAL;
}

void NotNull(const void* p, const char* what) {
  if (!p) potec::Fail(potec::ErrorCode::kContract, std::string(what) + " must not be null");
}

char* Duplicate(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* potec_version(void) { return "0.1.0"; }

const char* potec_status_name(potec_status status) {
  switch (status) {
    case POTEC_OK:
      return "ok";
    case POTEC_ERR_CONFIG:
      return "config";
    case POTEC_ERR_CONTRACT:
      return "contract";
    case POTEC_ERR_NUMERIC:
      return "numeric";
    case POTEC_ERR_DIVISION:
      return "division";
    case POTEC_ERR_UNSUPPORTED:
      return "unsupported";
    case POTEC_ERR_IO:
      return "io";
    case POTEC_ERR_INTERNAL:
      return "internal";
  }
  return "unknown";
}

const char* potec_last_error(void) { return g_last_error.c_str(); }

void potec_string_free(char* text) { std::free(text); }

potec_status potec_config_template(char** out_text) {
  return Guard([&] {
    NotNull(out_text, "out_text");
    *out_text = Duplicate(potec::ConfigTemplate());
  });
}

potec_status potec_config_parse(const char* text, potec_config** out) {
  return Guard([&] {
    NotNull(text, "text");
    NotNull(out, "out");
    *out = new potec_config{potec::ParseExperimentConfig(text)};
  });
}

potec_status potec_config_load(const char* path, potec_config** out) {
  return Guard([&] {
    NotNull(path, "path");
    NotNull(out, "out");
    *out = new potec_config{potec::LoadExperimentConfig(path)};
  });
}

void potec_config_destroy(potec_config* config) { delete config; }

potec_status potec_config_set_seeds(potec_config* config, size_t n_seeds) {
  return Guard([&] {
    NotNull(config, "config");
    potec::Require(n_seeds >= 1, potec::ErrorCode::kConfig, "seeds must be positive");
    config->config.n_seeds = n_seeds;
  });
}

potec_status potec_config_set_jobs(potec_config* config, size_t jobs) {
  return Guard([&] {
    NotNull(config, "config");
    potec::Require(jobs >= 1, potec::ErrorCode::kConfig, "jobs must be positive");
    config->config.jobs = jobs;
  });
}

potec_status potec_config_set_methods(potec_config* config, const char* methods) {
  return Guard([&] {
    NotNull(config, "config");
    NotNull(methods, "methods");
    potec::ExperimentConfig updated = config->config;
    updated.methods.clear();
    std::stringstream in(methods);
    std::string name;
    while (std::getline(in, name, ',')) {
      const auto begin = name.find_first_not_of(" \t");
      const auto end = name.find_last_not_of(" \t");
      if (begin == std::string::npos) continue;
      updated.methods.push_back(name.substr(begin, end - begin + 1));
    }
    potec::ApplySweepValue(updated, updated.values.front());  // validates
    config->config = std::move(updated);
  });
}

potec_status potec_config_shape(const potec_config* config, size_t* n_values, size_t* n_seeds,
                                size_t* n_methods) {
  return Guard([&] {
    NotNull(config, "config");
    if (n_values) *n_values = config->config.values.size();
    if (n_seeds) *n_seeds = config->config.n_seeds;
    if (n_methods) *n_methods = config->config.methods.size();
  });
}

potec_status potec_sweep_run(const potec_config* config, const char* out_dir,
                             potec_progress_fn progress, void* user, size_t* n_rows,
                             size_t* n_failed) {
  return Guard([&] {
    NotNull(config, "config");
    NotNull(out_dir, "out_dir");
    potec::ProgressFn fn;
    if (progress) fn = [&](const std::string& line) { progress(line.c_str(), user); };
    const std::vector<potec::ResultRow> rows = potec::RunSweep(config->config, out_dir, fn);
    std::size_t failed = 0;
    for (const potec::ResultRow& r : rows) failed += r.status != "ok";
    if (n_rows) *n_rows = rows.size();
    if (n_failed) *n_failed = failed;
  });
}

potec_status potec_summarize_file(const char* results_csv, const char* summary_csv,
                                  double confidence, size_t n_resamples, uint64_t seed,
                                  size_t* n_groups) {
  return Guard([&] {
    NotNull(results_csv, "results_csv");
    NotNull(summary_csv, "summary_csv");
    std::ifstream in(results_csv);
    if (!in) potec::Fail(potec::ErrorCode::kIo, std::string("cannot open ") + results_csv);
    const auto summary =
        potec::Summarize(potec::ReadResultsCsv(in), confidence, n_resamples, seed);
    std::ofstream out(summary_csv);
    if (!out) potec::Fail(potec::ErrorCode::kIo, std::string("cannot write ") + summary_csv);
    potec::WriteSummaryCsv(summary, out);
    if (n_groups) *n_groups = summary.size();
  });
}

potec_status potec_verify(int quick, uint64_t seed, potec_check_fn on_check, void* user,
                          size_t* n_failed) {
  return Guard([&] {
    potec::VerifyOptions options = quick ? potec::QuickVerifyOptions() : potec::VerifyOptions{};
    options.seed = seed;
    std::size_t failed = 0;
    potec::RunOracleSuite(options, [&](const potec::CheckResult& r) {
      failed += !r.passed;
      if (on_check) {
        const potec_check c{r.id, r.name.c_str(), r.passed ? 1 : 0, r.detail.c_str(), r.seconds};
        on_check(&c, user);
      }
    });
    if (n_failed) *n_failed = failed;
  });
}

potec_status potec_gradcheck(size_t n_cases, uint64_t seed, size_t* n_checked, size_t* n_failed,
                             double* max_rel_error) {
  return Guard([&] {
    const potec::GradcheckReport r = potec::RunGradcheck(n_cases, seed);
    if (n_checked) *n_checked = r.n_cases;
    if (n_failed) *n_failed = r.n_failed;
    if (max_rel_error) *max_rel_error = r.max_rel_error;
  });
}

potec_status potec_env_create(const char* env_json, uint64_t seed, potec_env** out) {
  return Guard([&] {
    NotNull(out, "out");
    const std::string text = std::string("{\"env\": ") + (env_json ? env_json : "{}") + "}";
    const potec::EnvConfig config = potec::ParseExperimentConfig(text).env;
    *out = new potec_env{potec::BuildSyntheticEnv(config, seed)};
  });
}

void potec_env_destroy(potec_env* env) { delete env; }

potec_status potec_env_shape(const potec_env* env, size_t* n_actions, size_t* n_clusters,
                             size_t* context_dim) {
  return Guard([&] {
    NotNull(env, "env");
    if (n_actions) *n_actions = env->env->n_actions();
    if (n_clusters) *n_clusters = env->env->cluster_map().n_clusters();
    if (context_dim) *context_dim = env->env->context_dim();
  });
}

namespace {

void CheckRow(const potec_env* env, const double* x, size_t dim, const double* out,
              size_t n_actions) {
  NotNull(env, "env");
  NotNull(x, "x");
  NotNull(out, "out");
  potec::Require(dim == env->env->context_dim(), potec::ErrorCode::kContract,
                 "context has the wrong dimension");
  potec::Require(n_actions == env->env->n_actions(), potec::ErrorCode::kContract,
                 "output has the wrong length");
}

}  // namespace

potec_status potec_env_expected_rewards(const potec_env* env, const double* x, size_t dim,
                                        double* out, size_t n_actions) {
  return Guard([&] {
    CheckRow(env, x, dim, out, n_actions);
    env->env->ExpectedRewards({x, dim}, {out, n_actions});
  });
}

potec_status potec_env_logging_probs(const potec_env* env, const double* x, size_t dim,
                                     double* out, size_t n_actions) {
  return Guard([&] {
    CheckRow(env, x, dim, out, n_actions);
    env->env->LoggingProbs({x, dim}, {out, n_actions});
  });
}

potec_status potec_env_sample_csv(const potec_env* env, size_t n, uint64_t seed,
                                  size_t repeats_per_context, const char* path) {
  return Guard([&] {
    NotNull(env, "env");
    NotNull(path, "path");
    potec::Require(repeats_per_context >= 1, potec::ErrorCode::kConfig,
                   "repeats_per_context must be positive");
    potec::SaveDatasetCsv(potec::SampleLoggedData(*env->env, n, seed, repeats_per_context), path);
  });
}

}  // extern "C"
